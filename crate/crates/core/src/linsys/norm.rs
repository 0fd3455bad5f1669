//! Stability test and H-infinity norm.

use serde::{Deserialize, Serialize};

use super::freq::{response_at, singular_values};
use super::mat::{inverse, norm2, Mat, C64};
use super::schur::eigenvalues;
use super::StateSpace;
use crate::error::{Error, Result};

/// Absolute real-part margin for the stability test.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Default relative tolerance of [`hinf_norm`].
pub const HINF_TOL: f64 = 1e-4;

pub fn is_stable(g: &StateSpace) -> bool {
    is_stable_with(g, STABILITY_MARGIN)
}

pub fn is_stable_with(g: &StateSpace, margin: f64) -> bool {
    is_hurwitz(g.a(), margin)
}

pub fn is_hurwitz(a: &Mat, margin: f64) -> bool {
    match eigenvalues(a) {
        Ok(ev) => ev.iter().all(|z| z.re < -margin),
        Err(_) => false,
    }
}

/// Largest real part among the poles (−∞ for a static system).
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HinfNorm {
    pub value: f64,
    /// Frequency (rad/s) where the largest singular value was observed.
    pub peak_omega: f64,
}

struct Probe<'a> {
    g: &'a StateSpace,
    poles: Vec<C64>,
    best: f64,
    best_omega: f64,
}

impl Probe<'_> {
    fn sigma(&mut self, omega: f64) -> Result<f64> {
        let s = singular_values(&response_at(self.g, omega, &self.poles)?)[0];
        if s > self.best {
            self.best = s;
            self.best_omega = omega;
        }
        Ok(s)
    }
}

/// Positive imaginary parts of the eigenvalues of the Hamiltonian at `gamma`
/// that lie (numerically) on the imaginary axis.
fn axis_crossings(g: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let (a, b, c, d) = (g.a(), g.b(), g.c(), g.d());
    let (n, m, p) = (g.order(), g.n_inputs(), g.n_outputs());
    let r = Mat::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let ri = inverse(&r).ok_or(Error::NoConvergence("H-infinity bracket"))?;
    let ar = a + b * &ri * d.transpose() * c;
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&ar);
    h.view_mut((0, n), (n, n)).copy_from(&(b * &ri * b.transpose()));
    let q = c.transpose() * (Mat::identity(p, p) + d * &ri * d.transpose()) * c;
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-ar.transpose()));
    let mut w: Vec<f64> = eigenvalues(&h)?
        .into_iter()
        .filter(|z| z.im >= 0.0 && z.re.abs() <= 1e-6 * (1.0 + z.norm()))
        .map(|z| z.im)
        .collect();
    w.sort_by(f64::total_cmp);
    Ok(w)
}

/// H-infinity norm of a stable system by Hamiltonian bisection, to relative
/// tolerance `tol`. The returned value is a certified lower bound within
/// `tol` of the true norm.
pub fn hinf_norm(g: &StateSpace, tol: f64) -> Result<HinfNorm> {
    let tol = if tol > 0.0 { tol } else { HINF_TOL };
    let sd = norm2(g.d());
    if g.order() == 0 {
        return Ok(HinfNorm { value: sd, peak_omega: f64::INFINITY });
    }
    let poles = eigenvalues(g.a())?;
    if poles.iter().any(|z| z.re >= -STABILITY_MARGIN) {
        return Err(Error::InfiniteNorm);
    }
    let mut probe = Probe { g, poles: poles.clone(), best: sd, best_omega: f64::INFINITY };
    // coarse sweep: DC, pole magnitudes and damped frequencies, log grid between
    probe.sigma(0.0)?;
    let mags: Vec<f64> = poles.iter().map(|z| z.norm()).filter(|w| *w > 0.0).collect();
    let wmin = mags.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-6);
    let wmax = mags.iter().cloned().fold(0.0, f64::max).max(wmin);
    for z in &poles {
        if z.im > 0.0 {
            probe.sigma(z.im)?;
        }
        probe.sigma(z.norm())?;
    }
    let steps = 40;
    let (l0, l1) = ((wmin / 10.0).log10(), (wmax * 10.0).log10());
    for k in 0..=steps {
        probe.sigma(10f64.powf(l0 + (l1 - l0) * k as f64 / steps as f64))?;
    }
    let mut lo = probe.best;
    if lo == 0.0 {
        return Ok(HinfNorm { value: 0.0, peak_omega: 0.0 });
    }
    let mut hi = 2.0 * lo;
    let check = |gamma: f64, probe: &mut Probe| -> Result<bool> {
        let w = axis_crossings(g, gamma)?;
        let mut crossed = false;
        for &wi in &w {
            if probe.sigma(wi)? >= gamma * (1.0 - 1e-9) {
                crossed = true;
            }
        }
        for pair in w.windows(2) {
            probe.sigma(0.5 * (pair[0] + pair[1]))?;
        }
        Ok(crossed)
    };
    let mut guard = 0;
    while check(hi, &mut probe)? {
        lo = lo.max(hi).max(probe.best);
        hi = 2.0 * lo;
        guard += 1;
        if guard > 60 {
            return Err(Error::NoConvergence("H-infinity upper bracket"));
        }
    }
    lo = lo.max(probe.best);
    while hi > lo * (1.0 + tol) {
        let gamma = (lo * hi).sqrt();
        if check(gamma, &mut probe)? {
            lo = gamma.max(probe.best);
        } else {
            hi = gamma;
        }
        lo = lo.max(probe.best);
    }
    Ok(HinfNorm { value: lo, peak_omega: probe.best_omega })
}
