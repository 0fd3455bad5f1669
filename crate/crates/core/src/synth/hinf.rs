//! Two-Riccati H-infinity synthesis of the central controller with
//! γ-bisection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linsys::mat::{hstack, inverse, norm2, solve, sym_eigenvalues, symmetrize, vstack, Mat};
use crate::linsys::schur::eigenvalues;
use crate::linsys::{feedback, hinf_norm, is_stable, lft, ric, spectral_abscissa, StateSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Relative bisection tolerance on γ.
    pub tol: f64,
    pub gamma_max: f64,
    /// Size of the identity blocks added when D12 or D21 lacks full rank.
    pub regularization: f64,
    /// Feasibility probes above the achieved γ.
    pub monotonicity_probes: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { tol: 1e-3, gamma_max: 1e4, regularization: 1e-6, monotonicity_probes: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub epsilon: f64,
    pub d12: bool,
    pub d21: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub controller: StateSpace,
    pub gamma_achieved: f64,
    /// H-infinity norm of the closed loop on the unregularized plant.
    pub verified_norm: f64,
    /// Largest real part of the closed-loop poles.
    pub closed_loop_abscissa: f64,
    pub controller_stable: bool,
    pub regularization: Option<Regularization>,
    /// Feasibility confirmed at every probe above `gamma_achieved`.
    pub monotone: Option<bool>,
}

/// Plant after regularization and the orthogonal/scaling changes of
/// coordinates that bring D12 to `[0; I]` and D21 to `[0 I]`, with D22
/// dropped (restored by a loop shift on the controller).
struct Normalized {
    a: Mat,
    b1: Mat,
    b2: Mat,
    c1: Mat,
    c2: Mat,
    d11: Mat,
    /// `u = u_map u'`
    u_map: Mat,
    /// `y' = y_map y`
    y_map: Mat,
    d22: Mat,
}

impl Normalized {
    fn dims(&self) -> (usize, usize, usize, usize, usize) {
        (self.a.nrows(), self.b1.ncols(), self.b2.ncols(), self.c1.nrows(), self.c2.nrows())
    }

    /// Smallest γ compatible with the direct feedthrough.
    fn gamma_floor(&self) -> f64 {
        let (_, m1, m2, p1, p2) = self.dims();
        let top = self.d11.rows(0, p1 - m2).into_owned();
        let left = self.d11.columns(0, m1 - p2).into_owned();
        norm2(&top).max(norm2(&left))
    }
}

fn rank_deficient(m: &Mat) -> bool {
    if m.nrows() == 0 || m.ncols() == 0 {
        return false;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    smax == 0.0 || smin <= 1e-10 * smax.max(1.0)
}

/// Full orthogonal factor of a QR decomposition.
fn full_q(m: &Mat) -> (Mat, Mat) {
    let r = m.nrows();
    let qr = m.clone().qr();
    let mut q = Mat::identity(r, r);
    qr.q_tr_mul(&mut q);
    (q.transpose(), qr.r())
}

fn normalize(p: &StateSpace, n_meas: usize, n_ctrl: usize, eps: f64) -> Result<(Normalized, Option<Regularization>)> {
    let n = p.order();
    let m1 = p.n_inputs() - n_ctrl;
    let p1 = p.n_outputs() - n_meas;
    let (m2, p2) = (n_ctrl, n_meas);
    let mut b1 = p.b().columns(0, m1).into_owned();
    let b2 = p.b().columns(m1, m2).into_owned();
    let mut c1 = p.c().rows(0, p1).into_owned();
    let c2 = p.c().rows(p1, p2).into_owned();
    let mut d11 = p.d().view((0, 0), (p1, m1)).into_owned();
    let mut d12 = p.d().view((0, m1), (p1, m2)).into_owned();
    let mut d21 = p.d().view((p1, 0), (p2, m1)).into_owned();
    let d22 = p.d().view((p1, m1), (p2, m2)).into_owned();

    let mut reg = Regularization { epsilon: eps, d12: false, d21: false };
    if (p1 < m2 || rank_deficient(&d12)) && eps > 0.0 {
        c1 = vstack(&[&c1, &Mat::zeros(m2, n)]);
        d11 = vstack(&[&d11, &Mat::zeros(m2, d11.ncols())]);
        d12 = vstack(&[&d12, &(Mat::identity(m2, m2) * eps)]);
        reg.d12 = true;
    }
    if (m1 < p2 || rank_deficient(&d21)) && eps > 0.0 {
        b1 = hstack(&[&b1, &Mat::zeros(n, p2)]);
        d11 = hstack(&[&d11, &Mat::zeros(d11.nrows(), p2)]);
        d21 = hstack(&[&d21, &(Mat::identity(p2, p2) * eps)]);
        reg.d21 = true;
    }
    let (p1, m1) = (d11.nrows(), d11.ncols());
    if p1 < m2 || rank_deficient(&d12) {
        return Err(Error::Regularity("D12 does not have full column rank".into()));
    }
    if m1 < p2 || rank_deficient(&d21) {
        return Err(Error::Regularity("D21 does not have full row rank".into()));
    }

    // D12 = Q [R; 0]: u = R⁻¹ u', z' = Θ z with the range of D12 last
    let (q12, r12) = full_q(&d12);
    let r12i = inverse(&r12).ok_or_else(|| Error::Regularity("D12 factor is singular".into()))?;
    let theta = vstack(&[
        &q12.columns(m2, p1 - m2).transpose(),
        &q12.columns(0, m2).transpose(),
    ]);
    // D21ᵀ = Q [R; 0]: y' = R⁻ᵀ y, w = Φ w' with the row space of D21 last
    let (q21, r21) = full_q(&d21.transpose());
    let r21ti = inverse(&r21.transpose()).ok_or_else(|| Error::Regularity("D21 factor is singular".into()))?;
    let phi = hstack(&[&q21.columns(p2, m1 - p2).into_owned(), &q21.columns(0, p2).into_owned()]);

    let norm = Normalized {
        a: p.a().clone(),
        b1: &b1 * &phi,
        b2: &b2 * &r12i,
        c1: &theta * &c1,
        c2: &r21ti * &c2,
        d11: &theta * &d11 * &phi,
        u_map: r12i,
        y_map: r21ti,
        d22,
    };
    let reg = (reg.d12 || reg.d21).then_some(reg);
    Ok((norm, reg))
}

struct Riccati {
    x: Mat,
    y: Mat,
}

fn psd(m: &Mat) -> bool {
    let ev = sym_eigenvalues(m);
    let top = ev.iter().cloned().fold(0.0, f64::max);
    ev.iter().all(|e| *e >= -1e-8 * (1.0 + top))
}

/// Both Riccati solutions at `gamma`, or `None` when `gamma` is infeasible.
fn riccati_pair(np: &Normalized, gamma: f64) -> Option<Riccati> {
    let (n, m1, m2, p1, p2) = np.dims();
    if gamma <= np.gamma_floor() * (1.0 + 1e-12) {
        return None;
    }
    let g2 = gamma * gamma;
    let d12 = vstack(&[&Mat::zeros(p1 - m2, m2), &Mat::identity(m2, m2)]);
    let d21 = hstack(&[&Mat::zeros(p2, m1 - p2), &Mat::identity(p2, p2)]);

    let d1 = hstack(&[&np.d11, &d12]);
    let bb = hstack(&[&np.b1, &np.b2]);
    let mut r = d1.transpose() * &d1;
    for i in 0..m1 {
        r[(i, i)] -= g2;
    }
    let ri = inverse(&r)?;
    let a_x = &np.a - &bb * &ri * d1.transpose() * &np.c1;
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_x);
    h.view_mut((0, n), (n, n)).copy_from(&(-(&bb * &ri * bb.transpose())));
    let q_x = np.c1.transpose() * (Mat::identity(p1, p1) - &d1 * &ri * d1.transpose()) * &np.c1;
    h.view_mut((n, 0), (n, n)).copy_from(&(-q_x));
    h.view_mut((n, n), (n, n)).copy_from(&(-a_x.transpose()));
    let x = ric(&h).ok()?;
    if !psd(&x) {
        return None;
    }

    let dd = vstack(&[&np.d11, &d21]);
    let cc = vstack(&[&np.c1, &np.c2]);
    let mut rt = &dd * dd.transpose();
    for i in 0..p1 {
        rt[(i, i)] -= g2;
    }
    let rti = inverse(&rt)?;
    let a_y = &np.a - &np.b1 * dd.transpose() * &rti * &cc;
    let mut j = Mat::zeros(2 * n, 2 * n);
    j.view_mut((0, 0), (n, n)).copy_from(&a_y.transpose());
    j.view_mut((0, n), (n, n)).copy_from(&(-(cc.transpose() * &rti * &cc)));
    let q_y = &np.b1 * (Mat::identity(m1, m1) - dd.transpose() * &rti * &dd) * np.b1.transpose();
    j.view_mut((n, 0), (n, n)).copy_from(&(-q_y));
    j.view_mut((n, n), (n, n)).copy_from(&(-&a_y));
    let y = ric(&j).ok()?;
    if !psd(&y) {
        return None;
    }
    let rho = eigenvalues(&(&x * &y)).ok()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if rho >= g2 * (1.0 - 1e-9) {
        return None;
    }
    Some(Riccati { x, y })
}

fn chol_factor(m: &Mat) -> Option<Mat> {
    nalgebra::Cholesky::new(symmetrize(m)).map(|c| c.l())
}

/// Central controller of the normalized problem at a feasible `gamma`.
fn central_controller(np: &Normalized, sol: &Riccati, gamma: f64) -> Option<(Mat, Mat, Mat, Mat)> {
    let (n, m1, m2, p1, p2) = np.dims();
    let g2 = gamma * gamma;
    let (x, y) = (&sol.x, &sol.y);
    let d12 = vstack(&[&Mat::zeros(p1 - m2, m2), &Mat::identity(m2, m2)]);
    let d21 = hstack(&[&Mat::zeros(p2, m1 - p2), &Mat::identity(p2, p2)]);
    let d1 = hstack(&[&np.d11, &d12]);
    let bb = hstack(&[&np.b1, &np.b2]);
    let mut r = d1.transpose() * &d1;
    for i in 0..m1 {
        r[(i, i)] -= g2;
    }
    let f = -(solve(&r, &(d1.transpose() * &np.c1 + bb.transpose() * x))?);
    let dd = vstack(&[&np.d11, &d21]);
    let cc = vstack(&[&np.c1, &np.c2]);
    let mut rt = &dd * dd.transpose();
    for i in 0..p1 {
        rt[(i, i)] -= g2;
    }
    let lt = solve(&rt, &(&dd * np.b1.transpose() + &cc * y))?;
    let l = -lt.transpose();

    let (ra, rb) = (p1 - m2, m1 - p2);
    let d1111 = np.d11.view((0, 0), (ra, rb)).into_owned();
    let d1112 = np.d11.view((0, rb), (ra, p2)).into_owned();
    let d1121 = np.d11.view((ra, 0), (m2, rb)).into_owned();
    let d1122 = np.d11.view((ra, rb), (m2, p2)).into_owned();
    let mut s_out = -(&d1111 * d1111.transpose());
    for i in 0..ra {
        s_out[(i, i)] += g2;
    }
    let mut s_in = -(d1111.transpose() * &d1111);
    for i in 0..rb {
        s_in[(i, i)] += g2;
    }
    let s_out_inv_d1112 = solve(&s_out, &d1112)?;
    let dh11 = -(&d1121 * d1111.transpose() * &s_out_inv_d1112) - &d1122;
    let dh12 = chol_factor(&(Mat::identity(m2, m2) - &d1121 * solve(&s_in, &d1121.transpose())?))?;
    let dh21 = chol_factor(&(Mat::identity(p2, p2) - d1112.transpose() * &s_out_inv_d1112))?.transpose();

    let f12 = f.rows(rb, p2).into_owned();
    let f2 = f.rows(m1, m2).into_owned();
    let l12 = l.columns(ra, m2).into_owned();
    let l2 = l.columns(p1, p2).into_owned();
    let z = inverse(&(Mat::identity(n, n) - y * x / g2))?;

    let bh2 = &z * (&np.b2 + &l12) * &dh12;
    let ch2 = -(&dh21 * (&np.c2 + &f12));
    let dh12i = inverse(&dh12)?;
    let dh21i = inverse(&dh21)?;
    let bh1 = -(&z * &l2) + &bh2 * &dh12i * &dh11;
    let ch1 = &f2 + &dh11 * &dh21i * &ch2;
    let ah = &np.a + &bb * &f + &bh1 * &dh21i * &ch2;
    Some((ah, bh1, ch1, dh11))
}

fn controller_at(
    p: &StateSpace,
    np: &Normalized,
    gamma: f64,
    n_meas: usize,
    n_ctrl: usize,
) -> Option<StateSpace> {
    let sol = riccati_pair(np, gamma)?;
    let (ak, bk, ck, dk) = central_controller(np, &sol, gamma)?;
    let k0 = StateSpace::new(ak, bk * &np.y_map, &np.u_map * ck, &np.u_map * dk * &np.y_map).ok()?;
    let k = if np.d22.iter().any(|v| *v != 0.0) {
        let d22 = StateSpace::gain(np.d22.clone());
        feedback(&k0, &d22, -1.0).ok()?
    } else {
        k0
    };
    let inputs = p.output_labels()[p.n_outputs() - n_meas..].to_vec();
    let outputs = p.input_labels()[p.n_inputs() - n_ctrl..].to_vec();
    k.relabel(inputs, outputs).ok()
}

/// Whether a γ-suboptimal controller exists at `gamma` for `p`.
pub fn is_feasible(p: &StateSpace, n_meas: usize, n_ctrl: usize, gamma: f64, opts: &SynthOptions) -> Result<bool> {
    check_partition(p, n_meas, n_ctrl)?;
    let (np, _) = normalize(p, n_meas, n_ctrl, opts.regularization)?;
    Ok(riccati_pair(&np, gamma).is_some())
}

fn check_partition(p: &StateSpace, n_meas: usize, n_ctrl: usize) -> Result<()> {
    if n_meas == 0 || n_ctrl == 0 || n_meas >= p.n_outputs() || n_ctrl >= p.n_inputs() {
        return Err(invalid(format!(
            "partition ({n_meas} measurements, {n_ctrl} controls) does not fit a {}x{} plant",
            p.n_outputs(),
            p.n_inputs()
        )));
    }
    Ok(())
}

/// Verified closed loop of `p` with `k`: (norm, pole abscissa).
fn verify(p: &StateSpace, k: &StateSpace, n_meas: usize, n_ctrl: usize) -> Option<(f64, f64)> {
    let cl = lft(p, k, n_meas, n_ctrl).ok()?;
    let abscissa = spectral_abscissa(cl.a()).ok()?;
    if !(abscissa < 0.0) {
        return None;
    }
    let norm = hinf_norm(&cl, 1e-4).ok()?;
    Some((norm.value, abscissa))
}

/// γ-increase factors tried when the controller at the bisection limit
/// fails independent verification.
const BACKOFF: [f64; 6] = [1.0, 1.01, 1.05, 1.2, 1.5, 2.0];

pub fn hinfsyn(p: &StateSpace, n_meas: usize, n_ctrl: usize, tol: f64) -> Result<SynthesisResult> {
    hinfsyn_with(p, n_meas, n_ctrl, &SynthOptions { tol, ..SynthOptions::default() })
}

pub fn hinfsyn_with(p: &StateSpace, n_meas: usize, n_ctrl: usize, opts: &SynthOptions) -> Result<SynthesisResult> {
    check_partition(p, n_meas, n_ctrl)?;
    if !(opts.tol > 0.0) || !(opts.gamma_max > 0.0) {
        return Err(invalid("synthesis tolerance and γ bracket must be positive"));
    }
    let (np, reg) = normalize(p, n_meas, n_ctrl, opts.regularization)?;
    let mut hi = opts.gamma_max;
    if riccati_pair(&np, hi).is_none() {
        return Err(Error::SynthesisInfeasible { gamma: hi });
    }
    let mut lo = np.gamma_floor().max(hi * 1e-12);
    while hi > lo * (1.0 + opts.tol) {
        let mid = (lo * hi).sqrt();
        if riccati_pair(&np, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for factor in BACKOFF {
        let gamma = (hi * factor).min(opts.gamma_max);
        let Some(k) = controller_at(p, &np, gamma, n_meas, n_ctrl) else {
            continue;
        };
        let Some((norm, abscissa)) = verify(p, &k, n_meas, n_ctrl) else {
            continue;
        };
        if norm > gamma * (1.0 + opts.tol) {
            continue;
        }
        let monotone = opts.monotonicity_probes.then(|| {
            [1.1, 2.0, 10.0]
                .iter()
                .map(|f| (gamma * f).min(opts.gamma_max))
                .all(|g| riccati_pair(&np, g).is_some())
        });
        let controller_stable = is_stable(&k);
        return Ok(SynthesisResult {
            controller: k,
            gamma_achieved: gamma,
            verified_norm: norm,
            closed_loop_abscissa: abscissa,
            controller_stable,
            regularization: reg,
            monotone,
        });
    }
    Err(Error::NoConvergence("central controller failed closed-loop verification"))
}
