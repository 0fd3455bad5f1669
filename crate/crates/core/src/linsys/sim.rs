//! Fixed-step RK4 step-response simulation.

use serde::{Deserialize, Serialize};

use super::mat::Mat;
use super::schur::eigenvalues;
use super::StateSpace;
use crate::error::{invalid, Result};

pub const DEFAULT_HORIZON: f64 = 20.0;

/// Largest internal step as a fraction of the fastest time constant.
const STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub time: Vec<f64>,
    /// `outputs[i][k]` is output `i` at `time[k]`.
    pub outputs: Vec<Vec<f64>>,
    pub output_labels: Vec<String>,
}

impl StepResponse {
    pub fn output(&self, label: &str) -> Option<&[f64]> {
        self.output_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.outputs[i].as_slice())
    }
}

fn fastest_mode(g: &StateSpace) -> Result<f64> {
    Ok(eigenvalues(g.a())?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `min(1e-3, 0.05/|λ|max)`.
pub fn default_dt(g: &StateSpace) -> Result<f64> {
    let fast = fastest_mode(g)?;
    Ok(if fast > 0.0 { (STEP_FRACTION / fast).min(1e-3) } else { 1e-3 })
}

/// One RK4 step of `x' = A x + b` with constant forcing, as an affine map
/// `x ↦ Φ x + γ`.
fn rk4_map(a: &Mat, b: &Mat, h: f64) -> (Mat, Mat) {
    let n = a.nrows();
    let ha = a * h;
    let ha2 = &ha * &ha;
    let ha3 = &ha2 * &ha;
    let ha4 = &ha3 * &ha;
    let phi = Mat::identity(n, n) + &ha + &ha2 / 2.0 + &ha3 / 6.0 + &ha4 / 24.0;
    let psi = Mat::identity(n, n) + &ha / 2.0 + &ha2 / 6.0 + &ha3 / 24.0;
    (phi, psi * b * h)
}

/// Composes the affine map `m` times by doubling.
fn compose(phi: &Mat, gam: &Mat, mut m: u64) -> (Mat, Mat) {
    let n = phi.nrows();
    let mut acc_phi = Mat::identity(n, n);
    let mut acc_gam = Mat::zeros(n, gam.ncols());
    let (mut p, mut g) = (phi.clone(), gam.clone());
    while m > 0 {
        if m & 1 == 1 {
            acc_gam = &p * &acc_gam + &g;
            acc_phi = &p * &acc_phi;
        }
        m >>= 1;
        if m > 0 {
            g = &p * &g + &g;
            p = &p * &p;
        }
    }
    (acc_phi, acc_gam)
}

/// Unit step on `input_channel` (zeros elsewhere), outputs sampled every
/// `dt` up to `horizon`. The internal RK4 step is subdivided so that it
/// resolves the fastest mode.
pub fn simulate_step(g: &StateSpace, input_channel: usize, horizon: f64, dt: f64) -> Result<StepResponse> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(invalid(format!("need dt > 0 and horizon >= dt, got dt={dt}, horizon={horizon}")));
    }
    if input_channel >= g.n_inputs() {
        return Err(invalid(format!("input channel {input_channel} out of range")));
    }
    let steps = (horizon / dt + 1e-9).floor() as usize;
    let fast = fastest_mode(g)?;
    let sub = ((dt * fast / STEP_FRACTION).ceil() as u64).max(1);
    let h = dt / sub as f64;
    let b: Mat = g.b().columns(input_channel, 1).into_owned();
    let (phi_h, gam_h) = rk4_map(g.a(), &b, h);
    let (phi, gam) = compose(&phi_h, &gam_h, sub);
    let d = g.d().column(input_channel).into_owned();
    let p = g.n_outputs();
    let mut outputs = vec![Vec::with_capacity(steps + 1); p];
    let mut x = nalgebra::DVector::zeros(g.order());
    let mut time = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        time.push(k as f64 * dt);
        let y = g.c() * &x + &d;
        for i in 0..p {
            outputs[i].push(y[i]);
        }
        x = &phi * &x + gam.column(0);
    }
    Ok(StepResponse { time, outputs, output_labels: g.output_labels().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_step_matches_exponential() {
        let g = StateSpace::from_tf(&[1.0], &[1.0, 1.0]).unwrap();
        let r = simulate_step(&g, 0, 5.0, 1e-3).unwrap();
        let err = r
            .time
            .iter()
            .zip(&r.outputs[0])
            .map(|(t, y)| (y - (1.0 - (-t).exp())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "max error {err}");
        let at1 = r.outputs[0][1000];
        assert!((at1 - (1.0 - (-1.0f64).exp())).abs() < 1e-4);
    }

    #[test]
    fn static_gain_is_constant() {
        let g = StateSpace::scalar_gain(2.0);
        let r = simulate_step(&g, 0, 1.0, 0.1).unwrap();
        assert!(r.outputs[0].iter().all(|y| *y == 2.0));
    }

    #[test]
    fn second_order_overshoot() {
        let g = StateSpace::from_tf(&[1.0], &[1.0, 1.0, 1.0]).unwrap();
        let r = simulate_step(&g, 0, 20.0, 1e-3).unwrap();
        let peak = r.outputs[0].iter().cloned().fold(f64::MIN, f64::max);
        let expect = 1.0 + (-std::f64::consts::PI * 0.5 / 0.75f64.sqrt()).exp();
        assert!((peak - expect).abs() < 1e-4);
    }

    #[test]
    fn stiff_modes_do_not_blow_up() {
        let g = StateSpace::from_tf(&[1e4], &[1.0, 1e4]).unwrap();
        let r = simulate_step(&g, 0, 1.0, 0.01).unwrap();
        assert!((r.outputs[0].last().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = StateSpace::scalar_gain(1.0);
        assert!(simulate_step(&g, 0, 1.0, 0.0).is_err());
        assert!(simulate_step(&g, 0, 0.01, 0.1).is_err());
        assert!(simulate_step(&g, 1, 1.0, 0.1).is_err());
    }
}
