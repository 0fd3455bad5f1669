//! First-order mixed-sensitivity weights and the augmented plant.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linsys::mat::{hstack, vstack, Mat, C64};
use crate::linsys::{FrequencyGrid, StateSpace};

/// `k (s + z) / (s + p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderWeight {
    pub k: f64,
    pub z: f64,
    pub p: f64,
}

impl FirstOrderWeight {
    pub fn new(k: f64, z: f64, p: f64) -> Result<Self> {
        let w = Self { k, z, p };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("z", self.z), ("p", self.p)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("weight parameter {name} = {v} must be positive and finite")));
            }
        }
        if (self.z - self.p).abs() <= 1e-12 * self.z.max(self.p) {
            return Err(invalid(format!("weight zero and pole coincide at {}", self.p)));
        }
        Ok(())
    }

    pub fn eval(&self, omega: f64) -> C64 {
        let s = C64::new(0.0, omega);
        (s + self.z) / (s + self.p) * self.k
    }

    pub fn dc_gain(&self) -> f64 {
        self.k * self.z / self.p
    }

    /// `A = −p, B = 1, C = k(z − p), D = k`.
    pub fn realize(&self) -> StateSpace {
        StateSpace::new(
            Mat::from_element(1, 1, -self.p),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, self.k * (self.z - self.p)),
            Mat::from_element(1, 1, self.k),
        )
        .expect("1x1 realization")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub w1: Vec<FirstOrderWeight>,
    pub w2: f64,
    pub w3: Vec<FirstOrderWeight>,
}

impl WeightSet {
    pub fn new(w1: Vec<FirstOrderWeight>, w2: f64, w3: Vec<FirstOrderWeight>) -> Result<Self> {
        let w = Self { w1, w2, w3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w1.is_empty() || self.w1.len() != self.w3.len() {
            return Err(invalid(format!(
                "W1 and W3 need one weight per controlled output (got {} and {})",
                self.w1.len(),
                self.w3.len()
            )));
        }
        if !(self.w2.is_finite() && self.w2 > 0.0) {
            return Err(invalid(format!("W2 = {} must be positive and finite", self.w2)));
        }
        self.w1.iter().chain(&self.w3).try_for_each(|w| w.validate())
    }

    pub fn channels(&self) -> usize {
        self.w1.len()
    }
}

fn diagonal(ws: &[FirstOrderWeight], prefix: &str) -> Result<StateSpace> {
    let n = ws.len();
    let a = Mat::from_diagonal(&nalgebra::DVector::from_iterator(n, ws.iter().map(|w| -w.p)));
    let c = Mat::from_diagonal(&nalgebra::DVector::from_iterator(n, ws.iter().map(|w| w.k * (w.z - w.p))));
    let d = Mat::from_diagonal(&nalgebra::DVector::from_iterator(n, ws.iter().map(|w| w.k)));
    StateSpace::with_labels(
        a,
        Mat::identity(n, n),
        c,
        d,
        (0..n).map(|i| format!("{prefix}_in{i}")).collect(),
        (0..n).map(|i| format!("{prefix}_out{i}")).collect(),
    )
}

/// Diagonal realizations of W1, W2 (1x1 static) and W3.
pub fn realize_weights(w: &WeightSet) -> Result<(StateSpace, StateSpace, StateSpace)> {
    w.validate()?;
    Ok((diagonal(&w.w1, "w1")?, StateSpace::scalar_gain(w.w2), diagonal(&w.w3, "w3")?))
}

/// Augmented plant mapping `[r; U]` to `[W1 e; W2 U; W3 y; e; y]` with
/// `e = r − y`. States are ordered `[G, W1, W3]`.
pub fn build_augmented(g: &StateSpace, w: &WeightSet) -> Result<StateSpace> {
    w.validate()?;
    let (m, p) = (g.n_inputs(), g.n_outputs());
    if w.channels() != p {
        return Err(invalid(format!("weights cover {} channels, plant has {p} outputs", w.channels())));
    }
    let (w1, _, w3) = realize_weights(w)?;
    let ng = g.order();
    let (ag, bg, cg, dg) = (g.a(), g.b(), g.c(), g.d());
    let (a1, b1, c1, d1) = (w1.a(), w1.b(), w1.c(), w1.d());
    let (a3, b3, c3, d3) = (w3.a(), w3.b(), w3.c(), w3.d());
    let z = |r: usize, c: usize| Mat::zeros(r, c);
    let ip = Mat::identity(p, p);
    let a = vstack(&[
        &hstack(&[ag, &z(ng, p), &z(ng, p)]),
        &hstack(&[&(-(b1 * cg)), a1, &z(p, p)]),
        &hstack(&[&(b3 * cg), &z(p, p), a3]),
    ]);
    let b = vstack(&[
        &hstack(&[&z(ng, p), bg]),
        &hstack(&[b1, &(-(b1 * dg))]),
        &hstack(&[&z(p, p), &(b3 * dg)]),
    ]);
    let c = vstack(&[
        &hstack(&[&(-(d1 * cg)), c1, &z(p, p)]),
        &z(m, ng + 2 * p),
        &hstack(&[&(d3 * cg), &z(p, p), c3]),
        &hstack(&[&(-cg), &z(p, 2 * p)]),
        &hstack(&[cg, &z(p, 2 * p)]),
    ]);
    let d = vstack(&[
        &hstack(&[d1, &(-(d1 * dg))]),
        &hstack(&[&z(m, p), &(Mat::identity(m, m) * w.w2)]),
        &hstack(&[&z(p, p), &(d3 * dg)]),
        &hstack(&[&ip, &(-dg)]),
        &hstack(&[&z(p, p), dg]),
    ]);
    let ys = g.output_labels();
    let us = g.input_labels();
    let inputs = ys.iter().map(|l| format!("r_{l}")).chain(us.iter().cloned()).collect();
    let outputs = ys
        .iter()
        .map(|l| format!("w1_{l}"))
        .chain(us.iter().map(|l| format!("w2_{l}")))
        .chain(ys.iter().map(|l| format!("w3_{l}")))
        .chain(ys.iter().map(|l| format!("e_{l}")))
        .chain(ys.iter().map(|l| format!("y_{l}")))
        .collect();
    StateSpace::with_labels(a, b, c, d, inputs, outputs)
}

/// Outcome of the `σ̄(W1⁻¹) + σ̄(W3⁻¹) ≥ 1` test on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCheck {
    pub satisfied: bool,
    /// `σ̄(W1⁻¹) + σ̄(W3⁻¹) − 1` per grid point.
    pub slack: Vec<f64>,
}

impl WeightCheck {
    pub fn min_slack(&self) -> f64 {
        self.slack.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn from_inverse_gains(w1_inv: &[f64], w3_inv: &[f64]) -> Self {
        let slack: Vec<f64> = w1_inv.iter().zip(w3_inv).map(|(a, b)| a + b - 1.0).collect();
        Self { satisfied: slack.iter().all(|s| *s >= 0.0), slack }
    }
}

fn inverse_peak(ws: &[FirstOrderWeight], omega: f64) -> f64 {
    ws.iter().map(|w| 1.0 / w.eval(omega).norm()).fold(0.0, f64::max)
}

pub fn check_weight_constraint(w: &WeightSet, grid: &FrequencyGrid) -> WeightCheck {
    let inv1: Vec<f64> = grid.points().iter().map(|&om| inverse_peak(&w.w1, om)).collect();
    let inv3: Vec<f64> = grid.points().iter().map(|&om| inverse_peak(&w.w3, om)).collect();
    WeightCheck::from_inverse_gains(&inv1, &inv3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::{eval_at, make_grid};

    fn fo(k: f64, z: f64, p: f64) -> FirstOrderWeight {
        FirstOrderWeight::new(k, z, p).unwrap()
    }

    fn four(w: FirstOrderWeight) -> Vec<FirstOrderWeight> {
        vec![w; 4]
    }

    #[test]
    fn weight_asymptotes() {
        let w = fo(2.0, 1.0, 10.0);
        assert!((w.eval(1e9).norm() - 2.0).abs() < 1e-6);
        assert!((w.eval(0.0).norm() - 0.2).abs() < 1e-15);
        let g = w.realize();
        for om in [0.0, 0.7, 30.0] {
            assert!((eval_at(&g, om).unwrap()[(0, 0)] - w.eval(om)).norm() < 1e-14);
        }
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(FirstOrderWeight::new(1.0, 3.0, 3.0).is_err());
        assert!(FirstOrderWeight::new(0.0, 1.0, 3.0).is_err());
        assert!(FirstOrderWeight::new(1.0, f64::NAN, 3.0).is_err());
        assert!(WeightSet::new(four(fo(1.0, 1.0, 2.0)), 0.0, four(fo(1.0, 1.0, 2.0))).is_err());
        assert!(WeightSet::new(four(fo(1.0, 1.0, 2.0)), 1.0, vec![fo(1.0, 1.0, 2.0)]).is_err());
    }

    #[test]
    fn realized_orders() {
        let w = WeightSet::new(four(fo(0.5, 10.0, 0.01)), 0.1, four(fo(10.0, 1.0, 100.0))).unwrap();
        let (w1, w2, w3) = realize_weights(&w).unwrap();
        assert_eq!((w1.order(), w2.order(), w3.order()), (4, 0, 4));
        assert!(w1.a().iter().all(|x| *x <= 0.0));
    }

    fn plant() -> StateSpace {
        // 2 inputs, 4 outputs, 3 states, nonzero D
        StateSpace::new(
            Mat::from_row_slice(3, 3, &[-1.0, 0.5, 0.0, 0.0, -2.0, 1.0, 0.2, 0.0, -3.0]),
            Mat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]),
            Mat::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]),
            Mat::from_row_slice(4, 2, &[0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.3]),
        )
        .unwrap()
    }

    #[test]
    fn augmented_plant_matches_direct_evaluation() {
        let g = plant();
        let w = WeightSet::new(four(fo(0.5, 10.0, 0.01)), 0.1, four(fo(10.0, 1.0, 100.0))).unwrap();
        let p = build_augmented(&g, &w).unwrap();
        assert_eq!(p.order(), 3 + 4 + 4);
        assert_eq!((p.n_inputs(), p.n_outputs()), (4 + 2, 4 + 2 + 4 + 4 + 4));
        for om in [0.0, 0.3, 7.0] {
            let pm = eval_at(&p, om).unwrap();
            let gm = eval_at(&g, om).unwrap();
            for i in 0..4 {
                let (w1, w3) = (w.w1[i].eval(om), w.w3[i].eval(om));
                for j in 0..4 {
                    let rj = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                    assert!((pm[(i, j)] - w1 * rj).norm() < 1e-12);
                    assert!((pm[(10 + i, j)] - rj).norm() < 1e-12);
                    assert!(pm[(14 + i, j)].norm() < 1e-12);
                    assert!(pm[(6 + i, j)].norm() < 1e-12);
                }
                for j in 0..2 {
                    assert!((pm[(i, 4 + j)] + w1 * gm[(i, j)]).norm() < 1e-12);
                    assert!((pm[(6 + i, 4 + j)] - w3 * gm[(i, j)]).norm() < 1e-12);
                    assert!((pm[(10 + i, 4 + j)] + gm[(i, j)]).norm() < 1e-12);
                    assert!((pm[(14 + i, 4 + j)] - gm[(i, j)]).norm() < 1e-12);
                }
            }
            for j in 0..2 {
                for i in 0..2 {
                    let want = if i == j { 0.1 } else { 0.0 };
                    assert!((pm[(4 + i, 4 + j)] - want).norm() < 1e-15);
                }
            }
        }
        let short = WeightSet::new(vec![fo(1.0, 1.0, 2.0)], 1.0, vec![fo(1.0, 1.0, 2.0)]).unwrap();
        assert!(build_augmented(&g, &short).is_err());
    }

    #[test]
    fn static_constraint_examples() {
        let ok = WeightCheck::from_inverse_gains(&[0.5; 3], &[0.6; 3]);
        assert!(ok.satisfied);
        assert!(ok.slack.iter().all(|s| (s - 0.1).abs() < 1e-12));
        assert!(!WeightCheck::from_inverse_gains(&[0.4; 3], &[0.4; 3]).satisfied);
    }

    #[test]
    fn tightest_slack_near_crossover() {
        // W1⁻¹ rises between 6 and 100 rad/s, W3⁻¹ falls between 0.01 and 0.17
        let w = WeightSet::new(vec![fo(0.1, 100.0, 6.0)], 0.1, vec![fo(1.0 / 0.6, 0.01, 1.0 / 6.0)]).unwrap();
        let grid = make_grid(1e-3, 1e4, 20).unwrap();
        let chk = check_weight_constraint(&w, &grid);
        assert!(chk.satisfied);
        let (imin, _) = chk
            .slack
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let om = grid.points()[imin];
        assert!(om > 0.1 && om < 100.0, "minimum slack at {om}");
    }
}
