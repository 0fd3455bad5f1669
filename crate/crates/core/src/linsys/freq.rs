use serde::{Deserialize, Serialize};

use super::mat::{csolve, to_complex, CMat, C64};
use super::schur::eigenvalues;
use super::StateSpace;
use crate::error::{invalid, Error, Result};

/// Ascending, strictly positive angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    points_per_decade: Option<u32>,
    range: (f64, f64),
}

/// Log-spaced grid from `w1` with `ppd` points per decade, reaching at least `w2`.
pub fn make_grid(w1: f64, w2: f64, ppd: u32) -> Result<FrequencyGrid> {
    if !(w1 > 0.0 && w2 > w1 && w2.is_finite()) {
        return Err(invalid(format!("frequency range must satisfy 0 < w1 < w2, got ({w1}, {w2})")));
    }
    if ppd == 0 {
        return Err(invalid("points per decade must be at least 1"));
    }
    let span = f64::from(ppd) * (w2 / w1).log10();
    let steps = (span - 1e-9).ceil().max(1.0) as usize;
    let points = (0..=steps)
        .map(|k| w1 * 10f64.powf(k as f64 / f64::from(ppd)))
        .collect();
    Ok(FrequencyGrid { points, points_per_decade: Some(ppd), range: (w1, w2) })
}

impl FrequencyGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("frequency grid is empty"));
        }
        if points.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("frequency points must be positive and finite"));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("frequency points must be strictly ascending"));
        }
        let range = (points[0], points[points.len() - 1]);
        Ok(Self { points, points_per_decade: None, range })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn points_per_decade(&self) -> Option<u32> {
        self.points_per_decade
    }
    pub fn range(&self) -> (f64, f64) {
        self.range
    }
}

/// Per-frequency singular values, descending at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaCurve {
    pub grid: FrequencyGrid,
    pub values: Vec<Vec<f64>>,
}

impl SigmaCurve {
    pub fn max_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.first().copied().unwrap_or(0.0)).collect()
    }

    /// `(omega, value)` of the largest maximum singular value.
    pub fn peak(&self) -> (f64, f64) {
        self.grid
            .points()
            .iter()
            .zip(self.max_values())
            .fold((self.grid.points()[0], f64::NEG_INFINITY), |best, (w, v)| {
                if v > best.1 {
                    (*w, v)
                } else {
                    best
                }
            })
    }
}

/// Response `C (jωI − A)⁻¹ B + D` at a single frequency, given the
/// eigenvalues of A for the pole-on-axis check.
pub(crate) fn response_at(g: &StateSpace, omega: f64, poles: &[C64]) -> Result<CMat> {
    let s = C64::new(0.0, omega);
    let scale = 1.0 + omega.abs();
    if poles.iter().any(|p| (p - s).norm() <= 1e-10 * scale) {
        return Err(Error::PoleOnAxis { omega });
    }
    let n = g.order();
    let d = to_complex(g.d());
    if n == 0 {
        return Ok(d);
    }
    let mut m = -to_complex(g.a());
    for i in 0..n {
        m[(i, i)] += s;
    }
    let x = csolve(&m, &to_complex(g.b())).ok_or(Error::PoleOnAxis { omega })?;
    Ok(to_complex(g.c()) * x + d)
}

/// Complex response matrix at every grid point.
pub fn freq_response(g: &StateSpace, grid: &FrequencyGrid) -> Result<Vec<CMat>> {
    freq_response_at(g, grid.points())
}

pub fn freq_response_at(g: &StateSpace, omegas: &[f64]) -> Result<Vec<CMat>> {
    let poles = eigenvalues(g.a())?;
    omegas.iter().map(|&w| response_at(g, w, &poles)).collect()
}

/// Response at a single frequency (ω = 0 gives the DC gain).
pub fn eval_at(g: &StateSpace, omega: f64) -> Result<CMat> {
    let poles = eigenvalues(g.a())?;
    response_at(g, omega, &poles)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return vec![0.0];
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn sigma_max(g: &StateSpace, grid: &FrequencyGrid) -> Result<SigmaCurve> {
    let values = freq_response(g, grid)?.iter().map(singular_values).collect();
    Ok(SigmaCurve { grid: grid.clone(), values })
}
