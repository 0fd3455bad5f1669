//! Stability margins from the structured singular value peak.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mu::mu_upper;
use crate::error::{invalid, Result};
use crate::linsys::{freq_response, FrequencyGrid, SigmaCurve, StateSpace};

/// Simultaneous gain/phase margins. `None` marks an infinite gain margin
/// (`sm ≥ 1`) or an undefined phase margin (`sm > 2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub sm: f64,
    pub gm_low_db: f64,
    pub gm_high_db: Option<f64>,
    pub pm_deg: Option<f64>,
}

pub fn margins(mu_max: f64) -> Result<Margins> {
    if !(mu_max > 0.0 && mu_max.is_finite()) {
        return Err(invalid(format!("μ peak must be positive and finite, got {mu_max}")));
    }
    let sm = 1.0 / mu_max;
    Ok(Margins {
        sm,
        gm_low_db: 20.0 * (1.0 / (1.0 + sm)).log10(),
        gm_high_db: (sm < 1.0).then(|| 20.0 * (1.0 / (1.0 - sm)).log10()),
        pm_deg: (sm <= 2.0).then(|| 2.0 * (sm / 2.0).asin().to_degrees()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub mu_max: f64,
    pub peak_omega: f64,
    /// `None` when μ vanishes everywhere: every margin is infinite.
    pub margins: Option<Margins>,
    pub mu_curve: SigmaCurve,
}

/// μ upper bound of `loop_` at each grid point and the margins implied
/// by its peak.
pub fn robustness_sweep(loop_: &StateSpace, grid: &FrequencyGrid, structure: &[usize]) -> Result<MarginReport> {
    if loop_.n_inputs() != loop_.n_outputs() {
        return Err(invalid("μ analysis needs a square loop"));
    }
    let resp = freq_response(loop_, grid)?;
    let mu: Vec<f64> = resp.par_iter().map(|m| mu_upper(m, structure)).collect::<Result<_>>()?;
    let mu_curve = SigmaCurve { grid: grid.clone(), values: mu.iter().map(|&v| vec![v]).collect() };
    let (peak_omega, mu_max) = mu_curve.peak();
    let margins = if mu_max > 0.0 { Some(margins(mu_max)?) } else { None };
    Ok(MarginReport { mu_max, peak_omega, margins, mu_curve })
}
