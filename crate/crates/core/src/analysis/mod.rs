//! Closed-loop evaluation: error curves, μ robustness, margins, step
//! comparison and report files.

mod margins;
mod mu;
mod report;
mod step;

pub use margins::{margins, robustness_sweep, MarginReport, Margins};
pub use mu::{mu_upper, MU_MAX_ITERATIONS, MU_SCALING_FLOOR};
pub use report::{emit_report, sigma_table, Artifacts, Manifest, ManifestEntry, Table, MANIFEST_FILE};
pub use step::{compare_step, StepComparison};

use crate::error::{invalid, Result};
use crate::linsys::{freq_response, singular_values, FrequencyGrid, SigmaCurve, StateSpace};

/// `σ̄(T_d − T_c)(jω)` on `grid`, one value per point.
pub fn error_curve(t_d: &StateSpace, t_c: &StateSpace, grid: &FrequencyGrid) -> Result<SigmaCurve> {
    if t_d.n_inputs() != t_c.n_inputs() || t_d.n_outputs() != t_c.n_outputs() {
        return Err(invalid("error curve needs systems of equal dimensions"));
    }
    let a = freq_response(t_d, grid)?;
    let b = freq_response(t_c, grid)?;
    let values = a.iter().zip(&b).map(|(x, y)| vec![singular_values(&(x - y))[0]]).collect();
    Ok(SigmaCurve { grid: grid.clone(), values })
}
