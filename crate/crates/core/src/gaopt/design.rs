//! GA-driven centralized design.

use serde::{Deserialize, Serialize};

use super::fitness::{evaluate_centralized, fitness_centralized, CentralizedEvaluation, WeightBounds};
use super::ga::{run_ga, GaConfig, GaResult};
use super::metrics::PerformanceSpec;
use crate::error::{Error, Result};
use crate::linsys::{FrequencyGrid, StateSpace};
use crate::synth::SynthOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizedDesign {
    pub ga: GaResult,
    /// Best genome re-evaluated with `final_opts`.
    pub evaluation: CentralizedEvaluation,
}

/// Tunes the mixed-sensitivity weights of `g` with the GA, then
/// re-synthesizes the winner with `final_opts`.
pub fn design_centralized(
    g: &StateSpace,
    spec: &PerformanceSpec,
    bounds: &WeightBounds,
    config: &GaConfig,
    grid: &FrequencyGrid,
    final_opts: &SynthOptions,
) -> Result<CentralizedDesign> {
    spec.validate()?;
    let genes = bounds.genes(g.n_outputs());
    let ga = run_ga(|x| fitness_centralized(x, g, spec, grid), &genes, config)?;
    if ga.best_fitness >= spec.failure_penalty.min(config.failure_penalty) {
        return Err(Error::DesignFailure(format!(
            "no genome produced a controller in {} evaluations (best fitness {})",
            ga.evaluations, ga.best_fitness
        )));
    }
    let evaluation = evaluate_centralized(&ga.best_genome.genes, g, spec, grid, final_opts);
    if let Some(why) = &evaluation.failure {
        return Err(Error::DesignFailure(format!("best genome {:?} failed on re-synthesis: {why}", ga.best_genome.genes)));
    }
    Ok(CentralizedDesign { ga, evaluation })
}
