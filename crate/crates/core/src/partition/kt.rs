//! GA-driven design of the interface tracking controller.

use serde::{Deserialize, Serialize};

use super::controller::ReducedBlock;
use crate::error::{Error, Result};
use crate::gaopt::{evaluate_kt, fitness_kt, run_ga, GaConfig, GaResult, KtContext, KtEvaluation, PerformanceSpec, WeightBounds};
use crate::linsys::{balanced_truncate, is_stable, FrequencyGrid};
use crate::synth::SynthOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KtDesign {
    pub ga: GaResult,
    /// Best genome re-evaluated with the final synthesis options.
    pub evaluation: KtEvaluation,
    /// Stripped controller, full and reduced.
    pub k_t: ReducedBlock,
}

/// Tunes the engine-loop weights on `ctx.engine_plant` (`U_e → [y_ea; y_e]`),
/// strips the `y_e` channels and reduces the result to `reduce_to` states.
pub fn design_kt(
    ctx: &KtContext<'_>,
    spec: &PerformanceSpec,
    bounds: &WeightBounds,
    config: &GaConfig,
    grid: &FrequencyGrid,
    reduce_to: usize,
    final_opts: &SynthOptions,
) -> Result<KtDesign> {
    spec.validate()?;
    if !is_stable(ctx.engine_plant) {
        return Err(Error::Unstable("engine design plant".into()));
    }
    if ctx.plant.dims().yea == 0 {
        return Err(Error::InvalidArgument("no interface outputs selected".into()));
    }
    let genes = bounds.genes(ctx.engine_plant.n_outputs());
    let ga = run_ga(|x| fitness_kt(x, ctx, spec, grid), &genes, config)?;
    if ga.best_fitness >= spec.failure_penalty.min(config.failure_penalty) {
        return Err(Error::DesignFailure(format!(
            "no engine-loop genome produced a controller in {} evaluations (best fitness {})",
            ga.evaluations, ga.best_fitness
        )));
    }
    let evaluation = evaluate_kt(&ga.best_genome.genes, ctx, spec, grid, final_opts);
    if let Some(why) = &evaluation.failure {
        return Err(Error::DesignFailure(format!("best engine-loop genome failed on re-synthesis: {why}")));
    }
    let full = evaluation.k_t_full.clone().expect("successful evaluation stores the controller");
    if !is_stable(&full) {
        return Err(Error::Unstable("interface tracking controller".into()));
    }
    let r = balanced_truncate(&full, reduce_to.min(full.order()))?;
    let error_bound = r.error_bound();
    if !is_stable(&r.system) {
        return Err(Error::Unstable("reduced interface tracking controller".into()));
    }
    Ok(KtDesign { ga, evaluation, k_t: ReducedBlock { full, reduced: r.system, hankel_svs: r.hankel_svs, error_bound } })
}
