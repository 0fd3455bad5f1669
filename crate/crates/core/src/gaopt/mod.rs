//! Genetic weight tuning and the design fitness functions.

mod design;
mod fitness;
mod ga;
mod metrics;

pub use design::{design_centralized, CentralizedDesign};
pub use fitness::{
    decode_weights, encode_weights, evaluate_centralized, evaluate_kt, fitness_centralized, fitness_kt,
    ga_synth_options, interface_loop, nominal_genes, psi2, weight_genome_len, CentralizedEvaluation, FirstOrderBounds, KtContext,
    KtEvaluation, WeightBounds,
};
pub use ga::{run_ga, GaConfig, GaResult, GeneBounds, Genome, StopReason};
pub use metrics::{
    band_violation, bandwidth, eval_metrics, overshoot, rise_time_90, BandwidthSpec, Metrics, PerformanceSpec,
};
