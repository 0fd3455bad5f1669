#![allow(dead_code)]

use ifpc_cli::config::PipelineConfig;

/// Short GA runs so the whole pipeline finishes in seconds.
pub fn small_config(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig::default().with_seed(seed);
    c.centralized_ga.population_size = 8;
    c.centralized_ga.max_generations = 3;
    c.kt_ga.population_size = 8;
    c.kt_ga.max_generations = 4;
    c
}
