//! Pipeline configuration document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ifpc_core::gaopt::{GaConfig, PerformanceSpec, WeightBounds};
use ifpc_core::linsys::{make_grid, FrequencyGrid, StateSpace};
use ifpc_core::partition::{IoAssignment, KtFeedback};
use ifpc_core::synth::SynthOptions;

use crate::error::{CliError, CliResult};
use crate::plant::DEMO_ENGINE_STATES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points_per_decade: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { lo: 0.01, hi: 100.0, points_per_decade: 20 }
    }
}

impl GridConfig {
    pub fn build(&self) -> CliResult<FrequencyGrid> {
        Ok(make_grid(self.lo, self.hi, self.points_per_decade)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionOrders {
    pub ka_bar: usize,
    pub k_ee: usize,
    pub k_t: usize,
}

impl Default for ReductionOrders {
    fn default() -> Self {
        Self { ka_bar: 8, k_ee: 10, k_t: 4 }
    }
}

/// Corner frequencies of the diagonal lead, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeadConfig {
    pub a: f64,
    pub b: f64,
}

impl Default for LeadConfig {
    fn default() -> Self {
        Self { a: 10.0, b: 30.0 }
    }
}

/// Interface output selection from step responses of the centralized loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterfaceConfig {
    pub candidates: Vec<String>,
    /// Controlled outputs whose commands are stepped.
    pub commands: Vec<String>,
    pub dominance_ratio: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for InterfaceConfig {
    fn default() -> Self {
        Self {
            candidates: vec!["Fx".into(), "Fz".into(), "TM".into()],
            commands: vec!["V".into()],
            dominance_ratio: 0.5,
            horizon: 20.0,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self { horizon: 20.0, dt: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    pub centralized_spec: PerformanceSpec,
    pub interface_spec: PerformanceSpec,
    pub centralized_ga: GaConfig,
    pub kt_ga: GaConfig,
    pub centralized_bounds: WeightBounds,
    pub kt_bounds: WeightBounds,
    /// Put the hand-shaped weights at the band centres into each initial
    /// population.
    pub seed_nominal: bool,
    pub nominal_w2: f64,
    pub assignment: IoAssignment,
    pub interface: InterfaceConfig,
    /// States kept in the engine subsystem model.
    pub engine_states: Vec<String>,
    pub reduction: ReductionOrders,
    pub lead: LeadConfig,
    pub kt_feedback: KtFeedback,
    /// Score K_T candidates with the reduced controller instead of the
    /// full-order one.
    pub kt_fitness_reduced: bool,
    /// Options for the final syntheses (GA evaluations skip the probes).
    pub synthesis: SynthOptions,
    pub step: StepConfig,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            centralized_spec: PerformanceSpec::centralized(),
            interface_spec: PerformanceSpec::interface(),
            centralized_ga: GaConfig::default(),
            kt_ga: GaConfig::default(),
            centralized_bounds: WeightBounds::default(),
            kt_bounds: WeightBounds::default(),
            seed_nominal: true,
            nominal_w2: 0.05,
            assignment: IoAssignment::preset(),
            interface: InterfaceConfig::default(),
            engine_states: DEMO_ENGINE_STATES.iter().map(|s| s.to_string()).collect(),
            reduction: ReductionOrders::default(),
            lead: LeadConfig::default(),
            kt_feedback: KtFeedback::default(),
            kt_fitness_reduced: false,
            synthesis: SynthOptions::default(),
            step: StepConfig::default(),
            out_dir: PathBuf::from("ifpc-out"),
        }
    }
}

fn check_labels(kind: &str, wanted: &[String], available: &[String]) -> CliResult<()> {
    for w in wanted {
        if !available.contains(w) {
            return Err(CliError::Validation(format!("{kind} label {w:?} is not in the plant")));
        }
    }
    Ok(())
}

impl PipelineConfig {
    pub fn from_json(text: &str, origin: &Path) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// Sets both GA seeds from one number.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.centralized_ga.seed = seed;
        self.kt_ga.seed = seed.wrapping_add(1);
        self
    }

    /// Plant-independent checks.
    pub fn validate(&self) -> CliResult<()> {
        self.grid.build()?;
        self.centralized_spec.validate()?;
        self.interface_spec.validate()?;
        self.centralized_ga.validate()?;
        self.kt_ga.validate()?;
        for b in [&self.centralized_bounds, &self.kt_bounds] {
            for g in b.genes(1) {
                g.validate()?;
            }
        }
        let r = self.reduction;
        if r.ka_bar == 0 || r.k_ee == 0 || r.k_t == 0 {
            return Err(CliError::Validation("reduction orders must be positive".into()));
        }
        if !(self.lead.a > 0.0 && self.lead.a < self.lead.b && self.lead.b.is_finite()) {
            return Err(CliError::Validation(format!("lead corners need 0 < a < b, got {:?}", self.lead)));
        }
        let i = &self.interface;
        if i.candidates.is_empty() || i.commands.is_empty() {
            return Err(CliError::Validation("interface candidates and commands must be non-empty".into()));
        }
        if !(i.dominance_ratio > 0.0 && i.dominance_ratio <= 1.0) || !(i.dt > 0.0 && i.dt <= i.horizon) {
            return Err(CliError::Validation("interface selection settings out of range".into()));
        }
        if !(self.step.dt > 0.0 && self.step.dt <= self.step.horizon) {
            return Err(CliError::Validation("step horizon and interval out of range".into()));
        }
        if !(self.nominal_w2 > 0.0) {
            return Err(CliError::Validation("nominal control weight must be positive".into()));
        }
        let n = self.assignment.controlled_outputs().len();
        if self.centralized_spec.bandwidths.iter().any(|b| b.channel >= n) || self.centralized_spec.step_channel >= n {
            return Err(CliError::Validation("centralized spec refers to a channel beyond the controlled outputs".into()));
        }
        Ok(())
    }

    /// Every referenced label exists in `plant` (scaled plant, labels
    /// from the document).
    pub fn validate_for(&self, plant: &StateSpace, state_labels: &[String]) -> CliResult<()> {
        self.validate()?;
        let a = &self.assignment;
        check_labels("input", &a.control_inputs(), plant.input_labels())?;
        check_labels("output", &a.controlled_outputs(), plant.output_labels())?;
        check_labels("interface candidate", &self.interface.candidates, plant.output_labels())?;
        check_labels("command", &self.interface.commands, &a.airframe_outputs)?;
        check_labels("engine state", &self.engine_states, state_labels)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{generate_demo_plant, DEMO_SEED};

    #[test]
    fn defaults_validate_on_demo() {
        let doc = generate_demo_plant(DEMO_SEED);
        let p = doc.load().unwrap();
        PipelineConfig::default().validate_for(&p.scaled, &doc.states).unwrap();
    }

    #[test]
    fn json_round_trip_and_partial_documents() {
        let c = PipelineConfig::default().with_seed(9);
        let back = PipelineConfig::from_json(&c.to_json().unwrap(), Path::new("c.json")).unwrap();
        assert_eq!(back, c);
        let partial = PipelineConfig::from_json(r#"{"lead": {"a": 5.0}}"#, Path::new("p.json")).unwrap();
        assert_eq!(partial.lead, LeadConfig { a: 5.0, b: 30.0 });
        assert_eq!(partial.reduction, ReductionOrders::default());
    }

    #[test]
    fn errors_carry_position() {
        let err = PipelineConfig::from_json("{\n  \"lead\": 3\n}", Path::new("bad.json")).unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(PipelineConfig::from_json(r#"{"nonsense": 1}"#, Path::new("x")).is_err());
    }

    #[test]
    fn bad_labels_named() {
        let doc = generate_demo_plant(DEMO_SEED);
        let p = doc.load().unwrap();
        let mut c = PipelineConfig::default();
        c.interface.candidates.push("Fy".into());
        let msg = c.validate_for(&p.scaled, &doc.states).unwrap_err().to_string();
        assert!(msg.contains("Fy"), "{msg}");
        let mut c = PipelineConfig::default();
        c.lead = LeadConfig { a: 30.0, b: 10.0 };
        assert!(c.validate().is_err());
    }
}
