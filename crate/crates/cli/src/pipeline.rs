//! Staged design pipeline with on-disk stage results.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use ifpc_core::analysis::{
    compare_step, emit_report, error_curve, robustness_sweep, sigma_table, Artifacts, Manifest, MarginReport,
    StepComparison, Table,
};
use ifpc_core::gaopt::{design_centralized, nominal_genes, CentralizedDesign, GaResult, KtContext, PerformanceSpec};
use ifpc_core::linsys::{select_by_label, select_channels, sigma_max, SigmaCurve, StateSpace};
use ifpc_core::partition::{
    assemble_tc_ext, assign_io, build_airframe_sub, build_lead, check_stability_condition, design_kt, extract_kee,
    assemble_td, output_loop_tc, output_loop_td, select_interface, DecentralizedController, InterfaceSelection,
    KtDesign, PartitionDims, PartitionedPlant, ReducedBlock, StabilityCheck,
};
use ifpc_core::synth::build_augmented;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::plant::{LoadedPlant, PlantDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Partition,
    Analyze,
    Simulate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Synth, Stage::Partition, Stage::Analyze, Stage::Simulate, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Partition => "partition",
            Stage::Analyze => "analyze",
            Stage::Simulate => "simulate",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Last stage to run; the report is always written.
    pub until: Stage,
    /// Reuse stored stage results whose fingerprint matches.
    pub resume: bool,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    /// `G`: `[U_a; U_e] → [y_a; y_e]`.
    pub design_plant: StateSpace,
    pub augmented_order: usize,
    pub design: CentralizedDesign,
}

impl SynthOutput {
    pub fn controller(&self) -> &StateSpace {
        &self.design.evaluation.synthesis.as_ref().expect("stored designs carry a synthesis").controller
    }

    pub fn t_c(&self) -> &StateSpace {
        self.design.evaluation.closed_loop.as_ref().expect("stored designs carry T_c")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOutput {
    pub selection: InterfaceSelection,
    pub interface_labels: Vec<String>,
    pub plant: PartitionedPlant,
    pub dims: PartitionDims,
    /// `U_e → [y_e; y_ea]` on the engine states.
    pub engine_subsystem: StateSpace,
    pub ka_bar: ReducedBlock,
    pub lead: StateSpace,
    pub k_ee: ReducedBlock,
    pub kt: KtDesign,
    pub full: DecentralizedController,
    pub reduced: DecentralizedController,
    pub t_d_full: StateSpace,
    pub t_d_reduced: StateSpace,
    pub check_full: StabilityCheck,
    pub check_reduced: StabilityCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    pub error_full: SigmaCurve,
    pub error_reduced: SigmaCurve,
    pub margins_centralized: MarginReport,
    pub margins_full: MarginReport,
    pub margins_reduced: MarginReport,
    /// `(name, full, reduced)` singular values of each controller piece.
    pub controller_sigma: Vec<(String, SigmaCurve, SigmaCurve)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    /// One comparison per command channel.
    pub comparisons: Vec<StepComparison>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutput {
    pub synth: Option<SynthOutput>,
    pub partition: Option<PartitionOutput>,
    pub analyze: Option<AnalyzeOutput>,
    pub simulate: Option<SimulateOutput>,
    pub manifest: Manifest,
}

#[derive(Serialize, Deserialize)]
struct Stored<T> {
    fingerprint: String,
    output: T,
}

fn stage_path(out_dir: &Path, stage: Stage) -> PathBuf {
    out_dir.join("stages").join(format!("{}.json", stage.name()))
}

fn fingerprint(stage: Stage, previous: &str, plant: &str, config: &str) -> String {
    let mut h = Sha256::new();
    for part in [stage.name(), previous, plant, config] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

fn load_stored<T: DeserializeOwned>(path: &Path, fp: &str) -> Option<T> {
    let text = std::fs::read_to_string(path).ok()?;
    let s: Stored<T> = serde_json::from_str(&text).ok()?;
    (s.fingerprint == fp).then_some(s.output)
}

fn store<T: Serialize>(path: &Path, fp: &str, output: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Stored { fingerprint: fp.to_string(), output })
        .map_err(|e| CliError::Validation(e.to_string()))?;
    bytes.push(b'\n');
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
    Ok(bytes)
}

fn index_of(labels: &[String], wanted: &str) -> CliResult<usize> {
    labels
        .iter()
        .position(|l| l == wanted)
        .ok_or_else(|| CliError::Validation(format!("label {wanted:?} not found")))
}

/// Band centre per channel, 1 rad/s where no band is given.
fn band_centres(spec: &PerformanceSpec, channels: usize) -> Vec<f64> {
    (0..channels)
        .map(|c| spec.bandwidths.iter().find(|b| b.channel == c).map_or(1.0, |b| 0.5 * (b.lo + b.hi)))
        .collect()
}

pub fn synth_stage(plant: &LoadedPlant, config: &PipelineConfig) -> CliResult<SynthOutput> {
    let a = &config.assignment;
    let g = select_by_label(&plant.scaled, &a.control_inputs(), &a.controlled_outputs())?;
    let grid = config.grid.build()?;
    let mut ga = config.centralized_ga.clone();
    if config.seed_nominal {
        ga.initial.push(nominal_genes(&band_centres(&config.centralized_spec, g.n_outputs()), config.nominal_w2)?);
    }
    let design = design_centralized(
        &g,
        &config.centralized_spec,
        &config.centralized_bounds,
        &ga,
        &grid,
        &config.synthesis,
    )?;
    let weights = design.evaluation.weights.as_ref().expect("successful design stores its weights");
    let augmented_order = build_augmented(&g, weights)?.order();
    Ok(SynthOutput { design_plant: g, augmented_order, design })
}

pub fn partition_stage(plant: &LoadedPlant, config: &PipelineConfig, synth: &SynthOutput) -> CliResult<PartitionOutput> {
    let a = &config.assignment;
    let controlled = a.controlled_outputs();
    let ny = controlled.len();
    let k = synth.controller();
    let grid = config.grid.build()?;

    let ext_outputs: Vec<String> = controlled.iter().chain(&config.interface.candidates).cloned().collect();
    let ext = select_by_label(&plant.scaled, &a.control_inputs(), &ext_outputs)?;
    let t_ext = assemble_tc_ext(&ext, k, ny)?;
    let commands = config.interface.commands.iter().map(|c| index_of(&controlled, c)).collect::<CliResult<Vec<_>>>()?;
    let candidates: Vec<usize> = (ny..ext_outputs.len()).collect();
    let i = &config.interface;
    let selection = select_interface(&t_ext, &candidates, &commands, i.dominance_ratio, i.horizon, i.dt)?;
    let interface_labels: Vec<String> = selection.selected.iter().map(|&s| ext_outputs[s].clone()).collect();
    if interface_labels.is_empty() {
        return Err(CliError::Validation("no interface output passed the dominance test".into()));
    }

    let sel_outputs: Vec<String> = controlled.iter().chain(&interface_labels).cloned().collect();
    let g_sel = select_by_label(&plant.scaled, &a.control_inputs(), &sel_outputs)?;
    let pp = assign_io(&g_sel, &a.clone().with_interface(interface_labels.clone()))?;
    let d = pp.dims();
    let states = config
        .engine_states
        .iter()
        .map(|s| index_of(&plant.document.states, s))
        .collect::<CliResult<Vec<_>>>()?;
    let engine = pp.engine_subsystem(&states)?;

    let r = config.reduction;
    let ka_bar = build_airframe_sub(k, &engine, &d, r.ka_bar)?;
    let lead = build_lead(config.lead.a, config.lead.b, d.yea)?;
    let k_ee = extract_kee(k, &d, r.k_ee)?;

    let kt_outputs: Vec<usize> = (d.ye..d.ye + d.yea).chain(0..d.ye).collect();
    let kt_plant = select_channels(&engine, &(0..d.ue).collect::<Vec<_>>(), &kt_outputs)?;
    let (ka_ctx, kee_ctx) =
        if config.kt_fitness_reduced { (&ka_bar.reduced, &k_ee.reduced) } else { (&ka_bar.full, &k_ee.full) };
    let ctx = KtContext {
        plant: &pp,
        engine_plant: &kt_plant,
        ka_bar: ka_ctx,
        k_lead: &lead,
        k_ee: kee_ctx,
        t_c: synth.t_c(),
        feedback: config.kt_feedback,
        reduce_to: config.kt_fitness_reduced.then_some(r.k_t),
    };
    let mut ga = config.kt_ga.clone();
    if config.seed_nominal {
        let centre = band_centres(&config.interface_spec, 1)[0];
        ga.initial.push(nominal_genes(&vec![centre; kt_plant.n_outputs()], config.nominal_w2)?);
    }
    let kt = design_kt(&ctx, &config.interface_spec, &config.kt_bounds, &ga, &grid, r.k_t, &config.synthesis)?;

    let piece = |ka: &StateSpace, t: &StateSpace, ee: &StateSpace| DecentralizedController {
        ka_bar: ka.clone(),
        k_lead: lead.clone(),
        k_t: t.clone(),
        k_ee: ee.clone(),
        kt_feedback: config.kt_feedback,
    };
    let full = piece(&ka_bar.full, &kt.k_t.full, &k_ee.full);
    let reduced = piece(&ka_bar.reduced, &kt.k_t.reduced, &k_ee.reduced);
    let t_d_full = assemble_td(&pp, &full)?;
    let t_d_reduced = assemble_td(&pp, &reduced)?;
    let check_full = check_stability_condition(&t_d_full, synth.t_c())?;
    let check_reduced = check_stability_condition(&t_d_reduced, synth.t_c())?;
    Ok(PartitionOutput {
        selection,
        interface_labels,
        plant: pp,
        dims: d,
        engine_subsystem: engine,
        ka_bar,
        lead,
        k_ee,
        kt,
        full,
        reduced,
        t_d_full,
        t_d_reduced,
        check_full,
        check_reduced,
    })
}

pub fn analyze_stage(config: &PipelineConfig, synth: &SynthOutput, part: &PartitionOutput) -> CliResult<AnalyzeOutput> {
    let grid = config.grid.build()?;
    let t_c = synth.t_c();
    let structure = vec![1; t_c.n_outputs()];
    let sweep = |l: StateSpace| robustness_sweep(&l, &grid, &structure);
    let sig = |g: &StateSpace| sigma_max(g, &grid);
    let controller_sigma = vec![
        ("ka_bar".to_string(), sig(&part.ka_bar.full)?, sig(&part.ka_bar.reduced)?),
        ("k_ee".to_string(), sig(&part.k_ee.full)?, sig(&part.k_ee.reduced)?),
        ("k_t".to_string(), sig(&part.kt.k_t.full)?, sig(&part.kt.k_t.reduced)?),
    ];
    Ok(AnalyzeOutput {
        error_full: error_curve(&part.t_d_full, t_c, &grid)?,
        error_reduced: error_curve(&part.t_d_reduced, t_c, &grid)?,
        margins_centralized: sweep(output_loop_tc(&synth.design_plant, synth.controller())?)?,
        margins_full: sweep(output_loop_td(&part.plant, &part.full)?)?,
        margins_reduced: sweep(output_loop_td(&part.plant, &part.reduced)?)?,
        controller_sigma,
    })
}

pub fn simulate_stage(config: &PipelineConfig, synth: &SynthOutput, part: &PartitionOutput) -> CliResult<SimulateOutput> {
    let systems = [
        ("centralized", synth.t_c()),
        ("decentralized_full", &part.t_d_full),
        ("decentralized_reduced", &part.t_d_reduced),
    ];
    let comparisons = (0..synth.t_c().n_inputs())
        .map(|c| compare_step(&systems, c, config.step.horizon, config.step.dt).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(SimulateOutput { comparisons })
}

fn history_table(ga: &GaResult) -> Table {
    Table {
        header: vec!["generation".into(), "best_fitness".into()],
        rows: ga.history_rows().into_iter().map(|(g, f)| vec![g as f64, f]).collect(),
    }
}

fn margin_doc(m: &MarginReport) -> Value {
    let mut o = Map::new();
    o.insert("mu_max".into(), json!(m.mu_max));
    o.insert("mu_peak_omega".into(), json!(m.peak_omega));
    match &m.margins {
        Some(g) => {
            o.insert("sm".into(), json!(g.sm));
            o.insert("gm_low_db".into(), json!(g.gm_low_db));
            o.insert("gm_high_db".into(), json!(g.gm_high_db));
            o.insert("pm_deg".into(), json!(g.pm_deg));
        }
        None => {
            o.insert("infinite_margins".into(), json!(true));
        }
    }
    Value::Object(o)
}

fn check_doc(c: &StabilityCheck) -> Value {
    json!({ "norm": c.norm, "peak_omega": c.peak_omega, "passes": c.passes })
}

/// Tables and documents for whatever stages have completed.
pub fn collect_artifacts(config: &PipelineConfig, out: &PipelineOutput, stage_files: &[(Stage, Vec<u8>)]) -> CliResult<Artifacts> {
    let mut a = Artifacts::default();
    let mut metrics = Map::new();
    for (stage, bytes) in stage_files {
        a.files.insert(format!("stages/{}.json", stage.name()), bytes.clone());
    }
    let mut cfg = config.clone();
    cfg.out_dir = PathBuf::new();
    a.documents.insert("config".into(), serde_json::to_value(&cfg).map_err(|e| CliError::Validation(e.to_string()))?);

    if let Some(s) = &out.synth {
        a.tables.insert("ga/centralized_history".into(), history_table(&s.design.ga));
        let ev = &s.design.evaluation;
        let m = ev.metrics.as_ref().expect("stored designs carry metrics");
        let labels = s.design_plant.output_labels();
        let bws: Map<String, Value> = config
            .centralized_spec
            .bandwidths
            .iter()
            .zip(&m.bandwidths)
            .map(|(b, v)| (labels[b.channel].clone(), json!(v)))
            .collect();
        let syn = ev.synthesis.as_ref().expect("stored designs carry a synthesis");
        metrics.insert(
            "centralized".into(),
            json!({
                "fitness": ev.fitness,
                "generations": s.design.ga.history.len() - 1,
                "evaluations": s.design.ga.evaluations,
                "stop_reason": s.design.ga.stop_reason,
                "gamma": syn.gamma_achieved,
                "verified_norm": syn.verified_norm,
                "controller_stable": syn.controller_stable,
                "augmented_order": s.augmented_order,
                "controller_order": syn.controller.order(),
                "bandwidths": bws,
                "rise_time": m.rise_time,
                "overshoot": m.overshoot,
                "weight_slack": ev.weight_slack,
            }),
        );
        a.tables.insert("curves/sigma_tc".into(), sigma_table(&sigma_max(s.t_c(), &config.grid.build()?)?, &["sigma_max"]));
    }
    if let Some(p) = &out.partition {
        a.tables.insert("ga/kt_history".into(), history_table(&p.kt.ga));
        metrics.insert("hinf_error_full".into(), json!(p.check_full.norm));
        metrics.insert("hinf_error_reduced".into(), json!(p.check_reduced.norm));
        metrics.insert("stability_condition_full".into(), check_doc(&p.check_full));
        metrics.insert("stability_condition_reduced".into(), check_doc(&p.check_reduced));
        metrics.insert(
            "interface".into(),
            json!({ "selected": p.interface_labels, "candidates": config.interface.candidates, "peaks": p.selection.peaks }),
        );
        let tm = p.kt.evaluation.metrics.as_ref();
        metrics.insert(
            "interface_tracking".into(),
            json!({
                "fitness": p.kt.evaluation.fitness,
                "psi2": p.kt.evaluation.psi2,
                "generations": p.kt.ga.history.len() - 1,
                "stop_reason": p.kt.ga.stop_reason,
                "bandwidth": tm.and_then(|m| m.bandwidths.first().copied().flatten()),
                "rise_time": tm.and_then(|m| m.rise_time),
                "overshoot": tm.map(|m| m.overshoot),
            }),
        );
        metrics.insert(
            "orders".into(),
            json!({
                "engine_subsystem": p.engine_subsystem.order(),
                "ka_bar_full": p.ka_bar.full.order(),
                "ka_bar_reduced": p.ka_bar.reduced.order(),
                "k_ee_full": p.k_ee.full.order(),
                "k_ee_reduced": p.k_ee.reduced.order(),
                "k_t_full": p.kt.k_t.full.order(),
                "k_t_reduced": p.kt.k_t.reduced.order(),
                "lead": p.lead.order(),
                "decentralized_full": p.full.order(),
                "decentralized_reduced": p.reduced.order(),
            }),
        );
        let stab: Map<String, Value> = p
            .full
            .block_stability()
            .iter()
            .chain(p.reduced.block_stability().iter())
            .zip(["full", "full", "full", "full", "reduced", "reduced", "reduced", "reduced"])
            .map(|((name, ok), which)| (format!("{name}_{which}"), json!(ok)))
            .collect();
        metrics.insert("block_stability".into(), Value::Object(stab));
    }
    if let Some(an) = &out.analyze {
        let mut err = sigma_table(&an.error_full, &["full"]);
        for (row, v) in err.rows.iter_mut().zip(an.error_reduced.max_values()) {
            row.push(v);
        }
        err.header.push("reduced".into());
        a.tables.insert("curves/error".into(), err);
        let mut mu = sigma_table(&an.margins_centralized.mu_curve, &["centralized"]);
        for (name, r) in [("decentralized_full", &an.margins_full), ("decentralized_reduced", &an.margins_reduced)] {
            mu.header.push(name.into());
            for (row, v) in mu.rows.iter_mut().zip(r.mu_curve.max_values()) {
                row.push(v);
            }
        }
        a.tables.insert("curves/mu".into(), mu);
        for (name, full, red) in &an.controller_sigma {
            let mut t = sigma_table(full, &["full_sigma_max"]);
            t.header.push("reduced_sigma_max".into());
            for (row, v) in t.rows.iter_mut().zip(red.max_values()) {
                row.push(v);
            }
            a.tables.insert(format!("curves/sigma_{name}"), t);
        }
        metrics.insert("centralized_margins".into(), margin_doc(&an.margins_centralized));
        metrics.insert("decentralized_full_margins".into(), margin_doc(&an.margins_full));
        metrics.insert("decentralized_reduced_margins".into(), margin_doc(&an.margins_reduced));
        metrics.insert("error_curve_peak_full".into(), json!(an.error_full.peak().1));
        metrics.insert("error_curve_peak_reduced".into(), json!(an.error_reduced.peak().1));
    }
    if let Some(sim) = &out.simulate {
        let mut steps = Map::new();
        for c in &sim.comparisons {
            let label = c.output_labels[c.command_channel].clone();
            a.tables.insert(format!("steps/{label}"), c.table());
            let off: Map<String, Value> =
                c.systems.iter().enumerate().map(|(i, s)| (s.clone(), json!(c.off_channel_ratio(i)))).collect();
            steps.insert(
                label,
                json!({ "max_deviation": c.max_deviation, "worst_deviation": c.worst_deviation(), "off_channel_ratio": off }),
            );
        }
        metrics.insert("steps".into(), Value::Object(steps));
    }
    a.documents.insert("metrics".into(), Value::Object(metrics));
    Ok(a)
}

struct Runner<'a> {
    plant: &'a LoadedPlant,
    config: &'a PipelineConfig,
    opts: &'a RunOptions,
    plant_json: String,
    config_json: String,
    previous: String,
    stage_files: Vec<(Stage, Vec<u8>)>,
}

impl Runner<'_> {
    fn run<T, F>(&mut self, stage: Stage, compute: F) -> CliResult<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> CliResult<T>,
    {
        let fp = fingerprint(stage, &self.previous, &self.plant_json, &self.config_json);
        let path = stage_path(&self.opts.out_dir, stage);
        let reused = if self.opts.resume { load_stored::<T>(&path, &fp) } else { None };
        let output = match reused {
            Some(o) => o,
            None => compute().map_err(|e| e.in_stage(stage.name()))?,
        };
        let bytes = store(&path, &fp, &output).map_err(|e| e.in_stage(stage.name()))?;
        self.stage_files.push((stage, bytes));
        self.previous = fp;
        Ok(output)
    }
}

fn config_fingerprint_json(config: &PipelineConfig) -> CliResult<String> {
    let mut c = config.clone();
    c.out_dir = PathBuf::new();
    serde_json::to_string(&c).map_err(|e| CliError::Validation(e.to_string()))
}

/// Runs the stages up to `opts.until` and writes the report. A failed
/// stage still leaves a report of the completed ones.
pub fn run_pipeline(doc: &PlantDocument, config: &PipelineConfig, opts: &RunOptions) -> CliResult<PipelineOutput> {
    let plant = doc.load()?;
    config.validate_for(&plant.scaled, &doc.states)?;
    let mut r = Runner {
        plant: &plant,
        config,
        opts,
        plant_json: doc.to_json(),
        config_json: config_fingerprint_json(config)?,
        previous: String::new(),
        stage_files: Vec::new(),
    };
    let mut out = PipelineOutput::default();
    let result = run_stages(&mut r, &mut out);
    let artifacts = collect_artifacts(config, &out, &r.stage_files)?;
    out.manifest = emit_report(&artifacts, &opts.out_dir).map_err(|e| CliError::from(e).in_stage(Stage::Report.name()))?;
    result.map(|_| out)
}

fn run_stages(r: &mut Runner<'_>, out: &mut PipelineOutput) -> CliResult<()> {
    let (plant, config, until) = (r.plant, r.config, r.opts.until);
    let synth = r.run(Stage::Synth, || synth_stage(plant, config))?;
    out.synth = Some(synth);
    if until < Stage::Partition {
        return Ok(());
    }
    let s = out.synth.as_ref().expect("set above");
    let part = r.run(Stage::Partition, || partition_stage(plant, config, s))?;
    out.partition = Some(part);
    if until < Stage::Analyze {
        return Ok(());
    }
    let p = out.partition.as_ref().expect("set above");
    let an = r.run(Stage::Analyze, || analyze_stage(config, s, p))?;
    out.analyze = Some(an);
    if until < Stage::Simulate {
        return Ok(());
    }
    let sim = r.run(Stage::Simulate, || simulate_stage(config, s, p))?;
    out.simulate = Some(sim);
    Ok(())
}
