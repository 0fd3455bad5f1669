//! Weight genomes and the two design fitness functions.

use serde::{Deserialize, Serialize};

use super::ga::GeneBounds;
use super::metrics::{eval_metrics, Metrics, PerformanceSpec};
use crate::error::{invalid, Result};
use crate::linsys::{
    balanced_truncate, freq_response, is_stable, singular_values, FrequencyGrid, Interconnection, Signal, StateSpace,
};
use crate::partition::{assemble_tc, assemble_td, strip_kt, DecentralizedController, KtFeedback, PartitionedPlant};
use crate::synth::{
    build_augmented, check_weight_constraint, hinfsyn_with, FirstOrderWeight, SynthOptions, SynthesisResult,
    WeightSet,
};

/// `3` genes per W1 channel, one for W2, `3` per W3 channel.
pub fn weight_genome_len(channels: usize) -> usize {
    6 * channels + 1
}

/// Genes are `log10` of `(k, z, p)` for each W1 channel, then W2, then
/// `(k, z, p)` for each W3 channel.
pub fn decode_weights(genes: &[f64], channels: usize) -> Result<WeightSet> {
    if channels == 0 || genes.len() != weight_genome_len(channels) {
        return Err(invalid(format!("{} genes cannot encode {channels} weight channels", genes.len())));
    }
    let p10 = |x: f64| 10f64.powf(x);
    let fo = |g: &[f64]| FirstOrderWeight::new(p10(g[0]), p10(g[1]), p10(g[2]));
    let w1 = (0..channels).map(|i| fo(&genes[3 * i..3 * i + 3])).collect::<Result<Vec<_>>>()?;
    let off = 3 * channels + 1;
    let w3 = (0..channels).map(|i| fo(&genes[off + 3 * i..off + 3 * i + 3])).collect::<Result<Vec<_>>>()?;
    WeightSet::new(w1, p10(genes[3 * channels]), w3)
}

pub fn encode_weights(w: &WeightSet) -> Vec<f64> {
    let fo = |f: &FirstOrderWeight| [f.k.log10(), f.z.log10(), f.p.log10()];
    let mut g: Vec<f64> = w.w1.iter().flat_map(fo).collect();
    g.push(w.w2.log10());
    g.extend(w.w3.iter().flat_map(fo));
    g
}

/// `log10` bounds for one first-order weight: `(k, z, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderBounds {
    pub k: GeneBounds,
    pub z: GeneBounds,
    pub p: GeneBounds,
}

/// Genome bounds in `log10` space, shared by every channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub w1: FirstOrderBounds,
    pub w2: GeneBounds,
    pub w3: FirstOrderBounds,
}

impl WeightBounds {
    pub fn genes(&self, channels: usize) -> Vec<GeneBounds> {
        let fo = |f: &FirstOrderBounds| [f.k, f.z, f.p];
        let mut v: Vec<GeneBounds> = (0..channels).flat_map(|_| fo(&self.w1)).collect();
        v.push(self.w2);
        v.extend((0..channels).flat_map(|_| fo(&self.w3)));
        v
    }
}

fn gb(lo: f64, hi: f64) -> GeneBounds {
    GeneBounds { lo, hi }
}

impl Default for WeightBounds {
    /// Low-pass-shaped sensitivity weight, small effort weight,
    /// high-pass-shaped complementary weight.
    fn default() -> Self {
        Self {
            w1: FirstOrderBounds { k: gb(-1.5, 0.0), z: gb(-1.0, 1.5), p: gb(-3.0, -0.5) },
            w2: gb(-3.0, -0.5),
            w3: FirstOrderBounds { k: gb(0.0, 1.5), z: gb(0.0, 2.5), p: gb(1.5, 3.5) },
        }
    }
}

/// Hand-shaped starting point: per-channel crossover `bw`, W1 = 0.5(s/bw+1)/(s/(0.01bw)+1),
/// W3 = 5(s/(4bw)+1)/(s/(200bw)+1), constant W2.
pub fn nominal_genes(bandwidths: &[f64], w2: f64) -> Result<Vec<f64>> {
    let fo = FirstOrderWeight::new;
    let w1 = bandwidths.iter().map(|&b| fo(0.5, b, 0.01 * b)).collect::<Result<Vec<_>>>()?;
    let w3 = bandwidths.iter().map(|&b| fo(5.0, 4.0 * b, 200.0 * b)).collect::<Result<Vec<_>>>()?;
    Ok(encode_weights(&WeightSet::new(w1, w2, w3)?))
}

/// Options for fitness evaluation inside the GA: no monotonicity probes.
pub fn ga_synth_options() -> SynthOptions {
    SynthOptions { monotonicity_probes: false, ..SynthOptions::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizedEvaluation {
    pub fitness: f64,
    pub weights: Option<WeightSet>,
    pub synthesis: Option<SynthesisResult>,
    /// `T_c`.
    pub closed_loop: Option<StateSpace>,
    pub metrics: Option<Metrics>,
    pub weight_slack: Option<f64>,
    pub failure: Option<String>,
}

impl CentralizedEvaluation {
    fn failed(spec: &PerformanceSpec, why: String) -> Self {
        Self {
            fitness: spec.failure_penalty,
            weights: None,
            synthesis: None,
            closed_loop: None,
            metrics: None,
            weight_slack: None,
            failure: Some(why),
        }
    }
}

/// ψ₁ with every intermediate kept. `g` is the square design plant.
pub fn evaluate_centralized(
    genes: &[f64],
    g: &StateSpace,
    spec: &PerformanceSpec,
    grid: &FrequencyGrid,
    opts: &SynthOptions,
) -> CentralizedEvaluation {
    let p = g.n_outputs();
    let weights = match decode_weights(genes, p) {
        Ok(w) => w,
        Err(e) => return CentralizedEvaluation::failed(spec, e.to_string()),
    };
    let check = check_weight_constraint(&weights, grid);
    let slack = check.min_slack();
    let mut extra = 0.0;
    if !check.satisfied {
        extra += spec.weight_constraint_penalty * (1.0 - slack);
    }
    let synth = build_augmented(g, &weights).and_then(|aug| hinfsyn_with(&aug, 2 * p, g.n_inputs(), opts));
    let synth = match synth {
        Ok(s) => s,
        Err(e) => {
            let mut ev = CentralizedEvaluation::failed(spec, e.to_string());
            ev.weights = Some(weights);
            ev.weight_slack = Some(slack);
            return ev;
        }
    };
    if !synth.controller_stable {
        extra += spec.unstable_penalty;
    }
    let scored = assemble_tc(g, &synth.controller)
        .and_then(|tc| eval_metrics(&tc, spec, grid, synth.verified_norm).map(|m| (tc, m)));
    match scored {
        Ok((tc, m)) => CentralizedEvaluation {
            fitness: spec.penalty(&m) + extra,
            weights: Some(weights),
            synthesis: Some(synth),
            closed_loop: Some(tc),
            metrics: Some(m),
            weight_slack: Some(slack),
            failure: None,
        },
        Err(e) => {
            let mut ev = CentralizedEvaluation::failed(spec, e.to_string());
            ev.weights = Some(weights);
            ev.synthesis = Some(synth);
            ev.weight_slack = Some(slack);
            ev
        }
    }
}

/// ψ₁: band penalties plus the weight-inequality and stability prices;
/// the failure penalty when synthesis or assembly fails.
pub fn fitness_centralized(genes: &[f64], g: &StateSpace, spec: &PerformanceSpec, grid: &FrequencyGrid) -> f64 {
    evaluate_centralized(genes, g, spec, grid, &ga_synth_options()).fitness
}

/// `(1/m) Σ σ̄[T_d(jω) − T_c(jω)]²` over the grid.
pub fn psi2(t_d: &StateSpace, t_c: &StateSpace, grid: &FrequencyGrid) -> Result<f64> {
    if t_d.n_inputs() != t_c.n_inputs() || t_d.n_outputs() != t_c.n_outputs() {
        return Err(invalid("ψ₂ needs systems of equal dimensions"));
    }
    let a = freq_response(t_d, grid)?;
    let b = freq_response(t_c, grid)?;
    let sum: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| singular_values(&(x - y)).first().copied().unwrap_or(0.0).powi(2))
        .sum();
    Ok(sum / grid.len() as f64)
}

/// Everything the interface-tracking fitness needs besides the genome.
#[derive(Debug, Clone)]
pub struct KtContext<'a> {
    pub plant: &'a PartitionedPlant,
    /// Engine subsystem `U_e → [y_ea; y_e]`.
    pub engine_plant: &'a StateSpace,
    pub ka_bar: &'a StateSpace,
    pub k_lead: &'a StateSpace,
    pub k_ee: &'a StateSpace,
    pub t_c: &'a StateSpace,
    pub feedback: KtFeedback,
    /// Reduce the stripped controller to this order before assembly.
    pub reduce_to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KtEvaluation {
    pub fitness: f64,
    pub psi2: Option<f64>,
    pub weights: Option<WeightSet>,
    pub synthesis: Option<SynthesisResult>,
    /// Stripped, unreduced.
    pub k_t_full: Option<StateSpace>,
    /// Controller used in `T_d`.
    pub k_t: Option<StateSpace>,
    pub t_d: Option<StateSpace>,
    /// Interface tracking metrics.
    pub metrics: Option<Metrics>,
    pub failure: Option<String>,
}

/// Command `c → y_ea` with `U_e = K_T [c − y_ea; (y_ea)]` on the engine
/// subsystem.
pub fn interface_loop(engine_plant: &StateSpace, k_t: &StateSpace, yea: usize, feedback: KtFeedback) -> Result<StateSpace> {
    let mut ic = Interconnection::new();
    let gb_ = ic.add_block("engine", engine_plant);
    let kb = ic.add_block("k_t", k_t);
    let out = |block, channel| Signal::Output { block, channel };
    for k in 0..yea {
        let c = ic.add_input(&format!("r_{}", engine_plant.output_labels()[k]));
        ic.connect_index(c, kb, k, 1.0)?;
        ic.connect_index(out(gb_, k), kb, k, -1.0)?;
        if feedback == KtFeedback::ErrorAndMeasurement {
            ic.connect_index(out(gb_, k), kb, yea + k, 1.0)?;
        }
    }
    for l in 0..engine_plant.n_inputs() {
        ic.connect_index(out(kb, l), gb_, l, 1.0)?;
    }
    for k in 0..yea {
        ic.add_output(&engine_plant.output_labels()[k], vec![(out(gb_, k), 1.0)]);
    }
    ic.build()
}

pub fn evaluate_kt(
    genes: &[f64],
    ctx: &KtContext<'_>,
    spec: &PerformanceSpec,
    grid: &FrequencyGrid,
    opts: &SynthOptions,
) -> KtEvaluation {
    let d = ctx.plant.dims();
    let mut ev = KtEvaluation {
        fitness: spec.failure_penalty,
        psi2: None,
        weights: None,
        synthesis: None,
        k_t_full: None,
        k_t: None,
        t_d: None,
        metrics: None,
        failure: None,
    };
    let run = |ev: &mut KtEvaluation| -> Result<f64> {
        let channels = ctx.engine_plant.n_outputs();
        let weights = decode_weights(genes, channels)?;
        ev.weights = Some(weights.clone());
        let aug = build_augmented(ctx.engine_plant, &weights)?;
        let synth = hinfsyn_with(&aug, 2 * channels, ctx.engine_plant.n_inputs(), opts)?;
        let full = strip_kt(&synth.controller, d.yea, d.ye, ctx.feedback)?;
        ev.synthesis = Some(synth);
        ev.k_t_full = Some(full.clone());
        let mut extra = 0.0;
        let k_t = match ctx.reduce_to {
            Some(r) if r < full.order() => {
                if !is_stable(&full) {
                    return Err(crate::Error::Unstable("interface tracking controller".into()));
                }
                balanced_truncate(&full, r)?.system
            }
            _ => full,
        };
        if !is_stable(&k_t) {
            extra += spec.unstable_penalty;
        }
        ev.k_t = Some(k_t.clone());
        let dc = DecentralizedController {
            ka_bar: ctx.ka_bar.clone(),
            k_lead: ctx.k_lead.clone(),
            k_t: k_t.clone(),
            k_ee: ctx.k_ee.clone(),
            kt_feedback: ctx.feedback,
        };
        let t_d = assemble_td(ctx.plant, &dc)?;
        if !is_stable(&t_d) {
            extra += spec.unstable_penalty;
        }
        let psi = psi2(&t_d, ctx.t_c, grid)?;
        ev.psi2 = Some(psi);
        ev.t_d = Some(t_d);
        let track = interface_loop(ctx.engine_plant, &k_t, d.yea, ctx.feedback)?;
        if !is_stable(&track) {
            extra += spec.unstable_penalty;
            return Ok(spec.k_psi * psi + extra);
        }
        let gamma = ev.synthesis.as_ref().map_or(0.0, |s| s.verified_norm);
        let m = eval_metrics(&track, spec, grid, gamma)?;
        let f = spec.k_psi * psi + spec.penalty(&m) + extra;
        ev.metrics = Some(m);
        Ok(f)
    };
    match run(&mut ev) {
        Ok(f) => ev.fitness = f,
        Err(e) => ev.failure = Some(e.to_string()),
    }
    ev
}

/// f₂ = k_ψ·ψ₂ + tracking-spec penalties.
pub fn fitness_kt(genes: &[f64], ctx: &KtContext<'_>, spec: &PerformanceSpec, grid: &FrequencyGrid) -> f64 {
    evaluate_kt(genes, ctx, spec, grid, &ga_synth_options()).fitness
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::make_grid;
    use crate::linsys::mat::Mat;

    #[test]
    fn genome_round_trip() {
        let w = |k, z, p| FirstOrderWeight::new(k, z, p).unwrap();
        let ws = WeightSet::new(vec![w(0.5, 2.0, 0.01), w(0.3, 1.0, 0.1)], 0.05, vec![w(5.0, 10.0, 300.0); 2]).unwrap();
        let g = encode_weights(&ws);
        assert_eq!(g.len(), weight_genome_len(2));
        let back = decode_weights(&g, 2).unwrap();
        for (a, b) in back.w1.iter().zip(&ws.w1) {
            assert!((a.k / b.k - 1.0).abs() < 1e-12 && (a.p / b.p - 1.0).abs() < 1e-12);
        }
        assert!((back.w2 / ws.w2 - 1.0).abs() < 1e-12);
        assert!(decode_weights(&g[1..], 2).is_err());
        assert_eq!(WeightBounds::default().genes(4).len(), 25);
    }

    #[test]
    fn psi2_examples() {
        let grid = make_grid(0.01, 100.0, 20).unwrap();
        assert_eq!(grid.len(), 81);
        let t = StateSpace::from_tf(&[1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(psi2(&t, &t, &grid).unwrap(), 0.0);
        let shifted = crate::linsys::parallel(&t, &StateSpace::scalar_gain(0.3)).unwrap();
        assert!((psi2(&shifted, &t, &grid).unwrap() - 0.09).abs() < 1e-12);
        let doubled = crate::linsys::parallel(&t, &StateSpace::scalar_gain(0.6)).unwrap();
        let ratio = psi2(&doubled, &t, &grid).unwrap() / psi2(&shifted, &t, &grid).unwrap();
        assert!((ratio - 4.0).abs() < 1e-9);
        assert!(psi2(&StateSpace::gain(Mat::zeros(2, 1)), &t, &grid).is_err());
    }

    #[test]
    fn centralized_fitness_siso() {
        let g = StateSpace::from_tf(&[1.0], &[1.0, 1.0]).unwrap();
        let grid = make_grid(0.01, 100.0, 20).unwrap();
        let spec = PerformanceSpec {
            bandwidths: vec![super::super::metrics::BandwidthSpec::new(0, 0.1, 100.0)],
            gamma_bound: 10.0,
            rise_time_max: 20.0,
            overshoot_max: 1.0,
            ..PerformanceSpec::centralized()
        };
        let genes = vec![-0.3, 0.0, -2.0, -1.0, 0.7, 1.0, 2.5];
        let ev = evaluate_centralized(&genes, &g, &spec, &grid, &SynthOptions::default());
        assert!(ev.failure.is_none(), "{:?}", ev.failure);
        assert_eq!(ev.fitness, 0.0);
        let tc = ev.closed_loop.unwrap();
        assert!(is_stable(&tc));
        // fixed point of the penalty: re-evaluating metrics keeps every band satisfied
        assert_eq!(spec.penalty(&ev.metrics.unwrap()), 0.0);
    }

    #[test]
    fn failed_synthesis_is_priced() {
        // plant with no control authority and an unstable mode
        let g = StateSpace::new(
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
            Mat::from_element(1, 1, 1.0),
            Mat::zeros(1, 1),
        )
        .unwrap();
        let grid = make_grid(0.01, 100.0, 20).unwrap();
        let spec = PerformanceSpec::centralized();
        let genes = vec![-0.3, 0.0, -2.0, -1.0, 0.7, 1.0, 2.5];
        assert_eq!(fitness_centralized(&genes, &g, &spec, &grid), spec.failure_penalty);
    }
}
