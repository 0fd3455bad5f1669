//! Real-coded genetic algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_sigma: f64,
    /// Per-gene mutation probability; `None` means `1/genes`.
    pub mutation_rate: Option<f64>,
    /// Mutation width shrinks linearly to `1 - mutation_shrink` of its
    /// starting value by the last generation.
    pub mutation_shrink: f64,
    pub tournament_size: usize,
    /// BLX-α extension on either side of the parents' interval.
    pub blend_alpha: f64,
    pub elitism_count: usize,
    pub stall_tolerance: f64,
    pub stall_generations: usize,
    /// Stop as soon as the best fitness reaches this value.
    pub target_fitness: Option<f64>,
    /// Fitness assigned to non-finite evaluations.
    pub failure_penalty: f64,
    pub seed: u64,
    /// Individuals placed in the initial population before random fill.
    pub initial: Vec<Vec<f64>>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            max_generations: 100,
            crossover_rate: 0.8,
            mutation_sigma: 0.1,
            mutation_rate: None,
            mutation_shrink: 1.0,
            tournament_size: 2,
            blend_alpha: 0.5,
            elitism_count: 1,
            stall_tolerance: 1e-6,
            stall_generations: 10,
            target_fitness: Some(0.0),
            failure_penalty: 1e6,
            seed: 1,
            initial: Vec::new(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(invalid("population must have at least 4 individuals"));
        }
        if self.max_generations < 1 || self.stall_generations < 1 {
            return Err(invalid("generation counts must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(invalid("crossover rate must lie in [0, 1]"));
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(invalid("mutation rate must lie in [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.mutation_shrink) {
            return Err(invalid("mutation shrink must lie in [0, 1]"));
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return Err(invalid("mutation sigma must be finite and non-negative"));
        }
        if !(self.blend_alpha >= 0.0 && self.blend_alpha.is_finite()) {
            return Err(invalid("blend alpha must be finite and non-negative"));
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return Err(invalid("tournament size must be in 1..=population"));
        }
        if self.elitism_count < 1 || self.elitism_count >= self.population_size {
            return Err(invalid("elitism count must be in 1..population"));
        }
        if !(self.stall_tolerance >= 0.0) || !self.failure_penalty.is_finite() {
            return Err(invalid("stall tolerance and failure penalty must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneBounds {
    pub lo: f64,
    pub hi: f64,
}

impl GeneBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(invalid(format!("gene bounds [{}, {}] not ordered", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn clamp(&self, v: f64) -> f64 {
        if v.is_nan() {
            0.5 * (self.lo + self.hi)
        } else {
            v.clamp(self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: Vec<f64>,
    pub bounds: Vec<GeneBounds>,
}

impl Genome {
    pub fn new(genes: Vec<f64>, bounds: Vec<GeneBounds>) -> Result<Self> {
        if genes.len() != bounds.len() {
            return Err(invalid("gene count does not match bounds"));
        }
        for (g, b) in genes.iter().zip(&bounds) {
            b.validate()?;
            if !(b.lo..=b.hi).contains(g) {
                return Err(invalid(format!("gene {g} outside [{}, {}]", b.lo, b.hi)));
            }
        }
        Ok(Self { genes, bounds })
    }

    fn clamped(genes: &[f64], bounds: &[GeneBounds]) -> Vec<f64> {
        genes.iter().zip(bounds).map(|(g, b)| b.clamp(*g)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxGenerations,
    Stalled,
    TargetReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_genome: Genome,
    pub best_fitness: f64,
    /// Best fitness of each generation, generation 0 first.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub stop_reason: StopReason,
}

impl GaResult {
    /// `(generation, best_fitness)` rows.
    pub fn history_rows(&self) -> Vec<(usize, f64)> {
        self.history.iter().copied().enumerate().collect()
    }
}

/// Stream per (generation, slot) so offspring do not depend on
/// evaluation order.
fn slot_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

fn evaluate<F>(fitness: &F, pop: &[Vec<f64>], penalty: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pop.par_iter()
        .map(|g| {
            let f = fitness(g);
            if f.is_finite() {
                f
            } else {
                penalty
            }
        })
        .collect()
}

/// Ties resolve to the lower index.
fn better(fit: &[f64], a: usize, b: usize) -> usize {
    if fit[b] < fit[a] || (fit[b] == fit[a] && b < a) {
        b
    } else {
        a
    }
}

fn tournament(rng: &mut ChaCha8Rng, fit: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size {
        best = better(fit, best, rng.random_range(0..fit.len()));
    }
    best
}

fn best_index(fit: &[f64]) -> usize {
    (1..fit.len()).fold(0, |b, i| better(fit, b, i))
}

fn breed(
    rng: &mut ChaCha8Rng,
    pop: &[Vec<f64>],
    fit: &[f64],
    bounds: &[GeneBounds],
    cfg: &GaConfig,
    mutation_rate: f64,
    sigma_scale: f64,
) -> Vec<f64> {
    let p1 = &pop[tournament(rng, fit, cfg.tournament_size)];
    let p2 = &pop[tournament(rng, fit, cfg.tournament_size)];
    let mut child = if rng.random::<f64>() < cfg.crossover_rate {
        p1.iter()
            .zip(p2)
            .map(|(a, b)| {
                let u = rng.random_range(-cfg.blend_alpha..=1.0 + cfg.blend_alpha);
                a + u * (b - a)
            })
            .collect()
    } else {
        p1.clone()
    };
    for (g, b) in child.iter_mut().zip(bounds) {
        if rng.random::<f64>() < mutation_rate {
            let sigma = sigma_scale * cfg.mutation_sigma * b.width();
            if sigma > 0.0 {
                *g += Normal::new(0.0, sigma).expect("sigma is positive").sample(rng);
            }
        }
    }
    Genome::clamped(&child, bounds)
}

/// Minimizes `fitness` over the box `bounds`. Deterministic in
/// `config.seed` regardless of how evaluations are scheduled.
pub fn run_ga<F>(fitness: F, bounds: &[GeneBounds], config: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if bounds.is_empty() {
        return Err(invalid("genome must have at least one gene"));
    }
    for b in bounds {
        b.validate()?;
    }
    for g in &config.initial {
        if g.len() != bounds.len() {
            return Err(invalid("initial individual has the wrong gene count"));
        }
    }
    let n = config.population_size;
    let mutation_rate = config.mutation_rate.unwrap_or(1.0 / bounds.len() as f64);

    let mut pop: Vec<Vec<f64>> = config.initial.iter().take(n).map(|g| Genome::clamped(g, bounds)).collect();
    let mut rng = slot_rng(config.seed, 0, 0);
    while pop.len() < n {
        pop.push(bounds.iter().map(|b| rng.random_range(b.lo..=b.hi)).collect());
    }
    let mut fit = evaluate(&fitness, &pop, config.failure_penalty);
    let mut evaluations = n;
    let mut history = vec![fit[best_index(&fit)]];
    let mut stop_reason = StopReason::MaxGenerations;

    for generation in 1..=config.max_generations {
        let last = *history.last().expect("history is non-empty");
        if config.target_fitness.is_some_and(|t| last <= t) {
            stop_reason = StopReason::TargetReached;
            break;
        }
        if history.len() > config.stall_generations {
            let before = history[history.len() - 1 - config.stall_generations];
            if before - last < config.stall_tolerance {
                stop_reason = StopReason::Stalled;
                break;
            }
        }
        if generation == config.max_generations {
            break;
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
        let elites: Vec<usize> = order[..config.elitism_count].to_vec();

        let scale = 1.0 - config.mutation_shrink * generation as f64 / config.max_generations as f64;
        let children: Vec<Vec<f64>> = (config.elitism_count..n)
            .map(|slot| {
                let mut rng = slot_rng(config.seed, generation, slot);
                breed(&mut rng, &pop, &fit, bounds, config, mutation_rate, scale)
            })
            .collect();
        let child_fit = evaluate(&fitness, &children, config.failure_penalty);
        evaluations += children.len();

        let mut next_pop: Vec<Vec<f64>> = elites.iter().map(|&i| pop[i].clone()).collect();
        let mut next_fit: Vec<f64> = elites.iter().map(|&i| fit[i]).collect();
        next_pop.extend(children);
        next_fit.extend(child_fit);
        pop = next_pop;
        fit = next_fit;
        history.push(fit[best_index(&fit)]);
    }

    let best = best_index(&fit);
    Ok(GaResult {
        best_genome: Genome { genes: pop[best].clone(), bounds: bounds.to_vec() },
        best_fitness: fit[best],
        history,
        evaluations,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn box4() -> Vec<GeneBounds> {
        vec![GeneBounds::new(-5.0, 5.0).unwrap(); 4]
    }

    fn long_run() -> GaConfig {
        GaConfig { max_generations: 200, stall_generations: 200, target_fitness: None, seed: 7, ..GaConfig::default() }
    }

    #[test]
    fn sphere_converges() {
        let r = run_ga(sphere, &box4(), &long_run()).unwrap();
        assert!(r.best_fitness < 1e-3, "best {}", r.best_fitness);
        assert_eq!(r.history.len(), 200);
    }

    #[test]
    fn history_is_non_increasing() {
        let r = run_ga(sphere, &box4(), &long_run()).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.best_fitness, *r.history.last().unwrap());
    }

    #[test]
    fn same_seed_same_history() {
        let cfg = GaConfig { max_generations: 30, ..long_run() };
        let a = run_ga(sphere, &box4(), &cfg).unwrap();
        let b = run_ga(sphere, &box4(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_ga(sphere, &box4(), &GaConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn genes_stay_in_bounds() {
        let bounds = vec![GeneBounds::new(1.0, 2.0).unwrap(), GeneBounds::new(-3.0, -2.5).unwrap()];
        // minimum of the unconstrained objective lies outside the box
        let r = run_ga(|x| (x[0] + 10.0).powi(2) + x[1].powi(2), &bounds, &long_run()).unwrap();
        for (g, b) in r.best_genome.genes.iter().zip(&bounds) {
            assert!(*g >= b.lo && *g <= b.hi);
        }
        assert!((r.best_genome.genes[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn failed_evaluations_get_penalty() {
        let cfg = GaConfig { max_generations: 3, ..long_run() };
        let r = run_ga(|_| f64::NAN, &box4(), &cfg).unwrap();
        assert_eq!(r.best_fitness, cfg.failure_penalty);
    }

    #[test]
    fn stall_and_target_stop() {
        let cfg = GaConfig { stall_generations: 3, stall_tolerance: 1.0, target_fitness: None, ..GaConfig::default() };
        let r = run_ga(|_| 1.0, &box4(), &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::Stalled);
        assert_eq!(r.history.len(), 4);
        let r = run_ga(|_| 0.0, &box4(), &GaConfig::default()).unwrap();
        assert_eq!(r.stop_reason, StopReason::TargetReached);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn initial_individuals_are_used() {
        let cfg = GaConfig { initial: vec![vec![0.0; 4]], max_generations: 1, ..GaConfig::default() };
        let r = run_ga(sphere, &box4(), &cfg).unwrap();
        assert_eq!(r.best_fitness, 0.0);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            GaConfig { population_size: 3, ..GaConfig::default() },
            GaConfig { crossover_rate: 1.5, ..GaConfig::default() },
            GaConfig { elitism_count: 0, ..GaConfig::default() },
            GaConfig { stall_generations: 0, ..GaConfig::default() },
        ];
        for cfg in bad {
            assert!(run_ga(sphere, &box4(), &cfg).is_err());
        }
        assert!(GeneBounds::new(1.0, 1.0).is_err());
    }
}
