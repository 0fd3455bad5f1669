//! Closed-loop performance metrics and the band-penalty rule.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linsys::{eval_at, freq_response, freq_response_at, select_channels, simulate_step, FrequencyGrid, StateSpace};

fn one() -> f64 {
    1.0
}

/// Desired `[lo, hi]` band for the −3 dB bandwidth of one diagonal channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSpec {
    pub channel: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "one")]
    pub weight: f64,
    /// Lower bound used by the penalty is `lo·(1 + inflation)`.
    #[serde(default)]
    pub inflation: f64,
}

impl BandwidthSpec {
    pub fn new(channel: usize, lo: f64, hi: f64) -> Self {
        Self { channel, lo, hi, weight: 1.0, inflation: 0.0 }
    }

    pub fn target_lo(&self) -> f64 {
        self.lo * (1.0 + self.inflation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerformanceSpec {
    pub bandwidths: Vec<BandwidthSpec>,
    /// Channel whose unit step is checked for rise time and overshoot.
    pub step_channel: usize,
    /// 90 % rise time bound, s.
    pub rise_time_max: f64,
    pub overshoot_max: f64,
    /// Bound ε₀ on the weighted closed-loop norm.
    pub gamma_bound: f64,
    pub k_rise: f64,
    pub k_overshoot: f64,
    pub k_gamma: f64,
    pub k_psi: f64,
    pub horizon: f64,
    /// Output sample interval of the step simulation, s.
    pub sample_dt: f64,
    pub failure_penalty: f64,
    /// Added when the controller or the assembled loop is unstable.
    pub unstable_penalty: f64,
    /// Scales `1 − min slack` when the weight inequality fails.
    pub weight_constraint_penalty: f64,
}

impl Default for PerformanceSpec {
    fn default() -> Self {
        Self::centralized()
    }
}

impl PerformanceSpec {
    /// Bands for V, q_v, N2P, R; V step within 5 s, 5 % overshoot.
    pub fn centralized() -> Self {
        Self {
            bandwidths: vec![
                BandwidthSpec::new(0, 1.0, 2.0),
                BandwidthSpec::new(1, 5.0, 8.0),
                BandwidthSpec::new(2, 5.0, 8.0),
                BandwidthSpec::new(3, 10.0, 15.0),
            ],
            step_channel: 0,
            rise_time_max: 5.0,
            overshoot_max: 0.05,
            gamma_bound: 1.0,
            k_rise: 1.0,
            k_overshoot: 1.0,
            k_gamma: 1.0,
            k_psi: 1.0,
            horizon: 20.0,
            sample_dt: 0.01,
            failure_penalty: 1e6,
            unstable_penalty: 1e3,
            weight_constraint_penalty: 10.0,
        }
    }

    /// Interface tracking around 30 rad/s.
    pub fn interface() -> Self {
        Self {
            bandwidths: vec![BandwidthSpec::new(0, 25.0, 40.0)],
            rise_time_max: 0.15,
            overshoot_max: 0.1,
            gamma_bound: 10.0,
            horizon: 2.0,
            sample_dt: 0.001,
            ..Self::centralized()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bandwidths {
            if !(b.lo > 0.0 && b.lo < b.hi && b.hi.is_finite()) || !(b.weight >= 0.0) || !(b.inflation >= 0.0) {
                return Err(invalid(format!("bandwidth band [{}, {}] on channel {} invalid", b.lo, b.hi, b.channel)));
            }
        }
        let positive = [self.rise_time_max, self.overshoot_max, self.gamma_bound, self.horizon, self.sample_dt];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("performance bounds must be positive"));
        }
        if self.sample_dt > self.horizon {
            return Err(invalid("sample interval exceeds horizon"));
        }
        let weights = [self.k_rise, self.k_overshoot, self.k_gamma, self.k_psi];
        if weights.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("penalty weights must be non-negative"));
        }
        Ok(())
    }

    /// `Σ k·r` over bandwidths, rise time, overshoot and γ₀.
    pub fn penalty(&self, m: &Metrics) -> f64 {
        let mut total = 0.0;
        for (spec, bw) in self.bandwidths.iter().zip(&m.bandwidths) {
            total += spec.weight * band_violation(bw.unwrap_or(0.0), spec.target_lo(), spec.hi);
        }
        let rise = m.rise_time.unwrap_or(self.horizon);
        total += self.k_rise * (rise - self.rise_time_max).max(0.0);
        total += self.k_overshoot * (m.overshoot - self.overshoot_max).max(0.0);
        total += self.k_gamma * (m.gamma - self.gamma_bound).max(0.0);
        total
    }
}

/// `|φ − violated bound|` outside `[lo, hi]`, zero inside.
pub fn band_violation(phi: f64, lo: f64, hi: f64) -> f64 {
    if phi < lo {
        lo - phi
    } else if phi > hi {
        phi - hi
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Aligned with the PerformanceSpec bandwidth list; `None` for zero DC gain.
    pub bandwidths: Vec<Option<f64>>,
    pub rise_time: Option<f64>,
    pub overshoot: f64,
    pub final_value: f64,
    pub gamma: f64,
}

/// First frequency where `|T_cc(jω)|` drops below `|T_cc(0)|/√2`. The
/// crossing is bracketed on `grid`, refined on a dense sub-grid and
/// interpolated in `log ω`. Results are clamped to the grid range.
pub fn bandwidth(t: &StateSpace, channel: usize, grid: &FrequencyGrid) -> Result<Option<f64>> {
    if channel >= t.n_inputs() || channel >= t.n_outputs() {
        return Err(invalid(format!("channel {channel} out of range")));
    }
    let s = select_channels(t, &[channel], &[channel])?;
    let dc = eval_at(&s, 0.0)?[(0, 0)].norm();
    if !(dc > 1e-12) {
        return Ok(None);
    }
    let level = dc / std::f64::consts::SQRT_2;
    let mags: Vec<f64> = freq_response(&s, grid)?.iter().map(|m| m[(0, 0)].norm()).collect();
    let w = grid.points();
    let Some(k) = mags.iter().position(|m| *m < level) else {
        return Ok(Some(*w.last().expect("grid is non-empty")));
    };
    if k == 0 {
        return Ok(Some(w[0]));
    }
    const SUB: usize = 64;
    let (l0, l1) = (w[k - 1].ln(), w[k].ln());
    let pts: Vec<f64> = (0..=SUB).map(|i| (l0 + (l1 - l0) * i as f64 / SUB as f64).exp()).collect();
    let sub: Vec<f64> = freq_response_at(&s, &pts)?.iter().map(|m| m[(0, 0)].norm()).collect();
    let j = sub.iter().position(|m| *m < level).unwrap_or(SUB).max(1);
    let (m0, m1) = (sub[j - 1], sub[j]);
    let f = if m0 == m1 { 0.0 } else { (m0 - level) / (m0 - m1) };
    Ok(Some((pts[j - 1].ln() + f * (pts[j].ln() - pts[j - 1].ln())).exp()))
}

/// First time `y` reaches 90 % of `final_value`, linearly interpolated.
pub fn rise_time_90(time: &[f64], y: &[f64], final_value: f64) -> Option<f64> {
    if final_value == 0.0 {
        return None;
    }
    let target = 0.9 * final_value.abs();
    let s = final_value.signum();
    let k = y.iter().position(|v| v * s >= target)?;
    if k == 0 {
        return Some(time[0]);
    }
    let (y0, y1) = (y[k - 1] * s, y[k] * s);
    Some(time[k - 1] + (target - y0) / (y1 - y0) * (time[k] - time[k - 1]))
}

/// `(peak − final)/final`, floored at zero.
pub fn overshoot(y: &[f64], final_value: f64) -> f64 {
    if final_value == 0.0 {
        return 0.0;
    }
    let s = final_value.signum();
    let peak = y.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v * s));
    ((peak - final_value.abs()) / final_value.abs()).max(0.0)
}

/// Bandwidths of every banded channel plus step metrics on the configured step
/// channel. `gamma` is passed through from synthesis.
pub fn eval_metrics(t: &StateSpace, spec: &PerformanceSpec, grid: &FrequencyGrid, gamma: f64) -> Result<Metrics> {
    let bandwidths = spec
        .bandwidths
        .iter()
        .map(|b| bandwidth(t, b.channel, grid))
        .collect::<Result<Vec<_>>>()?;
    let ch = spec.step_channel;
    if ch >= t.n_outputs() {
        return Err(invalid(format!("step channel {ch} out of range")));
    }
    let final_value = eval_at(t, 0.0)?[(ch, ch)].re;
    let r = simulate_step(t, ch, spec.horizon, spec.sample_dt)?;
    let y = &r.outputs[ch];
    Ok(Metrics {
        bandwidths,
        rise_time: rise_time_90(&r.time, y, final_value),
        overshoot: overshoot(y, final_value),
        final_value,
        gamma,
    })
}
