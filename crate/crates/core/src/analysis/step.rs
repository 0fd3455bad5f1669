//! Step responses of several closed loops side by side.

use serde::{Deserialize, Serialize};

use super::report::Table;
use crate::error::{invalid, Result};
use crate::linsys::{simulate_step, StateSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepComparison {
    pub command_channel: usize,
    pub systems: Vec<String>,
    pub output_labels: Vec<String>,
    pub time: Vec<f64>,
    /// `responses[s][o][k]`.
    pub responses: Vec<Vec<Vec<f64>>>,
    /// Largest pairwise gap per output over the horizon.
    pub max_deviation: Vec<f64>,
}

impl StepComparison {
    pub fn worst_deviation(&self) -> f64 {
        self.max_deviation.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest off-channel excursion of system `s` relative to the final
    /// value of its commanded output.
    pub fn off_channel_ratio(&self, s: usize) -> f64 {
        let r = &self.responses[s];
        let fin = r[self.command_channel].last().copied().unwrap_or(0.0).abs();
        let off = (0..r.len())
            .filter(|&o| o != self.command_channel)
            .flat_map(|o| r[o].iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if fin > 0.0 {
            off / fin
        } else {
            f64::INFINITY
        }
    }

    /// Columns `t_s`, then `<system>:<output>`.
    pub fn table(&self) -> Table {
        let mut header = vec!["t_s".to_string()];
        for s in &self.systems {
            header.extend(self.output_labels.iter().map(|o| format!("{s}:{o}")));
        }
        let rows = (0..self.time.len())
            .map(|k| {
                let mut row = vec![self.time[k]];
                for r in &self.responses {
                    row.extend(r.iter().map(|y| y[k]));
                }
                row
            })
            .collect();
        Table { header, rows }
    }
}

pub fn compare_step(
    systems: &[(&str, &StateSpace)],
    command_channel: usize,
    horizon: f64,
    dt: f64,
) -> Result<StepComparison> {
    let Some((_, first)) = systems.first() else {
        return Err(invalid("nothing to compare"));
    };
    for (name, g) in systems {
        if g.input_labels() != first.input_labels() || g.output_labels() != first.output_labels() {
            return Err(invalid(format!("{name} is not labeled like {}", systems[0].0)));
        }
    }
    let mut time = Vec::new();
    let mut responses = Vec::with_capacity(systems.len());
    for (_, g) in systems {
        let r = simulate_step(g, command_channel, horizon, dt)?;
        time = r.time;
        responses.push(r.outputs);
    }
    let n_out = first.n_outputs();
    let max_deviation = (0..n_out)
        .map(|o| {
            let mut m = 0.0f64;
            for a in 0..responses.len() {
                for b in a + 1..responses.len() {
                    for (x, y) in responses[a][o].iter().zip(&responses[b][o]) {
                        m = m.max((x - y).abs());
                    }
                }
            }
            m
        })
        .collect();
    Ok(StepComparison {
        command_channel,
        systems: systems.iter().map(|(n, _)| n.to_string()).collect(),
        output_labels: first.output_labels().to_vec(),
        time,
        responses,
        max_deviation,
    })
}
