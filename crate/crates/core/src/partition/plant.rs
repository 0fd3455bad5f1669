//! Airframe/engine partition of the controlled plant.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linsys::mat::{select_cols, select_rows};
use crate::linsys::{is_stable, select_channels, simulate_step, StateSpace};

/// Channel labels for each role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoAssignment {
    pub airframe_inputs: Vec<String>,
    pub engine_inputs: Vec<String>,
    pub airframe_outputs: Vec<String>,
    pub engine_outputs: Vec<String>,
    #[serde(default)]
    pub interface_outputs: Vec<String>,
}

impl IoAssignment {
    /// δtv drives the airframe loops; fuel flow and nozzle areas drive the
    /// engine loops. Interface outputs are chosen separately.
    pub fn preset() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            airframe_inputs: s(&["dtv"]),
            engine_inputs: s(&["Wf", "A78", "A8"]),
            airframe_outputs: s(&["V", "q_v"]),
            engine_outputs: s(&["N2P", "R"]),
            interface_outputs: Vec::new(),
        }
    }

    pub fn with_interface(mut self, interface: Vec<String>) -> Self {
        self.interface_outputs = interface;
        self
    }

    /// Controlled outputs `[y_a; y_e]`.
    pub fn controlled_outputs(&self) -> Vec<String> {
        self.airframe_outputs.iter().chain(&self.engine_outputs).cloned().collect()
    }

    /// Control inputs `[U_a; U_e]`.
    pub fn control_inputs(&self) -> Vec<String> {
        self.airframe_inputs.iter().chain(&self.engine_inputs).cloned().collect()
    }
}

/// Channel counts of a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionDims {
    pub ua: usize,
    pub ue: usize,
    pub ya: usize,
    pub ye: usize,
    pub yea: usize,
}

/// Plant `G′` with outputs `[y_a; y_e; y_ea]` and inputs `[U_a; U_e]`
/// addressed through index sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedPlant {
    pub base: StateSpace,
    pub airframe_inputs: Vec<usize>,
    pub engine_inputs: Vec<usize>,
    pub airframe_outputs: Vec<usize>,
    pub engine_outputs: Vec<usize>,
    pub interface_outputs: Vec<usize>,
}

/// The six transfer blocks of `G′`.
#[derive(Debug, Clone)]
pub struct PlantBlocks {
    pub g_aa: StateSpace,
    pub g_ae: StateSpace,
    pub g_ea: StateSpace,
    pub g_ee: StateSpace,
    pub g_ea_a: StateSpace,
    pub g_ea_e: StateSpace,
}

fn indices(g_labels: &[String], wanted: &[String], what: &str) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|l| {
            g_labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| invalid(format!("no {what} labelled '{l}'")))
        })
        .collect()
}

fn exact_cover(sets: &[&[usize]], len: usize, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        for &i in *set {
            if !seen.insert(i) {
                return Err(invalid(format!("{what} {i} assigned twice")));
            }
        }
    }
    if seen.len() != len {
        let missing: Vec<usize> = (0..len).filter(|i| !seen.contains(i)).collect();
        return Err(invalid(format!("{what}s {missing:?} not assigned")));
    }
    Ok(())
}

pub fn assign_io(g_ext: &StateSpace, assignment: &IoAssignment) -> Result<PartitionedPlant> {
    let ins = g_ext.input_labels();
    let outs = g_ext.output_labels();
    let pp = PartitionedPlant {
        base: g_ext.clone(),
        airframe_inputs: indices(ins, &assignment.airframe_inputs, "input")?,
        engine_inputs: indices(ins, &assignment.engine_inputs, "input")?,
        airframe_outputs: indices(outs, &assignment.airframe_outputs, "output")?,
        engine_outputs: indices(outs, &assignment.engine_outputs, "output")?,
        interface_outputs: indices(outs, &assignment.interface_outputs, "output")?,
    };
    exact_cover(&[&pp.airframe_inputs, &pp.engine_inputs], ins.len(), "input")?;
    exact_cover(
        &[&pp.airframe_outputs, &pp.engine_outputs, &pp.interface_outputs],
        outs.len(),
        "output",
    )?;
    Ok(pp)
}

impl PartitionedPlant {
    pub fn dims(&self) -> PartitionDims {
        PartitionDims {
            ua: self.airframe_inputs.len(),
            ue: self.engine_inputs.len(),
            ya: self.airframe_outputs.len(),
            ye: self.engine_outputs.len(),
            yea: self.interface_outputs.len(),
        }
    }

    pub fn inputs(&self) -> Vec<usize> {
        self.airframe_inputs.iter().chain(&self.engine_inputs).copied().collect()
    }

    pub fn controlled(&self) -> Vec<usize> {
        self.airframe_outputs.iter().chain(&self.engine_outputs).copied().collect()
    }

    /// `G`: `[U_a; U_e] → [y_a; y_e]`, the centralized design plant.
    pub fn design_plant(&self) -> Result<StateSpace> {
        select_channels(&self.base, &self.inputs(), &self.controlled())
    }

    /// `G′` reordered to `[U_a; U_e] → [y_a; y_e; y_ea]`.
    pub fn ordered(&self) -> Result<StateSpace> {
        let outs: Vec<usize> = self.controlled().into_iter().chain(self.interface_outputs.iter().copied()).collect();
        select_channels(&self.base, &self.inputs(), &outs)
    }

    pub fn blocks(&self) -> Result<PlantBlocks> {
        let g = |i: &[usize], o: &[usize]| select_channels(&self.base, i, o);
        Ok(PlantBlocks {
            g_aa: g(&self.airframe_inputs, &self.airframe_outputs)?,
            g_ae: g(&self.engine_inputs, &self.airframe_outputs)?,
            g_ea: g(&self.airframe_inputs, &self.engine_outputs)?,
            g_ee: g(&self.engine_inputs, &self.engine_outputs)?,
            g_ea_a: g(&self.airframe_inputs, &self.interface_outputs)?,
            g_ea_e: g(&self.engine_inputs, &self.interface_outputs)?,
        })
    }

    /// Engine subsystem `U_e → [y_e; y_ea]` restricted to `engine_states`.
    pub fn engine_subsystem(&self, engine_states: &[usize]) -> Result<StateSpace> {
        let outs: Vec<usize> = self.engine_outputs.iter().chain(&self.interface_outputs).copied().collect();
        let g = select_channels(&self.base, &self.engine_inputs, &outs)?;
        truncate_states(&g, engine_states)
    }
}

/// Keeps only the listed states: `A[s,s]`, `B[s,:]`, `C[:,s]`.
pub fn truncate_states(g: &StateSpace, states: &[usize]) -> Result<StateSpace> {
    let mut seen = HashSet::new();
    for &s in states {
        if s >= g.order() || !seen.insert(s) {
            return Err(invalid(format!("state index {s} invalid or repeated")));
        }
    }
    StateSpace::with_labels(
        select_cols(&select_rows(g.a(), states), states),
        select_rows(g.b(), states),
        select_cols(g.c(), states),
        g.d().clone(),
        g.input_labels().to_vec(),
        g.output_labels().to_vec(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSelection {
    pub selected: Vec<usize>,
    /// `peaks[c][k]`: peak |response| of candidate `k` to command `c`.
    pub peaks: Vec<Vec<f64>>,
}

/// Keeps a candidate iff, for some command, its peak step response reaches
/// `dominance_ratio` times the largest candidate peak.
pub fn select_interface(
    t_ext: &StateSpace,
    candidates: &[usize],
    commands: &[usize],
    dominance_ratio: f64,
    horizon: f64,
    dt: f64,
) -> Result<InterfaceSelection> {
    if candidates.is_empty() {
        return Err(invalid("no interface candidates"));
    }
    if !(dominance_ratio > 0.0 && dominance_ratio <= 1.0) {
        return Err(invalid("dominance ratio must lie in (0, 1]"));
    }
    if !is_stable(t_ext) {
        return Err(Error::Unstable("closed loop used for interface selection".into()));
    }
    let mut peaks = Vec::with_capacity(commands.len());
    for &c in commands {
        let r = simulate_step(t_ext, c, horizon, dt)?;
        let row: Vec<f64> = candidates
            .iter()
            .map(|&k| {
                r.outputs
                    .get(k)
                    .map(|y| y.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                    .ok_or_else(|| invalid(format!("candidate output {k} out of range")))
            })
            .collect::<Result<_>>()?;
        peaks.push(row);
    }
    Ok(InterfaceSelection { selected: dominant(&peaks, candidates, dominance_ratio), peaks })
}

fn dominant(peaks: &[Vec<f64>], candidates: &[usize], ratio: f64) -> Vec<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            peaks.iter().any(|row| {
                let top = row.iter().cloned().fold(0.0, f64::max);
                top > 0.0 && row[*k] >= ratio * top
            })
        })
        .map(|(_, &c)| c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::mat::Mat;
    use crate::linsys::{freq_response, make_grid};

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn plant() -> StateSpace {
        let n = 3;
        let a = Mat::from_fn(n, n, |i, j| if i == j { -(i as f64) - 1.0 } else { 0.1 * (i + 2 * j) as f64 });
        let b = Mat::from_fn(n, 4, |i, j| 1.0 + (i * 4 + j) as f64 * 0.3);
        let c = Mat::from_fn(5, n, |i, j| 0.5 - (i + j) as f64 * 0.2);
        let d = Mat::from_fn(5, 4, |i, j| if i == 4 { 0.1 * j as f64 } else { 0.0 });
        StateSpace::with_labels(a, b, c, d, labels(&["Wf", "A78", "A8", "dtv"]), labels(&["V", "q_v", "N2P", "R", "Fx"]))
            .unwrap()
    }

    #[test]
    fn preset_assignment() {
        let a = IoAssignment::preset();
        assert_eq!(a.airframe_inputs, vec!["dtv"]);
        let pp = assign_io(&plant(), &a.with_interface(labels(&["Fx"]))).unwrap();
        assert_eq!(pp.airframe_inputs, vec![3]);
        assert_eq!(pp.dims(), PartitionDims { ua: 1, ue: 3, ya: 2, ye: 2, yea: 1 });
    }

    #[test]
    fn blocks_reassemble() {
        let pp = assign_io(&plant(), &IoAssignment::preset().with_interface(labels(&["Fx"]))).unwrap();
        let blk = pp.blocks().unwrap();
        let grid = make_grid(0.1, 10.0, 3).unwrap();
        let whole = freq_response(&pp.ordered().unwrap(), &grid).unwrap();
        let parts = [
            (&blk.g_aa, 0, 0),
            (&blk.g_ae, 0, 1),
            (&blk.g_ea, 2, 0),
            (&blk.g_ee, 2, 1),
            (&blk.g_ea_a, 4, 0),
            (&blk.g_ea_e, 4, 1),
        ];
        for (g, row, col) in parts {
            let r = freq_response(g, &grid).unwrap();
            for (w, (full, part)) in whole.iter().zip(&r).enumerate() {
                for i in 0..part.nrows() {
                    for j in 0..part.ncols() {
                        assert_eq!(full[(row + i, col + j)], part[(i, j)], "point {w}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_all_airframe() {
        let g = plant();
        let a = IoAssignment {
            airframe_inputs: g.input_labels().to_vec(),
            engine_inputs: vec![],
            airframe_outputs: g.output_labels().to_vec(),
            engine_outputs: vec![],
            interface_outputs: vec![],
        };
        let pp = assign_io(&g, &a).unwrap();
        let blk = pp.blocks().unwrap();
        assert_eq!(blk.g_ee.n_inputs(), 0);
        assert_eq!(blk.g_ee.n_outputs(), 0);
    }

    #[test]
    fn overlap_and_gap_rejected() {
        let g = plant();
        let mut a = IoAssignment::preset().with_interface(labels(&["Fx"]));
        a.engine_inputs.push("dtv".into());
        assert!(assign_io(&g, &a).is_err());
        let a = IoAssignment::preset();
        assert!(assign_io(&g, &a).is_err());
        let mut a = IoAssignment::preset().with_interface(labels(&["Fx"]));
        a.engine_outputs[0] = "nope".into();
        assert!(assign_io(&g, &a).is_err());
    }

    #[test]
    fn state_truncation() {
        let g = plant();
        let t = truncate_states(&g, &[2, 0]).unwrap();
        assert_eq!(t.order(), 2);
        assert_eq!(t.a()[(0, 1)], g.a()[(2, 0)]);
        assert_eq!(t.c()[(1, 0)], g.c()[(1, 2)]);
        assert!(truncate_states(&g, &[0, 0]).is_err());
    }

    #[test]
    fn dominance_threshold() {
        let peaks = vec![vec![1.0, 0.2, 0.1]];
        assert_eq!(dominant(&peaks, &[4, 5, 6], 0.5), vec![4]);
        let peaks = vec![vec![1.0, 0.2, 0.1], vec![0.1, 0.3, 0.05]];
        assert_eq!(dominant(&peaks, &[4, 5, 6], 0.5), vec![4, 5]);
    }

    #[test]
    fn interface_selection_by_simulation() {
        // command drives x; candidate 0 tracks x, candidates 1 and 2 see a small fast term
        let a = Mat::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -20.0]);
        let b = Mat::from_row_slice(2, 1, &[1.0, 20.0]);
        let c = Mat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.2, 0.0, 0.1]);
        let t = StateSpace::new(a, b, c, Mat::zeros(3, 1)).unwrap();
        let sel = select_interface(&t, &[0, 1, 2], &[0], 0.5, 10.0, 0.01).unwrap();
        assert_eq!(sel.selected, vec![0]);
        let one = select_interface(&t, &[2], &[0], 0.5, 10.0, 0.01).unwrap();
        assert_eq!(one.selected, vec![2]);
        assert!(select_interface(&t, &[], &[0], 0.5, 10.0, 0.01).is_err());
    }
}
