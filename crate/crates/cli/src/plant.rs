//! Plant documents and the synthetic demo plant.

use std::collections::HashSet;
use std::path::Path;

use ifpc_core::linsys::mat::Mat;
use ifpc_core::StateSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEMO_SEED: u64 = 2012;
pub const DEMO_VERSION: &str = "demo-plant/1";

/// Relative spread of the seeded coefficient perturbation.
const DEMO_SPREAD: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantDocument {
    pub name: String,
    #[serde(default)]
    pub flight_condition: String,
    #[serde(default)]
    pub version: String,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    /// Physical units per scaled unit, one per input.
    pub input_scaling: Vec<f64>,
    /// Physical units per scaled unit, one per output.
    pub output_scaling: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedPlant {
    pub document: PlantDocument,
    /// System in physical units.
    pub raw: StateSpace,
    /// `D_out⁻¹ · raw · D_in`.
    pub scaled: StateSpace,
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> CliResult<Mat> {
    if rows.len() != nrows {
        return Err(CliError::Validation(format!("{what} has {} rows, expected {nrows}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(CliError::Validation(format!(
                "{what} row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!("{what}[{i}][{j}] is not finite")));
        }
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn unique(labels: &[String], what: &str) -> CliResult<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if l.is_empty() {
            return Err(CliError::Validation(format!("empty {what} label")));
        }
        if !seen.insert(l) {
            return Err(CliError::Validation(format!("duplicate {what} label '{l}'")));
        }
    }
    Ok(())
}

fn positive(v: &[f64], len: usize, what: &str) -> CliResult<()> {
    if v.len() != len {
        return Err(CliError::Validation(format!("{what} has {} entries, expected {len}", v.len())));
    }
    if let Some(i) = v.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(CliError::Validation(format!("{what}[{i}] = {} must be positive", v[i])));
    }
    Ok(())
}

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

impl PlantDocument {
    pub fn validate(&self) -> CliResult<()> {
        self.to_systems().map(|_| ())
    }

    fn to_systems(&self) -> CliResult<(StateSpace, StateSpace)> {
        unique(&self.states, "state")?;
        unique(&self.inputs, "input")?;
        unique(&self.outputs, "output")?;
        let (n, m, p) = (self.states.len(), self.inputs.len(), self.outputs.len());
        let a = matrix(&self.a, n, n, "A")?;
        let b = matrix(&self.b, n, m, "B")?;
        let c = matrix(&self.c, p, n, "C")?;
        let d = matrix(&self.d, p, m, "D")?;
        positive(&self.input_scaling, m, "input_scaling")?;
        positive(&self.output_scaling, p, "output_scaling")?;
        let raw = StateSpace::with_labels(a, b, c, d, self.inputs.clone(), self.outputs.clone())?;
        let inv_out: Vec<f64> = self.output_scaling.iter().map(|s| 1.0 / s).collect();
        let scaled = raw.scale(&self.input_scaling, &inv_out)?;
        Ok((raw, scaled))
    }

    /// Builds a document whose scaled form is `scaled`.
    pub fn from_scaled(
        name: &str,
        states: Vec<String>,
        scaled: &StateSpace,
        input_scaling: Vec<f64>,
        output_scaling: Vec<f64>,
    ) -> CliResult<Self> {
        positive(&input_scaling, scaled.n_inputs(), "input_scaling")?;
        positive(&output_scaling, scaled.n_outputs(), "output_scaling")?;
        let inv_in: Vec<f64> = input_scaling.iter().map(|s| 1.0 / s).collect();
        let raw = scaled.scale(&inv_in, &output_scaling)?;
        let doc = Self {
            name: name.to_string(),
            flight_condition: String::new(),
            version: String::new(),
            states,
            inputs: scaled.input_labels().to_vec(),
            outputs: scaled.output_labels().to_vec(),
            a: rows(raw.a()),
            b: rows(raw.b()),
            c: rows(raw.c()),
            d: rows(raw.d()),
            input_scaling,
            output_scaling,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn load(&self) -> CliResult<LoadedPlant> {
        let (raw, scaled) = self.to_systems()?;
        Ok(LoadedPlant { document: self.clone(), raw, scaled })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant documents serialize")
    }

    pub fn from_json(text: &str, origin: &str) -> CliResult<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| CliError::io(path, e))
    }
}

pub fn load_plant(path: &Path) -> CliResult<LoadedPlant> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    PlantDocument::from_json(&text, &path.display().to_string())?.load()
}

/// Nominal coefficients of the demo plant in scaled units.
struct DemoCoefficients {
    /// Airframe block over `[u, w, q, θ, h]`.
    a_aa: [[f64; 5]; 5],
    /// Engine block over `[N2, N25, P6, T41]`.
    a_ee: [[f64; 4]; 4],
    /// Engine state DC gains to `[Wf, A78, A8]`.
    engine_dc: [[f64; 3]; 4],
    /// P6 sensitivity to δtv.
    p6_dtv: f64,
    /// Ram effect of airspeed on fan speed.
    n2_u: f64,
    /// Nozzle forces `[Fx, Fz, TM]` on engine states.
    c_force: [[f64; 4]; 3],
    /// Nozzle forces on δtv.
    d_force: [f64; 3],
    /// Direct thrust change with nozzle area.
    fx_a8: f64,
    /// Airframe sensitivity of `[u', w', q']` to `[Fx, Fz, TM]`.
    force_gain: [f64; 3],
    /// `R` on `[N2, P6]`.
    epr: [f64; 2],
}

const NOMINAL: DemoCoefficients = DemoCoefficients {
    a_aa: [
        [-0.40, 0.05, 0.0, -0.05, 0.0],
        [-0.05, -0.90, 1.0, 0.10, 0.0],
        [0.01, -0.60, -1.10, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, -0.50, 0.0, 0.50, -0.01],
    ],
    a_ee: [
        [-2.0, 0.6, 0.0, 0.0],
        [0.5, -3.0, 0.0, 0.0],
        [1.5, 1.0, -8.0, 0.3],
        [0.0, 1.2, 0.0, -5.0],
    ],
    engine_dc: [[0.8, -0.2, 0.3], [0.9, 0.1, -0.2], [0.4, 0.6, -0.8], [1.0, -0.5, -0.3]],
    p6_dtv: 0.2,
    n2_u: 0.05,
    c_force: [[0.6, 0.0, 0.4, 0.3], [0.1, 0.0, 0.05, 0.0], [0.05, 0.0, 0.0, 0.0]],
    d_force: [0.0, 1.0, 0.8],
    fx_a8: -1.0,
    force_gain: [0.6, 0.4, 1.5],
    epr: [0.2, 0.8],
};

pub const DEMO_STATES: [&str; 9] = ["u", "w", "q", "theta", "h", "N2", "N25", "P6", "T41"];
pub const DEMO_INPUTS: [&str; 4] = ["Wf", "A78", "A8", "dtv"];
pub const DEMO_OUTPUTS: [&str; 7] = ["V", "q_v", "N2P", "R", "Fx", "Fz", "TM"];
pub const DEMO_ENGINE_STATES: [&str; 4] = ["N2", "N25", "P6", "T41"];

/// Physical units per scaled unit: kg/h, cm², cm², deg.
const DEMO_INPUT_SCALING: [f64; 4] = [400.0, 50.0, 100.0, 5.0];
/// Physical units per scaled unit: m/s, deg/s, %, -, N, N, N·m.
const DEMO_OUTPUT_SCALING: [f64; 7] = [2.0, 2.0, 2.0, 0.05, 4000.0, 4000.0, 5000.0];

/// Entries that are structural (kinematics, output definitions) are left
/// untouched; every other nonzero coefficient is scaled by a seeded factor
/// in `1 ± DEMO_SPREAD`.
fn perturbed(seed: u64) -> DemoCoefficients {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: f64| if v == 0.0 { 0.0 } else { v * (1.0 + DEMO_SPREAD * rng.random_range(-1.0..=1.0)) };
    let mut c = NOMINAL;
    for (i, row) in c.a_aa.iter_mut().enumerate() {
        if i == 3 {
            continue;
        }
        for v in row.iter_mut() {
            *v = jitter(*v);
        }
    }
    for row in c.a_ee.iter_mut() {
        for v in row.iter_mut() {
            *v = jitter(*v);
        }
    }
    for row in c.engine_dc.iter_mut() {
        for v in row.iter_mut() {
            *v = jitter(*v);
        }
    }
    c.p6_dtv = jitter(c.p6_dtv);
    c.n2_u = jitter(c.n2_u);
    for row in c.c_force.iter_mut() {
        for v in row.iter_mut() {
            *v = jitter(*v);
        }
    }
    for v in c.d_force.iter_mut() {
        *v = jitter(*v);
    }
    c.fx_a8 = jitter(c.fx_a8);
    for v in c.force_gain.iter_mut() {
        *v = jitter(*v);
    }
    c
}

fn demo_scaled(c: &DemoCoefficients) -> StateSpace {
    let a_ee = Mat::from_fn(4, 4, |i, j| c.a_ee[i][j]);
    let x_dc = Mat::from_fn(4, 3, |i, j| c.engine_dc[i][j]);
    let b_e = -(&a_ee * x_dc);
    let c_force = Mat::from_fn(3, 4, |i, j| c.c_force[i][j]);
    let force_rows = [0usize, 1, 2];

    let mut a = Mat::zeros(9, 9);
    let mut b = Mat::zeros(9, 4);
    for i in 0..5 {
        for j in 0..5 {
            a[(i, j)] = c.a_aa[i][j];
        }
    }
    a.view_mut((5, 5), (4, 4)).copy_from(&a_ee);
    a[(5, 0)] = c.n2_u;
    b.view_mut((5, 0), (4, 3)).copy_from(&b_e);
    b[(7, 3)] = c.p6_dtv;
    for (k, &row) in force_rows.iter().enumerate() {
        for j in 0..4 {
            a[(row, 5 + j)] += c.force_gain[k] * c_force[(k, j)];
        }
        b[(row, 3)] += c.force_gain[k] * c.d_force[k];
    }
    b[(0, 2)] += c.force_gain[0] * c.fx_a8;

    let mut cm = Mat::zeros(7, 9);
    let mut d = Mat::zeros(7, 4);
    cm[(0, 0)] = 1.0;
    cm[(0, 1)] = 0.05;
    cm[(1, 2)] = 1.0;
    cm[(1, 3)] = 0.1;
    cm[(2, 5)] = 1.0;
    cm[(3, 5)] = c.epr[0];
    cm[(3, 7)] = c.epr[1];
    for k in 0..3 {
        for j in 0..4 {
            cm[(4 + k, 5 + j)] = c_force[(k, j)];
        }
        d[(4 + k, 3)] = c.d_force[k];
    }
    d[(4, 2)] = c.fx_a8;
    StateSpace::with_labels(
        a,
        b,
        cm,
        d,
        DEMO_INPUTS.iter().map(|s| s.to_string()).collect(),
        DEMO_OUTPUTS.iter().map(|s| s.to_string()).collect(),
    )
    .expect("demo plant dimensions are fixed")
}

/// Synthetic 9-state integrated airframe/engine model, deterministic in
/// `seed`. Nozzle forces drive the airframe, airspeed feeds back into fan
/// speed, and δtv reaches the mixing-plane pressure, so both
/// cross-coupling blocks are nonzero.
pub fn generate_demo_plant(seed: u64) -> PlantDocument {
    let scaled = demo_scaled(&perturbed(seed));
    let mut doc = PlantDocument::from_scaled(
        "synthetic STOL approach IFPC model",
        DEMO_STATES.iter().map(|s| s.to_string()).collect(),
        &scaled,
        DEMO_INPUT_SCALING.to_vec(),
        DEMO_OUTPUT_SCALING.to_vec(),
    )
    .expect("demo plant is valid");
    doc.flight_condition = "approach, 61.73 m/s, -3 deg flight path".into();
    doc.version = format!("{DEMO_VERSION} seed={seed}");
    doc
}
