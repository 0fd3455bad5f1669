use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::mat::{is_finite, Mat};
use crate::error::{invalid, Error, Result};

/// Continuous-time LTI system `x' = Ax + Bu, y = Cx + Du` with named
/// input and output channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateSpaceDoc", into = "StateSpaceDoc")]
pub struct StateSpace {
    a: Mat,
    b: Mat,
    c: Mat,
    d: Mat,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_unique(labels: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(invalid(format!("duplicate {what} label '{l}'")));
        }
    }
    Ok(())
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let (m, p) = (d.ncols(), d.nrows());
        Self::with_labels(a, b, c, d, default_labels("u", m), default_labels("y", p))
    }

    pub fn with_labels(
        a: Mat,
        b: Mat,
        c: Mat,
        d: Mat,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(invalid(format!("A must be square, got {}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(invalid(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(invalid(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(invalid(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if input_labels.len() != b.ncols() || output_labels.len() != c.nrows() {
            return Err(invalid("label count does not match channel count"));
        }
        check_unique(&input_labels, "input")?;
        check_unique(&output_labels, "output")?;
        if ![&a, &b, &c, &d].iter().all(|m| is_finite(m)) {
            return Err(invalid("state-space matrices contain non-finite entries"));
        }
        Ok(Self { a, b, c, d, input_labels, output_labels })
    }

    /// Static gain `y = D u`.
    pub fn gain(d: Mat) -> Self {
        let (p, m) = d.shape();
        Self::new(Mat::zeros(0, 0), Mat::zeros(0, m), Mat::zeros(p, 0), d)
            .expect("static gain dimensions are consistent")
    }

    pub fn scalar_gain(k: f64) -> Self {
        Self::gain(Mat::from_element(1, 1, k))
    }

    /// SISO system from a proper transfer function, coefficients in
    /// descending powers of `s`. Controllable canonical form.
    pub fn from_tf(num: &[f64], den: &[f64]) -> Result<Self> {
        let den: Vec<f64> = den.iter().copied().skip_while(|&x| x == 0.0).collect();
        if den.is_empty() {
            return Err(invalid("denominator is zero"));
        }
        let n = den.len() - 1;
        let num: Vec<f64> = num.iter().copied().skip_while(|&x| x == 0.0).collect();
        if num.len() > den.len() {
            return Err(invalid("transfer function is improper"));
        }
        let lead = den[0];
        let a_coef: Vec<f64> = den.iter().map(|x| x / lead).collect();
        let mut b_coef = vec![0.0; n + 1];
        for (i, x) in num.iter().enumerate() {
            b_coef[n + 1 - num.len() + i] = x / lead;
        }
        let d = b_coef[0];
        let mut a = Mat::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        if n > 0 {
            for j in 0..n {
                a[(n - 1, j)] = -a_coef[n - j];
            }
        }
        let mut b = Mat::zeros(n, 1);
        if n > 0 {
            b[(n - 1, 0)] = 1.0;
        }
        let mut c = Mat::zeros(1, n);
        for j in 0..n {
            c[(0, j)] = b_coef[n - j] - a_coef[n - j] * d;
        }
        Self::new(a, b, c, Mat::from_element(1, 1, d))
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn d(&self) -> &Mat {
        &self.d
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }
    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn input_index(&self, label: &str) -> Result<usize> {
        self.input_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| invalid(format!("unknown input label '{label}'")))
    }

    pub fn output_index(&self, label: &str) -> Result<usize> {
        self.output_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| invalid(format!("unknown output label '{label}'")))
    }

    pub fn relabel(mut self, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        if inputs.len() != self.n_inputs() || outputs.len() != self.n_outputs() {
            return Err(invalid("label count does not match channel count"));
        }
        check_unique(&inputs, "input")?;
        check_unique(&outputs, "output")?;
        self.input_labels = inputs;
        self.output_labels = outputs;
        Ok(self)
    }

    pub fn with_input_labels<S: AsRef<str>>(self, inputs: &[S]) -> Result<Self> {
        let outputs = self.output_labels.clone();
        self.relabel(inputs.iter().map(|s| s.as_ref().to_string()).collect(), outputs)
    }

    pub fn with_output_labels<S: AsRef<str>>(self, outputs: &[S]) -> Result<Self> {
        let inputs = self.input_labels.clone();
        self.relabel(inputs, outputs.iter().map(|s| s.as_ref().to_string()).collect())
    }

    /// State transformation `x = t z`: `(t⁻¹At, t⁻¹B, Ct, D)`.
    pub fn transform(&self, t: &Mat, t_inv: &Mat) -> Result<Self> {
        Self::with_labels(
            t_inv * &self.a * t,
            t_inv * &self.b,
            &self.c * t,
            self.d.clone(),
            self.input_labels.clone(),
            self.output_labels.clone(),
        )
    }

    /// `scale_out · G · scale_in` with diagonal scalings.
    pub fn scale(&self, scale_in: &[f64], scale_out: &[f64]) -> Result<Self> {
        if scale_in.len() != self.n_inputs() || scale_out.len() != self.n_outputs() {
            return Err(invalid("scaling length does not match channel count"));
        }
        let mut b = self.b.clone();
        let mut d = self.d.clone();
        let mut c = self.c.clone();
        for (j, s) in scale_in.iter().enumerate() {
            b.column_mut(j).scale_mut(*s);
            d.column_mut(j).scale_mut(*s);
        }
        for (i, s) in scale_out.iter().enumerate() {
            c.row_mut(i).scale_mut(*s);
            d.row_mut(i).scale_mut(*s);
        }
        Self::with_labels(
            self.a.clone(),
            b,
            c,
            d,
            self.input_labels.clone(),
            self.output_labels.clone(),
        )
    }

    pub fn negate(&self) -> Self {
        let mut out = self.clone();
        out.c = -&self.c;
        out.d = -&self.d;
        out
    }
}

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<Mat> {
    if r.len() != nrows {
        return Err(invalid(format!("{what}: expected {nrows} rows, got {}", r.len())));
    }
    for (i, row) in r.iter().enumerate() {
        if row.len() != ncols {
            return Err(invalid(format!(
                "{what}: row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| r[i][j]))
}

/// Row-major persisted form of a [`StateSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpaceDoc {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl From<StateSpace> for StateSpaceDoc {
    fn from(g: StateSpace) -> Self {
        Self {
            a: rows(&g.a),
            b: rows(&g.b),
            c: rows(&g.c),
            d: rows(&g.d),
            inputs: g.input_labels,
            outputs: g.output_labels,
        }
    }
}

impl TryFrom<StateSpaceDoc> for StateSpace {
    type Error = Error;

    fn try_from(doc: StateSpaceDoc) -> Result<Self> {
        let n = doc.a.len();
        let (m, p) = (doc.inputs.len(), doc.outputs.len());
        StateSpace::with_labels(
            from_rows(&doc.a, n, n, "A")?,
            from_rows(&doc.b, n, m, "B")?,
            from_rows(&doc.c, p, n, "C")?,
            from_rows(&doc.d, p, m, "D")?,
            doc.inputs,
            doc.outputs,
        )
    }
}
