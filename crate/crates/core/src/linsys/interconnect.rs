//! Interconnection algebra on [`StateSpace`] systems.

use std::collections::HashSet;

use super::mat::{blkdiag, hstack, inverse, select_cols, select_rows, vstack, Mat};
use super::StateSpace;
use crate::error::{invalid, Error, Result};

/// `g2 · g1`: the outputs of `g1` drive the inputs of `g2`.
pub fn series(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.n_outputs() != g2.n_inputs() {
        return Err(invalid(format!(
            "series: first system has {} outputs, second has {} inputs",
            g1.n_outputs(),
            g2.n_inputs()
        )));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let a = vstack(&[
        &hstack(&[g1.a(), &Mat::zeros(n1, n2)]),
        &hstack(&[&(g2.b() * g1.c()), g2.a()]),
    ]);
    let b = vstack(&[g1.b(), &(g2.b() * g1.d())]);
    let c = hstack(&[&(g2.d() * g1.c()), g2.c()]);
    let d = g2.d() * g1.d();
    StateSpace::with_labels(
        a,
        b,
        c,
        d,
        g1.input_labels().to_vec(),
        g2.output_labels().to_vec(),
    )
}

/// Sum of two systems sharing input and output dimensions.
pub fn parallel(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.n_inputs() != g2.n_inputs() || g1.n_outputs() != g2.n_outputs() {
        return Err(invalid("parallel: dimension mismatch"));
    }
    StateSpace::with_labels(
        blkdiag(&[g1.a(), g2.a()]),
        vstack(&[g1.b(), g2.b()]),
        hstack(&[g1.c(), g2.c()]),
        g1.d() + g2.d(),
        g1.input_labels().to_vec(),
        g1.output_labels().to_vec(),
    )
}

/// Closed loop of `g` with `k` in the feedback path: `u = r + sign·K y`.
/// `sign = -1` is the usual negative feedback, giving `G (I + K G)⁻¹`.
pub fn feedback(g: &StateSpace, k: &StateSpace, sign: f64) -> Result<StateSpace> {
    if k.n_inputs() != g.n_outputs() || k.n_outputs() != g.n_inputs() {
        return Err(invalid("feedback: controller dimensions do not match plant"));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(invalid("feedback sign must be +1 or -1"));
    }
    let (n1, n2) = (g.order(), k.order());
    let (m, p) = (g.n_inputs(), g.n_outputs());
    // u = r + s(Ck xk + Dk y), y = Cg xg + Dg u  =>  (I - s Dg Dk) y = Cg xg + s Dg Ck xk + Dg r
    let e = Mat::identity(p, p) - g.d() * k.d() * sign;
    let ei = inverse(&e).ok_or(Error::IllPosedInterconnection)?;
    let cy = hstack(&[&(&ei * g.c()), &(&ei * g.d() * k.c() * sign)]);
    let dy = &ei * g.d();
    // u = r + s Dk y + s Ck xk
    let cu = hstack(&[&Mat::zeros(m, n1), &(k.c() * sign)]) + k.d() * sign * &cy;
    let du = Mat::identity(m, m) + k.d() * sign * &dy;
    let bg = vstack(&[g.b(), &Mat::zeros(n2, m)]);
    let bk = vstack(&[&Mat::zeros(n1, p), k.b()]);
    let a = blkdiag(&[g.a(), k.a()]) + &bg * &cu + &bk * &cy;
    let b = &bg * &du + &bk * &dy;
    StateSpace::with_labels(
        a,
        b,
        cy,
        dy,
        g.input_labels().to_vec(),
        g.output_labels().to_vec(),
    )
}

/// Lower linear fractional transformation: the last `n_meas` outputs of `p`
/// drive `k`, whose outputs close the last `n_ctrl` inputs of `p`
/// (`u = K y`, positive feedback).
pub fn lft(p: &StateSpace, k: &StateSpace, n_meas: usize, n_ctrl: usize) -> Result<StateSpace> {
    if n_meas > p.n_outputs() || n_ctrl > p.n_inputs() {
        return Err(invalid("lft: partition larger than the plant"));
    }
    if k.n_inputs() != n_meas || k.n_outputs() != n_ctrl {
        return Err(invalid(format!(
            "lft: controller is {}x{}, expected {n_ctrl}x{n_meas}",
            k.n_outputs(),
            k.n_inputs()
        )));
    }
    let (n, nk) = (p.order(), k.order());
    let (m1, p1) = (p.n_inputs() - n_ctrl, p.n_outputs() - n_meas);
    let b1 = p.b().columns(0, m1).into_owned();
    let b2 = p.b().columns(m1, n_ctrl).into_owned();
    let c1 = p.c().rows(0, p1).into_owned();
    let c2 = p.c().rows(p1, n_meas).into_owned();
    let d11 = p.d().view((0, 0), (p1, m1)).into_owned();
    let d12 = p.d().view((0, m1), (p1, n_ctrl)).into_owned();
    let d21 = p.d().view((p1, 0), (n_meas, m1)).into_owned();
    let d22 = p.d().view((p1, m1), (n_meas, n_ctrl)).into_owned();
    // (I - Dk D22) u = Ck xk + Dk C2 x + Dk D21 w
    let mi = inverse(&(Mat::identity(n_ctrl, n_ctrl) - k.d() * &d22)).ok_or(Error::IllPosedInterconnection)?;
    let cu = &mi * hstack(&[&(k.d() * &c2), k.c()]);
    let du = &mi * k.d() * &d21;
    let cy = hstack(&[&c2, &Mat::zeros(n_meas, nk)]) + &d22 * &cu;
    let dy = &d21 + &d22 * &du;
    let a = blkdiag(&[p.a(), k.a()])
        + vstack(&[&b2, &Mat::zeros(nk, n_ctrl)]) * &cu
        + vstack(&[&Mat::zeros(n, n_meas), k.b()]) * &cy;
    let b = vstack(&[&(&b1 + &b2 * &du), &(k.b() * &dy)]);
    let c = hstack(&[&c1, &Mat::zeros(p1, nk)]) + &d12 * &cu;
    let d = &d11 + &d12 * &du;
    StateSpace::with_labels(
        a,
        b,
        c,
        d,
        p.input_labels()[..m1].to_vec(),
        p.output_labels()[..p1].to_vec(),
    )
}

fn check_indices(idx: &[usize], len: usize, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for &i in idx {
        if i >= len {
            return Err(invalid(format!("{what} index {i} out of range (size {len})")));
        }
        if !seen.insert(i) {
            return Err(invalid(format!("duplicate {what} index {i}")));
        }
    }
    Ok(())
}

/// Restricts `g` to the given input columns and output rows; the state
/// matrix is untouched.
pub fn select_channels(g: &StateSpace, in_idx: &[usize], out_idx: &[usize]) -> Result<StateSpace> {
    check_indices(in_idx, g.n_inputs(), "input")?;
    check_indices(out_idx, g.n_outputs(), "output")?;
    StateSpace::with_labels(
        g.a().clone(),
        select_cols(g.b(), in_idx),
        select_rows(g.c(), out_idx),
        select_rows(&select_cols(g.d(), in_idx), out_idx),
        in_idx.iter().map(|&i| g.input_labels()[i].clone()).collect(),
        out_idx.iter().map(|&i| g.output_labels()[i].clone()).collect(),
    )
}

/// Label-based version of [`select_channels`].
pub fn select_by_label<S: AsRef<str>>(g: &StateSpace, inputs: &[S], outputs: &[S]) -> Result<StateSpace> {
    let i: Vec<usize> = inputs.iter().map(|l| g.input_index(l.as_ref())).collect::<Result<_>>()?;
    let o: Vec<usize> = outputs.iter().map(|l| g.output_index(l.as_ref())).collect::<Result<_>>()?;
    select_channels(g, &i, &o)
}

/// Block-diagonal stacking: inputs and outputs concatenated.
pub fn append(systems: &[&StateSpace]) -> Result<StateSpace> {
    let a: Vec<&Mat> = systems.iter().map(|g| g.a()).collect();
    let b: Vec<&Mat> = systems.iter().map(|g| g.b()).collect();
    let c: Vec<&Mat> = systems.iter().map(|g| g.c()).collect();
    let d: Vec<&Mat> = systems.iter().map(|g| g.d()).collect();
    StateSpace::with_labels(
        blkdiag(&a),
        blkdiag(&b),
        blkdiag(&c),
        blkdiag(&d),
        systems.iter().flat_map(|g| g.input_labels().iter().cloned()).collect(),
        systems.iter().flat_map(|g| g.output_labels().iter().cloned()).collect(),
    )
}

/// Source of a signal in an [`Interconnection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    External(usize),
    Output { block: usize, channel: usize },
}

/// Block-diagram builder. Every block input is a weighted sum of external
/// inputs and block outputs; algebraic loops through feedthrough terms are
/// resolved when the diagram is built.
#[derive(Debug, Clone, Default)]
pub struct Interconnection {
    blocks: Vec<(String, StateSpace)>,
    externals: Vec<String>,
    links: Vec<(usize, usize, Signal, f64)>,
    outputs: Vec<(String, Vec<(Signal, f64)>)>,
}

impl Interconnection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: &str, g: &StateSpace) -> usize {
        self.blocks.push((name.to_string(), g.clone()));
        self.blocks.len() - 1
    }

    pub fn add_input(&mut self, label: &str) -> Signal {
        self.externals.push(label.to_string());
        Signal::External(self.externals.len() - 1)
    }

    pub fn out(&self, block: usize, label: &str) -> Result<Signal> {
        let channel = self.blocks[block].1.output_index(label).map_err(|_| {
            invalid(format!("block '{}' has no output '{label}'", self.blocks[block].0))
        })?;
        Ok(Signal::Output { block, channel })
    }

    /// Adds `gain · src` to input `label` of `block`.
    pub fn connect(&mut self, src: Signal, block: usize, label: &str, gain: f64) -> Result<()> {
        let channel = self.blocks[block].1.input_index(label).map_err(|_| {
            invalid(format!("block '{}' has no input '{label}'", self.blocks[block].0))
        })?;
        self.links.push((block, channel, src, gain));
        Ok(())
    }

    /// Adds `gain · src` to input `channel` of `block`.
    pub fn connect_index(&mut self, src: Signal, block: usize, channel: usize, gain: f64) -> Result<()> {
        if channel >= self.blocks[block].1.n_inputs() {
            return Err(invalid(format!("block '{}' has no input {channel}", self.blocks[block].0)));
        }
        self.links.push((block, channel, src, gain));
        Ok(())
    }

    pub fn add_output(&mut self, label: &str, terms: Vec<(Signal, f64)>) {
        self.outputs.push((label.to_string(), terms));
    }

    pub fn build(&self) -> Result<StateSpace> {
        let systems: Vec<&StateSpace> = self.blocks.iter().map(|(_, g)| g).collect();
        let in_off: Vec<usize> = offsets(systems.iter().map(|g| g.n_inputs()));
        let out_off: Vec<usize> = offsets(systems.iter().map(|g| g.n_outputs()));
        let a = blkdiag(&systems.iter().map(|g| g.a()).collect::<Vec<_>>());
        let b = blkdiag(&systems.iter().map(|g| g.b()).collect::<Vec<_>>());
        let c = blkdiag(&systems.iter().map(|g| g.c()).collect::<Vec<_>>());
        let d = blkdiag(&systems.iter().map(|g| g.d()).collect::<Vec<_>>());
        let (nu, ny, nr) = (b.ncols(), c.nrows(), self.externals.len());
        let mut f = Mat::zeros(nu, ny);
        let mut e = Mat::zeros(nu, nr);
        for &(block, channel, src, gain) in &self.links {
            let row = in_off[block] + channel;
            match src {
                Signal::External(i) => e[(row, i)] += gain,
                Signal::Output { block: b, channel: c } => f[(row, out_off[b] + c)] += gain,
            }
        }
        let mut h = Mat::zeros(self.outputs.len(), ny);
        let mut j = Mat::zeros(self.outputs.len(), nr);
        for (row, (_, terms)) in self.outputs.iter().enumerate() {
            for &(src, gain) in terms {
                match src {
                    Signal::External(i) => j[(row, i)] += gain,
                    Signal::Output { block: b, channel: c } => h[(row, out_off[b] + c)] += gain,
                }
            }
        }
        let loop_m = Mat::identity(ny, ny) - &d * &f;
        let li = inverse(&loop_m).ok_or(Error::IllPosedInterconnection)?;
        let mc = &li * &c;
        let mr = &li * &d * &e;
        StateSpace::with_labels(
            &a + &b * &f * &mc,
            &b * (&f * &mr + &e),
            &h * &mc,
            &h * &mr + &j,
            self.externals.clone(),
            self.outputs.iter().map(|(l, _)| l.clone()).collect(),
        )
    }
}

fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .map(|s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::freq::{eval_at, freq_response};
    use crate::linsys::make_grid;

    fn tf(num: &[f64], den: &[f64]) -> StateSpace {
        StateSpace::from_tf(num, den).unwrap()
    }

    #[test]
    fn series_of_static_gains() {
        let g = series(&StateSpace::scalar_gain(2.0), &StateSpace::scalar_gain(3.0)).unwrap();
        assert_eq!(g.d()[(0, 0)], 6.0);
        assert_eq!(g.order(), 0);
    }

    #[test]
    fn series_dc_gain_and_order() {
        let g = series(&tf(&[1.0], &[1.0, 1.0]), &tf(&[1.0], &[1.0, 2.0])).unwrap();
        assert_eq!(g.order(), 2);
        assert!((eval_at(&g, 0.0).unwrap()[(0, 0)].re - 0.5).abs() < 1e-15);
        let bad = series(&StateSpace::gain(Mat::zeros(2, 1)), &StateSpace::scalar_gain(1.0));
        assert!(bad.is_err());
    }

    #[test]
    fn feedback_examples() {
        let one = StateSpace::scalar_gain(1.0);
        let cl = feedback(&one, &one, -1.0).unwrap();
        assert!((cl.d()[(0, 0)] - 0.5).abs() < 1e-15);
        let cl = feedback(&tf(&[1.0], &[1.0, 1.0]), &one, -1.0).unwrap();
        assert!((cl.a()[(0, 0)] + 2.0).abs() < 1e-15);
        assert!((eval_at(&cl, 0.0).unwrap()[(0, 0)].re - 0.5).abs() < 1e-15);
        // D_G D_K = 1 with positive sign: I - D_G D_K singular
        let err = feedback(&one, &one, 1.0);
        assert!(matches!(err, Err(Error::IllPosedInterconnection)));
        let m = StateSpace::scalar_gain(-1.0);
        let err = feedback(&one, &m, -1.0);
        assert!(matches!(err, Err(Error::IllPosedInterconnection)));
    }

    #[test]
    fn select_examples() {
        let g = StateSpace::gain(Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(select_channels(&g, &[0, 1], &[0, 1]).unwrap(), g);
        let s = select_channels(&g, &[1], &[1]).unwrap();
        assert_eq!(s.d()[(0, 0)], 1.0);
        assert!(select_channels(&g, &[2], &[0]).is_err());
        assert!(select_channels(&g, &[0, 0], &[0]).is_err());
    }

    #[test]
    fn interconnection_reproduces_feedback() {
        let g = tf(&[1.0, 3.0], &[1.0, 2.0, 5.0]);
        let k = tf(&[2.0, 1.0], &[1.0, 4.0]);
        let direct = feedback(&g, &k, -1.0).unwrap();
        let mut net = Interconnection::new();
        let r = net.add_input("r");
        let gi = net.add_block("g", &g);
        let ki = net.add_block("k", &k);
        let y = net.out(gi, "y0").unwrap();
        net.connect(r, gi, "u0", 1.0).unwrap();
        net.connect(net.out(ki, "y0").unwrap(), gi, "u0", -1.0).unwrap();
        net.connect(y, ki, "u0", 1.0).unwrap();
        net.add_output("y", vec![(y, 1.0)]);
        let built = net.build().unwrap();
        let grid = make_grid(0.01, 100.0, 10).unwrap();
        let a = freq_response(&direct, &grid).unwrap();
        let b = freq_response(&built, &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x[(0, 0)] - y[(0, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn lft_matches_feedback() {
        // P = [[G, G], [-G, -G]] with u = K y reproduces G/(1+GK) from w
        let g = StateSpace::from_tf(&[1.0], &[1.0, 1.0]).unwrap();
        let k = StateSpace::scalar_gain(3.0);
        let p = StateSpace::new(
            g.a().clone(),
            hstack(&[g.b(), g.b()]),
            vstack(&[g.c(), &(-g.c())]),
            Mat::zeros(2, 2),
        )
        .unwrap();
        let cl = lft(&p, &k, 1, 1).unwrap();
        let fb = feedback(&g, &k, -1.0).unwrap();
        for w in [0.0, 0.3, 5.0] {
            let a = crate::linsys::eval_at(&cl, w).unwrap()[(0, 0)];
            let b = crate::linsys::eval_at(&fb, w).unwrap()[(0, 0)];
            assert!((a - b).norm() < 1e-12);
        }
        assert!(lft(&p, &StateSpace::gain(Mat::zeros(2, 1)), 1, 1).is_err());
    }
}
