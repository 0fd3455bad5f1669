//! Complex Schur decomposition with eigenvalue reordering.
//!
//! Householder reduction to Hessenberg form followed by single-shift QR
//! sweeps (Wilkinson shifts, exceptional shifts every tenth stalled sweep).
//! Working in complex arithmetic keeps the triangular factor strictly upper
//! triangular, so reordering reduces to adjacent 1x1 swaps.

use super::mat::{to_complex, CMat, Mat, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ComplexSchur {
    /// Upper triangular factor.
    pub t: CMat,
    /// Unitary factor, `a = q t q*`.
    pub q: CMat,
}

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// `(c, s)` with `[c s; -conj(s) c] [f; g] = [r; 0]`, `c` real.
fn givens(f: C64, g: C64) -> (f64, C64) {
    if g == C64::new(0.0, 0.0) {
        return (1.0, C64::new(0.0, 0.0));
    }
    let nf = f.norm();
    if nf == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let norm = nf.hypot(g.norm());
    (nf / norm, (f / nf) * g.conj() / norm)
}

fn rot_rows(m: &mut CMat, k: usize, cols: std::ops::Range<usize>, c: f64, s: C64) {
    for j in cols {
        let (x, y) = (m[(k, j)], m[(k + 1, j)]);
        m[(k, j)] = x * c + s * y;
        m[(k + 1, j)] = y * c - s.conj() * x;
    }
}

fn rot_cols(m: &mut CMat, k: usize, rows: std::ops::Range<usize>, c: f64, s: C64) {
    for i in rows {
        let (x, y) = (m[(i, k)], m[(i, k + 1)]);
        m[(i, k)] = x * c + s.conj() * y;
        m[(i, k + 1)] = y * c - s * x;
    }
}

fn hessenberg(h: &mut CMat, q: Option<&mut CMat>) {
    let n = h.nrows();
    let mut q = q;
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<C64> = (0..len).map(|i| h[(k + 1 + i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { v[0] / v[0].norm() };
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // h <- (I - 2vv*) h on rows k+1..
        for j in k..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..len {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            for i in 0..len {
                h[(k + 1 + i, j)] -= v[i] * dot * 2.0;
            }
        }
        // h <- h (I - 2vv*) on columns k+1..
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for l in 0..len {
                dot += h[(i, k + 1 + l)] * v[l];
            }
            for l in 0..len {
                h[(i, k + 1 + l)] -= dot * v[l].conj() * 2.0;
            }
        }
        if let Some(q) = q.as_deref_mut() {
            for i in 0..n {
                let mut dot = C64::new(0.0, 0.0);
                for l in 0..len {
                    dot += q[(i, k + 1 + l)] * v[l];
                }
                for l in 0..len {
                    q[(i, k + 1 + l)] -= dot * v[l].conj() * 2.0;
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let (l1, l2) = (half_tr + root, half_tr - root);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Shifted QR on a Hessenberg matrix. With `full`, the whole triangular
/// factor is maintained (and `q` updated); otherwise only the active window.
fn hqr(h: &mut CMat, mut q: Option<&mut CMat>, full: bool) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(10);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            let sub = abs1(h[(l, l - 1)]);
            if sub <= eps * s || sub < f64::MIN_POSITIVE {
                h[(l, l - 1)] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > max_iter {
            return Err(Error::NoConvergence("complex QR"));
        }
        let shift = if its % 10 == 0 {
            let extra = if hi >= 2 { abs1(h[(hi - 1, hi - 2)]) } else { 0.0 };
            h[(hi, hi)] + C64::new(0.75 * (abs1(h[(hi, hi - 1)]) + extra), 0.0)
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        let (col_end, row_start) = if full { (n, 0) } else { (hi + 1, l) };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first = if k == l { k } else { k - 1 };
            rot_rows(h, k, first..col_end, c, s);
            rot_cols(h, k, row_start..(k + 3).min(hi + 1), c, s);
            if k > l {
                h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            }
            if let Some(q) = q.as_deref_mut() {
                rot_cols(q, k, 0..n, c, s);
            }
        }
    }
    Ok(())
}

/// Diagonal similarity scaling (powers of two) that equalizes row and
/// column norms; improves eigenvalue accuracy for badly scaled inputs.
pub fn balance(a: &Mat) -> Mat {
    balance_with_scaling(a).0
}

/// Returns `(D⁻¹ A D, diag(D))`.
pub fn balance_with_scaling(a: &Mat) -> (Mat, Vec<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = vec![1.0; n];
    let radix = 2.0f64;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let mut cc = c;
            let mut g = r / radix;
            while cc < g {
                f *= radix;
                cc *= radix * radix;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r / f) < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
                d[i] *= f;
            }
        }
    }
    (m, d)
}

/// Schur decomposition `a = q t q*` of a complex matrix.
pub fn complex_schur(a: &CMat) -> Result<ComplexSchur> {
    let n = a.nrows();
    let mut t = a.clone();
    let mut q = CMat::identity(n, n);
    hessenberg(&mut t, Some(&mut q));
    hqr(&mut t, Some(&mut q), true)?;
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok(ComplexSchur { t, q })
}

pub fn real_schur_complex(a: &Mat) -> Result<ComplexSchur> {
    complex_schur(&to_complex(a))
}

/// Eigenvalues of a real matrix (balanced first).
pub fn eigenvalues(a: &Mat) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut h = to_complex(&balance(a));
    hessenberg(&mut h, None);
    hqr(&mut h, None, false)?;
    Ok((0..a.nrows()).map(|i| h[(i, i)]).collect())
}

impl ComplexSchur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let (t11, t22) = (self.t[(k, k)], self.t[(k + 1, k + 1)]);
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        if k + 2 < n {
            rot_rows(&mut self.t, k, (k + 2)..n, c, s);
        }
        rot_cols(&mut self.t, k, 0..k, c, s);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        rot_cols(&mut self.q, k, 0..n, c, s);
    }

    /// Moves eigenvalues satisfying `select` to the leading block, keeping
    /// their relative order. Returns the size of that block.
    pub fn reorder(&mut self, select: impl Fn(C64) -> bool) -> usize {
        let n = self.t.nrows();
        let mut front = 0;
        for j in 0..n {
            if select(self.t[(j, j)]) {
                for k in (front..j).rev() {
                    self.swap(k);
                }
                front += 1;
            }
        }
        front
    }
}
