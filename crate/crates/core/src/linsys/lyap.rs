//! Bartels-Stewart Lyapunov solver on the complex Schur form.

use super::mat::{require_square, symmetrize, to_complex, CMat, Mat, C64};
use super::schur::{real_schur_complex, ComplexSchur};
use crate::error::{invalid, Error, Result};

/// Solves `T Y + Y T* + W = 0` for upper triangular `T`. `None` when
/// `T[i,i] + conj(T[j,j])` vanishes for some pair.
fn triangular_lyap(t: &CMat, w: &CMat) -> Option<CMat> {
    let n = t.nrows();
    let mut y = CMat::zeros(n, n);
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for j in (0..n).rev() {
        for i in (0..n).rev() {
            let mut rhs = -w[(i, j)];
            for k in (i + 1)..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in (j + 1)..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            let den = t[(i, i)] + t[(j, j)].conj();
            if den.norm() <= 1e-14 * scale {
                return None;
            }
            y[(i, j)] = rhs / den;
        }
    }
    Some(y)
}

/// Solves `A P + P Aᵀ + Q = 0` given a Schur decomposition of `A`,
/// without a stability check.
pub(crate) fn lyap_with_schur(schur: &ComplexSchur, q: &Mat) -> Option<Mat> {
    let u = &schur.q;
    let w = u.adjoint() * to_complex(q) * u;
    let y = triangular_lyap(&schur.t, &w)?;
    let p = u * y * u.adjoint();
    Some(p.map(|z: C64| z.re))
}

/// Solves `A P + P Aᵀ + Q = 0` for Hurwitz `A`.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    require_square(a, "A")?;
    require_square(q, "Q")?;
    if a.nrows() != q.nrows() {
        return Err(invalid("Lyapunov: A and Q dimensions differ"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let schur = real_schur_complex(a)?;
    if schur.eigenvalues().iter().any(|z| z.re >= 0.0) {
        return Err(Error::SolverPrecondition("Lyapunov: A is not Hurwitz".into()));
    }
    let p = lyap_with_schur(&schur, q)
        .ok_or_else(|| Error::SolverPrecondition("Lyapunov: singular Sylvester operator".into()))?;
    let symmetric = (q - q.transpose()).amax() <= 1e-14 * q.amax().max(1.0);
    Ok(if symmetric { symmetrize(&p) } else { p })
}

/// Controllability gramian `A W + W Aᵀ + B Bᵀ = 0`.
pub fn controllability_gramian(a: &Mat, b: &Mat) -> Result<Mat> {
    solve_lyapunov(a, &(b * b.transpose()))
}

/// Observability gramian `Aᵀ W + W A + Cᵀ C = 0`.
pub fn observability_gramian(a: &Mat, c: &Mat) -> Result<Mat> {
    solve_lyapunov(&a.transpose(), &(c.transpose() * c))
}
