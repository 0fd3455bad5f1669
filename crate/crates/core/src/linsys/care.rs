//! Continuous algebraic Riccati equations via the ordered Schur form of
//! the Hamiltonian, with one Newton refinement step.

use super::lyap::lyap_with_schur;
use super::mat::{csolve, inverse, require_square, symmetrize, CMat, Mat};
use super::schur::{balance_with_scaling, complex_schur, real_schur_complex};
use super::mat::to_complex;
use crate::error::{invalid, Error, Result};

/// Residual `H11ᵀX + X H11 + X H12 X − H21` of the Riccati equation whose
/// Hamiltonian is `H = [[H11, H12], [H21, −H11ᵀ]]`.
pub fn hamiltonian_residual(h: &Mat, x: &Mat) -> Mat {
    let n = x.nrows();
    let h11 = h.view((0, 0), (n, n));
    let h12 = h.view((0, n), (n, n));
    let h21 = h.view((n, 0), (n, n));
    h11.transpose() * x + x * h11 + x * h12 * x - h21
}

/// Stabilizing solution `X` of the Riccati equation associated with a
/// Hamiltonian matrix: the stable invariant subspace is spanned by `[I; X]`.
pub fn ric(h: &Mat) -> Result<Mat> {
    require_square(h, "Hamiltonian")?;
    if h.nrows() % 2 != 0 {
        return Err(invalid("Hamiltonian must have even dimension"));
    }
    let n = h.nrows() / 2;
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if !h.iter().all(|x| x.is_finite()) {
        return Err(Error::NoSolution("Hamiltonian has non-finite entries".into()));
    }
    let (hb, d) = balance_with_scaling(h);
    let mut schur = complex_schur(&to_complex(&hb))?;
    if let Some(z) = schur.eigenvalues().iter().find(|z| z.re.abs() <= AXIS_TOL * (1.0 + z.norm())) {
        return Err(Error::NoSolution(format!(
            "Hamiltonian eigenvalue {z} lies on the imaginary axis"
        )));
    }
    let k = schur.reorder(|z| z.re < 0.0);
    if k != n {
        return Err(Error::NoSolution(format!("stable subspace has dimension {k}, expected {n}")));
    }
    // the stable subspace of H is D times that of the balanced matrix
    let u11 = CMat::from_fn(n, n, |i, j| schur.q[(i, j)] * d[i]);
    let u21 = CMat::from_fn(n, n, |i, j| schur.q[(n + i, j)] * d[n + i]);
    let xt = csolve(&u11.transpose(), &u21.transpose())
        .ok_or_else(|| Error::NoSolution("stable subspace is not a graph (U11 singular)".into()))?;
    let xc = xt.transpose();
    let xmax = xc.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let imag = xc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if !xmax.is_finite() || imag > 1e-6 * xmax.max(1.0) {
        return Err(Error::NoSolution("Riccati solution is not real".into()));
    }
    let x = newton_refine(h, symmetrize(&xc.map(|z| z.re)));
    let res = relative_residual(h, &x);
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::NoSolution(format!("Riccati residual {res:.2e} too large")));
    }
    Ok(x)
}

/// Hamiltonian eigenvalues with `|Re λ| ≤ AXIS_TOL·(1 + |λ|)` count as
/// imaginary.
const AXIS_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-6;

fn relative_residual(h: &Mat, x: &Mat) -> f64 {
    let n = x.nrows();
    let h11 = h.view((0, 0), (n, n));
    let h12 = h.view((0, n), (n, n));
    let h21 = h.view((n, 0), (n, n));
    let scale = 2.0 * (h11 * x).norm() + (x * h12 * x).norm() + h21.norm();
    let res = hamiltonian_residual(h, x).norm();
    if scale == 0.0 {
        res
    } else {
        res / scale
    }
}

fn newton_refine(h: &Mat, x: Mat) -> Mat {
    let n = x.nrows();
    let res = hamiltonian_residual(h, &x);
    let ac = h.view((0, 0), (n, n)) + h.view((0, n), (n, n)) * &x;
    let Ok(schur) = real_schur_complex(&ac.transpose()) else {
        return x;
    };
    if schur.eigenvalues().iter().any(|z| z.re >= 0.0) {
        return x;
    }
    let Some(delta) = lyap_with_schur(&schur, &res) else {
        return x;
    };
    let refined = symmetrize(&(&x + delta));
    if hamiltonian_residual(h, &refined).norm() < res.norm() {
        refined
    } else {
        x
    }
}

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0`.
pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    require_square(a, "A")?;
    require_square(q, "Q")?;
    require_square(r, "R")?;
    let n = a.nrows();
    if b.nrows() != n || q.nrows() != n || r.nrows() != b.ncols() {
        return Err(invalid("CARE: inconsistent dimensions"));
    }
    let ri = inverse(r).ok_or_else(|| invalid("CARE: R is singular"))?;
    let g = b * ri * b.transpose();
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    ric(&h)
}
