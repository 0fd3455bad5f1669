//! Balanced truncation.

use super::lyap::{controllability_gramian, observability_gramian};
use super::mat::{psd_factor, Mat};
use super::norm::is_stable;
use super::StateSpace;
use crate::error::{invalid, Error, Result};

/// Hankel singular values below this fraction of the largest are always
/// discarded.
pub const HSV_RANK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Reduction {
    pub system: StateSpace,
    /// All Hankel singular values of the original system, descending.
    pub hankel_svs: Vec<f64>,
}

impl Reduction {
    /// `2 Σ σᵢ` over the discarded states.
    pub fn error_bound(&self) -> f64 {
        2.0 * self.hankel_svs[self.system.order()..].iter().sum::<f64>()
    }
}

pub fn hankel_singular_values(g: &StateSpace) -> Result<Vec<f64>> {
    Ok(balance(g)?.0)
}

fn balance(g: &StateSpace) -> Result<(Vec<f64>, Mat, Mat)> {
    if !is_stable(g) {
        return Err(Error::SolverPrecondition("balanced truncation needs a stable system".into()));
    }
    let wc = controllability_gramian(g.a(), g.b())?;
    let wo = observability_gramian(g.a(), g.c())?;
    let lc = psd_factor(&wc);
    let lo = psd_factor(&wo);
    let svd = (lo.transpose() * &lc).svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V");
    let u = Mat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = Mat::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    Ok((sv, lo * u, lc * v))
}

/// Balanced truncation of a stable system to `target_order` states.
pub fn balanced_truncate(g: &StateSpace, target_order: usize) -> Result<Reduction> {
    let n = g.order();
    if target_order > n || (target_order == 0 && n > 0) {
        return Err(invalid(format!("target order {target_order} must be in 1..={n}")));
    }
    if n == 0 {
        return Ok(Reduction { system: g.clone(), hankel_svs: Vec::new() });
    }
    let (sv, lo_u, lc_v) = balance(g)?;
    let floor = HSV_RANK_FLOOR * sv[0];
    let k = sv.iter().take(target_order).filter(|s| **s >= floor && **s > 0.0).count();
    // T_left = Σ^{-1/2} Uᵀ Loᵀ, T_right = Lc V Σ^{-1/2}
    let mut tl = Mat::zeros(k, n);
    let mut tr = Mat::zeros(n, k);
    for i in 0..k {
        let s = sv[i].sqrt();
        tl.row_mut(i).copy_from(&(lo_u.column(i).transpose() / s));
        tr.column_mut(i).copy_from(&(lc_v.column(i) / s));
    }
    let system = StateSpace::with_labels(
        &tl * g.a() * &tr,
        &tl * g.b(),
        g.c() * &tr,
        g.d().clone(),
        g.input_labels().to_vec(),
        g.output_labels().to_vec(),
    )?;
    Ok(Reduction { system, hankel_svs: sv })
}
