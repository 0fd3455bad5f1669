//! Complex structured singular value upper bound by diagonal balancing.

use crate::error::{invalid, Result};
use crate::linsys::mat::CMat;
use crate::linsys::singular_values;

/// Smallest scaling relative to the largest.
pub const MU_SCALING_FLOOR: f64 = 1e-6;
pub const MU_MAX_ITERATIONS: usize = 100;

/// `inf_D σ̄(D M D⁻¹)` over `D = diag(d_i I_{k_i})`, approximated by
/// Osborne iteration on the block norms. Never exceeds `σ̄(M)`.
pub fn mu_upper(m: &CMat, structure: &[usize]) -> Result<f64> {
    let p = m.nrows();
    if m.ncols() != p {
        return Err(invalid("μ needs a square matrix"));
    }
    if structure.iter().any(|&k| k == 0) || structure.iter().sum::<usize>() != p {
        return Err(invalid(format!("block sizes {structure:?} do not partition {p}")));
    }
    if p == 1 {
        return Ok(m[(0, 0)].norm());
    }
    let sigma = |m: &CMat| singular_values(m)[0];
    let nb = structure.len();
    let unscaled = sigma(m);
    if nb == 1 || unscaled == 0.0 {
        return Ok(unscaled);
    }
    let offsets: Vec<usize> = structure.iter().scan(0, |acc, &k| {
        let o = *acc;
        *acc += k;
        Some(o)
    }).collect();
    let norms: Vec<Vec<f64>> = (0..nb)
        .map(|i| {
            (0..nb)
                .map(|j| m.view((offsets[i], offsets[j]), (structure[i], structure[j])).norm())
                .collect()
        })
        .collect();
    let scaled = |d: &[f64]| {
        let mut s = m.clone();
        for i in 0..nb {
            for j in 0..nb {
                let f = d[i] / d[j];
                s.view_mut((offsets[i], offsets[j]), (structure[i], structure[j])).scale_mut(f);
            }
        }
        s
    };

    let mut d = vec![1.0; nb];
    let mut best = unscaled;
    for _ in 0..MU_MAX_ITERATIONS {
        let prev = d.clone();
        for i in 0..nb {
            let (mut row, mut col) = (0.0, 0.0);
            for j in (0..nb).filter(|&j| j != i) {
                row += (norms[i][j] * d[i] / d[j]).powi(2);
                col += (norms[j][i] * d[j] / d[i]).powi(2);
            }
            d[i] = match (row > 0.0, col > 0.0) {
                (true, true) => d[i] * (col / row).sqrt().sqrt(),
                (true, false) => 0.0,
                (false, true) => {
                    (0..nb).filter(|&j| j != i).map(|j| d[j]).fold(0.0, f64::max) / MU_SCALING_FLOOR
                }
                (false, false) => d[i],
            };
            // keep max d at 1 and the rest above the floor
            let top = d.iter().cloned().fold(0.0, f64::max);
            for v in d.iter_mut() {
                *v = if top > 0.0 { (*v / top).clamp(MU_SCALING_FLOOR, 1.0) } else { 1.0 };
            }
        }
        best = best.min(sigma(&scaled(&d)));
        let change = d.iter().zip(&prev).map(|(a, b)| (a / b).ln().abs()).fold(0.0, f64::max);
        if change < 1e-10 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::mat::C64;
    use proptest::prelude::*;

    fn cm(p: usize, v: &[(f64, f64)]) -> CMat {
        CMat::from_row_iterator(p, p, v.iter().map(|&(re, im)| C64::new(re, im)))
    }

    #[test]
    fn scalar_is_magnitude() {
        let m = cm(1, &[(3.0, -4.0)]);
        assert_eq!(mu_upper(&m, &[1]).unwrap(), 5.0);
        let m = cm(1, &[(0.6, -0.8)]);
        assert_eq!(mu_upper(&m, &[1]).unwrap(), m[(0, 0)].norm());
    }

    #[test]
    fn nilpotent_goes_to_floor() {
        let m = cm(2, &[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let mu = mu_upper(&m, &[1, 1]).unwrap();
        assert!(mu <= 1e-3, "{mu}");
    }

    #[test]
    fn diagonal_is_max_entry() {
        let m = cm(3, &[(0.3, 0.4), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-2.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 1.5)]);
        assert!((mu_upper(&m, &[1, 1, 1]).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bad_structure() {
        let m = cm(2, &[(1.0, 0.0); 4]);
        assert!(mu_upper(&m, &[1]).is_err());
        assert!(mu_upper(&m, &[2, 0]).is_err());
    }

    #[test]
    fn full_block_is_sigma_max() {
        let m = cm(2, &[(1.0, 0.0), (2.0, 1.0), (0.5, 0.0), (-1.0, 0.0)]);
        assert_eq!(mu_upper(&m, &[2]).unwrap(), singular_values(&m)[0]);
    }

    proptest! {
        #[test]
        fn bounded_by_sigma_and_spectral_radius(v in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 9)) {
            let m = cm(3, &v);
            let mu = mu_upper(&m, &[1, 1, 1]).unwrap();
            let s = singular_values(&m)[0];
            prop_assert!(mu <= s * (1.0 + 1e-12));
            // μ ≥ ρ(M) for scalar blocks, so any upper bound is too
            let rho = m.clone().eigenvalues().map(|e| e.iter().map(|z| z.norm()).fold(0.0, f64::max));
            if let Some(rho) = rho {
                prop_assert!(mu >= rho * (1.0 - 1e-9));
            }
        }
    }
}
