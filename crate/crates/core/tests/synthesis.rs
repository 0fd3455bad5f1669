mod common;

use ifpc_core::linsys::{eval_at, hinf_norm, lft, spectral_abscissa};
use ifpc_core::synth::{build_augmented, hinfsyn, FirstOrderWeight, WeightSet};
use ifpc_core::StateSpace;
use rand::Rng;

fn weights(rng: &mut impl Rng, channels: usize) -> WeightSet {
    let w1 = (0..channels)
        .map(|_| {
            let bw = rng.random_range(0.3..3.0);
            FirstOrderWeight::new(0.5, bw, 0.01 * bw).unwrap()
        })
        .collect();
    let w3 = (0..channels)
        .map(|_| {
            let bw = rng.random_range(3.0..30.0);
            FirstOrderWeight::new(5.0, bw, 50.0 * bw).unwrap()
        })
        .collect();
    WeightSet::new(w1, rng.random_range(0.02..0.2), w3).unwrap()
}

/// Square plant with no transmission zero at the origin.
fn plant(rng: &mut rand_chacha::ChaCha8Rng, n: usize, ch: usize) -> StateSpace {
    loop {
        let g = common::random_stable(rng, n, ch, ch);
        let dc = eval_at(&g, 0.0).unwrap();
        if dc.singular_values().min() > 0.05 {
            return g;
        }
    }
}

#[test]
fn closed_loops_verified_independently() {
    let mut rng = common::rng(6);
    let mut cases = 0;
    for (n, ch) in [(1, 1), (2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (4, 2), (5, 2), (3, 3), (4, 3), (6, 2), (2, 1)] {
        let g = plant(&mut rng, n, ch);
        let w = weights(&mut rng, ch);
        let p = build_augmented(&g, &w).unwrap();
        let r = hinfsyn(&p, 2 * ch, ch, 1e-3).unwrap();
        let cl = lft(&p, &r.controller, 2 * ch, ch).unwrap();
        assert!(spectral_abscissa(cl.a()).unwrap() < 0.0, "n={n} ch={ch}");
        let norm = hinf_norm(&cl, 1e-6).unwrap().value;
        assert!(norm <= r.gamma_achieved * (1.0 + 1e-3), "n={n} ch={ch}: {norm} > {}", r.gamma_achieved);
        cases += 1;
    }
    assert!(cases >= 10);
}
