use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ifpc_core::analysis::{margins, mu_upper};
use ifpc_core::linsys::mat::{CMat, Mat, C64};
use ifpc_core::linsys::{balanced_truncate, hinf_norm, make_grid, sigma_max, solve_care, StateSpace};
use ifpc_core::synth::{build_augmented, hinfsyn, FirstOrderWeight, WeightSet};

fn plant() -> StateSpace {
    // two lightly coupled second-order channels
    let a = Mat::from_row_slice(
        4,
        4,
        &[0.0, 1.0, 0.0, 0.0, -2.0, -0.8, 0.3, 0.0, 0.0, 0.0, 0.0, 1.0, 0.2, 0.0, -5.0, -1.5],
    );
    let b = Mat::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.1, 0.0, 0.0, 0.2, 1.0]);
    let c = Mat::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    StateSpace::new(a, b, c, Mat::zeros(2, 2)).unwrap()
}

fn weights() -> WeightSet {
    let w1 = vec![FirstOrderWeight::new(0.5, 1.0, 0.01).unwrap(); 2];
    let w3 = vec![FirstOrderWeight::new(5.0, 10.0, 500.0).unwrap(); 2];
    WeightSet::new(w1, 0.05, w3).unwrap()
}

fn kernels(c: &mut Criterion) {
    let g = plant();
    let p = build_augmented(&g, &weights()).unwrap();
    let grid = make_grid(0.01, 100.0, 20).unwrap();
    let x = Mat::from_fn(6, 6, |i, j| if i == j { -1.0 - i as f64 } else { 0.1 * (i as f64 - j as f64) });
    let q = Mat::identity(6, 6);
    let m = CMat::from_fn(4, 4, |i, j| C64::new(0.3 * (i + 1) as f64, 0.1 * j as f64));

    c.bench_function("solve_care_6", |bch| bch.iter(|| solve_care(black_box(&x), &q, &q, &q).unwrap()));
    c.bench_function("hinf_norm_plant", |bch| bch.iter(|| hinf_norm(black_box(&g), 1e-6).unwrap()));
    c.bench_function("sigma_max_81", |bch| bch.iter(|| sigma_max(black_box(&g), &grid).unwrap()));
    c.bench_function("balanced_truncate_6_to_3", |bch| {
        let sys = StateSpace::new(x.clone(), Mat::from_element(6, 2, 1.0), Mat::from_element(2, 6, 0.5), Mat::zeros(2, 2)).unwrap();
        bch.iter(|| balanced_truncate(black_box(&sys), 3).unwrap())
    });
    c.bench_function("hinfsyn_mixed_sensitivity", |bch| bch.iter(|| hinfsyn(black_box(&p), 4, 2, 1e-3).unwrap()));
    c.bench_function("mu_upper_4x4", |bch| bch.iter(|| mu_upper(black_box(&m), &[1, 1, 1, 1]).unwrap()));
    c.bench_function("margins", |bch| bch.iter(|| margins(black_box(1.1226)).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
