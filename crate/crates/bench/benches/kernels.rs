use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use zeno_core::ensemble::{ginibre, random_hermitian, random_projection, random_state, seeded_rng};
use zeno_core::fit::linspace;
use zeno_core::gibbs::{gibbs_state, kms_report};
use zeno_core::operator::expm;
use zeno_core::spectral::{classify_regime, default_x_grid, lln_mc, LlnParams};
use zeno_core::survival::DecayProfile;
use zeno_core::zeno::zeno_convergence_report;
use zeno_core::{SpectralMeasure, ZenoSchedule, C64};

fn operators(c: &mut Criterion) {
    let mut rng = seeded_rng(1, 0);
    for dim in [8, 64] {
        let m = ginibre(dim, &mut rng) * C64::new(0.5, 0.0);
        c.bench_function(&format!("expm/{dim}"), |b| b.iter(|| expm(black_box(&m)).unwrap()));
    }
}

fn zeno(c: &mut Criterion) {
    let mut rng = seeded_rng(2, 0);
    let h = random_hermitian(8, 1.0, &mut rng).unwrap();
    let e = random_projection(8, 3, &mut rng).unwrap();
    let schedule = ZenoSchedule::default_at(1.0);
    c.bench_function("zeno_convergence_report/8", |b| {
        b.iter(|| zeno_convergence_report(black_box(&h), &e, &schedule).unwrap())
    });
}

fn survival(c: &mut Criterion) {
    let mut rng = seeded_rng(3, 0);
    let h = random_hermitian(201, 2.0, &mut rng).unwrap();
    let psi = random_state(201, &mut rng);
    let times = linspace(0.1, 100.0, 1000);
    c.bench_function("decay_profile/201x1000", |b| {
        b.iter(|| DecayProfile::sample(black_box(&h), &psi, &times).unwrap())
    });
}

fn thermal(c: &mut Criterion) {
    let mut rng = seeded_rng(4, 0);
    let h = random_hermitian(4, 1.0, &mut rng).unwrap();
    let pairs: Vec<_> = (0..100).map(|_| (ginibre(4, &mut rng), ginibre(4, &mut rng))).collect();
    let state = gibbs_state(&h, 1.0).unwrap();
    let times = linspace(-2.0, 2.0, 9);
    c.bench_function("kms_report/4x100", |b| b.iter(|| kms_report(&state, &h, black_box(&pairs), &times, 1.0).unwrap()));
}

fn spectral(c: &mut Criterion) {
    let pareto = SpectralMeasure::pareto(0.5, 1.0).unwrap();
    let grid = default_x_grid();
    c.bench_function("classify_regime/pareto", |b| b.iter(|| classify_regime(black_box(&pareto), &grid).unwrap()));
    let params = LlnParams { epsilon: 0.1, c: 10.0 };
    c.bench_function("lln_mc/pareto_1000x100", |b| {
        b.iter(|| lln_mc(black_box(&pareto), &[100], 1000, 1, params).unwrap())
    });
}

criterion_group!(benches, operators, zeno, survival, thermal, spectral);
criterion_main!(benches);
