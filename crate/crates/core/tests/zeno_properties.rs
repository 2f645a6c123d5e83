use proptest::prelude::*;
use zeno_core::ensemble::{random_hermitian, random_projection, seeded_rng, zeno_case};
use zeno_core::operator::{evolve_real, identity, norm_unchecked};
use zeno_core::zeno::{
    azc_fit, default_tau_grid, reduced_dynamics, zeno_convergence_report, zeno_product, AzcFit, ProductOrdering,
    ZenoSchedule,
};
use zeno_core::{CMatrix, HermitianOperator, OrthogonalProjection};

fn off_block_norm(h: &HermitianOperator, e: &OrthogonalProjection) -> f64 {
    norm_unchecked(&(e.complement().matrix() * h.matrix() * e.matrix()))
}

#[test]
fn limit_is_a_degenerate_unitary_group() {
    for seed in 0..10 {
        let (h, e) = zeno_case(seed).unwrap();
        for (t, s) in [(0.3, 0.5), (1.0, -0.4), (2.0, 1.7)] {
            let w = |x| reduced_dynamics(&h, &e, x).unwrap();
            assert!(norm_unchecked(&(w(t + s) - w(t) * w(s))) < 1e-10);
            let wt = w(t);
            assert!(norm_unchecked(&(wt.adjoint() * &wt - e.matrix())) < 1e-10);
        }
        assert!(norm_unchecked(&(reduced_dynamics(&h, &e, 0.0).unwrap() - e.matrix())) < 1e-14);
    }
}

#[test]
fn report_target_is_the_reduced_dynamics() {
    let (h, e) = zeno_case(11).unwrap();
    let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.0)).unwrap();
    assert_eq!(report.target_matrix, reduced_dynamics(&h, &e, 1.0).unwrap());
    assert!(report.per_n.windows(2).all(|w| w[0].n < w[1].n));
    assert!(report.per_n.iter().all(|s| s.distance_to_limit >= 0.0 && s.cauchy_delta >= 0.0));
}

#[test]
fn every_random_projection_converges() {
    // a different projection per seed, all against bounded H
    for seed in 0..50u64 {
        let (h, e) = zeno_case(seed).unwrap();
        let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.0)).unwrap();
        let d4096 = report.distance_at(4096).unwrap();
        let d2048 = report.distance_at(2048).unwrap();
        assert!(d4096 < 1e-3, "seed {seed}: {d4096}");
        let ratio = d2048 / d4096;
        assert!((1.7..=2.3).contains(&ratio), "seed {seed}: ratio {ratio}");
        let exponent = report.fitted_rate_exponent().unwrap();
        assert!((exponent + 1.0).abs() < 0.05, "seed {seed}: exponent {exponent}");
    }
}

#[test]
fn brute_force_product_oracle() {
    let mut rng = seeded_rng(2024, 0);
    let h = random_hermitian(6, 1.0, &mut rng).unwrap();
    let e = random_projection(6, 3, &mut rng).unwrap();
    let oracle = zeno_product(&h, &e, 1.0, 1 << 16, ProductOrdering::Eue).unwrap();
    let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.0)).unwrap();
    // the oracle itself sits ~d(4096)/16 away from the limit
    let d4096 = norm_unchecked(&(zeno_product(&h, &e, 1.0, 4096, ProductOrdering::Eue).unwrap() - &oracle));
    let d2048 = norm_unchecked(&(zeno_product(&h, &e, 1.0, 2048, ProductOrdering::Eue).unwrap() - &oracle));
    assert!(d4096 < 1e-3);
    let ratio = d2048 / d4096;
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");
    assert!(norm_unchecked(&(&oracle - &report.target_matrix)) < 2.0 * d4096 / 16.0);
    assert!(report.target_residual < 1e-6);
}

#[test]
fn cauchy_estimate_holds_on_the_ensemble() {
    for seed in 0..50u64 {
        let (h, e) = zeno_case(seed).unwrap();
        let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.0)).unwrap();
        let fit = azc_fit(&h, &e, &default_tau_grid()).unwrap();
        let AzcFit::Fitted { constant, exponent } = fit else { panic!("seed {seed} is exactly Zeno") };
        assert!((0.98..=1.02).contains(&exponent), "seed {seed}: {exponent}");
        let level = off_block_norm(&h, &e);
        assert!((constant / level - 1.0).abs() < 0.02, "seed {seed}: {constant} vs {level}");
        let worst = report.per_n.iter().map(|s| s.n as f64 * s.cauchy_delta).fold(0.0, f64::max);
        assert!(worst <= 2.0 * fit.cauchy_constant(), "seed {seed}: {worst}");
    }
}

#[test]
fn orderings_share_the_limit() {
    let schedule = ZenoSchedule::powers_of_two(8, 12, 1.0, ProductOrdering::Eue);
    for seed in 0..50u64 {
        let (h, e) = zeno_case(seed).unwrap();
        let mut finals = Vec::new();
        for ordering in ProductOrdering::ALL {
            let report = zeno_convergence_report(&h, &e, &schedule.clone().with_ordering(ordering)).unwrap();
            let ratio = report.distance_at(2048).unwrap() / report.distance_at(4096).unwrap();
            assert!((1.7..=2.3).contains(&ratio), "seed {seed} {ordering:?}: {ratio}");
            finals.push(report);
        }
        let p = |n, o| zeno_product(&h, &e, 1.0, n, o).unwrap();
        let gap = |n| {
            let m: Vec<CMatrix> = ProductOrdering::ALL.iter().map(|&o| p(n, o)).collect();
            [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| norm_unchecked(&(&m[i] - &m[j]))).fold(0.0, f64::max)
        };
        let (g2048, g4096) = (gap(2048), gap(4096));
        assert!((1.7..=2.3).contains(&(g2048 / g4096)), "seed {seed}");
        if off_block_norm(&h, &e) >= 0.5 {
            let d = finals[0].distance_at(4096).unwrap();
            assert!(g4096 <= 5.0 * d, "seed {seed}: gap {g4096} vs {d}");
        }
    }
}

#[test]
fn identity_projection_is_plain_evolution() {
    let h = random_hermitian(5, 1.0, &mut seeded_rng(8, 0)).unwrap();
    let e = OrthogonalProjection::identity(5);
    let report = zeno_convergence_report(&h, &e, &ZenoSchedule::default_at(1.3)).unwrap();
    assert!(report.is_exact(), "{:?}", report.per_n);
    assert!(norm_unchecked(&(report.target_matrix - evolve_real(&h, 1.3))) < 1e-12);
    let zero = OrthogonalProjection::zero(5);
    assert!(norm_unchecked(&zeno_product(&h, &zero, 1.0, 7, ProductOrdering::Ue).unwrap()) == 0.0);
    assert!(norm_unchecked(&(reduced_dynamics(&h, &e, 0.0).unwrap() - identity(5))) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn products_are_contractions(seed in 0u64..10_000, n in 1u64..300, t in -3.0f64..3.0, o in 0usize..3) {
        let (h, e) = zeno_case(seed).unwrap();
        let f = zeno_product(&h, &e, t, n, ProductOrdering::ALL[o]).unwrap();
        prop_assert!(norm_unchecked(&f) <= 1.0 + 1e-10);
    }

    #[test]
    fn limit_preserves_range(seed in 0u64..10_000, t in -5.0f64..5.0) {
        let (h, e) = zeno_case(seed).unwrap();
        let w = reduced_dynamics(&h, &e, t).unwrap();
        prop_assert!(norm_unchecked(&(e.complement().matrix() * &w)) < 1e-10);
        prop_assert!(norm_unchecked(&(&w * e.complement().matrix())) < 1e-12);
    }
}
