use ndarray::{Array1, Array2};
use proptest::prelude::*;

use compens::ensemble::{train, EnsembleModel, TrainConfig};
use compens::hypotheses::Solver;
use compens::losses::{make_loss, LossKind};
use compens::projections::{sample_projection, ProjectionFamily};
use compens::riskbounds::{
    ensemble_bound_bracket, estimate_compressibility, estimate_excess_risk, finite_ensemble_psi_bound, psi_quantile,
    rho_star, slawski_ratio, spectral_design, PsiConfig,
};
use compens::seeding;
use compens::synthdist::{
    assouad_n0, build_assouad_family, check_membership, chi_square, chi_square_adjacent_bound, labels_for_loss,
    random_binary_finite, random_regression_finite, AssouadDist, DistributionSpec, Law, MembershipConstants,
    RegressionDist, RegressionNoise,
};

fn total_mass(law: &dyn Law) -> f64 {
    law.atoms().unwrap().map(|a| a.prob).sum()
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assouad_members_are_valid(
        gamma in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, 4.0]),
        rho in prop::sample::select(vec![1.0, 2.0, 3.0, 4.0]),
        alpha in prop::sample::select(vec![0.0, 0.25, 0.5]),
        factor in 1.0f64..8.0,
        seed in any::<u64>(),
    ) {
        let n = (assouad_n0(gamma, rho, alpha).unwrap() * factor).ceil() as u64;
        let p = build_assouad_family(n, gamma, rho, alpha).unwrap();
        prop_assert!(check_membership(&p, &MembershipConstants::construction(gamma, rho, alpha)).all());
        let base = AssouadDist::random_sigma(p, seed).unwrap();
        let mass = compensated_sum((0..=p.q).map(|l| base.mass(l)));
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        let l = (seed % p.q as u64) as usize;
        let chi = chi_square(&base.flipped(l).unwrap(), &base).unwrap();
        prop_assert!(chi <= chi_square_adjacent_bound(&p));
        prop_assert!(chi_square_adjacent_bound(&p) == 16.0 * p.epsilon * p.epsilon * p.v / p.q as f64);
    }

    #[test]
    fn finite_laws_are_normalised(atoms in 1usize..40, d in 1usize..5, seed in any::<u64>()) {
        prop_assert!((total_mass(&random_binary_finite(atoms, d, seed).unwrap()) - 1.0).abs() <= 1e-12);
        prop_assert!((total_mass(&random_regression_finite(atoms, d, 3, 1.0, seed).unwrap()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bracket_is_monotone(
        n in 1.0f64..1e7,
        k in 1usize..64,
        m in 1usize..64,
        delta in 0.001f64..0.5,
        alpha in 0.0f64..=1.0,
        psi in 0.0f64..1.0,
    ) {
        let total = |n: f64, k: usize, m: usize, delta: f64| ensemble_bound_bracket(n, k, m, delta, alpha, psi).unwrap().total;
        let base = total(n, k, m, delta);
        prop_assert!(total(2.0 * n, k, m, delta) <= base);
        prop_assert!(total(n, k, m + 1, delta) <= base);
        prop_assert!(total(n, k + 1, m, delta) >= base);
        prop_assert!(total(n, k, m, 0.5 * delta) >= base);
    }

    #[test]
    fn rho_star_is_a_fixed_point(
        n in 10.0f64..1e8,
        k in 1.0f64..100.0,
        c_cn in 1.0f64..10.0,
        lip in 0.1f64..5.0,
        beta in 0.5f64..4.0,
    ) {
        prop_assert!(rho_star(n, k, c_cn, lip, beta).unwrap().residual <= 1e-9);
    }

    #[test]
    fn slawski_residual_shrinks_with_nested_sketches(k in 6usize..20, seed in any::<u64>()) {
        let x = spectral_design(24, 30, 0.6, seed).unwrap();
        let w: Array1<f64> = (0..24).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let small = sample_projection::<f64>(ProjectionFamily::Gaussian, k, 24, seed ^ 1).unwrap();
        let large = sample_projection::<f64>(ProjectionFamily::Gaussian, k + 4, 24, seed ^ 1).unwrap();
        let a = slawski_ratio(x.view(), w.view(), &small, 4).unwrap();
        let b = slawski_ratio(x.view(), w.view(), &large, 4).unwrap();
        prop_assert!(b.lhs <= a.lhs + 1e-9 * (1.0 + a.lhs));
    }

    #[test]
    fn ensemble_outputs_stay_in_range(seed in any::<u64>(), m in 1usize..6, beta in 0.5f64..2.0) {
        let law = random_regression_finite(16, 5, 2, beta, seed).unwrap();
        let loss = make_loss::<f64>(LossKind::Squared, beta).unwrap();
        let (x, y) = law.sample(64, seed).unwrap();
        let cfg = TrainConfig { regression_iters: 50, ..TrainConfig::new(ProjectionFamily::Gaussian, 2, m, Solver::Surrogate, seed) };
        let model = train(x.view(), y.view(), &loss, &cfg).unwrap();
        let probe = Array2::from_shape_fn((32, 5), |(i, j)| ((i * 5 + j) as f64 * 0.37).sin() * 10.0);
        let pred = model.predict(probe.view()).unwrap();
        prop_assert!(pred.iter().all(|v| v.abs() <= beta));

        let mut members: Vec<_> = model.members().iter().map(|mb| (mb.projection.clone(), mb.hypothesis.clone())).collect();
        members.reverse();
        let reversed = EnsembleModel::from_members(members, loss, seed).unwrap();
        let again = reversed.predict(probe.view()).unwrap();
        prop_assert!(pred.iter().zip(&again).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs())));
    }

    #[test]
    fn psi_is_sandwiched(seed in any::<u64>(), k in 1usize..3) {
        let law = random_binary_finite(10, 4, seed).unwrap();
        for kind in [LossKind::ZeroOne, LossKind::Kl] {
            let loss = make_loss::<f64>(kind, 1.0).unwrap();
            let mut cfg = PsiConfig::new(ProjectionFamily::Gaussian, k, 100, seed);
            cfg.reps = 4;
            let est = estimate_compressibility(&law, &loss, &cfg).unwrap();
            prop_assert!(est.value >= 0.0 && est.value <= loss.b + 3.0 * est.std_error);
        }
    }
}

#[test]
fn finite_ensemble_bound_dominates_quantile() {
    let loss = make_loss::<f64>(LossKind::ZeroOne, 1.0).unwrap();
    for seed in 0..3u64 {
        let law = random_binary_finite(10, 4, seed).unwrap();
        let mut cfg = PsiConfig::new(ProjectionFamily::Gaussian, 1, 100, seed);
        cfg.reps = 200;
        let psi = estimate_compressibility(&law, &loss, &cfg).unwrap().value;
        for delta in [0.1, 0.05] {
            let m = 5;
            let q = psi_quantile(&law, &loss, &cfg, m, delta, 500).unwrap();
            let bound = finite_ensemble_psi_bound(psi, loss.b, m, delta).unwrap();
            assert!(q <= bound, "seed {seed}, delta {delta}: quantile {q} above bound {bound}");
        }
    }
}

#[test]
fn noiseless_regression_is_well_specified() {
    let d = 12;
    let w = Array1::from_shape_fn(d, |i| if i % 2 == 0 { 0.3 } else { -0.2 });
    let dist = RegressionDist::new(2.0, 0.4, w, 0.1, 1.0, 1.0, RegressionNoise::None).unwrap();
    let spectrum = dist.spectrum();
    for (r, l) in spectrum.iter().enumerate() {
        assert!(*l <= 2.0 * 0.4f64.powi(r as i32 + 1) * (1.0 + 1e-12));
    }
    let loss = make_loss::<f64>(LossKind::Squared, 1.0).unwrap();
    let e = estimate_excess_risk(
        |x| Ok(x.outer_iter().map(|row| dist.reference_predict(row)).collect()),
        &dist,
        &loss,
        20_000,
        3,
    )
    .unwrap();
    assert_eq!(e.value, 0.0);
    let (x, y) = dist.sample(500, 4).unwrap();
    for (row, yi) in x.outer_iter().zip(&y) {
        assert_eq!(dist.reference_predict(row), *yi);
    }
}

#[test]
fn spec_built_laws_train_end_to_end() {
    let spec = DistributionSpec::from_toml_str(
        "variant = \"gauss_margin\"\nd = 6\ngamma = 2.0\nrho = 2.0\nalpha = 0.5\n",
    )
    .unwrap();
    let law = spec.build().unwrap();
    for kind in [LossKind::ZeroOne, LossKind::Kl, LossKind::Squared] {
        let loss = make_loss::<f64>(kind, 1.0).unwrap();
        let (x, y) = law.sample(400, seeding::child_seed(1, 0)).unwrap();
        let y = labels_for_loss(law.label_kind(), &loss, &y).unwrap();
        let cfg = TrainConfig::new(ProjectionFamily::Rademacher, 3, 4, Solver::Surrogate, 9);
        let model = train(x.view(), y.view(), &loss, &cfg).unwrap();
        let risks = model.member_excess_risks(law.as_ref(), 20_000, 5).unwrap();
        let ens = risks.last().unwrap();
        assert!(ens.value >= -3.0 * ens.std_error && ens.value < 0.5, "{kind:?}: {ens:?}");
    }
}
