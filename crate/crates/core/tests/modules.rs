//! Catalog, file formats and dichotomy checks through the public API.

use proptest::prelude::*;
use semigroup_lab::catalog::{build, resolve_source, standard_catalog, CatalogSpec, Family};
use semigroup_lab::dichotomy::{
    check_dichotomy, persistence_margin, semigroup_difference_bound, yosida_distance, DichotomyVerdict,
};
use semigroup_lab::hille_yosida::certify_growth_envelope;
use semigroup_lab::matrix_io::{parse_matrix, render_matrix, save_matrix, MatrixFormat};
use semigroup_lab::operator::norm2;
use semigroup_lab::perturbation::default_mu_grid;
use semigroup_lab::suite::{dichotomous_matrix, draw_rng, random_with_norm};
use semigroup_lab::{LinearOperator, ScalarGrid};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Zero),
        Just(Family::TransportShift),
        Just(Family::HeatLaplacian),
        Just(Family::RandomStable),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn catalog_uri_round_trips(f in family(), dim in 1usize..12, seed in any::<u64>()) {
        let spec = CatalogSpec::new(f, dim, Vec::new(), seed);
        let parsed: CatalogSpec = spec.to_uri().parse().unwrap();
        prop_assert_eq!(&parsed, &spec);
        let a = build(&spec).unwrap();
        prop_assert_eq!(a.dim(), dim);
        let uri = spec.to_uri();
        prop_assert_eq!(a.label(), Some(uri.as_str()));
        prop_assert_eq!(build(&parsed).unwrap(), a);
    }

    #[test]
    fn matrix_files_round_trip(dim in 1usize..6, seed in any::<u64>(), complex in any::<bool>()) {
        let re = build(&CatalogSpec::new(Family::RandomStable, dim, vec![0.5], seed)).unwrap();
        let a = if complex {
            &re + &build(&CatalogSpec::new(Family::RandomStable, dim, vec![0.5], seed ^ 1))
                .unwrap()
                .scale(num_complex::Complex64::i())
        } else {
            re
        };
        for format in [MatrixFormat::MatrixMarket, MatrixFormat::Csv] {
            let text = render_matrix(&a, format);
            let back = parse_matrix(&text, format).unwrap();
            prop_assert_eq!(back.matrix(), a.matrix());
            prop_assert_eq!(render_matrix(&back, format), text);
        }
    }
}

#[test]
fn standard_catalog_is_seed_stable() {
    let first = standard_catalog(&[2, 5], 7);
    let second = standard_catalog(&[2, 5], 7);
    assert_eq!(first, second);
    for spec in &first {
        assert_eq!(build(spec).unwrap(), build(spec).unwrap(), "{spec}");
    }
}

#[test]
fn catalog_prefix_wins_over_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    save_matrix(&LinearOperator::diagonal(&[1.0, 2.0]), &path, MatrixFormat::MatrixMarket).unwrap();
    let from_file = resolve_source(path.to_str().unwrap(), None).unwrap();
    assert_eq!(from_file, LinearOperator::diagonal(&[1.0, 2.0]));
    let from_catalog = resolve_source("catalog:zero:3", Some(MatrixFormat::Csv)).unwrap();
    assert!(from_catalog.is_zero() && from_catalog.dim() == 3);
    assert!(resolve_source("catalog:nonesuch:3", None).is_err());
}

#[test]
fn yosida_distance_recovers_operator_norm() {
    for seed in 0..10 {
        let mut rng = draw_rng(99, 0, seed);
        let a = random_with_norm(&mut rng, 5, 2.0);
        let b = random_with_norm(&mut rng, 5, 0.5);
        let est = yosida_distance(&a, &b).unwrap();
        assert!(est.convergence_flag);
        assert!((est.value - norm2(&(a.matrix() - b.matrix()))).abs() <= 1e-6 * est.oracle);
    }
}

#[test]
fn random_dichotomies_satisfy_projection_laws() {
    for seed in 0..8 {
        let mut rng = draw_rng(5, 1, seed);
        let a = dichotomous_matrix(&mut rng, 5).unwrap();
        let d = check_dichotomy(&a).unwrap();
        assert_eq!(d.has_dichotomy, DichotomyVerdict::Yes);
        let p = d.projection.unwrap();
        let p2 = &p * &p;
        assert!(norm2(&(p2.matrix() - p.matrix())) <= 1e-8 * (1.0 + p.norm().powi(2)));
        let stable = a.spectrum().unwrap().eigenvalues.iter().filter(|z| z.re < 0.0).count();
        assert_eq!(d.stable_dim, stable);
    }
}

#[test]
fn difference_bound_holds_on_jordan_pair() {
    let a = LinearOperator::from_real_rows(2, &[-1.0, 10.0, 0.0, -1.0]).unwrap();
    let env = certify_growth_envelope(&a, 0.0).unwrap();
    let c1 = LinearOperator::diagonal(&[0.1, -0.2]);
    let c2 = LinearOperator::from_real_rows(2, &[0.1, 0.05, 0.0, -0.2]).unwrap();
    let t = ScalarGrid::linear(0.1, 5.0, 50).unwrap();
    let b = semigroup_difference_bound(&a, &c1, &c2, &env, 0.1, &t).unwrap();
    assert!(b.status.is_ok(), "slack {}", b.min_slack);
    for s in &b.samples {
        assert!(s.lhs <= s.bound + s.abs_tol);
    }
    assert!(semigroup_difference_bound(&a, &c1, &c2, &env, 0.01, &t).is_err());
}

#[test]
fn persistence_certificates_survive_the_spectrum_check() {
    let a = LinearOperator::diagonal(&[-1.0, -0.5, 1.0]);
    let env = certify_growth_envelope(&a, 1.1).unwrap();
    let grid = default_mu_grid(&a, 1.1, 32).unwrap();
    let zero = LinearOperator::zeros(3);
    let mut rng = draw_rng(3, 0, 0);
    let e = random_with_norm(&mut rng, 3, 1.0);
    let mut certified = 0;
    for s in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0] {
        let r = persistence_margin(&a, &zero, &e.scale_real(s), &env, &grid).unwrap();
        assert!(r.consistent, "s = {s}");
        if r.certified {
            certified += 1;
            assert_eq!(r.a_posteriori, DichotomyVerdict::Yes);
            assert_eq!(r.stable_dim_c2, 2);
        }
    }
    assert!(certified >= 2);
    let circle = LinearOperator::diagonal(&[-1.0, 0.0]);
    let env = certify_growth_envelope(&circle, 0.1).unwrap();
    let grid = default_mu_grid(&circle, 0.1, 16).unwrap();
    let two = LinearOperator::zeros(2);
    assert!(persistence_margin(&circle, &two, &two, &env, &grid).is_err());
}
