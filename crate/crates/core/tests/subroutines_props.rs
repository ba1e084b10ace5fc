use measrepro::qcore::{haar_state, named, random, Rng};
use measrepro::subroutines::{
    build_measurement_isometry, chernoff_information, cloning_error_rate, run_post_measurement, select_cloning_basis,
    CloningBasis, ErrorRateMode, DISTINCT_TV, ISOMETRY_TOL,
};
use measrepro::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sub_routine_reproduces_instrument(seed in any::<u64>(), d in 1usize..=3, counts in prop::collection::vec(1usize..=3, 1..=4)) {
        let mut rng = Rng::new(seed, 0);
        let inst = random::random_instrument(d, &counts, &mut rng).unwrap();
        let iso = build_measurement_isometry(&inst).unwrap();
        prop_assert!(iso.isometry_defect() <= ISOMETRY_TOL);
        let psi = haar_state(d, &mut rng);
        for b in run_post_measurement(&iso, &psi).unwrap() {
            let (p, post) = inst.apply_subchannel(b.outcome, &psi.density()).unwrap();
            prop_assert!((p - b.probability).abs() <= 1e-10);
            if let Some(state) = &b.state {
                prop_assert!(state.distance(&post) <= 1e-10);
            }
        }
    }

    #[test]
    fn cloning_basis_rows_are_distinct(seed in any::<u64>(), d in 2usize..=4, m in 2usize..=4) {
        let mut rng = Rng::new(seed, 1);
        let povm = random::random_povm(d, m, &mut rng).unwrap();
        match select_cloning_basis(&povm) {
            Ok(basis) => {
                prop_assert!(basis.min_row_distance() >= DISTINCT_TV);
                prop_assert!(basis.gram_defect() < 1e-10);
            }
            Err(Error::TrivialMeasurement) => prop_assert!(povm.is_trivial()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn random_povms_never_look_trivial() {
    let mut rng = Rng::new(2024, 0);
    for _ in 0..100 {
        let d = 2 + rng.below(3);
        let m = 2 + rng.below(3);
        let povm = random::random_povm(d, m, &mut rng).unwrap();
        let basis = select_cloning_basis(&povm).unwrap();
        assert!(basis.min_row_distance() >= DISTINCT_TV);
    }
    assert!(matches!(select_cloning_basis(&named::trivial(3, 2)), Err(Error::TrivialMeasurement)));
}

#[test]
fn trine_cloning_error_decreases() {
    let basis = select_cloning_basis(&named::trine()).unwrap();
    let rng = Rng::new(0, 0);
    let errors: Vec<f64> = (1..=10)
        .map(|n| cloning_error_rate(&basis, n, ErrorRateMode::Exact, &rng).unwrap().average)
        .collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0]));
    for (n, e) in errors.iter().enumerate() {
        assert!((e - 0.5 * 3f64.powi(-(n as i32 + 1))).abs() < 1e-14);
    }
}

#[test]
fn trine_error_exponent_approaches_chernoff() {
    let basis = select_cloning_basis(&named::trine()).unwrap();
    let xi = chernoff_information(&basis.table[0], &basis.table[1]).unwrap().value;
    let e = cloning_error_rate(&basis, 25, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap().average;
    let rate = -e.ln() / 25.0;
    assert!((rate - xi).abs() <= 0.2 * xi, "rate {rate} vs ξ {xi}");
}

#[test]
fn sampled_error_matches_exact() {
    let basis = CloningBasis::from_table(vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.3, 0.6]]);
    let exact = cloning_error_rate(&basis, 4, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap();
    let sampled = cloning_error_rate(&basis, 4, ErrorRateMode::Sampled { trials: 40_000 }, &Rng::new(3, 0)).unwrap();
    assert!((exact.average - sampled.average).abs() <= 4.0 * sampled.average_standard_error);
}
