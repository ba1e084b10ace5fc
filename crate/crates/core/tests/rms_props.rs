use measrepro::qcore::{haar_state, named, random, Complex64, ComplexMatrix, Instrument, Povm, Rng};
use measrepro::rms::{
    haar_second_moment, rms_closed_form_qubit, rms_closed_form_qudit, rms_exact_povm, rms_monte_carlo_instrument,
    rms_monte_carlo_povm,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn qudit_form_reduces_to_qubit(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let table = vec![vec![x, y], vec![1.0 - x, 1.0 - y]];
        let a = rms_closed_form_qudit(&table, 2, 2).unwrap();
        let b = rms_closed_form_qubit(x, y, Complex64::new(0.0, 0.0));
        prop_assert!((a - b).abs() <= 1e-14);
    }

    #[test]
    fn exact_rms_matches_qubit_form(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let implemented = Povm::new(vec![
            ComplexMatrix::from_diag(&[x, y]),
            ComplexMatrix::from_diag(&[1.0 - x, 1.0 - y]),
        ]).unwrap();
        let e = rms_exact_povm(&implemented, &named::von_neumann(2)).unwrap();
        prop_assert!((e - rms_closed_form_qubit(x, y, Complex64::new(0.0, 0.0))).abs() <= 1e-12);
    }
}

#[test]
fn monte_carlo_matches_closed_form_on_diagonal_povms() {
    let mut rng = Rng::new(31, 0);
    let mut misses = 0;
    for k in 0..20 {
        let p = random::random_diagonal_povm(2, 2, &mut rng);
        let (x, y) = (p.elements()[0][(0, 0)].re, p.elements()[0][(1, 1)].re);
        let exact = rms_closed_form_qubit(x, y, Complex64::new(0.0, 0.0));
        let est = rms_monte_carlo_povm(&p, &named::von_neumann(2), 20_000, &Rng::new(31, k + 1)).unwrap();
        if !est.within_sigmas(exact, 3.0) {
            misses += 1;
        }
    }
    // 3σ misses occur with probability ≈ 0.003 each
    assert!(misses <= 1, "{misses} of 20 estimates outside 3σ");
}

#[test]
fn monte_carlo_is_deterministic() {
    let p = named::noisy_z(0.8, 0.7).unwrap();
    let a = rms_monte_carlo_povm(&p, &named::von_neumann(2), 5000, &Rng::new(4, 2)).unwrap();
    let b = rms_monte_carlo_povm(&p, &named::von_neumann(2), 5000, &Rng::new(4, 2)).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
}

#[test]
fn monte_carlo_is_unitarily_invariant() {
    let mut rng = Rng::new(5, 0);
    let implemented = random::random_povm(3, 3, &mut rng).unwrap();
    let target = named::von_neumann(3);
    let u = random::random_unitary(3, &mut rng);
    let a = rms_monte_carlo_povm(&implemented, &target, 40_000, &Rng::new(5, 1)).unwrap();
    let b = rms_monte_carlo_povm(
        &implemented.conjugated(&u).unwrap(),
        &target.conjugated(&u).unwrap(),
        40_000,
        &Rng::new(5, 2),
    )
    .unwrap();
    let sigma = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
    assert!((a.value - b.value).abs() <= 3.0 * sigma);
    let exact = rms_exact_povm(&implemented, &target).unwrap();
    assert!(a.within_sigmas(exact, 3.0));
}

#[test]
fn instrument_error_vanishes_for_identical_instruments() {
    let mut rng = Rng::new(6, 0);
    let inst = random::random_instrument(2, &[1, 2], &mut rng).unwrap();
    let est = rms_monte_carlo_instrument(&inst, &inst, 500, &Rng::new(6, 1)).unwrap();
    assert_eq!(est.value, 0.0);
    let other = Instrument::luders(&named::trine()).unwrap();
    assert!(rms_monte_carlo_instrument(&inst, &other, 500, &Rng::new(6, 1)).is_err());
}

#[test]
fn haar_second_moment_convergence() {
    for d in [2usize, 3] {
        let oracle = haar_second_moment(d);
        let mut devs = Vec::new();
        for &n in &[1_000usize, 10_000, 100_000] {
            let mut rng = Rng::new(100 + d as u64, n as u64);
            let mut acc = ComplexMatrix::zeros(d * d, d * d);
            for _ in 0..n {
                let psi = haar_state(d, &mut rng);
                let pp = psi.tensor(&psi);
                acc = &acc + &ComplexMatrix::projector(pp.amplitudes());
            }
            let dev = acc.scale_real(1.0 / n as f64).distance(&oracle);
            assert!(dev < 5.0 / (n as f64).sqrt(), "d={d} n={n} deviation {dev}");
            devs.push(dev);
        }
        assert!(devs[2] < devs[0]);
    }
}
