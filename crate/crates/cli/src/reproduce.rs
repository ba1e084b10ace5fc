//! Recomputes the published constants and checks each one.

use measrepro::coding::associated_channel;
use measrepro::qcore::{
    haar_state, hermitian_eig, named, tensor, Complex64, ComplexMatrix, Povm, Rng, StateVector,
};
use measrepro::rms::{rms_exact_povm, rms_monte_carlo_povm};
use measrepro::subroutines::{cloning_error_rate, select_cloning_basis, ErrorRateMode};
use measrepro::vnsynth::{
    build_partition_povm, construct_states, contains_outcome_map, exhaustive_search, implemented_povm,
    noisy_z_optimal, solve_box_quadratic_qubit, spectral_bounds, NoisyZRegion, StatePrep,
};

use crate::report::{Row, Tolerance};

/// Closed-form rows.
pub const EXACT_TOL: f64 = 1e-10;
/// Monte Carlo rows.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub samples: usize,
    pub max_n: usize,
    /// Replaces the built-in trine everywhere it is used.
    pub trine: Povm,
}

impl ReproduceOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            samples: 1_000_000,
            max_n: 6,
            trine: named::trine(),
        }
    }
}

type Block = measrepro::Result<Vec<Row>>;
type Section = (&'static str, fn(&ReproduceOptions) -> Block);

fn abs(name: impl Into<String>, value: f64, expected: f64) -> Row {
    Row::value(name, value).check(expected, Tolerance::Absolute(EXACT_TOL))
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `|00⟩, |11⟩` on two copies: the classical-cloning preparation.
fn cloning_prep() -> measrepro::Result<StatePrep> {
    Ok(StatePrep {
        uses: 2,
        ancilla_qubits: 0,
        measured_dim: 4,
        states: vec![StateVector::basis(4, 0), StateVector::basis(4, 3)],
    })
}

fn simple_protocol(o: &ReproduceOptions) -> Block {
    let protocol = build_partition_povm(&o.trine, 2, &contains_outcome_map(3, 2, 0), 2)?;
    let m = implemented_povm(&cloning_prep()?, &protocol)?;
    let vn = named::von_neumann(2);
    let target = 1.0 / (9.0 * 3f64.sqrt());
    let exact = rms_exact_povm(&m, &vn)?;
    let mc = rms_monte_carlo_povm(&m, &vn, o.samples, &Rng::new(o.seed, 1))?;
    let m0 = m.element(0);
    Ok(vec![
        abs("simple_two_use_epsilon", exact, target),
        Row::value("simple_two_use_epsilon_mc", mc.value)
            .with_error(mc.standard_error)
            .note(format!("{} Haar samples", mc.sample_count))
            .check(target, Tolerance::Sigma(MC_SIGMAS)),
        abs("simple_two_use_M0[0,0]", m0[(0, 0)].re, 8.0 / 9.0),
        abs("simple_two_use_M0[1,1]", m0[(1, 1)].re, 0.0),
        abs("simple_two_use_M0[0,1]", m0[(0, 1)].norm(), 0.0),
    ])
}

fn two_use_optimum(o: &ReproduceOptions) -> Block {
    let r = exhaustive_search(&o.trine, 2)?;
    let q0 = build_partition_povm(&o.trine, 2, &contains_outcome_map(3, 2, 0), 2)?;
    let eig = hermitian_eig(q0.coarse_element(0))?;
    let mut rows = vec![
        abs("optimal_two_use_epsilon", r.solution.epsilon, 1.0 / 18.0),
        abs("optimal_two_use_x", r.solution.x, 8.0 / 9.0),
        abs("optimal_two_use_y", r.solution.y, 1.0 / 18.0),
        Row::value("optimal_two_use_partitions", (2 * r.evaluated) as f64)
            .note(format!("{} canonical, {} co-optimal", r.evaluated, r.co_optimal.len())),
    ];
    for (k, (v, e)) in eig.values.iter().zip([8.0 / 9.0, 2.0 / 3.0, 2.0 / 3.0, 0.0]).enumerate() {
        rows.push(abs(format!("Q0_two_use_eigenvalue_{k}"), *v, e));
    }
    Ok(rows)
}

fn n_use_optimum(o: &ReproduceOptions) -> Block {
    let mut rows = Vec::new();
    for n in 1..=o.max_n {
        let protocol = build_partition_povm(&o.trine, n, &contains_outcome_map(3, n, 0), 2)?;
        let (lo, hi) = spectral_bounds(protocol.coarse_element(0))?;
        let s = solve_box_quadratic_qubit(lo, hi)?;
        let third = 3f64.powi(-(n as i32));
        rows.push(abs(format!("optimal_epsilon_N{n}"), s.epsilon, 0.5 * third));
        rows.push(abs(format!("lambda_max_N{n}"), hi, 1.0 - third));
    }
    Ok(rows)
}

fn single_use(o: &ReproduceOptions) -> Block {
    let searched = exhaustive_search(&o.trine, 1)?;
    // outcome 0 ↦ 0, the rest ↦ 1; the search may return a co-optimal relabeling instead
    let protocol = build_partition_povm(&o.trine, 1, &[0, 1, 1], 2)?;
    let (lo, hi) = spectral_bounds(protocol.coarse_element(0))?;
    let s = solve_box_quadratic_qubit(lo, hi)?;
    let prep = construct_states(&protocol, &[s.x, s.y])?;
    let m = implemented_povm(&prep, &protocol)?;
    let m0 = m.element(0);
    let naive = build_partition_povm(&o.trine, 1, &[0, 1, 1], 2)?.coarse_povm();
    Ok(vec![
        abs("optimal_single_use_epsilon", searched.solution.epsilon, 1.0 / 6.0),
        abs("optimal_single_use_M0[0,0]", m0[(0, 0)].re, 2.0 / 3.0),
        abs("optimal_single_use_M0[1,1]", m0[(1, 1)].re, 1.0 / 6.0),
        abs("optimal_single_use_M0[0,1]", m0[(0, 1)].norm(), 0.0),
        Row::value("optimal_single_use_ancilla_qubits", prep.ancilla_qubits as f64),
        abs("naive_single_use_epsilon", rms_exact_povm(&naive, &named::von_neumann(2))?, 1.0 / (3.0 * 3f64.sqrt())),
    ])
}

fn noisy_z_rows() -> Block {
    let mut rows = Vec::new();
    for (p, q) in [(0.95, 0.7), (0.7, 0.95), (0.8, 0.75)] {
        let (params, synth) = noisy_z_optimal(p, q)?;
        let m = implemented_povm(&synth.prep, &synth.protocol)?;
        let tag = format!("p={p},q={q}");
        let (eps, x, y) = match params.region {
            NoisyZRegion::HighP => ((1.0 - q) / 2.0, (1.0 + q) / 2.0, 1.0 - q),
            NoisyZRegion::HighQ => ((1.0 - p) / 2.0, p, (1.0 - p) / 2.0),
            NoisyZRegion::Middle => (((q - p).powi(2) + (1.0 - p) * (1.0 - q)).sqrt() / 3f64.sqrt(), p, 1.0 - q),
        };
        rows.push(abs(format!("noisy_z_epsilon[{tag}]"), synth.solution.epsilon, eps).note(params.region.name()));
        rows.push(abs(format!("noisy_z_implemented_x[{tag}]"), m.element(0)[(0, 0)].re, x));
        rows.push(abs(format!("noisy_z_implemented_y[{tag}]"), m.element(0)[(1, 1)].re, y));
        let gamma = match params.region {
            NoisyZRegion::HighP => ((3.0 * q - 1.0) / (2.0 * (p + q - 1.0))).sqrt(),
            NoisyZRegion::HighQ => ((3.0 * p - 1.0) / (2.0 * (p + q - 1.0))).sqrt(),
            NoisyZRegion::Middle => 1.0,
        };
        rows.push(abs(format!("noisy_z_gamma[{tag}]"), params.gamma, gamma));
    }
    let expected_regions = [(0.95, 0.7, NoisyZRegion::HighP), (0.7, 0.95, NoisyZRegion::HighQ), (0.8, 0.75, NoisyZRegion::Middle)];
    for (p, q, want) in expected_regions {
        let ok = NoisyZRegion::classify(p, q) == want;
        rows.push(abs(format!("noisy_z_region[p={p},q={q}]"), f64::from(u8::from(ok)), 1.0).note(want.name()));
    }
    // crossing each boundary switches region
    for q in [0.6, 0.7, 0.9] {
        let b = (1.0 + q) / 2.0;
        let ok = NoisyZRegion::classify(b + 1e-9, q) == NoisyZRegion::HighP
            && NoisyZRegion::classify(b - 1e-9, q) == NoisyZRegion::Middle
            && NoisyZRegion::classify(q, b + 1e-9) == NoisyZRegion::HighQ
            && NoisyZRegion::classify(q, b - 1e-9) == NoisyZRegion::Middle;
        rows.push(abs(format!("noisy_z_boundary[{q}]"), f64::from(u8::from(ok)), 1.0).note("p=(1+q)/2 and q=(1+p)/2"));
    }
    Ok(rows)
}

fn trine_table(o: &ReproduceOptions) -> Block {
    let ch = associated_channel(&o.trine, None)?;
    let expect = [[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [0.0, 0.5, 0.5]];
    let mut rows = Vec::new();
    for (i, row) in expect.iter().enumerate() {
        for (a, &e) in row.iter().enumerate() {
            let v = ch.rows().get(i).and_then(|r| r.get(a)).copied().unwrap_or(f64::NAN);
            rows.push(abs(format!("trine_P({a}|{i})"), v, e));
        }
    }
    let basis = select_cloning_basis(&o.trine)?;
    let n1 = cloning_error_rate(&basis, 1, ErrorRateMode::Exact, &Rng::new(o.seed, 2))?;
    rows.push(abs("cloning_error_N1_state0", n1.per_state[0], 1.0 / 3.0));
    rows.push(abs("cloning_error_N1_state1", n1.per_state.get(1).copied().unwrap_or(f64::NAN), 0.0));
    for n in 1..=o.max_n {
        let e = cloning_error_rate(&basis, n, ErrorRateMode::Exact, &Rng::new(o.seed, 2))?.average;
        rows.push(abs(format!("cloning_average_error_N{n}"), e, 0.5 * 3f64.powi(-(n as i32))));
    }
    Ok(rows)
}

/// Joint statistics of two trine uses on `α|00⟩ + β|11⟩` against the closed form.
fn joint_probabilities(o: &ReproduceOptions) -> Block {
    let mut rng = Rng::new(o.seed, 3);
    let t = &o.trine;
    let mut rows = Vec::new();
    for k in 0..10 {
        let psi = haar_state(2, &mut rng);
        let (alpha, beta) = (psi.amplitudes()[0], psi.amplitudes()[1]);
        let big = [alpha, c(0.0), c(0.0), beta];
        let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
        let cross = 2.0 * (alpha * beta.conj()).re;
        let formula = |a1: usize, a2_: usize| -> f64 {
            match (a1, a2_) {
                (0, 0) => 4.0 / 9.0 * a2,
                (0, _) | (_, 0) => a2 / 9.0,
                (x, y) if x == y => 1.0 / 36.0 + 2.0 / 9.0 * b2 + cross / 12.0,
                _ => 1.0 / 36.0 + 2.0 / 9.0 * b2 - cross / 12.0,
            }
        };
        let mut worst: f64 = 0.0;
        for a1 in 0..3 {
            for a2_ in 0..3 {
                let op: ComplexMatrix = tensor(t.element(a1), t.element(a2_))?;
                worst = worst.max((op.expectation(&big)? - formula(a1, a2_)).abs());
            }
        }
        rows.push(
            abs(format!("joint_probability_max_deviation_{k}"), worst, 0.0)
                .note(format!("alpha={:.6}{:+.6}i beta={:.6}{:+.6}i", alpha.re, alpha.im, beta.re, beta.im)),
        );
    }
    Ok(rows)
}

/// Every row, in a fixed order. Sections that cannot be computed contribute one FAIL row.
pub fn reproduce_rows(o: &ReproduceOptions) -> Vec<Row> {
    let sections: [Section; 7] = [
        ("simple_two_use", simple_protocol),
        ("optimal_two_use", two_use_optimum),
        ("optimal_n_use", n_use_optimum),
        ("single_use", single_use),
        ("noisy_z", |_| noisy_z_rows()),
        ("trine_table", trine_table),
        ("joint_probabilities", joint_probabilities),
    ];
    sections
        .iter()
        .flat_map(|(name, f)| match f(o) {
            Ok(rows) => rows,
            Err(e) => vec![Row::failed(*name, e.to_string())],
        })
        .collect()
}
