//! Reproduction-error figures of merit.
//!
//! The error between an implemented measurement and a target is the Haar average of the
//! squared deviation of outcome statistics (POVM form) or of unnormalized post-measurement
//! states in Frobenius norm (instrument form), averaged over the `m` outcomes, then rooted.
//! Closed forms follow from `∫dψ |ψ⟩⟨ψ|^{⊗2} = 2Π_sym/(d(d+1))`; the Monte Carlo estimators
//! sample that integral directly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{haar_state, ComplexMatrix, Instrument, Povm, Rng};

/// Monte Carlo estimators refuse fewer samples than this.
pub const MIN_SAMPLES: usize = 100;
const CHUNK: usize = 4096;

/// An RMS error value. Closed-form estimates carry `standard_error = 0` and `sample_count = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsEstimate {
    /// `ε`
    pub value: f64,
    /// Standard error of `ε`, mapped from that of `ε²` by the delta method.
    pub standard_error: f64,
    /// Estimated `ε²`.
    pub mean_square: f64,
    pub mean_square_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl RmsEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            standard_error: 0.0,
            mean_square: value * value,
            mean_square_error: 0.0,
            sample_count: 0,
            seed: 0,
        }
    }

    /// `|value − reference| ≤ k·σ`.
    pub fn within_sigmas(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.standard_error
    }
}

/// Qubit closed form `ε² = ⅓[(1−x−y)² + (1−x)y + |z|²]` with `x = ⟨0|M₀|0⟩`,
/// `y = ⟨1|M₀|1⟩`, `z = ⟨0|M₀|1⟩` for a two-outcome implemented measurement.
pub fn rms_closed_form_qubit(x: f64, y: f64, z: Complex64) -> f64 {
    let value = ((1.0 - x - y).powi(2) + (1.0 - x) * y + z.norm_sqr()) / 3.0;
    value.max(0.0).sqrt()
}

fn qudit_bracket_sum(table: &[Vec<f64>], d: usize) -> f64 {
    table
        .iter()
        .enumerate()
        .map(|(a, row)| {
            let sum: f64 = row.iter().sum();
            let squares: f64 = row.iter().map(|x| x * x).sum();
            if a < d {
                (sum - 1.0).powi(2) + squares - 2.0 * row[a] + 1.0
            } else {
                sum * sum + squares
            }
        })
        .sum()
}

fn check_table(table: &[Vec<f64>], d: usize, m: usize) -> Result<()> {
    if table.len() != m || table.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch(format!(
            "expected an {m}x{d} table of x_ai values"
        )));
    }
    Ok(())
}

/// Qudit closed form for a diagonal implemented measurement `x_ai = ⟨i|Mₐ|i⟩` against the
/// `d`-outcome computational-basis measurement:
/// `ε² = 1/(m·d(d+1)) Σₐ [(Σᵢx_ai − 1)² + Σᵢx_ai² − 2x_aa + 1]`.
///
/// The `1/m` outcome average makes `d = m = 2` coincide with [`rms_closed_form_qubit`].
pub fn rms_closed_form_qudit(table: &[Vec<f64>], d: usize, m: usize) -> Result<f64> {
    check_table(table, d, m)?;
    let value = qudit_bracket_sum(table, d) / (m as f64 * (d * (d + 1)) as f64);
    Ok(value.max(0.0).sqrt())
}

/// Same bracket with prefactor `1/(d(d+1))`, i.e. without the outcome average.
pub fn rms_closed_form_qudit_unaveraged(table: &[Vec<f64>], d: usize, m: usize) -> Result<f64> {
    check_table(table, d, m)?;
    let value = qudit_bracket_sum(table, d) / (d * (d + 1)) as f64;
    Ok(value.max(0.0).sqrt())
}

fn check_pair(implemented: &Povm, target: &Povm) -> Result<()> {
    if implemented.dim() != target.dim() || implemented.outcomes() != target.outcomes() {
        return Err(Error::ShapeMismatch(format!(
            "implemented POVM ({} outcomes, dim {}) and target ({} outcomes, dim {}) differ in shape",
            implemented.outcomes(),
            implemented.dim(),
            target.outcomes(),
            target.dim()
        )));
    }
    Ok(())
}

/// Exact RMS error between two POVMs through the symmetric-subspace identity:
/// `ε² = 1/(m·d(d+1)) Σₐ [tr(Dₐ)² + tr(Dₐ²)]`, `Dₐ = Mₐ − Tₐ`.
pub fn rms_exact_povm(implemented: &Povm, target: &Povm) -> Result<f64> {
    check_pair(implemented, target)?;
    let d = implemented.dim() as f64;
    let m = implemented.outcomes() as f64;
    let total: f64 = implemented
        .elements()
        .iter()
        .zip(target.elements())
        .map(|(a, b)| {
            let diff = a - b;
            let tr = diff.trace().re;
            let tr2 = (&diff * &diff).trace().re;
            tr * tr + tr2
        })
        .sum();
    Ok((total / (m * d * (d + 1.0))).max(0.0).sqrt())
}

/// SWAP on two copies of `C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (c / d, c % d);
        Complex64::new(if i == l && j == k { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Projector `(I + SWAP)/2` onto the symmetric subspace of two qudits.
pub fn symmetric_subspace_projector(d: usize) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    (&ComplexMatrix::identity(d * d) + &swap_operator(d)).scale_real(0.5)
}

/// `∫dψ |ψ⟩⟨ψ|^{⊗2}`
pub fn haar_second_moment(d: usize) -> ComplexMatrix {
    symmetric_subspace_projector(d).scale_real(2.0 / (d * (d + 1)) as f64)
}

/// Runs `per_sample` over `samples` Haar states in fixed-size chunks, each on its own
/// substream, and reduces the chunk sums in chunk order.
fn haar_mean<F>(dim: usize, samples: usize, rng: &Rng, per_sample: F) -> (f64, f64)
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let base = rng.substream() << 32;
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = rng.fork(base + c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..count {
                let psi = haar_state(dim, &mut local);
                let s = per_sample(psi.amplitudes());
                sum += s;
                sum2 += s * s;
            }
            (sum, sum2)
        })
        .collect();
    partial
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1))
}

fn estimate_from_sums(sum: f64, sum2: f64, samples: usize, seed: u64) -> RmsEstimate {
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let se_ms = (var / n).sqrt();
    let value = mean.max(0.0).sqrt();
    let standard_error = if value > 0.0 { se_ms / (2.0 * value) } else { 0.0 };
    RmsEstimate {
        value,
        standard_error,
        mean_square: mean,
        mean_square_error: se_ms,
        sample_count: samples,
        seed,
    }
}

/// Haar Monte Carlo estimate of the POVM-form RMS error.
pub fn rms_monte_carlo_povm(
    implemented: &Povm,
    target: &Povm,
    samples: usize,
    rng: &Rng,
) -> Result<RmsEstimate> {
    check_pair(implemented, target)?;
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples,
            min: MIN_SAMPLES,
        });
    }
    let diffs: Vec<ComplexMatrix> = implemented
        .elements()
        .iter()
        .zip(target.elements())
        .map(|(a, b)| a - b)
        .collect();
    let m = diffs.len() as f64;
    let (sum, sum2) = haar_mean(implemented.dim(), samples, rng, |psi| {
        diffs
            .iter()
            .map(|d| {
                let p = d.expectation(psi).expect("dimensions checked");
                p * p
            })
            .sum::<f64>()
            / m
    });
    Ok(estimate_from_sums(sum, sum2, samples, rng.seed()))
}

/// Haar Monte Carlo estimate of the instrument-form RMS error
/// `∫dψ (1/m) Σᵢ ‖Λᵢ(ψψ†) − Γᵢ(ψψ†)‖_F²`, outcomes aligned by index.
pub fn rms_monte_carlo_instrument(
    implemented: &Instrument,
    target: &Instrument,
    samples: usize,
    rng: &Rng,
) -> Result<RmsEstimate> {
    if implemented.dim_in() != target.dim_in()
        || implemented.dim_out() != target.dim_out()
        || implemented.outcomes() != target.outcomes()
    {
        return Err(Error::ShapeMismatch(
            "instruments differ in dimensions or outcome count".into(),
        ));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples,
            min: MIN_SAMPLES,
        });
    }
    let m = implemented.outcomes();
    let (sum, sum2) = haar_mean(implemented.dim_in(), samples, rng, |psi| {
        let rho = ComplexMatrix::projector(psi);
        (0..m)
            .map(|i| {
                let a = implemented.subchannel(i, &rho).expect("dimensions checked");
                let b = target.subchannel(i, &rho).expect("dimensions checked");
                a.distance(&b).powi(2)
            })
            .sum::<f64>()
            / m as f64
    });
    Ok(estimate_from_sums(sum, sum2, samples, rng.seed()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{hermitian_eig, named, random, tensor};

    const Z0: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn qubit_closed_form_values() {
        assert!((rms_closed_form_qubit(8.0 / 9.0, 1.0 / 18.0, Z0) - 1.0 / 18.0).abs() < 1e-15);
        assert_eq!(rms_closed_form_qubit(1.0, 0.0, Z0), 0.0);
        let cloning = 1.0 / (9.0 * 3f64.sqrt());
        assert!((rms_closed_form_qubit(8.0 / 9.0, 0.0, Z0) - cloning).abs() < 1e-15);
    }

    #[test]
    fn qudit_closed_form_values() {
        let t = vec![vec![8.0 / 9.0, 1.0 / 18.0], vec![1.0 / 9.0, 17.0 / 18.0]];
        assert!((rms_closed_form_qudit(&t, 2, 2).unwrap() - 1.0 / 18.0).abs() < 1e-15);
        let delta = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(rms_closed_form_qudit(&delta, 3, 3).unwrap().abs() < 1e-15);
        let half = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!((rms_closed_form_qudit(&half, 2, 2).unwrap() - 1.0 / 12f64.sqrt()).abs() < 1e-15);
        // the unaveraged normalization differs by √m
        let un = rms_closed_form_qudit_unaveraged(&half, 2, 2).unwrap();
        assert!((un - 2f64.sqrt() / 12f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn qudit_matches_qubit_on_random_pairs() {
        let mut rng = Rng::new(17, 0);
        for _ in 0..1000 {
            let (x, y) = (rng.uniform(), rng.uniform());
            let t = vec![vec![x, y], vec![1.0 - x, 1.0 - y]];
            let a = rms_closed_form_qudit(&t, 2, 2).unwrap();
            let b = rms_closed_form_qubit(x, y, Z0);
            assert!((a - b).abs() < 1e-14, "{x} {y}: {a} vs {b}");
        }
    }

    #[test]
    fn exact_povm_form_matches_qubit_form_with_coherence() {
        let z = Complex64::new(0.05, -0.02);
        let m0 = ComplexMatrix::new(2, 2, vec![Complex64::new(0.7, 0.0), z, z.conj(), Complex64::new(0.2, 0.0)]).unwrap();
        let m1 = &ComplexMatrix::identity(2) - &m0;
        let implemented = Povm::new(vec![m0, m1]).unwrap();
        let e = rms_exact_povm(&implemented, &named::von_neumann(2)).unwrap();
        assert!((e - rms_closed_form_qubit(0.7, 0.2, z)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_projector_properties() {
        for d in 1..=4 {
            let p = symmetric_subspace_projector(d);
            assert!((p.trace().re - (d * (d + 1)) as f64 / 2.0).abs() < 1e-14);
            assert_eq!(&p * &p, p);
            assert!(p.is_hermitian());
        }
        assert!((symmetric_subspace_projector(2).trace().re - 3.0).abs() < 1e-15);
        assert!((symmetric_subspace_projector(3).trace().re - 6.0).abs() < 1e-15);
    }

    #[test]
    fn second_moment_matches_exact_haar_integral_formula() {
        // tr[(A⊗B) ∫ψψ⊗ψψ] = (trA trB + tr AB)/(d(d+1)) for any A, B
        let mut rng = Rng::new(4, 0);
        let a = random::random_density(3, &mut rng);
        let b = random::random_density(3, &mut rng);
        let lhs = tensor(&a, &b).unwrap().matmul(&haar_second_moment(3)).unwrap().trace().re;
        let rhs = (a.trace().re * b.trace().re + (&a * &b).trace().re) / 12.0;
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn identical_measurements_have_zero_error() {
        let rng = Rng::new(1, 0);
        let t = named::trine();
        let est = rms_monte_carlo_povm(&t, &t, 1000, &rng).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.standard_error, 0.0);
        let inst = Instrument::luders(&t).unwrap();
        let est = rms_monte_carlo_instrument(&inst, &inst, 500, &rng).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let t = named::trine();
        let err = rms_monte_carlo_povm(&t, &t, 99, &Rng::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { got: 99, .. }));
    }

    #[test]
    fn cloning_protocol_monte_carlo() {
        let m0 = ComplexMatrix::from_diag(&[8.0 / 9.0, 0.0]);
        let m1 = ComplexMatrix::from_diag(&[1.0 / 9.0, 1.0]);
        let implemented = Povm::new(vec![m0, m1]).unwrap();
        let est = rms_monte_carlo_povm(&implemented, &named::von_neumann(2), 100_000, &Rng::new(3, 0)).unwrap();
        assert!(est.within_sigmas(1.0 / (9.0 * 3f64.sqrt()), 3.0), "{est:?}");
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form_on_random_diagonal_povms() {
        let mut rng = Rng::new(21, 0);
        for k in 0..50 {
            let p = random::random_diagonal_povm(2, 2, &mut rng);
            let (x, y) = (p.element(0)[(0, 0)].re, p.element(0)[(1, 1)].re);
            let exact = rms_closed_form_qubit(x, y, Z0);
            let est = rms_monte_carlo_povm(&p, &named::von_neumann(2), 100_000, &Rng::new(100 + k, 0)).unwrap();
            assert!(est.within_sigmas(exact, 3.0) || (est.value - exact).abs() < 1e-12, "{k}: {est:?} vs {exact}");
        }
    }

    #[test]
    fn monte_carlo_is_unitarily_invariant() {
        let mut rng = Rng::new(8, 0);
        let p = random::random_povm(3, 3, &mut rng).unwrap();
        let t = named::von_neumann(3);
        let u = random::random_unitary(3, &mut rng);
        let a = rms_monte_carlo_povm(&p, &t, 50_000, &Rng::new(9, 0)).unwrap();
        let b = rms_monte_carlo_povm(&p.conjugated(&u).unwrap(), &t.conjugated(&u).unwrap(), 50_000, &Rng::new(10, 0)).unwrap();
        let sigma = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * sigma, "{a:?} vs {b:?}");
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let t = named::trine();
        let v = named::von_neumann(2);
        let t2 = Povm::new_unchecked(vec![t.element(0).clone(), &t.element(1).clone() + t.element(2)]);
        let a = rms_monte_carlo_povm(&t2, &v, 10_000, &Rng::new(5, 2)).unwrap();
        let b = rms_monte_carlo_povm(&t2, &v, 10_000, &Rng::new(5, 2)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
    }

    #[test]
    fn luders_trine_vs_von_neumann_instrument_is_stable_across_seeds() {
        let trine = named::trine();
        let coarse = Povm::new(vec![trine.element(0).clone(), &trine.element(1).clone() + trine.element(2)]).unwrap();
        let luders = Instrument::luders(&coarse).unwrap();
        let vn = Instrument::von_neumann(2);
        let a = rms_monte_carlo_instrument(&luders, &vn, 20_000, &Rng::new(1, 0)).unwrap();
        let b = rms_monte_carlo_instrument(&luders, &vn, 20_000, &Rng::new(2, 0)).unwrap();
        assert!(a.value > 0.0 && b.value > 0.0);
        let sigma = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * sigma);
        // sanity: the spectrum of the coarse element is what the protocol relies on
        assert!((hermitian_eig(coarse.element(0)).unwrap().max() - 2.0 / 3.0).abs() < 1e-14);
    }
}
