use super::eig::sqrt_psd;
use super::matrix::ComplexMatrix;
use super::povm::{Povm, COMPLETENESS_TOL};
use crate::error::{Error, Result};

/// Probabilities below this are treated as zero; no post-measurement state exists.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Quantum instrument given by Kraus operators `Kᵢᵃ` for each outcome `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<Vec<ComplexMatrix>>,
}

impl Instrument {
    /// Validated construction: consistent shapes and `Σ_{i,a} Kᵢᵃ†Kᵢᵃ = I`.
    pub fn new(kraus: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let inst = Self::new_unchecked(kraus)?;
        let defect = inst.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::NotNormalized(defect));
        }
        // the induced POVM is positive by construction; run the full check anyway
        Povm::new(inst.induced_elements())?;
        Ok(inst)
    }

    /// Shape checks only; normalization is not enforced.
    pub fn new_unchecked(kraus: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let first = kraus
            .iter()
            .flatten()
            .next()
            .ok_or_else(|| Error::ShapeMismatch("instrument has no Kraus operators".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if kraus.iter().any(Vec::is_empty) {
            return Err(Error::ShapeMismatch(
                "every outcome needs at least one Kraus operator".into(),
            ));
        }
        if let Some(k) = kraus
            .iter()
            .flatten()
            .find(|k| k.rows() != dim_out || k.cols() != dim_in)
        {
            return Err(Error::ShapeMismatch(format!(
                "Kraus operator of shape {}x{} in a {dim_out}x{dim_in} instrument",
                k.rows(),
                k.cols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    /// Lüders instrument: one Kraus operator `√Mₐ` per outcome.
    pub fn luders(povm: &Povm) -> Result<Self> {
        let kraus = povm
            .elements()
            .iter()
            .map(|m| Ok(vec![sqrt_psd(m)?]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kraus)
    }

    /// Projective measurement in the computational basis.
    pub fn von_neumann(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut diag = vec![0.0; d];
                diag[i] = 1.0;
                vec![ComplexMatrix::from_diag(&diag)]
            })
            .collect();
        Self {
            dim_in: d,
            dim_out: d,
            kraus,
        }
    }

    /// Single-outcome identity channel.
    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![vec![ComplexMatrix::identity(d)]],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn outcomes(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self, a: usize) -> &[ComplexMatrix] {
        &self.kraus[a]
    }

    pub fn all_kraus(&self) -> &[Vec<ComplexMatrix>] {
        &self.kraus
    }

    /// Largest number of Kraus operators attached to one outcome.
    pub fn max_kraus_rank(&self) -> usize {
        self.kraus.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn induced_elements(&self) -> Vec<ComplexMatrix> {
        self.kraus
            .iter()
            .map(|ks| {
                ks.iter().fold(ComplexMatrix::zeros(self.dim_in, self.dim_in), |acc, k| {
                    &acc + &(&k.adjoint() * k)
                })
            })
            .collect()
    }

    /// `‖Σ_{i,a} Kᵢᵃ†Kᵢᵃ − I‖_F`
    pub fn completeness_defect(&self) -> f64 {
        let total = self
            .induced_elements()
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_in, self.dim_in), |acc, m| &acc + m);
        total.distance(&ComplexMatrix::identity(self.dim_in))
    }

    /// Unnormalized `Λₐ(ρ) = Σᵢ Kᵢᵃ ρ Kᵢᵃ†`.
    pub fn subchannel(&self, a: usize, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim_in || rho.cols() != self.dim_in {
            return Err(Error::ShapeMismatch(format!(
                "state of shape {}x{} for an instrument on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim_in
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus[a] {
            out = &out + &k.matmul(rho)?.matmul(&k.adjoint())?;
        }
        Ok(out)
    }

    /// Outcome probability `tr Λₐ(ρ)` and normalized post-measurement state.
    pub fn apply_subchannel(&self, a: usize, rho: &ComplexMatrix) -> Result<(f64, ComplexMatrix)> {
        let out = self.subchannel(a, rho)?;
        let prob = out.trace().re;
        if prob < ZERO_PROBABILITY {
            return Err(Error::ZeroProbabilityOutcome {
                outcome: a,
                probability: prob,
            });
        }
        Ok((prob, out.scale_real(1.0 / prob)))
    }
}

/// POVM of an instrument: `Mₐ = Σᵢ Kᵢᵃ†Kᵢᵃ`.
pub fn induced_povm(inst: &Instrument) -> Povm {
    Povm::new_unchecked(inst.induced_elements())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{named, validate_povm, StateVector};
    use num_complex::Complex64;

    #[test]
    fn luders_trine_induces_trine() {
        let trine = named::trine();
        let inst = Instrument::luders(&trine).unwrap();
        let induced = induced_povm(&inst);
        for (a, b) in induced.elements().iter().zip(trine.elements()) {
            assert!(a.distance(b) < 1e-12);
        }
    }

    #[test]
    fn identity_instrument_induces_identity() {
        let induced = induced_povm(&Instrument::identity(3));
        assert_eq!(induced.outcomes(), 1);
        assert!(induced.element(0).distance(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn two_kraus_on_one_outcome_sum_their_grams() {
        let s = 0.5f64.sqrt();
        let k1 = ComplexMatrix::from_real(2, 2, &[s, 0.0, 0.0, 0.0]).unwrap();
        let k2 = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, s, 0.0]).unwrap();
        let k3 = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        let inst = Instrument::new(vec![vec![k1.clone(), k2.clone()], vec![k3]]).unwrap();
        let m0 = induced_povm(&inst).element(0).clone();
        let gram = &(&k1.adjoint() * &k1) + &(&k2.adjoint() * &k2);
        assert!(m0.distance(&gram) < 1e-15);
        assert!(validate_povm(&induced_povm(&inst)).is_ok());
    }

    #[test]
    fn rejects_unnormalized() {
        let k = ComplexMatrix::identity(2).scale_real(0.9);
        assert!(matches!(Instrument::new(vec![vec![k]]), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn luders_trine_on_zero() {
        let inst = Instrument::luders(&named::trine()).unwrap();
        let rho = StateVector::basis(2, 0).density();
        let (p, post) = inst.apply_subchannel(0, &rho).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-14);
        assert!(post.distance(&rho) < 1e-12);
    }

    #[test]
    fn identity_instrument_leaves_state() {
        let s = 0.6;
        let psi = StateVector::new(vec![Complex64::new(s, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let (p, post) = Instrument::identity(2).apply_subchannel(0, &psi.density()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(post.distance(&psi.density()) < 1e-15);
    }

    #[test]
    fn von_neumann_on_plus_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[s, s]).unwrap();
        let (p, post) = Instrument::von_neumann(2).apply_subchannel(0, &plus.density()).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(post.distance(&StateVector::basis(2, 0).density()) < 1e-15);
    }

    #[test]
    fn zero_probability_outcome_is_an_error() {
        let rho = StateVector::basis(2, 1).density();
        let err = Instrument::von_neumann(2).apply_subchannel(0, &rho).unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityOutcome { outcome: 0, .. }));
    }
}
