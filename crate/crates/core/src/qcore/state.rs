use num_complex::Complex64;

use super::matrix::{tensor_vec, ComplexMatrix};
use super::rng::Rng;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state has squared norm {norm2}, expected 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amplitudes: tensor_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    /// `|ψ⟩⟨ψ|`
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.amplitudes)
    }
}

/// Haar-random pure state: i.i.d. complex Gaussians, normalized.
pub fn haar_state(dim: usize, rng: &mut Rng) -> StateVector {
    assert!(dim >= 1, "Haar state needs dimension at least 1");
    loop {
        let amps: Vec<Complex64> = (0..dim).map(|_| rng.complex_gaussian()).collect();
        if let Ok(s) = StateVector::normalized(amps) {
            return s;
        }
    }
}
