//! Measurements that appear throughout the examples and tests.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::povm::Povm;
use crate::error::{Error, Result};

/// Trine POVM `Mₐ = (2/3)|φₐ⟩⟨φₐ|` with directions 120° apart in the x–z plane,
/// `|φ₀⟩ = |0⟩`, `|φ₁,₂⟩ = (|0⟩ ± √3|1⟩)/2`.
pub fn trine() -> Povm {
    let s3 = 3f64.sqrt();
    let dirs = [[1.0, 0.0], [0.5, s3 / 2.0], [0.5, -s3 / 2.0]];
    let elements = dirs
        .iter()
        .map(|d| {
            let v = [Complex64::new(d[0], 0.0), Complex64::new(d[1], 0.0)];
            ComplexMatrix::projector(&v).scale_real(2.0 / 3.0)
        })
        .collect();
    Povm::new_unchecked(elements)
}

/// Asymmetric noisy Z measurement: `N₀ = p|0⟩⟨0| + (1−q)|1⟩⟨1|`, `N₁ = I − N₀`.
pub fn noisy_z(p: f64, q: f64) -> Result<Povm> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidBounds(format!(
            "noisy-Z parameters must lie in [0, 1], got p={p}, q={q}"
        )));
    }
    Ok(Povm::new_unchecked(vec![
        ComplexMatrix::from_diag(&[p, 1.0 - q]),
        ComplexMatrix::from_diag(&[1.0 - p, q]),
    ]))
}

/// Projective measurement in the computational basis of dimension `d`.
pub fn von_neumann(d: usize) -> Povm {
    Povm::new_unchecked(
        (0..d)
            .map(|i| {
                let mut diag = vec![0.0; d];
                diag[i] = 1.0;
                ComplexMatrix::from_diag(&diag)
            })
            .collect(),
    )
}

/// Qutrit measurement `{|0⟩⟨0|, |1⟩⟨1| + |2⟩⟨2|}`.
pub fn degenerate_qutrit() -> Povm {
    Povm::new_unchecked(vec![
        ComplexMatrix::from_diag(&[1.0, 0.0, 0.0]),
        ComplexMatrix::from_diag(&[0.0, 1.0, 1.0]),
    ])
}

/// `m` outcomes, each `I/m`.
pub fn trivial(d: usize, m: usize) -> Povm {
    Povm::new_unchecked(vec![ComplexMatrix::identity(d).scale_real(1.0 / m as f64); m])
}
