//! Random operators for tests and Monte Carlo checks.

use num_complex::Complex64;

use super::instrument::Instrument;
use super::matrix::ComplexMatrix;
use super::povm::Povm;
use super::rng::Rng;
use crate::error::Result;

/// Random isometry `rows × cols` (`rows ≥ cols`) from Gram–Schmidt on Gaussian columns.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v: Vec<Complex64> = (0..rows).map(|_| rng.complex_gaussian()).collect();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for u in &columns {
                let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= overlap * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            columns.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_columns(&columns).expect("columns share a length")
}

pub fn random_unitary(d: usize, rng: &mut Rng) -> ComplexMatrix {
    random_isometry(d, d, rng)
}

/// Random full-rank density matrix `GG†/tr(GG†)`.
pub fn random_density(d: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).hermitian_part()
}

/// Random instrument on dimension `d` with `kraus_counts[a]` Kraus operators for outcome `a`,
/// cut from the blocks of a random isometry.
pub fn random_instrument(d: usize, kraus_counts: &[usize], rng: &mut Rng) -> Result<Instrument> {
    let total: usize = kraus_counts.iter().sum();
    let w = random_isometry(d * total, d, rng);
    let mut block = 0;
    let kraus = kraus_counts
        .iter()
        .map(|&count| {
            (0..count)
                .map(|_| {
                    let k = ComplexMatrix::from_fn(d, d, |i, j| w[(block * d + i, j)]);
                    block += 1;
                    k
                })
                .collect()
        })
        .collect();
    Instrument::new(kraus)
}

/// Random `m`-outcome POVM on dimension `d` (induced by a random instrument).
pub fn random_povm(d: usize, m: usize, rng: &mut Rng) -> Result<Povm> {
    let inst = random_instrument(d, &vec![1; m], rng)?;
    Povm::new(super::instrument::induced_povm(&inst).elements().to_vec())
}

/// Random POVM whose elements are all diagonal in the computational basis.
pub fn random_diagonal_povm(d: usize, m: usize, rng: &mut Rng) -> Povm {
    let mut diags = vec![vec![0.0; d]; m];
    for i in 0..d {
        let w: Vec<f64> = (0..m).map(|_| -rng.uniform().max(1e-300).ln()).collect();
        let total: f64 = w.iter().sum();
        for a in 0..m {
            diags[a][i] = w[a] / total;
        }
    }
    Povm::new_unchecked(diags.iter().map(|d| ComplexMatrix::from_diag(d)).collect())
}
