//! Cyclic Jacobi eigensolver for dense Hermitian matrices.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;
/// Inputs further than this (relative) from Hermitian are rejected.
const INPUT_HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are considered tied when ordering.
const TIE_TOL: f64 = 1e-12;

/// Eigen-decomposition `M = V Λ V†` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, aligned with `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }

    /// `V f(Λ) V†`
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.vectors[(j, k)].conj() * fv[k])
                .sum()
        })
    }
}

/// Diagonalize a Hermitian matrix.
///
/// Eigenvalues come back in descending order. Each eigenvector is phase-fixed so its
/// first non-negligible entry is real and positive; tied eigenvalues are ordered by
/// ascending lexicographic comparison of their eigenvector entries.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Err(Error::ShapeMismatch("empty matrix".into()));
    }
    let norm = m.frobenius_norm();
    let defect = m.hermiticity_defect();
    if defect > INPUT_HERMITIAN_TOL * norm.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }

    let mut a: Vec<Complex64> = m.hermitian_part().data().to_vec();
    let mut v: Vec<Complex64> = ComplexMatrix::identity(n).data().to_vec();
    let scale = norm.max(1.0);
    let threshold = OFF_DIAGONAL_TOL * scale;

    let mut converged = false;
    let mut residual = off_diagonal_norm(&a, n);
    for _ in 0..MAX_SWEEPS {
        if residual <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q, scale);
            }
        }
        residual = off_diagonal_norm(&a, n);
    }
    if !converged && residual > threshold {
        return Err(Error::EigenNotConverged {
            sweeps: MAX_SWEEPS,
            residual,
        });
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<Complex64> = (0..n).map(|i| v[i * n + k]).collect();
            fix_phase(&mut col);
            (a[k * n + k].re, col)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));

    // order each run of tied eigenvalues lexicographically
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end - 1].0 - pairs[end].0).abs() <= TIE_TOL * scale {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lexicographic(&x.1, &y.1));
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm(a: &[Complex64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize, scale: f64) {
    let b = a[p * n + q];
    let g = b.norm();
    if g <= 1e-30 * scale {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    // phase e = exp(-i arg b) turns the 2x2 block real symmetric
    let e = b.conj() / g;
    let theta = 0.5 * (2.0 * g).atan2(aqq - app);
    let (s, c) = theta.sin_cos();

    // A <- A G, V <- V G with G = [[c, s], [-s e, c e]] on (p, q)
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * c - akq * e * s;
        a[k * n + q] = akp * s + akq * e * c;
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * c - vkq * e * s;
        v[k * n + q] = vkp * s + vkq * e * c;
    }
    // A <- G† A
    let ec = e.conj();
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = apk * c - aqk * ec * s;
        a[q * n + k] = apk * s + aqk * ec * c;
    }
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;
}

fn fix_phase(col: &mut [Complex64]) {
    let biggest = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = col.iter().find(|z| z.norm() > 1e-8 * biggest.max(1e-300)).copied() {
        let phase = z.conj() / z.norm();
        for x in col.iter_mut() {
            *x *= phase;
        }
    }
}

fn lexicographic(x: &[Complex64], y: &[Complex64]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        for (u, w) in [(a.re, b.re), (a.im, b.im)] {
            if (u - w).abs() > 1e-10 {
                return u.total_cmp(&w);
            }
        }
    }
    Ordering::Equal
}

/// Principal square root of a positive semidefinite matrix; small negative
/// eigenvalues from rounding are clamped to zero.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(m)?.map_values(|x| x.max(0.0).sqrt()))
}
