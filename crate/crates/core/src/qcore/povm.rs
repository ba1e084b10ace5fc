use std::fmt;

use super::eig::hermitian_eig;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Smallest eigenvalue allowed for an element before it counts as non-positive.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Frobenius tolerance on `Σₐ Mₐ − I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Frobenius distance to `(tr M / d) I` below which an element counts as proportional to the identity.
pub const TRIVIALITY_TOL: f64 = 1e-10;

/// Ordered list of positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

/// A single failed POVM condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape { outcome: usize, rows: usize, cols: usize },
    NotHermitian { outcome: usize, defect: f64 },
    Positivity { outcome: usize, min_eigenvalue: f64 },
    Completeness { defect: f64 },
    Empty,
}

/// Outcome of [`validate_povm`]: defect norms plus the list of violated conditions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PovmReport {
    /// `max(0, −min eigenvalue)` over all elements.
    pub positivity_defect: f64,
    /// `‖Σₐ Mₐ − I‖_F`
    pub completeness_defect: f64,
    pub violations: Vec<Violation>,
}

impl PovmReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PovmReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::Shape { outcome, rows, cols } => {
                    format!("element {outcome} has shape {rows}x{cols}")
                }
                Violation::NotHermitian { outcome, defect } => {
                    format!("element {outcome} not Hermitian (defect {defect:.3e})")
                }
                Violation::Positivity { outcome, min_eigenvalue } => {
                    format!("element {outcome} has eigenvalue {min_eigenvalue:.6e}")
                }
                Violation::Completeness { defect } => {
                    format!("elements do not sum to identity (Frobenius defect {defect:.6e})")
                }
                Violation::Empty => "no elements".to_string(),
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks positivity and completeness of a candidate element list. Never fails; problems
/// are reported as structured violations.
pub fn validate_elements(dim: usize, elements: &[ComplexMatrix]) -> PovmReport {
    let mut report = PovmReport::default();
    if elements.is_empty() {
        report.violations.push(Violation::Empty);
        return report;
    }
    let mut sum = ComplexMatrix::zeros(dim, dim);
    let mut shapes_ok = true;
    for (a, m) in elements.iter().enumerate() {
        if m.rows() != dim || m.cols() != dim {
            report.violations.push(Violation::Shape {
                outcome: a,
                rows: m.rows(),
                cols: m.cols(),
            });
            shapes_ok = false;
            continue;
        }
        sum = &sum + m;
        match hermitian_eig(m) {
            Ok(eig) => {
                let lo = eig.min();
                if lo < -POSITIVITY_TOL {
                    report.positivity_defect = report.positivity_defect.max(-lo);
                    report.violations.push(Violation::Positivity {
                        outcome: a,
                        min_eigenvalue: lo,
                    });
                }
            }
            Err(_) => report.violations.push(Violation::NotHermitian {
                outcome: a,
                defect: m.hermiticity_defect(),
            }),
        }
    }
    if shapes_ok {
        report.completeness_defect = sum.distance(&ComplexMatrix::identity(dim));
        if report.completeness_defect > COMPLETENESS_TOL {
            report.violations.push(Violation::Completeness {
                defect: report.completeness_defect,
            });
        }
    }
    report
}

impl Povm {
    /// Validated construction.
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = elements.first().map_or(0, ComplexMatrix::rows);
        let report = validate_elements(dim, &elements);
        if !report.is_ok() {
            return Err(Error::InvalidPovm(report));
        }
        Ok(Self { dim, elements })
    }

    /// Skips validation. Intended for tests and negative controls.
    pub fn new_unchecked(elements: Vec<ComplexMatrix>) -> Self {
        let dim = elements.first().map_or(0, ComplexMatrix::rows);
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, a: usize) -> &ComplexMatrix {
        &self.elements[a]
    }

    /// `tr(Mₐ ρ)` for every outcome.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|m| Ok(m.matmul(rho)?.trace().re))
            .collect()
    }

    /// `⟨ψ|Mₐ|ψ⟩` for every outcome.
    pub fn probabilities_pure(&self, psi: &[num_complex::Complex64]) -> Result<Vec<f64>> {
        self.elements.iter().map(|m| m.expectation(psi)).collect()
    }

    /// True when every element is proportional to the identity.
    pub fn is_trivial(&self) -> bool {
        self.elements.iter().all(is_proportional_to_identity)
    }

    /// Conjugate every element: `Mₐ ↦ U Mₐ U†`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let ud = u.adjoint();
        let elements = self
            .elements
            .iter()
            .map(|m| u.matmul(m)?.matmul(&ud))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            elements,
        })
    }
}

pub fn is_proportional_to_identity(m: &ComplexMatrix) -> bool {
    let d = m.rows();
    let mean = m.trace() / d as f64;
    m.distance(&ComplexMatrix::identity(d).scale(mean)) <= TRIVIALITY_TOL
}

/// Structured validation of an existing POVM.
pub fn validate_povm(p: &Povm) -> PovmReport {
    validate_elements(p.dim, &p.elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::named;

    #[test]
    fn trine_is_valid() {
        assert!(validate_povm(&named::trine()).is_ok());
    }

    #[test]
    fn incomplete_pair_reports_completeness_defect() {
        let p = Povm::new_unchecked(vec![
            ComplexMatrix::identity(2).scale_real(0.5),
            ComplexMatrix::identity(2).scale_real(1.0 / 3.0),
        ]);
        let report = validate_povm(&p);
        let expect = 2f64.sqrt() / 6.0;
        assert!((report.completeness_defect - expect).abs() < 1e-15);
        assert!(matches!(report.violations[..], [Violation::Completeness { .. }]));
    }

    #[test]
    fn negative_eigenvalue_reports_positivity() {
        let p = Povm::new_unchecked(vec![
            ComplexMatrix::from_diag(&[1.1, 0.5]),
            ComplexMatrix::from_diag(&[-0.1, 0.5]),
        ]);
        let report = validate_povm(&p);
        assert!((report.positivity_defect - 0.1).abs() < 1e-14);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Positivity { outcome: 1, .. })));
        assert!(Povm::new(p.elements().to_vec()).is_err());
    }

    #[test]
    fn triviality_predicate() {
        assert!(named::trivial(2, 2).is_trivial());
        assert!(!named::trine().is_trivial());
        assert!(!named::degenerate_qutrit().is_trivial());
    }
}
