//! Error minimization over the expectation values achievable with a coarse POVM.

use num_complex::Complex64;

use super::partition::PartitionProtocol;
use crate::error::{Error, Result};
use crate::qcore::{hermitian_eig, ComplexMatrix};
use crate::rms::rms_closed_form_qubit;

const BOUND_SLACK: f64 = 1e-12;

/// Which face of the box `[λ_min, λ_max]²` carries the qubit optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitRegion {
    /// `x = λ_max`, `y = (1−λ_max)/2` interior.
    RightEdge,
    /// `(λ_max, λ_min)`
    Corner,
    /// `y = λ_min`, `x = 1−λ_min/2` interior.
    BottomEdge,
    /// `λ_max < 1/3`: the right-edge stationary point lies above the box, optimum `(λ_max, λ_max)`.
    TopRightCorner,
    /// `λ_min > 2/3`: the bottom-edge stationary point lies left of the box, optimum `(λ_min, λ_min)`.
    BottomLeftCorner,
}

impl QubitRegion {
    pub fn name(self) -> &'static str {
        match self {
            Self::RightEdge => "right-edge",
            Self::Corner => "corner",
            Self::BottomEdge => "bottom-edge",
            Self::TopRightCorner => "top-right-corner",
            Self::BottomLeftCorner => "bottom-left-corner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxQuadSolution {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `⟨0|M₀|0⟩` of the implemented measurement.
    pub x: f64,
    /// `⟨1|M₀|1⟩` of the implemented measurement.
    pub y: f64,
    pub epsilon: f64,
    pub region: QubitRegion,
}

/// `(1−x−y)² + (1−x)y`, three times `ε²`.
pub fn qubit_objective(x: f64, y: f64) -> f64 {
    (1.0 - x - y).powi(2) + (1.0 - x) * y
}

/// Minimizes `ε² = ⅓[(1−x−y)² + (1−x)y]` over `λ_min ≤ x, y ≤ λ_max`.
///
/// The objective is strictly convex, so the optimum is the unique KKT point; the region tests
/// below select which face it sits on.
pub fn solve_box_quadratic_qubit(lambda_min: f64, lambda_max: f64) -> Result<BoxQuadSolution> {
    if !(lambda_min.is_finite() && lambda_max.is_finite())
        || lambda_min < 0.0
        || lambda_max > 1.0
        || lambda_min > lambda_max
    {
        return Err(Error::InvalidBounds(format!(
            "need 0 ≤ λ_min ≤ λ_max ≤ 1, got λ_min={lambda_min}, λ_max={lambda_max}"
        )));
    }
    let (lo, hi) = (lambda_min, lambda_max);
    let (x, y, region) = if hi <= 1.0 - 2.0 * lo {
        let y = (1.0 - hi) / 2.0;
        if y > hi {
            (hi, hi, QubitRegion::TopRightCorner)
        } else {
            (hi, y, QubitRegion::RightEdge)
        }
    } else if 1.0 - lo / 2.0 <= hi {
        let x = 1.0 - lo / 2.0;
        if x < lo {
            (lo, lo, QubitRegion::BottomLeftCorner)
        } else {
            (x, lo, QubitRegion::BottomEdge)
        }
    } else {
        (hi, lo, QubitRegion::Corner)
    };
    Ok(BoxQuadSolution {
        lambda_min: lo,
        lambda_max: hi,
        x,
        y,
        epsilon: rms_closed_form_qubit(x, y, Complex64::new(0.0, 0.0)),
        region,
    })
}

/// Extreme eigenvalues of a coarse element, clipped into `[0, 1]` and ordered against rounding.
pub fn spectral_bounds(q: &ComplexMatrix) -> Result<(f64, f64)> {
    let eig = hermitian_eig(q)?;
    let lo = eig.min().clamp(0.0, 1.0);
    let hi = eig.max().clamp(0.0, 1.0);
    Ok(if lo > hi { (hi, hi) } else { (lo, hi) })
}

/// Spectral bounds of `Q₀`.
pub fn qubit_bounds(protocol: &PartitionProtocol) -> Result<(f64, f64)> {
    spectral_bounds(protocol.coarse_element(0))
}

/// Box-and-column-sum quadratic program for a `d`-outcome von Neumann target reproduced by an
/// `m`-outcome coarse measurement: variables `x_ai = ⟨i|Mₐ|i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditQpProblem {
    pub d: usize,
    /// `(λᵃ_min, λᵃ_max)` per outcome `a`.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuditQpSolution {
    /// `table[a][i] = x_ai`
    pub table: Vec<Vec<f64>>,
    /// `ε` with the `1/(m·d(d+1))` normalization.
    pub epsilon: f64,
    /// `ε` with the `1/(d(d+1))` normalization.
    pub epsilon_unaveraged: f64,
    /// `L·‖x − P(x − ∇f/L)‖_∞`
    pub kkt_residual: f64,
    pub iterations: usize,
}

const QP_MAX_ITER: usize = 100_000;
const QP_STEP_TOL: f64 = 1e-15;
pub const QP_KKT_TOL: f64 = 1e-8;

impl QuditQpProblem {
    pub fn new(d: usize, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if d == 0 || bounds.len() < 2 {
            return Err(Error::InvalidArgument(
                "need d ≥ 1 and at least two outcomes".into(),
            ));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite()) || lo < -BOUND_SLACK || hi > 1.0 + BOUND_SLACK || lo > hi + BOUND_SLACK {
                return Err(Error::InvalidBounds(format!("bad outcome bounds ({lo}, {hi})")));
            }
        }
        let bounds = bounds
            .into_iter()
            .map(|(lo, hi)| (lo.clamp(0.0, 1.0), hi.clamp(lo.clamp(0.0, 1.0), 1.0)))
            .collect();
        Ok(Self { d, bounds })
    }

    /// Eigenvalue bounds of every coarse element.
    pub fn from_protocol(protocol: &PartitionProtocol) -> Result<Self> {
        let bounds = protocol
            .coarse()
            .iter()
            .map(spectral_bounds)
            .collect::<Result<Vec<_>>>()?;
        Self::new(protocol.m_target(), bounds)
    }

    pub fn outcomes(&self) -> usize {
        self.bounds.len()
    }

    fn prefactor(&self) -> f64 {
        1.0 / (self.outcomes() * self.d * (self.d + 1)) as f64
    }

    /// `ε²` with the outcome-averaged normalization.
    pub fn objective(&self, table: &[Vec<f64>]) -> f64 {
        let sum: f64 = table
            .iter()
            .enumerate()
            .map(|(a, row)| {
                let s: f64 = row.iter().sum();
                let sq: f64 = row.iter().map(|x| x * x).sum();
                if a < self.d {
                    (s - 1.0).powi(2) + sq - 2.0 * row[a] + 1.0
                } else {
                    s * s + sq
                }
            })
            .sum();
        sum * self.prefactor()
    }

    fn gradient(&self, table: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let c = 2.0 * self.prefactor();
        table
            .iter()
            .enumerate()
            .map(|(a, row)| {
                let s: f64 = row.iter().sum();
                let shift = if a < self.d { s - 1.0 } else { s };
                row.iter()
                    .enumerate()
                    .map(|(i, &x)| c * (shift + x - if a == i { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect()
    }

    /// Largest Hessian eigenvalue: each row block is `2c(J + I)` with spectrum `{2c(d+1), 2c}`.
    pub fn lipschitz(&self) -> f64 {
        2.0 * self.prefactor() * (self.d + 1) as f64
    }

    fn check_feasible(&self) -> Result<()> {
        let lo: f64 = self.bounds.iter().map(|b| b.0).sum();
        let hi: f64 = self.bounds.iter().map(|b| b.1).sum();
        if lo > 1.0 + BOUND_SLACK || hi < 1.0 - BOUND_SLACK {
            return Err(Error::Infeasible(format!(
                "column sums must equal 1 but bounds allow [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Projects every column onto `{lo ≤ v ≤ hi, Σv = 1}`.
    fn project(&self, table: &mut [Vec<f64>]) {
        let mut column = vec![0.0; self.outcomes()];
        for i in 0..self.d {
            for (a, row) in table.iter().enumerate() {
                column[a] = row[i];
            }
            let v = project_capped_simplex(&column, &self.bounds);
            for (row, x) in table.iter_mut().zip(v) {
                row[i] = x;
            }
        }
    }

    /// Projected gradient descent with step `1/L`.
    pub fn solve(&self) -> Result<QuditQpSolution> {
        self.check_feasible()?;
        let m = self.outcomes();
        let l = self.lipschitz();
        let mut table: Vec<Vec<f64>> = (0..m)
            .map(|a| (0..self.d).map(|i| if a == i { 1.0 } else { 0.0 }).collect())
            .collect();
        self.project(&mut table);
        let mut iterations = 0;
        while iterations < QP_MAX_ITER {
            iterations += 1;
            let next = self.step(&table, l);
            let change = max_diff(&next, &table);
            table = next;
            if change < QP_STEP_TOL {
                break;
            }
        }
        let kkt_residual = l * max_diff(&self.step(&table, l), &table);
        let value = self.objective(&table).max(0.0);
        if kkt_residual > QP_KKT_TOL {
            return Err(Error::NotConverged {
                iterations,
                gap: kkt_residual,
                best: value.sqrt(),
            });
        }
        Ok(QuditQpSolution {
            epsilon: value.sqrt(),
            epsilon_unaveraged: (value * m as f64).sqrt(),
            table,
            kkt_residual,
            iterations,
        })
    }

    fn step(&self, table: &[Vec<f64>], l: f64) -> Vec<Vec<f64>> {
        let g = self.gradient(table);
        let mut next: Vec<Vec<f64>> = table
            .iter()
            .zip(&g)
            .map(|(row, grow)| row.iter().zip(grow).map(|(x, gx)| x - gx / l).collect())
            .collect();
        self.project(&mut next);
        next
    }
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Euclidean projection onto `{lo_a ≤ v_a ≤ hi_a, Σv = 1}`: `v_a = clamp(y_a − τ)` with the
/// shift `τ` found by bisection on the monotone column sum.
pub fn project_capped_simplex(y: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    let eval = |tau: f64| -> f64 {
        y.iter()
            .zip(bounds)
            .map(|(v, &(lo, hi))| (v - tau).clamp(lo, hi))
            .sum()
    };
    let mut lo_tau = y.iter().zip(bounds).map(|(v, b)| v - b.1).fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi_tau = y.iter().zip(bounds).map(|(v, b)| v - b.0).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo_tau + hi_tau);
        if mid <= lo_tau || mid >= hi_tau {
            break;
        }
        if eval(mid) > 1.0 {
            lo_tau = mid;
        } else {
            hi_tau = mid;
        }
    }
    let tau = 0.5 * (lo_tau + hi_tau);
    y.iter()
        .zip(bounds)
        .map(|(v, &(lo, hi))| (v - tau).clamp(lo, hi))
        .collect()
}
