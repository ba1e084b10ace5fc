//! Realizing an arbitrary instrument with a perfect von Neumann measurement: an isometry writes
//! every Kraus branch into outcome and Kraus-index registers, the outcome register is measured
//! and the Kraus register is traced out.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{
    partial_trace, ComplexMatrix, Instrument, StateVector, COMPLETENESS_TOL, ZERO_PROBABILITY,
};

/// Invariant tolerance on `W†W = I`.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// `W|ψ⟩ = Σ_{a,j} Kⱼᵃ|ψ⟩ ⊗ |a⟩ ⊗ |j⟩`, registers ordered system, outcome, Kraus index.
/// Outcomes with fewer than `r` Kraus operators are padded with zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementIsometry {
    pub dim_in: usize,
    pub dim_out: usize,
    pub outcomes: usize,
    pub kraus_dim: usize,
    pub w: ComplexMatrix,
}

impl MeasurementIsometry {
    pub fn register_dims(&self) -> [usize; 3] {
        [self.dim_out, self.outcomes, self.kraus_dim]
    }

    /// `‖W†W − I‖_F`
    pub fn isometry_defect(&self) -> f64 {
        let gram = self.w.adjoint().matmul(&self.w).expect("shapes agree");
        gram.distance(&ComplexMatrix::identity(self.dim_in))
    }

    fn row(&self, s: usize, a: usize, j: usize) -> usize {
        (s * self.outcomes + a) * self.kraus_dim + j
    }

    /// Reads the Kraus operators back out of `W`, dropping the zero padding.
    pub fn realized_instrument(&self) -> Result<Instrument> {
        let kraus = (0..self.outcomes)
            .map(|a| {
                let ops: Vec<ComplexMatrix> = (0..self.kraus_dim)
                    .map(|j| {
                        ComplexMatrix::from_fn(self.dim_out, self.dim_in, |s, k| self.w[(self.row(s, a, j), k)])
                    })
                    .collect();
                let nonzero: Vec<ComplexMatrix> = ops.iter().filter(|k| k.frobenius_norm() > 0.0).cloned().collect();
                if nonzero.is_empty() {
                    vec![ops[0].clone()]
                } else {
                    nonzero
                }
            })
            .collect();
        Instrument::new(kraus)
    }
}

pub fn build_measurement_isometry(target: &Instrument) -> Result<MeasurementIsometry> {
    let defect = target.completeness_defect();
    if defect > COMPLETENESS_TOL {
        return Err(Error::NotNormalized(defect));
    }
    let (dim_in, dim_out) = (target.dim_in(), target.dim_out());
    let outcomes = target.outcomes();
    let kraus_dim = target.max_kraus_rank();
    let rows = dim_out * outcomes * kraus_dim;
    let mut w = ComplexMatrix::zeros(rows, dim_in);
    for a in 0..outcomes {
        for (j, k) in target.kraus(a).iter().enumerate() {
            for s in 0..dim_out {
                for col in 0..dim_in {
                    w[((s * outcomes + a) * kraus_dim + j, col)] = k[(s, col)];
                }
            }
        }
    }
    let iso = MeasurementIsometry {
        dim_in,
        dim_out,
        outcomes,
        kraus_dim,
        w,
    };
    debug_assert!(iso.isometry_defect() <= ISOMETRY_TOL);
    Ok(iso)
}

/// One branch of the sub-routine. `state` is `None` for outcomes of (numerically) zero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    pub state: Option<ComplexMatrix>,
}

/// Applies `W`, projects the outcome register onto each `|a⟩`, traces out the outcome and
/// Kraus registers and renormalizes.
pub fn run_post_measurement(iso: &MeasurementIsometry, psi: &StateVector) -> Result<Vec<Branch>> {
    if psi.dim() != iso.dim_in {
        return Err(Error::ShapeMismatch(format!(
            "state of dimension {} for an isometry on dimension {}",
            psi.dim(),
            iso.dim_in
        )));
    }
    let phi = iso.w.mul_vec(psi.amplitudes())?;
    let dims = iso.register_dims();
    (0..iso.outcomes)
        .map(|a| {
            let projected: Vec<Complex64> = phi
                .iter()
                .enumerate()
                .map(|(idx, &z)| {
                    if (idx / iso.kraus_dim) % iso.outcomes == a {
                        z
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let sigma = ComplexMatrix::projector(&projected);
            let reduced = partial_trace(&sigma, &dims, &[0])?;
            let probability = reduced.trace().re;
            let state = (probability >= ZERO_PROBABILITY).then(|| reduced.scale_real(1.0 / probability));
            Ok(Branch {
                outcome: a,
                probability,
                state,
            })
        })
        .collect()
}

/// Registers of dimension `d` needed to hold `m` outcome labels, and each label's digits
/// (most significant first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeEmbedding {
    pub registers: usize,
    pub labels: Vec<Vec<usize>>,
}

/// `k = ⌈log_d m⌉` registers; outcome `a` is written as its base-`d` digits.
pub fn embed_outcomes(m: usize, d: usize) -> Result<OutcomeEmbedding> {
    if m == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!(
            "need m ≥ 1 outcomes and register dimension d ≥ 2, got m={m}, d={d}"
        )));
    }
    let mut registers = 0;
    let mut capacity: usize = 1;
    while capacity < m {
        capacity = capacity.saturating_mul(d);
        registers += 1;
    }
    let labels = (0..m)
        .map(|a| {
            let mut digits = vec![0; registers];
            let mut rest = a;
            for slot in digits.iter_mut().rev() {
                *slot = rest % d;
                rest /= d;
            }
            digits
        })
        .collect();
    Ok(OutcomeEmbedding { registers, labels })
}
