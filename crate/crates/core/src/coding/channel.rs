use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, Povm};

const ROW_TOL: f64 = 1e-12;

/// Discrete memoryless channel `p(a|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalChannel {
    rows: Vec<Vec<f64>>,
}

impl ClassicalChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let outputs = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || outputs == 0 {
            return Err(Error::ShapeMismatch("channel needs at least one input and output".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::ShapeMismatch(format!("row {x} has {} entries, expected {outputs}", row.len())));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidArgument(format!(
                    "row {x} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Binary symmetric channel with flip probability `p`.
    pub fn binary_symmetric(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn noiseless(d: usize) -> Self {
        Self {
            rows: (0..d)
                .map(|x| (0..d).map(|a| if a == x { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Reorders inputs: new row `x` is old row `perm[x]`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Self {
        Self {
            rows: perm.iter().map(|&x| self.rows[x].clone()).collect(),
        }
    }

    /// Reorders outputs: new column `a` is old column `perm[a]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| perm.iter().map(|&a| r[a]).collect())
                .collect(),
        }
    }
}

/// `p(a|x) = ⟨x|Mₐ|x⟩`, or `tr(Mₐ ρ_x)` when states are supplied.
pub fn associated_channel(available: &Povm, states: Option<&[ComplexMatrix]>) -> Result<ClassicalChannel> {
    let rows: Vec<Vec<f64>> = match states {
        None => (0..available.dim())
            .map(|x| available.elements().iter().map(|m| m[(x, x)].re.max(0.0)).collect())
            .collect(),
        Some(states) => states
            .iter()
            .map(|rho| {
                let tr = rho.trace();
                if !rho.is_hermitian() || (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                    return Err(Error::InvalidArgument("input state is not a unit-trace Hermitian matrix".into()));
                }
                Ok(available.probabilities(rho)?.into_iter().map(|p| p.max(0.0)).collect())
            })
            .collect::<Result<_>>()?,
    };
    // absorb rounding so rows are exact distributions
    let rows = rows
        .into_iter()
        .map(|r: Vec<f64>| {
            let s: f64 = r.iter().sum();
            r.into_iter().map(|p| p / s).collect()
        })
        .collect();
    ClassicalChannel::new(rows)
}

fn xlog2x_ratio(p: f64, q: f64) -> f64 {
    if p > 0.0 {
        p * (p / q).log2()
    } else {
        0.0
    }
}

fn output_distribution(px: &[f64], ch: &ClassicalChannel) -> Vec<f64> {
    let mut q = vec![0.0; ch.outputs()];
    for (p, row) in px.iter().zip(ch.rows()) {
        for (qa, w) in q.iter_mut().zip(row) {
            *qa += p * w;
        }
    }
    q
}

/// `D(W(·|x) ‖ q)` in bits for every input.
fn divergences(ch: &ClassicalChannel, q: &[f64]) -> Vec<f64> {
    ch.rows()
        .iter()
        .map(|row| row.iter().zip(q).map(|(&w, &qa)| xlog2x_ratio(w, qa)).sum())
        .collect()
}

/// `I(A:X)` in bits.
pub fn mutual_information(px: &[f64], ch: &ClassicalChannel) -> Result<f64> {
    if px.len() != ch.inputs() {
        return Err(Error::ShapeMismatch(format!(
            "input distribution over {} letters for a channel with {} inputs",
            px.len(),
            ch.inputs()
        )));
    }
    let sum: f64 = px.iter().sum();
    if px.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("input weights are not a distribution".into()));
    }
    let q = output_distribution(px, ch);
    let d = divergences(ch, &q);
    Ok(px.iter().zip(&d).map(|(p, dx)| p * dx).sum::<f64>().max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Certified lower bound on the capacity, in bits.
    pub capacity: f64,
    pub upper_bound: f64,
    pub input_distribution: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

pub const DEFAULT_CAPACITY_TOL: f64 = 1e-6;
pub const DEFAULT_CAPACITY_ITER: usize = 100_000;

/// Blahut–Arimoto iteration from the uniform input. Stops once
/// `max_x D(W_x‖q) − log₂ Σ_x p(x) 2^{D(W_x‖q)} ≤ tol`; these bracket the capacity.
pub fn blahut_arimoto(ch: &ClassicalChannel, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = ch.inputs();
    let mut p = vec![1.0 / n as f64; n];
    let mut best = (0.0, f64::INFINITY);
    for it in 1..=max_iter {
        let q = output_distribution(&p, ch);
        let d = divergences(ch, &q);
        let weights: Vec<f64> = p.iter().zip(&d).map(|(px, dx)| px * dx.exp2()).collect();
        let z: f64 = weights.iter().sum();
        let lower = z.log2();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best = (lower, upper);
        if upper - lower <= tol {
            return Ok(CapacityResult {
                capacity: lower.max(0.0),
                upper_bound: upper,
                input_distribution: p,
                iterations: it,
                gap: upper - lower,
            });
        }
        p = weights.into_iter().map(|w| w / z).collect();
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        gap: best.1 - best.0,
        best: best.0,
    })
}
