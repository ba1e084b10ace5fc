//! Preparation of the states `|Ψᵢ⟩ = U|i⟩|Ω⟩` fed to the measured systems.

use num_complex::Complex64;

use super::partition::PartitionProtocol;
use crate::error::{Error, Result};
use crate::qcore::{hermitian_eig, ComplexMatrix, HermitianEigen, Povm, StateVector};

const ACHIEVABLE_SLACK: f64 = 1e-9;
const SPAN_TOL: f64 = 1e-9;

/// Prepared states on the measured systems, optionally followed by one unmeasured ancilla qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrep {
    pub uses: usize,
    /// 0 or 1.
    pub ancilla_qubits: usize,
    pub measured_dim: usize,
    /// `|Ψᵢ⟩` ordered measured ⊗ ancilla.
    pub states: Vec<StateVector>,
}

impl StatePrep {
    pub fn total_dim(&self) -> usize {
        self.measured_dim << self.ancilla_qubits
    }

    /// The isometry `V = Σᵢ |Ψᵢ⟩⟨i|` as a `total_dim × d` matrix.
    pub fn isometry(&self) -> ComplexMatrix {
        let cols: Vec<Vec<Complex64>> = self.states.iter().map(|s| s.amplitudes().to_vec()).collect();
        ComplexMatrix::from_columns(&cols).expect("states share one dimension")
    }

    /// `⟨Ψᵢ|(Q⊗I)|Ψⱼ⟩`
    pub fn matrix_element(&self, q: &ComplexMatrix, i: usize, j: usize) -> Result<Complex64> {
        let op = with_ancilla(q, self.ancilla_qubits)?;
        op.sandwich(self.states[i].amplitudes(), self.states[j].amplitudes())
    }
}

fn with_ancilla(q: &ComplexMatrix, ancilla_qubits: usize) -> Result<ComplexMatrix> {
    if ancilla_qubits == 0 {
        Ok(q.clone())
    } else {
        crate::qcore::tensor(q, &ComplexMatrix::identity(1 << ancilla_qubits))
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Unit vector in the span of the extreme eigenvectors with `⟨u|Q|u⟩ = t`.
fn extreme_mix(eig: &HermitianEigen, t: f64) -> Option<Vec<Complex64>> {
    let (lo, hi) = (eig.min(), eig.max());
    if t < lo - ACHIEVABLE_SLACK || t > hi + ACHIEVABLE_SLACK {
        return None;
    }
    let vmax = eig.vector(0);
    if hi - lo < 1e-15 {
        return Some(vmax);
    }
    let vmin = eig.vector(eig.values.len() - 1);
    let w = ((t - lo) / (hi - lo)).clamp(0.0, 1.0);
    let (a, b) = ((1.0 - w).sqrt(), w.sqrt());
    Some(vmin.iter().zip(&vmax).map(|(x, y)| x * a + y * b).collect())
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Orthonormal basis of the complement of `span(fixed)`, from Gram–Schmidt over the
/// computational basis.
fn complement_basis(dim: usize, fixed: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut span: Vec<Vec<Complex64>> = Vec::new();
    let push = |v: Vec<Complex64>, span: &mut Vec<Vec<Complex64>>| -> bool {
        let mut w = v;
        for _ in 0..2 {
            for s in span.iter() {
                let c = inner(s, &w);
                for (wk, sk) in w.iter_mut().zip(s) {
                    *wk -= c * sk;
                }
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > SPAN_TOL {
            span.push(w.into_iter().map(|z| z / norm).collect());
            true
        } else {
            false
        }
    };
    for v in fixed {
        push(v.clone(), &mut span);
    }
    let fixed_rank = span.len();
    for k in 0..dim {
        let mut e = vec![real(0.0); dim];
        e[k] = real(1.0);
        push(e, &mut span);
    }
    span.split_off(fixed_rank)
}

/// Searches for `u₁ ⊥ {u₀, Qu₀}` with `⟨u₁|Q|u₁⟩ = t`, which gives orthogonality and a
/// vanishing off-diagonal element of the implemented POVM.
fn partner(q: &ComplexMatrix, u0: &[Complex64], t: f64) -> Result<Option<Vec<Complex64>>> {
    let dim = q.rows();
    let qu0 = q.mul_vec(u0)?;
    let basis = complement_basis(dim, &[u0.to_vec(), qu0]);
    if basis.is_empty() {
        return Ok(None);
    }
    let b = ComplexMatrix::from_columns(&basis)?;
    let compressed = b.adjoint().matmul(q)?.matmul(&b)?.hermitian_part();
    let eig = hermitian_eig(&compressed)?;
    Ok(extreme_mix(&eig, t).map(|c| b.mul_vec(&c).expect("basis dimension")))
}

/// States with `⟨Ψᵢ|Q₀⊗I|Ψᵢ⟩ = targets[i]` and `⟨Ψ₀|Q₀⊗I|Ψ₁⟩ = 0` for a binary target.
///
/// The states are first sought inside the measured space; when no orthogonal pair exists
/// there, one ancilla qubit is appended and `|Ψᵢ⟩ = |uᵢ⟩|i⟩`.
pub fn construct_states(protocol: &PartitionProtocol, targets: &[f64]) -> Result<StatePrep> {
    if protocol.m_target() != 2 || targets.len() != 2 {
        return Err(Error::Unsupported(format!(
            "state construction handles binary targets only (target has {} outcomes, {} values given)",
            protocol.m_target(),
            targets.len()
        )));
    }
    let q = protocol.coarse_element(0);
    let eig = hermitian_eig(q)?;
    let mut single = Vec::with_capacity(2);
    for &t in targets {
        single.push(extreme_mix(&eig, t).ok_or_else(|| {
            Error::Unachievable(format!(
                "target {t} outside the spectrum [{}, {}] of Q₀",
                eig.min(),
                eig.max()
            ))
        })?);
    }
    let dim = protocol.measured_dim();
    let done = |states: Vec<Vec<Complex64>>, ancilla: usize| -> Result<StatePrep> {
        Ok(StatePrep {
            uses: protocol.uses(),
            ancilla_qubits: ancilla,
            measured_dim: dim,
            states: states
                .into_iter()
                .map(StateVector::normalized)
                .collect::<Result<Vec<_>>>()?,
        })
    };
    if let Some(u1) = partner(q, &single[0], targets[1])? {
        return done(vec![single[0].clone(), u1], 0);
    }
    if let Some(u0) = partner(q, &single[1], targets[0])? {
        return done(vec![u0, single[1].clone()], 0);
    }
    let tagged = single
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut tag = vec![real(0.0); 2];
            tag[i] = real(1.0);
            crate::qcore::tensor_vec(u, &tag)
        })
        .collect();
    done(tagged, 1)
}

/// `Mᵢ(j,k) = ⟨Ψⱼ|Qᵢ⊗I|Ψₖ⟩`: the POVM realized on the input system.
pub fn implemented_povm(prep: &StatePrep, protocol: &PartitionProtocol) -> Result<Povm> {
    if prep.measured_dim != protocol.measured_dim() {
        return Err(Error::ShapeMismatch(format!(
            "state preparation acts on dimension {} but the protocol measures {}",
            prep.measured_dim,
            protocol.measured_dim()
        )));
    }
    let v = prep.isometry();
    let vd = v.adjoint();
    let elements = protocol
        .coarse()
        .iter()
        .map(|q| Ok(vd.matmul(&with_ancilla(q, prep.ancilla_qubits)?)?.matmul(&v)?.hermitian_part()))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{named, partial_trace, random, Rng};
    use crate::vnsynth::partition::{build_partition_povm, contains_outcome_map};

    fn trine_protocol(n: usize) -> PartitionProtocol {
        build_partition_povm(&named::trine(), n, &contains_outcome_map(3, n, 0), 2).unwrap()
    }

    fn check_invariants(prep: &StatePrep, protocol: &PartitionProtocol, targets: &[f64]) {
        for i in 0..2 {
            for j in 0..2 {
                let overlap = prep.states[i].inner(&prep.states[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((overlap - real(expect)).norm() < 1e-10);
            }
            let x = prep.matrix_element(protocol.coarse_element(0), i, i).unwrap();
            assert!((x.re - targets[i]).abs() < 1e-9);
        }
        let z = prep.matrix_element(protocol.coarse_element(0), 0, 1).unwrap();
        assert!(z.norm() < 1e-10);
    }

    #[test]
    fn trine_two_use_states_match_the_simple_choice() {
        let p = trine_protocol(2);
        let targets = [8.0 / 9.0, 1.0 / 18.0];
        let prep = construct_states(&p, &targets).unwrap();
        assert_eq!(prep.ancilla_qubits, 0);
        check_invariants(&prep, &p, &targets);
        let psi0 = StateVector::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let (a, b) = ((1.0f64 / 12.0).sqrt(), (11.0f64 / 12.0).sqrt());
        let psi1 = StateVector::from_real(&[0.0, 0.0, a, b]).unwrap();
        assert!((prep.states[0].inner(&psi0).norm() - 1.0).abs() < 1e-12);
        assert!((prep.states[1].inner(&psi1).norm() - 1.0).abs() < 1e-12);
        let m = implemented_povm(&prep, &p).unwrap();
        assert!(m.element(0).max_abs_diff(&ComplexMatrix::from_diag(&[8.0 / 9.0, 1.0 / 18.0])) < 1e-12);
    }

    #[test]
    fn trine_single_use_needs_an_ancilla() {
        let p = trine_protocol(1);
        let targets = [2.0 / 3.0, 1.0 / 6.0];
        let prep = construct_states(&p, &targets).unwrap();
        assert_eq!(prep.ancilla_qubits, 1);
        check_invariants(&prep, &p, &targets);
        let s3 = 3f64.sqrt();
        let psi1 = StateVector::from_real(&[0.0, 0.5, 0.0, s3 / 2.0]).unwrap();
        assert!((prep.states[1].inner(&psi1).norm() - 1.0).abs() < 1e-12);
        let m = implemented_povm(&prep, &p).unwrap();
        assert!(m.element(0).max_abs_diff(&ComplexMatrix::from_diag(&[2.0 / 3.0, 1.0 / 6.0])) < 1e-12);
    }

    #[test]
    fn extremal_target_is_top_eigenvector() {
        let p = trine_protocol(2);
        let prep = construct_states(&p, &[8.0 / 9.0, 0.3]).unwrap();
        let top = hermitian_eig(p.coarse_element(0)).unwrap().vector(0);
        let overlap: Complex64 = inner(&top, prep.states[0].amplitudes());
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unachievable_target() {
        let p = trine_protocol(2);
        assert!(matches!(construct_states(&p, &[0.95, 0.1]), Err(Error::Unachievable(_))));
    }

    #[test]
    fn non_binary_target_is_unsupported() {
        let p = build_partition_povm(&named::trine(), 1, &[0, 1, 2], 3).unwrap();
        assert!(matches!(construct_states(&p, &[0.5, 0.5, 0.5]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn random_targets_on_random_partitions() {
        let mut rng = Rng::new(31, 0);
        for _ in 0..40 {
            let povm = random::random_povm(2, 3, &mut rng).unwrap();
            let map: Vec<usize> = (0..9).map(|_| rng.below(2)).collect();
            let p = build_partition_povm(&povm, 2, &map, 2).unwrap();
            let eig = hermitian_eig(p.coarse_element(0)).unwrap();
            let targets = [
                rng.uniform_range(eig.min(), eig.max()),
                rng.uniform_range(eig.min(), eig.max()),
            ];
            let prep = construct_states(&p, &targets).unwrap();
            check_invariants(&prep, &p, &targets);
            let m = implemented_povm(&prep, &p).unwrap();
            assert!((m.element(0)[(0, 0)].re - targets[0]).abs() < 1e-9);
            assert!(m.element(0)[(0, 1)].norm() < 1e-10);
        }
    }

    /// Completing the isometry to a unitary and tracing out the ancilla reproduces the
    /// compressed POVM.
    #[test]
    fn isometry_compression_matches_partial_trace() {
        let p = trine_protocol(1);
        let prep = construct_states(&p, &[2.0 / 3.0, 1.0 / 6.0]).unwrap();
        // U|i⟩|0⟩ = |Ψᵢ⟩; complete with the orthogonal complement on the |·⟩|1⟩ inputs
        let mut cols = vec![vec![real(0.0); 4]; 4];
        cols[0] = prep.states[0].amplitudes().to_vec();
        cols[2] = prep.states[1].amplitudes().to_vec();
        let rest = complement_basis(4, &[cols[0].clone(), cols[2].clone()]);
        cols[1] = rest[0].clone();
        cols[3] = rest[1].clone();
        let u = ComplexMatrix::from_columns(&cols).unwrap();
        let omega = ComplexMatrix::from_diag(&[1.0, 0.0]);
        let direct = implemented_povm(&prep, &p).unwrap();
        for (a, q) in p.coarse().iter().enumerate() {
            let qi = with_ancilla(q, 1).unwrap();
            let conj = u.adjoint().matmul(&qi).unwrap().matmul(&u).unwrap();
            let weighted = conj.matmul(&crate::qcore::tensor(&ComplexMatrix::identity(2), &omega).unwrap()).unwrap();
            let m = partial_trace(&weighted, &[2, 2], &[0]).unwrap();
            assert!(m.max_abs_diff(direct.element(a)) < 1e-12);
        }
    }
}
