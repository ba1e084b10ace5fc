//! Closed-form optimal protocols for the trine and for asymmetric noisy Z measurements.

use num_complex::Complex64;

use super::partition::{build_partition_povm, contains_outcome_map, PartitionProtocol};
use super::qp::{solve_box_quadratic_qubit, BoxQuadSolution};
use super::states::StatePrep;
use crate::error::{Error, Result};
use crate::qcore::{named, StateVector};

#[derive(Debug, Clone)]
pub struct SynthesizedProtocol {
    pub protocol: PartitionProtocol,
    pub prep: StatePrep,
    pub solution: BoxQuadSolution,
}

/// `N` trine uses: output 1 iff no use returns outcome 0, so `Q₁ = (I−M₀)^⊗N`.
///
/// States: `|Ψ₀⟩ = |0⟩^⊗N`, `|Ψ₁⟩ = |1⟩^⊗(N−1)|φ⁽ᴺ⁾⟩` with
/// `⟨0|φ⁽ᴺ⁾⟩ = ½·3^{−(N−1)/2}`. For `N = 1` these states overlap, so an ancilla qubit
/// tags them: `|Ψ₀⟩ = |0⟩|0⟩`, `|Ψ₁⟩ = |φ⁽¹⁾⟩|1⟩`.
pub fn trine_optimal_protocol(uses: usize) -> Result<SynthesizedProtocol> {
    if uses == 0 {
        return Err(Error::InvalidArgument("at least one use is required".into()));
    }
    let protocol = build_partition_povm(&named::trine(), uses, &contains_outcome_map(3, uses, 0), 2)?;
    let lambda_max = 1.0 - 3f64.powi(-(uses as i32));
    let solution = solve_box_quadratic_qubit(0.0, lambda_max)?;
    let a = 0.5 * 3f64.powf(-((uses - 1) as f64) / 2.0);
    let phi = [a, (1.0 - a * a).sqrt()];
    let zero = [1.0, 0.0];
    let one = [0.0, 1.0];
    let product = |factors: &[&[f64; 2]]| -> Result<StateVector> {
        let amps = factors.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, f| {
            let v: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            crate::qcore::tensor_vec(&acc, &v)
        });
        StateVector::new(amps)
    };
    let (states, ancilla_qubits) = if uses == 1 {
        (vec![product(&[&zero, &zero])?, product(&[&phi, &one])?], 1)
    } else {
        let psi0 = product(&vec![&zero; uses])?;
        let mut f1 = vec![&one; uses - 1];
        f1.push(&phi);
        (vec![psi0, product(&f1)?], 0)
    };
    Ok(SynthesizedProtocol {
        prep: StatePrep {
            uses,
            ancilla_qubits,
            measured_dim: protocol.measured_dim(),
            states,
        },
        protocol,
        solution,
    })
}

/// Which protocol is optimal for a single noisy Z use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisyZRegion {
    /// `p > (1+q)/2`: rotate the `|0⟩` input by `γ`.
    HighP,
    /// `2q−1 ≤ p ≤ (1+q)/2`: measure directly.
    Middle,
    /// `q > (1+p)/2`: the mirror image, rotating the `|1⟩` input.
    HighQ,
}

impl NoisyZRegion {
    pub fn classify(p: f64, q: f64) -> Self {
        if p > (1.0 + q) / 2.0 {
            Self::HighP
        } else if q > (1.0 + p) / 2.0 {
            Self::HighQ
        } else {
            Self::Middle
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::HighP => "high-p",
            Self::Middle => "middle",
            Self::HighQ => "high-q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyZParams {
    pub p: f64,
    pub q: f64,
    pub region: NoisyZRegion,
    /// Amplitude of the unrotated component: `√((3q−1)/(2(p+q−1)))` in the high-p region,
    /// `√((3p−1)/(2(p+q−1)))` in the high-q region, 1 in the middle.
    pub gamma: f64,
}

/// Optimal single-use protocol for `N₀ = p|0⟩⟨0| + (1−q)|1⟩⟨1|`. One ancilla qubit is used
/// outside the middle region: `|Ψ₀⟩ = (γ|0⟩+δ|1⟩)|0⟩`, `|Ψ₁⟩ = |1⟩|1⟩` (high p) or
/// `|Ψ₀⟩ = |0⟩|0⟩`, `|Ψ₁⟩ = (δ|0⟩+γ|1⟩)|1⟩` (high q).
pub fn noisy_z_optimal(p: f64, q: f64) -> Result<(NoisyZParams, SynthesizedProtocol)> {
    let inside = |v: f64| v > 0.5 && v <= 1.0;
    if !inside(p) || !inside(q) {
        return Err(Error::InvalidBounds(format!(
            "noisy-Z parameters must lie in (1/2, 1], got p={p}, q={q}"
        )));
    }
    let povm = named::noisy_z(p, q)?;
    let protocol = build_partition_povm(&povm, 1, &[0, 1], 2)?;
    let region = NoisyZRegion::classify(p, q);
    let mut solution = solve_box_quadratic_qubit(1.0 - q, p)?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let state = |v: [f64; 4]| StateVector::new(v.iter().map(|&x| c(x)).collect());
    let (gamma, states, ancilla_qubits) = match region {
        NoisyZRegion::HighP => {
            let g = ((3.0 * q - 1.0) / (2.0 * (p + q - 1.0))).sqrt();
            let d = (1.0 - g * g).max(0.0).sqrt();
            (g, vec![state([g, 0.0, d, 0.0])?, state([0.0, 0.0, 0.0, 1.0])?], 1)
        }
        NoisyZRegion::HighQ => {
            let g = ((3.0 * p - 1.0) / (2.0 * (p + q - 1.0))).sqrt();
            let d = (1.0 - g * g).max(0.0).sqrt();
            (g, vec![state([1.0, 0.0, 0.0, 0.0])?, state([0.0, d, 0.0, g])?], 1)
        }
        NoisyZRegion::Middle => {
            // at the region boundary the edge formula and the corner coincide
            solution.x = p;
            solution.y = 1.0 - q;
            solution.region = super::qp::QubitRegion::Corner;
            (1.0, vec![StateVector::basis(2, 0), StateVector::basis(2, 1)], 0)
        }
    };
    Ok((
        NoisyZParams { p, q, region, gamma },
        SynthesizedProtocol {
            prep: StatePrep {
                uses: 1,
                ancilla_qubits,
                measured_dim: 2,
                states,
            },
            protocol,
            solution,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{validate_povm, ComplexMatrix};
    use crate::vnsynth::states::implemented_povm;

    #[test]
    fn trine_closed_form_errors() {
        for (n, eps) in [(1, 1.0 / 6.0), (2, 1.0 / 18.0), (4, 1.0 / 162.0)] {
            let s = trine_optimal_protocol(n).unwrap();
            assert!((s.solution.epsilon - eps).abs() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn trine_implemented_povm() {
        for n in 1..=4 {
            let s = trine_optimal_protocol(n).unwrap();
            let m = implemented_povm(&s.prep, &s.protocol).unwrap();
            let t = 3f64.powi(-(n as i32));
            let m0 = ComplexMatrix::from_diag(&[1.0 - t, t / 2.0]);
            let m1 = ComplexMatrix::from_diag(&[t, 1.0 - t / 2.0]);
            assert!(m.element(0).max_abs_diff(&m0) < 1e-12, "N={n}");
            assert!(m.element(1).max_abs_diff(&m1) < 1e-12, "N={n}");
            assert!(validate_povm(&m).is_ok());
        }
    }

    #[test]
    fn trine_states_are_orthonormal() {
        for n in 1..=5 {
            let s = trine_optimal_protocol(n).unwrap();
            let o = s.prep.states[0].inner(&s.prep.states[1]);
            assert!(o.norm() < 1e-15);
        }
    }

    #[test]
    fn noisy_z_high_p() {
        let (params, s) = noisy_z_optimal(0.9, 0.6).unwrap();
        assert_eq!(params.region, NoisyZRegion::HighP);
        assert!((s.solution.epsilon - 0.2).abs() < 1e-12);
        assert!((params.gamma - 0.8f64.sqrt()).abs() < 1e-12);
        let m = implemented_povm(&s.prep, &s.protocol).unwrap();
        assert!((m.element(0)[(0, 0)].re - 0.8).abs() < 1e-12);
        assert!((m.element(0)[(1, 1)].re - 0.4).abs() < 1e-12);
        assert!(m.element(0)[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn noisy_z_middle_is_trivial() {
        let (params, s) = noisy_z_optimal(0.8, 0.8).unwrap();
        assert_eq!(params.region, NoisyZRegion::Middle);
        assert_eq!(s.prep.ancilla_qubits, 0);
        let m = implemented_povm(&s.prep, &s.protocol).unwrap();
        assert!(m.element(0).max_abs_diff(s.protocol.available().element(0)) < 1e-15);
    }

    #[test]
    fn noisy_z_high_q_mirrors_high_p() {
        let (params, s) = noisy_z_optimal(0.6, 0.9).unwrap();
        assert_eq!(params.region, NoisyZRegion::HighQ);
        assert!((s.solution.epsilon - 0.2).abs() < 1e-12);
        let m = implemented_povm(&s.prep, &s.protocol).unwrap();
        // (x, y) = (p, (1−p)/2) is the image of ((1+q)/2, 1−q) under p ↔ q, (x,y) ↦ (1−y, 1−x)
        assert!((m.element(0)[(0, 0)].re - 0.6).abs() < 1e-12);
        assert!((m.element(0)[(1, 1)].re - 0.2).abs() < 1e-12);
    }

    #[test]
    fn noisy_z_rejects_out_of_range() {
        for (p, q) in [(0.5, 0.8), (0.8, 1.2), (0.3, 0.9)] {
            assert!(matches!(noisy_z_optimal(p, q), Err(Error::InvalidBounds(_))));
        }
    }
}
