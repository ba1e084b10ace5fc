use crate::error::{Error, Result};
use crate::qcore::{tensor_all, ComplexMatrix, Povm, DIM_CAP};

/// Coarse-grained N-use measurement: every outcome string `a₁…a_N` of the available POVM is
/// assigned to a target outcome, `Qᵢ = Σ_𝐚 δ_{i,f(𝐚)} M_{a₁}⊗…⊗M_{a_N}`.
///
/// Strings are indexed in base `m_avail` with `a₁` most significant.
#[derive(Debug, Clone)]
pub struct PartitionProtocol {
    available: Povm,
    uses: usize,
    map: Vec<usize>,
    m_target: usize,
    coarse: Vec<ComplexMatrix>,
}

impl PartitionProtocol {
    pub fn available(&self) -> &Povm {
        &self.available
    }

    /// `N`
    pub fn uses(&self) -> usize {
        self.uses
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn m_target(&self) -> usize {
        self.m_target
    }

    /// Dimension `d_avail^N` of the measured systems.
    pub fn measured_dim(&self) -> usize {
        self.coarse[0].rows()
    }

    pub fn coarse(&self) -> &[ComplexMatrix] {
        &self.coarse
    }

    pub fn coarse_element(&self, i: usize) -> &ComplexMatrix {
        &self.coarse[i]
    }

    pub fn coarse_povm(&self) -> Povm {
        Povm::new_unchecked(self.coarse.clone())
    }
}

/// Number of outcome strings `m^N`, or `None` on overflow.
pub fn string_count(m: usize, n: usize) -> Option<usize> {
    u32::try_from(n).ok().and_then(|n| m.checked_pow(n))
}

/// Digits of string `index` in base `m`, most significant first.
pub fn string_of(index: usize, m: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    let mut rest = index;
    for slot in digits.iter_mut().rev() {
        *slot = rest % m;
        rest /= m;
    }
    digits
}

pub fn string_index(digits: &[usize], m: usize) -> usize {
    digits.iter().fold(0, |acc, &a| acc * m + a)
}

/// Tabulates a partition map from a function of the outcome string.
pub fn map_from_fn(m: usize, n: usize, f: impl Fn(&[usize]) -> usize) -> Vec<usize> {
    let count = string_count(m, n).expect("string count overflows usize");
    (0..count).map(|s| f(&string_of(s, m, n))).collect()
}

/// Strings containing outcome `b` go to target 0, all others to target 1.
pub fn contains_outcome_map(m: usize, n: usize, b: usize) -> Vec<usize> {
    map_from_fn(m, n, |s| usize::from(!s.contains(&b)))
}

fn measured_dim(d: usize, n: usize) -> Result<usize> {
    match string_count(d, n) {
        Some(dim) if dim <= DIM_CAP => Ok(dim),
        _ => Err(Error::DimensionTooLarge {
            dim: string_count(d, n).unwrap_or(usize::MAX),
            cap: DIM_CAP,
        }),
    }
}

/// Builds `Qᵢ` for every target outcome by recursion over string prefixes; subtrees whose
/// strings all map to one target contribute `I` to that target directly.
pub fn build_partition_povm(
    available: &Povm,
    uses: usize,
    map: &[usize],
    m_target: usize,
) -> Result<PartitionProtocol> {
    if m_target < 2 {
        return Err(Error::InvalidArgument(format!(
            "target must have at least two outcomes, got {m_target}"
        )));
    }
    if uses == 0 {
        return Err(Error::InvalidArgument("at least one use is required".into()));
    }
    let m = available.outcomes();
    let d = available.dim();
    let dim = measured_dim(d, uses)?;
    let strings = string_count(m, uses).ok_or_else(|| Error::TooLarge("string count overflows".into()))?;
    if map.len() != strings {
        return Err(Error::ShapeMismatch(format!(
            "partition map has {} entries, expected {strings}",
            map.len()
        )));
    }
    if let Some(&bad) = map.iter().find(|&&i| i >= m_target) {
        return Err(Error::InvalidArgument(format!(
            "partition maps to outcome {bad} of a {m_target}-outcome target"
        )));
    }
    let coarse = build_subtree(available, uses, map, m_target, 0, strings);
    debug_assert_eq!(coarse[0].rows(), dim);
    Ok(PartitionProtocol {
        available: available.clone(),
        uses,
        map: map.to_vec(),
        m_target,
        coarse,
    })
}

/// Coarse elements restricted to the strings `offset..offset+len`, which share a prefix and
/// range over all `depth` remaining positions.
fn build_subtree(
    available: &Povm,
    depth: usize,
    map: &[usize],
    m_target: usize,
    offset: usize,
    len: usize,
) -> Vec<ComplexMatrix> {
    let d = available.dim();
    let dim = d.pow(depth as u32);
    let first = map[offset];
    if map[offset..offset + len].iter().all(|&i| i == first) {
        return (0..m_target)
            .map(|i| {
                if i == first {
                    ComplexMatrix::identity(dim)
                } else {
                    ComplexMatrix::zeros(dim, dim)
                }
            })
            .collect();
    }
    let m = available.outcomes();
    let step = len / m;
    let mut out = vec![ComplexMatrix::zeros(dim, dim); m_target];
    for (a, element) in available.elements().iter().enumerate() {
        let rest = build_subtree(available, depth - 1, map, m_target, offset + a * step, step);
        for (acc, r) in out.iter_mut().zip(&rest) {
            if r.frobenius_norm() == 0.0 {
                continue;
            }
            *acc = &*acc + &tensor_all(&[element, r]).expect("bounded by the checked dimension");
        }
    }
    out
}

/// `M_{a₁}⊗…⊗M_{a_N}` for one string.
pub fn string_operator(available: &Povm, digits: &[usize]) -> Result<ComplexMatrix> {
    let factors: Vec<&ComplexMatrix> = digits.iter().map(|&a| available.element(a)).collect();
    tensor_all(&factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{named, tensor, validate_povm};

    #[test]
    fn string_indexing_roundtrip() {
        for s in 0..27 {
            assert_eq!(string_index(&string_of(s, 3, 3), 3), s);
        }
        assert_eq!(string_of(5, 3, 2), vec![1, 2]);
    }

    #[test]
    fn trine_two_use_coarse_element() {
        let trine = named::trine();
        let p = build_partition_povm(&trine, 2, &contains_outcome_map(3, 2, 0), 2).unwrap();
        let id = ComplexMatrix::identity(2);
        let comp = &id - trine.element(0);
        let expect = &ComplexMatrix::identity(4) - &tensor(&comp, &comp).unwrap();
        assert!(p.coarse_element(0).max_abs_diff(&expect) < 1e-14);
        assert!(validate_povm(&p.coarse_povm()).is_ok());
    }

    #[test]
    fn constant_map_gives_identity_and_zero() {
        let p = build_partition_povm(&named::trine(), 2, &[0; 9], 2).unwrap();
        assert_eq!(p.coarse_element(0), &ComplexMatrix::identity(4));
        assert_eq!(p.coarse_element(1), &ComplexMatrix::zeros(4, 4));
    }

    #[test]
    fn single_use_identity_map_returns_available() {
        let trine = named::trine();
        let p = build_partition_povm(&trine, 1, &[0, 1, 2], 3).unwrap();
        for (a, b) in p.coarse().iter().zip(trine.elements()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
    }

    #[test]
    fn matches_explicit_sum_over_strings() {
        let trine = named::trine();
        let map: Vec<usize> = (0..27).map(|s| (s * 7 + 3) % 11 % 2).collect();
        let p = build_partition_povm(&trine, 3, &map, 2).unwrap();
        let mut q0 = ComplexMatrix::zeros(8, 8);
        for (s, &i) in map.iter().enumerate() {
            if i == 0 {
                q0 = &q0 + &string_operator(&trine, &string_of(s, 3, 3)).unwrap();
            }
        }
        assert!(p.coarse_element(0).max_abs_diff(&q0) < 1e-14);
        let sum = &p.coarse()[0] + &p.coarse()[1];
        assert!(sum.distance(&ComplexMatrix::identity(8)) < 1e-10);
    }

    #[test]
    fn rejects_bad_maps_and_sizes() {
        let trine = named::trine();
        assert!(matches!(build_partition_povm(&trine, 2, &[0; 8], 2), Err(Error::ShapeMismatch(_))));
        assert!(build_partition_povm(&trine, 1, &[0, 1, 2], 2).is_err());
        assert!(build_partition_povm(&trine, 1, &[0, 0, 0], 1).is_err());
        let vn = named::von_neumann(2);
        let huge = build_partition_povm(&vn, 17, &[], 2);
        assert!(matches!(huge, Err(Error::DimensionTooLarge { .. })));
    }
}
