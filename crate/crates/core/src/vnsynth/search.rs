//! Searches over deterministic partitions of outcome strings for a binary target.

use rayon::prelude::*;

use super::partition::{
    build_partition_povm, contains_outcome_map, string_count, string_of, string_operator,
    PartitionProtocol,
};
use super::qp::{solve_box_quadratic_qubit, spectral_bounds, BoxQuadSolution};
use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, Povm, Rng, DIM_CAP};

/// Exhaustive enumeration refuses more outcome strings than this.
pub const EXHAUSTIVE_STRING_LIMIT: usize = 12;
/// Two partitions are co-optimal when their errors agree to this tolerance.
pub const CO_OPTIMAL_TOL: f64 = 1e-12;
/// Hill climbing refuses more outcome strings than this.
pub const HILL_CLIMB_STRING_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub protocol: PartitionProtocol,
    pub solution: BoxQuadSolution,
    /// Maps reaching the optimum, canonical form only, in increasing partition order.
    pub co_optimal: Vec<Vec<usize>>,
    /// Partitions whose error was evaluated.
    pub evaluated: usize,
}

fn bounds_of(q0: &ComplexMatrix) -> Result<BoxQuadSolution> {
    let (lo, hi) = spectral_bounds(q0)?;
    solve_box_quadratic_qubit(lo, hi)
}

fn map_of_index(index: u64, strings: usize) -> Vec<usize> {
    (0..strings).map(|s| ((index >> s) & 1) as usize).collect()
}

/// Relabels a binary map so that the first string goes to target 0.
pub fn canonical_map(map: &[usize]) -> Vec<usize> {
    if map.first() == Some(&1) {
        map.iter().map(|&i| 1 - i).collect()
    } else {
        map.to_vec()
    }
}

fn check_measured_dim(available: &Povm, uses: usize) -> Result<()> {
    match string_count(available.dim(), uses) {
        Some(dim) if dim <= DIM_CAP => Ok(()),
        other => Err(Error::DimensionTooLarge {
            dim: other.unwrap_or(usize::MAX),
            cap: DIM_CAP,
        }),
    }
}

/// Global optimum over all binary partitions with `f(first string) = 0`; relabeling the two
/// target outcomes maps `(x, y) ↦ (1−y, 1−x)` and leaves the error unchanged.
pub fn exhaustive_search(available: &Povm, uses: usize) -> Result<SearchResult> {
    let m = available.outcomes();
    let strings = string_count(m, uses)
        .filter(|&s| s <= EXHAUSTIVE_STRING_LIMIT)
        .ok_or(Error::SearchSpaceTooLarge {
            strings: string_count(m, uses).unwrap_or(usize::MAX),
            limit: EXHAUSTIVE_STRING_LIMIT,
        })?;
    check_measured_dim(available, uses)?;
    let operators: Vec<ComplexMatrix> = (0..strings)
        .map(|s| string_operator(available, &string_of(s, m, uses)))
        .collect::<Result<_>>()?;
    let dim = operators[0].rows();
    let canonical = 1u64 << (strings - 1);
    let scored: Vec<Result<f64>> = (0..canonical)
        .into_par_iter()
        .map(|k| {
            let index = k << 1;
            let mut q0 = ComplexMatrix::zeros(dim, dim);
            for (s, op) in operators.iter().enumerate() {
                if (index >> s) & 1 == 0 {
                    q0 = &q0 + op;
                }
            }
            Ok(bounds_of(&q0)?.epsilon)
        })
        .collect();
    let scores = scored.into_iter().collect::<Result<Vec<f64>>>()?;
    let (best_k, best) = scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &e)| if e < acc.1 { (k, e) } else { acc });
    let co_optimal: Vec<Vec<usize>> = scores
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - best <= CO_OPTIMAL_TOL)
        .map(|(k, _)| map_of_index((k as u64) << 1, strings))
        .collect();
    let map = map_of_index((best_k as u64) << 1, strings);
    let protocol = build_partition_povm(available, uses, &map, 2)?;
    let solution = bounds_of(protocol.coarse_element(0))?;
    Ok(SearchResult {
        protocol,
        solution,
        co_optimal,
        evaluated: canonical as usize,
    })
}

struct Climber<'a> {
    available: &'a Povm,
    uses: usize,
    strings: usize,
    evaluated: usize,
}

impl Climber<'_> {
    fn q0(&self, map: &[usize]) -> Result<ComplexMatrix> {
        Ok(build_partition_povm(self.available, self.uses, map, 2)?.coarse()[0].clone())
    }

    /// First-improvement descent under single-string reassignment.
    fn climb(&mut self, mut map: Vec<usize>) -> Result<(Vec<usize>, f64)> {
        let m = self.available.outcomes();
        let mut q0 = self.q0(&map)?;
        let mut best = bounds_of(&q0)?.epsilon;
        self.evaluated += 1;
        loop {
            let mut improved = false;
            for s in 0..self.strings {
                let op = string_operator(self.available, &string_of(s, m, self.uses))?;
                let candidate = if map[s] == 0 { &q0 - &op } else { &q0 + &op };
                let e = bounds_of(&candidate)?.epsilon;
                self.evaluated += 1;
                if e < best - CO_OPTIMAL_TOL {
                    map[s] = 1 - map[s];
                    q0 = candidate;
                    best = e;
                    improved = true;
                }
            }
            if !improved {
                return Ok((map, best));
            }
        }
    }
}

/// Local search seeded with the maps "any use returns `b` ↦ 0" for every outcome `b`, plus
/// `restarts` uniformly random maps. Ties keep the earliest seed.
pub fn hill_climb_search(available: &Povm, uses: usize, restarts: usize, rng: &mut Rng) -> Result<SearchResult> {
    let m = available.outcomes();
    let strings = string_count(m, uses)
        .filter(|&s| s <= HILL_CLIMB_STRING_LIMIT)
        .ok_or(Error::SearchSpaceTooLarge {
            strings: string_count(m, uses).unwrap_or(usize::MAX),
            limit: HILL_CLIMB_STRING_LIMIT,
        })?;
    check_measured_dim(available, uses)?;
    let mut seeds: Vec<Vec<usize>> = (0..m).map(|b| contains_outcome_map(m, uses, b)).collect();
    for _ in 0..restarts {
        seeds.push((0..strings).map(|_| rng.below(2)).collect());
    }
    let mut climber = Climber {
        available,
        uses,
        strings,
        evaluated: 0,
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut co_optimal: Vec<Vec<usize>> = Vec::new();
    for seed in seeds {
        let (map, e) = climber.climb(seed)?;
        let map = canonical_map(&map);
        match &best {
            Some((_, b)) if e > *b + CO_OPTIMAL_TOL => {}
            Some((_, b)) if e >= *b - CO_OPTIMAL_TOL => {
                if !co_optimal.contains(&map) {
                    co_optimal.push(map);
                }
            }
            _ => {
                co_optimal = vec![map.clone()];
                best = Some((map, e));
            }
        }
    }
    let (map, _) = best.expect("at least one seed");
    let protocol = build_partition_povm(available, uses, &map, 2)?;
    let solution = bounds_of(protocol.coarse_element(0))?;
    Ok(SearchResult {
        protocol,
        solution,
        co_optimal,
        evaluated: climber.evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::named;

    #[test]
    fn trine_two_uses() {
        let r = exhaustive_search(&named::trine(), 2).unwrap();
        assert_eq!(r.evaluated, 256);
        assert!((r.solution.epsilon - 1.0 / 18.0).abs() < 1e-12);
        assert!((r.solution.x - 8.0 / 9.0).abs() < 1e-12);
        assert!((r.solution.y - 1.0 / 18.0).abs() < 1e-12);
        assert!(r.co_optimal.contains(&contains_outcome_map(3, 2, 0)));
    }

    #[test]
    fn trine_single_use() {
        let r = exhaustive_search(&named::trine(), 1).unwrap();
        assert!((r.solution.epsilon - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_z_symmetric_uses_identity_partition() {
        let r = exhaustive_search(&named::noisy_z(0.8, 0.8).unwrap(), 1).unwrap();
        assert_eq!(r.protocol.map(), &[0, 1]);
        assert!((r.solution.x - 0.8).abs() < 1e-12 && (r.solution.y - 0.2).abs() < 1e-12);
        assert!((r.solution.epsilon - 0.2 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_many_strings() {
        let err = exhaustive_search(&named::trine(), 3).unwrap_err();
        assert!(matches!(err, Error::SearchSpaceTooLarge { strings: 27, limit: 12 }));
    }

    #[test]
    fn hill_climb_matches_exhaustive() {
        for (povm, n) in [
            (named::trine(), 1),
            (named::trine(), 2),
            (named::noisy_z(0.9, 0.6).unwrap(), 1),
            (named::noisy_z(0.9, 0.6).unwrap(), 2),
            (named::noisy_z(0.7, 0.95).unwrap(), 2),
        ] {
            let ex = exhaustive_search(&povm, n).unwrap();
            let hc = hill_climb_search(&povm, n, 4, &mut Rng::new(1, 0)).unwrap();
            assert!((ex.solution.epsilon - hc.solution.epsilon).abs() < 1e-12);
        }
    }

    #[test]
    fn hill_climb_three_uses_reaches_closed_form() {
        let r = hill_climb_search(&named::trine(), 3, 2, &mut Rng::new(2, 0)).unwrap();
        assert!(r.solution.epsilon <= 0.5 / 27.0 + 1e-12);
    }

    #[test]
    fn degenerate_povm_optimum() {
        let r = hill_climb_search(&named::trivial(2, 2), 2, 3, &mut Rng::new(3, 0)).unwrap();
        assert!((r.solution.epsilon - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        let ex = exhaustive_search(&named::trivial(2, 2), 2).unwrap();
        assert!((ex.solution.epsilon - 1.0 / 12f64.sqrt()).abs() < 1e-12);
    }

    /// With `Q₀ = c·I` only balanced partitions reach `1/√12`; the others are strictly worse.
    #[test]
    fn degenerate_povm_unbalanced_partitions_lose() {
        let povm = named::trivial(2, 2);
        for index in 1u64..15 {
            let map = map_of_index(index, 4);
            let p = build_partition_povm(&povm, 2, &map, 2).unwrap();
            let s = bounds_of(p.coarse_element(0)).unwrap();
            let c = map.iter().filter(|&&t| t == 0).count() as f64 / 4.0;
            let closed = (((1.0 - 2.0 * c).powi(2) + c * (1.0 - c)) / 3.0).sqrt();
            assert!((s.epsilon - closed).abs() < 1e-12);
            if c == 0.5 {
                assert!((s.epsilon - 1.0 / 12f64.sqrt()).abs() < 1e-12);
            } else {
                assert!(s.epsilon > 1.0 / 12f64.sqrt() + 1e-3);
            }
        }
    }
}
