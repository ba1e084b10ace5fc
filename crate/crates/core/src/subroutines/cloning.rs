//! Generalized classical cloning: prepare `|e_i⟩^⊗N`, measure every copy with the available
//! POVM and guess `i` by maximum likelihood.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{hermitian_eig, is_proportional_to_identity, ComplexMatrix, Povm, Rng};

/// Rows closer than this in total variation count as identical.
pub const DISTINCT_TV: f64 = 1e-6;
/// Exact error rates refuse more type classes than this.
pub const EXACT_TYPE_LIMIT: usize = 10_000_000;
const MAX_REPAIRS: usize = 64;
const THETA_SCAN: usize = 30;
const CHUNK: usize = 8192;

/// Orthonormal states `|e_i⟩` and the outcome table `P(a|i) = ⟨e_i|Mₐ|e_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CloningBasis {
    pub vectors: Vec<Vec<Complex64>>,
    /// `table[i][a]`
    pub table: Vec<Vec<f64>>,
    /// Rotation angles used while separating rows, in order of application.
    pub rotations: Vec<f64>,
}

impl CloningBasis {
    /// Wraps a table directly, without states. Used for hypothesis-testing experiments.
    pub fn from_table(table: Vec<Vec<f64>>) -> Self {
        Self {
            vectors: Vec::new(),
            table,
            rotations: Vec::new(),
        }
    }

    pub fn gram_defect(&self) -> f64 {
        let b = ComplexMatrix::from_columns(&self.vectors).expect("equal lengths");
        b.adjoint().matmul(&b).expect("shapes agree").distance(&ComplexMatrix::identity(self.vectors.len()))
    }

    /// Smallest total-variation distance between two rows.
    pub fn min_row_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.table.len() {
            for j in i + 1..self.table.len() {
                best = best.min(total_variation(&self.table[i], &self.table[j]));
            }
        }
        best
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn row(povm: &Povm, v: &[Complex64]) -> Vec<f64> {
    povm.elements()
        .iter()
        .map(|m| m.expectation(v).expect("dimension checked").max(0.0))
        .collect()
}

fn rows(povm: &Povm, basis: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    basis.iter().map(|v| row(povm, v)).collect()
}

fn collisions(table: &[Vec<f64>]) -> usize {
    let mut count = 0;
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            if total_variation(&table[i], &table[j]) < DISTINCT_TV {
                count += 1;
            }
        }
    }
    count
}

fn first_collision(table: &[Vec<f64>]) -> Option<(usize, usize)> {
    (0..table.len())
        .flat_map(|i| (i + 1..table.len()).map(move |j| (i, j)))
        .find(|&(i, j)| total_variation(&table[i], &table[j]) < DISTINCT_TV)
}

/// `B†MB` for the basis vectors with the given indices.
fn restrict(m: &ComplexMatrix, basis: &[Vec<Complex64>], idx: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| {
        m.sandwich(&basis[idx[r]], &basis[idx[c]]).expect("dimension checked")
    })
}

/// Replaces the listed basis vectors by the eigenvectors of the first element that is not
/// proportional to the identity on their span. Returns false when every element is.
fn diagonalize_on(povm: &Povm, basis: &mut [Vec<Complex64>], idx: &[usize]) -> Result<bool> {
    for m in povm.elements() {
        let r = restrict(m, basis, idx);
        if is_proportional_to_identity(&r) {
            continue;
        }
        let eig = hermitian_eig(&r)?;
        let old: Vec<Vec<Complex64>> = idx.iter().map(|&i| basis[i].clone()).collect();
        for (slot, &i) in idx.iter().enumerate() {
            let coeffs = eig.vector(slot);
            basis[i] = (0..old[0].len())
                .map(|k| old.iter().zip(&coeffs).map(|(v, c)| v[k] * c).sum())
                .collect();
        }
        return Ok(true);
    }
    Ok(false)
}

/// Finds orthonormal states whose outcome distributions are pairwise distinct.
///
/// Starting from the computational basis, each colliding pair is first separated by
/// diagonalizing some element on the pair's span. When every element is proportional to the
/// identity there, the first basis state with a different distribution is rotated into the
/// pair with `θ = π/8, π/16, …` until the number of collisions drops. When no state with a
/// different distribution remains, the whole colliding group is diagonalized together.
pub fn select_cloning_basis(available: &Povm) -> Result<CloningBasis> {
    if available.is_trivial() {
        return Err(Error::TrivialMeasurement);
    }
    let d = available.dim();
    let mut basis: Vec<Vec<Complex64>> = (0..d)
        .map(|i| (0..d).map(|k| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    let mut rotations = Vec::new();
    for _ in 0..MAX_REPAIRS {
        let table = rows(available, &basis);
        let Some((j0, j1)) = first_collision(&table) else {
            return Ok(CloningBasis {
                vectors: basis,
                table,
                rotations,
            });
        };
        let before = collisions(&table);
        if diagonalize_on(available, &mut basis, &[j0, j1])? && collisions(&rows(available, &basis)) < before {
            continue;
        }
        let group: Vec<usize> = (0..d)
            .filter(|&k| total_variation(&table[k], &table[j0]) < DISTINCT_TV)
            .collect();
        let outsiders: Vec<usize> = (0..d).filter(|k| !group.contains(k)).collect();
        let mut repaired = false;
        'outer: for &k in &outsiders {
            for step in 0..THETA_SCAN {
                let theta = std::f64::consts::PI / f64::from(8u32 << step);
                let (s, c) = theta.sin_cos();
                let mut trial = basis.clone();
                trial[k] = basis[k].iter().zip(&basis[j0]).map(|(a, b)| a * c + b * s).collect();
                trial[j0] = basis[k].iter().zip(&basis[j0]).map(|(a, b)| -a * s + b * c).collect();
                if collisions(&rows(available, &trial)) < before {
                    basis = trial;
                    rotations.push(theta);
                    repaired = true;
                    break 'outer;
                }
            }
        }
        if repaired {
            continue;
        }
        if !diagonalize_on(available, &mut basis, &group)? {
            return Err(Error::TrivialMeasurement);
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_REPAIRS,
        gap: collisions(&rows(available, &basis)) as f64,
        best: 0.0,
    })
}

fn log_likelihoods(counts: impl Iterator<Item = (usize, usize)> + Clone, table: &[Vec<f64>]) -> Vec<Option<f64>> {
    table
        .iter()
        .map(|row| {
            let mut total = 0.0;
            for (a, n) in counts.clone() {
                if n == 0 {
                    continue;
                }
                if row[a] <= 0.0 {
                    return None;
                }
                total += n as f64 * row[a].ln();
            }
            Some(total)
        })
        .collect()
}

fn argmax(lls: &[Option<f64>]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, ll) in lls.iter().enumerate() {
        if let Some(v) = *ll {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i).ok_or(Error::Undecodable)
}

/// Maximum-likelihood hypothesis for an outcome string; ties go to the smallest index and a
/// zero-probability outcome eliminates a hypothesis.
pub fn ml_decode(string: &[usize], table: &[Vec<f64>]) -> Result<usize> {
    let m = table.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; m];
    for &a in string {
        if a >= m {
            return Err(Error::InvalidArgument(format!("outcome {a} outside a {m}-outcome table")));
        }
        counts[a] += 1;
    }
    ml_decode_counts(&counts, table)
}

/// Decision from outcome counts; identical to [`ml_decode`] on any string with these counts.
pub fn ml_decode_counts(counts: &[usize], table: &[Vec<f64>]) -> Result<usize> {
    argmax(&log_likelihoods(counts.iter().copied().enumerate(), table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorRateMode {
    Exact,
    Sampled { trials: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloningErrorRate {
    pub per_state: Vec<f64>,
    pub average: f64,
    /// Zero in exact mode.
    pub per_state_standard_error: Vec<f64>,
    pub average_standard_error: f64,
    /// Probability mass (exact) or count (sampled) of undecodable strings, included in the errors.
    pub undecodable: f64,
}

/// All compositions of `n` into `parts` non-negative parts, in lexicographic order.
fn compositions(n: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn go(rest: usize, slot: usize, current: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slot + 1 == current.len() {
            current[slot] = rest;
            f(current);
            return;
        }
        for k in 0..=rest {
            current[slot] = k;
            go(rest - k, slot + 1, current, f);
        }
    }
    if parts == 0 {
        return;
    }
    let mut current = vec![0; parts];
    go(n, 0, &mut current, f);
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Error probability of maximum-likelihood decoding after `N` copies, per prepared state and
/// averaged over states.
///
/// Exact mode sums over outcome types (multinomial count vectors) since the decision depends
/// only on counts; this covers every one of the `mᴺ` strings. Sampled mode draws `trials`
/// strings per state on independent substreams.
pub fn cloning_error_rate(basis: &CloningBasis, copies: usize, mode: ErrorRateMode, rng: &Rng) -> Result<CloningErrorRate> {
    let table = &basis.table;
    let d = table.len();
    if d == 0 {
        return Err(Error::InvalidArgument("empty outcome table".into()));
    }
    let m = table[0].len();
    match mode {
        ErrorRateMode::Exact => {
            let types = binomial(copies + m - 1, m - 1).filter(|&t| t <= EXACT_TYPE_LIMIT).ok_or_else(|| {
                Error::TooLarge(format!("more than {EXACT_TYPE_LIMIT} outcome types for N={copies}, m={m}"))
            })?;
            let log_fact: Vec<f64> = std::iter::once(0.0)
                .chain((1..=copies).scan(0.0, |acc, k| {
                    *acc += (k as f64).ln();
                    Some(*acc)
                }))
                .collect();
            let mut correct = vec![0.0; d];
            let mut undecodable = 0.0;
            let mut seen = 0;
            compositions(copies, m, &mut |counts| {
                seen += 1;
                let lls = log_likelihoods(counts.iter().copied().enumerate(), table);
                let log_multi = log_fact[copies] - counts.iter().map(|&n| log_fact[n]).sum::<f64>();
                match argmax(&lls) {
                    Ok(i) => {
                        if let Some(ll) = lls[i] {
                            correct[i] += (log_multi + ll).exp();
                        }
                    }
                    Err(_) => {
                        undecodable += lls
                            .iter()
                            .flatten()
                            .map(|ll| (log_multi + ll).exp())
                            .sum::<f64>()
                            / d as f64;
                    }
                }
            });
            debug_assert_eq!(seen, types);
            let per_state: Vec<f64> = correct.iter().map(|c| (1.0 - c).clamp(0.0, 1.0)).collect();
            let average = per_state.iter().sum::<f64>() / d as f64;
            Ok(CloningErrorRate {
                per_state,
                average,
                per_state_standard_error: vec![0.0; d],
                average_standard_error: 0.0,
                undecodable,
            })
        }
        ErrorRateMode::Sampled { trials } => {
            if trials == 0 {
                return Err(Error::TooFewSamples { got: 0, min: 1 });
            }
            let chunks = trials.div_ceil(CHUNK);
            let base = rng.substream() << 32;
            let mut per_state = Vec::with_capacity(d);
            let mut ses = Vec::with_capacity(d);
            let mut undecodable = 0usize;
            for (i, row) in table.iter().enumerate() {
                let results: Vec<(usize, usize)> = (0..chunks)
                    .into_par_iter()
                    .map(|c| {
                        let mut local = rng.fork(base + ((i as u64) << 24) + c as u64);
                        let count = CHUNK.min(trials - c * CHUNK);
                        let mut errors = 0;
                        let mut undec = 0;
                        let mut counts = vec![0usize; m];
                        for _ in 0..count {
                            counts.iter_mut().for_each(|n| *n = 0);
                            for _ in 0..copies {
                                counts[local.categorical(row)] += 1;
                            }
                            match ml_decode_counts(&counts, table) {
                                Ok(g) if g == i => {}
                                Ok(_) => errors += 1,
                                Err(_) => {
                                    errors += 1;
                                    undec += 1;
                                }
                            }
                        }
                        (errors, undec)
                    })
                    .collect();
                let errors: usize = results.iter().map(|r| r.0).sum();
                undecodable += results.iter().map(|r| r.1).sum::<usize>();
                let p = errors as f64 / trials as f64;
                per_state.push(p);
                ses.push((p * (1.0 - p) / trials as f64).sqrt());
            }
            let average = per_state.iter().sum::<f64>() / d as f64;
            let average_standard_error = ses.iter().map(|s| s * s).sum::<f64>().sqrt() / d as f64;
            Ok(CloningErrorRate {
                per_state,
                average,
                per_state_standard_error: ses,
                average_standard_error,
                undecodable: undecodable as f64,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffInfo {
    /// `−min_s log Σₐ P(a)ˢ Q(a)¹⁻ˢ`, infinite for disjoint supports.
    pub value: f64,
    pub minimizer: f64,
    pub disjoint_support: bool,
}

/// `log Σₐ P(a)ˢ Q(a)¹⁻ˢ` over the common support.
pub fn chernoff_log_sum(p: &[f64], q: &[f64], s: f64) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| a.powf(s) * b.powf(1.0 - s))
        .sum::<f64>()
        .ln()
}

/// Chernoff information by golden-section search on the convex log-sum over `s ∈ [0, 1]`.
pub fn chernoff_information(p: &[f64], q: &[f64]) -> Result<ChernoffInfo> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch("distributions over different alphabets".into()));
    }
    if !p.iter().zip(q).any(|(a, b)| *a > 0.0 && *b > 0.0) {
        return Ok(ChernoffInfo {
            value: f64::INFINITY,
            minimizer: f64::NAN,
            disjoint_support: true,
        });
    }
    let f = |s: f64| chernoff_log_sum(p, q, s);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for s in [0.0, 1.0] {
        let v = f(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    Ok(ChernoffInfo {
        value: (-best.1).max(0.0),
        minimizer: best.0,
        disjoint_support: false,
    })
}

/// Smallest pairwise Chernoff information over the rows of a table.
pub fn pairwise_min_chernoff(table: &[Vec<f64>]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            best = best.min(chernoff_information(&table[i], &table[j])?.value);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{named, random};

    fn trine_table() -> Vec<Vec<f64>> {
        vec![vec![2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], vec![0.0, 0.5, 0.5]]
    }

    #[test]
    fn trine_keeps_computational_basis() {
        let b = select_cloning_basis(&named::trine()).unwrap();
        assert!(b.rotations.is_empty());
        for (r, e) in b.table.iter().zip(trine_table()) {
            for (x, y) in r.iter().zip(&e) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_qutrit_rotation() {
        let b = select_cloning_basis(&named::degenerate_qutrit()).unwrap();
        let theta = std::f64::consts::PI / 8.0;
        assert_eq!(b.rotations, vec![theta]);
        let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
        let expect = [[c2, s2], [s2, c2], [0.0, 1.0]];
        for (r, e) in b.table.iter().zip(expect) {
            assert!((r[0] - e[0]).abs() < 1e-12 && (r[1] - e[1]).abs() < 1e-12);
        }
        assert!(b.gram_defect() < 1e-12);
    }

    #[test]
    fn trivial_is_rejected() {
        assert!(matches!(select_cloning_basis(&named::trivial(2, 2)), Err(Error::TrivialMeasurement)));
    }

    #[test]
    fn pair_diagonalization_when_restriction_is_not_scalar() {
        // |0⟩ and |1⟩ collide but M₀ has an off-diagonal element between them
        let h = 0.25;
        let m0 = ComplexMatrix::from_real(3, 3, &[0.5, h, 0.0, h, 0.5, 0.0, 0.0, 0.0, 0.9]).unwrap();
        let m1 = &ComplexMatrix::identity(3) - &m0;
        let povm = Povm::new(vec![m0, m1]).unwrap();
        let b = select_cloning_basis(&povm).unwrap();
        assert!(b.rotations.is_empty());
        assert!(b.min_row_distance() >= DISTINCT_TV);
        assert!(b.gram_defect() < 1e-12);
    }

    #[test]
    fn random_povms_always_succeed() {
        let mut rng = Rng::new(77, 0);
        for k in 0..100 {
            let d = 2 + k % 3;
            let povm = random::random_povm(d, 2 + k % 3, &mut rng).unwrap();
            let b = select_cloning_basis(&povm).unwrap();
            assert!(b.min_row_distance() >= DISTINCT_TV);
        }
    }

    #[test]
    fn decoding_examples() {
        let t = trine_table();
        assert_eq!(ml_decode(&[0], &t).unwrap(), 0);
        assert_eq!(ml_decode(&[1, 1], &t).unwrap(), 1);
        assert_eq!(ml_decode(&[], &t).unwrap(), 0);
        let disjoint = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(ml_decode(&[0, 1], &disjoint), Err(Error::Undecodable)));
    }

    #[test]
    fn single_copy_error_rates() {
        let r = cloning_error_rate(&CloningBasis::from_table(trine_table()), 1, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap();
        assert!((r.per_state[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.per_state[1].abs() < 1e-15);
    }

    #[test]
    fn exact_error_matches_closed_form_and_is_monotone() {
        let basis = CloningBasis::from_table(trine_table());
        let mut previous = 1.0;
        for n in 1..=10 {
            let r = cloning_error_rate(&basis, n, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap();
            let expect = 0.5 * 3f64.powi(-(n as i32));
            assert!((r.average - expect).abs() < 1e-14, "N={n}");
            assert!(r.average <= previous);
            previous = r.average;
        }
    }

    #[test]
    fn exact_matches_brute_force_enumeration() {
        let table = vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5], vec![0.3, 0.4, 0.3]];
        let basis = CloningBasis::from_table(table.clone());
        let n = 5;
        let exact = cloning_error_rate(&basis, n, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap();
        let mut errors = [0.0; 3];
        for s in 0..3usize.pow(n as u32) {
            let string = crate::vnsynth::string_of(s, 3, n);
            let guess = ml_decode(&string, &table).unwrap();
            for (i, row) in table.iter().enumerate() {
                if guess != i {
                    errors[i] += string.iter().map(|&a| row[a]).product::<f64>();
                }
            }
        }
        for i in 0..3 {
            assert!((exact.per_state[i] - errors[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn sampled_agrees_with_exact() {
        let basis = CloningBasis::from_table(trine_table());
        for n in [1, 2, 4] {
            let exact = cloning_error_rate(&basis, n, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap();
            let sampled = cloning_error_rate(&basis, n, ErrorRateMode::Sampled { trials: 100_000 }, &Rng::new(9, 0)).unwrap();
            assert!((sampled.average - exact.average).abs() <= 4.0 * sampled.average_standard_error + 1e-12);
        }
    }

    #[test]
    fn identical_rows_give_half() {
        let basis = CloningBasis::from_table(vec![vec![0.3, 0.7], vec![0.3, 0.7]]);
        for n in [1, 5, 12] {
            let r = cloning_error_rate(&basis, n, ErrorRateMode::Exact, &Rng::new(0, 0)).unwrap();
            assert!((r.average - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn chernoff_cases() {
        let p = [0.2, 0.3, 0.5];
        assert!(chernoff_information(&p, &p).unwrap().value.abs() < 1e-15);
        let disjoint = chernoff_information(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(disjoint.disjoint_support && disjoint.value.is_infinite());
        let t = trine_table();
        let c = chernoff_information(&t[0], &t[1]).unwrap();
        assert!((c.value - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn chernoff_matches_grid_oracle() {
        let mut rng = Rng::new(5, 0);
        let mut pairs = vec![(trine_table()[0].clone(), trine_table()[1].clone())];
        for _ in 0..20 {
            let mut draw = || {
                let v: Vec<f64> = (0..4).map(|_| rng.uniform() + 0.01).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
            };
            pairs.push((draw(), draw()));
        }
        for (p, q) in pairs {
            let c = chernoff_information(&p, &q).unwrap();
            let grid = (0..=10_000)
                .map(|k| chernoff_log_sum(&p, &q, k as f64 / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!((c.value + grid).abs() < 1e-8, "{} vs {}", c.value, -grid);
        }
    }
}
