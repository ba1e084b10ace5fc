//! Block codes over an associated channel. A message `i` with base-`d` digits is encoded into a
//! codeword of basis states, each symbol is measured once, and the outcome string is decoded by
//! maximum likelihood.

use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;

use super::channel::ClassicalChannel;
use crate::error::{Error, Result};
use crate::qcore::{Povm, Rng};
use crate::subroutines::{cloning_error_rate, ml_decode, CloningBasis, ErrorRateMode};

/// Largest codebook, `d^k`.
pub const CODEBOOK_LIMIT: usize = 1 << 16;
/// Largest number of outcome strings enumerated by the exact evaluators.
pub const EXACT_STRING_LIMIT: usize = 1 << 22;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    /// Each symbol repeated `copies` times; `copies = 1` is the uncoded identity code.
    Repetition { copies: usize },
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCode {
    kind: CodeKind,
    k: usize,
    alphabet: usize,
    length: usize,
    codewords: Vec<Vec<usize>>,
}

fn codebook_size(d: usize, k: usize) -> Result<usize> {
    u32::try_from(k)
        .ok()
        .and_then(|k| d.checked_pow(k))
        .filter(|&s| s <= CODEBOOK_LIMIT)
        .ok_or_else(|| Error::TooLarge(format!("codebook {d}^{k} exceeds {CODEBOOK_LIMIT} codewords")))
}

fn digits(mut index: usize, d: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

impl BlockCode {
    pub fn repetition(k: usize, copies: usize, alphabet: usize) -> Result<Self> {
        if copies == 0 || alphabet < 2 {
            return Err(Error::InvalidArgument(format!(
                "repetition code needs copies ≥ 1 and alphabet ≥ 2, got {copies}, {alphabet}"
            )));
        }
        let size = codebook_size(alphabet, k)?;
        let codewords = (0..size)
            .map(|i| {
                digits(i, alphabet, k)
                    .into_iter()
                    .flat_map(|u| std::iter::repeat_n(u, copies))
                    .collect()
            })
            .collect();
        Ok(Self {
            kind: CodeKind::Repetition { copies },
            k,
            alphabet,
            length: k * copies,
            codewords,
        })
    }

    /// `k` symbols sent as they are.
    pub fn identity(k: usize, alphabet: usize) -> Result<Self> {
        Self::repetition(k, 1, alphabet)
    }

    /// Uniformly random injective codebook of `d^k` words of length `length`.
    pub fn random(k: usize, length: usize, alphabet: usize, rng: &mut Rng) -> Result<Self> {
        if alphabet < 2 || length < k {
            return Err(Error::InvalidArgument(format!(
                "an injective code needs alphabet ≥ 2 and length ≥ k, got d={alphabet}, N={length}, k={k}"
            )));
        }
        let size = codebook_size(alphabet, k)?;
        let mut seen = HashSet::with_capacity(size);
        let mut codewords = Vec::with_capacity(size);
        while codewords.len() < size {
            let word: Vec<usize> = (0..length).map(|_| rng.below(alphabet)).collect();
            if seen.insert(word.clone()) {
                codewords.push(word);
            }
        }
        Ok(Self {
            kind: CodeKind::Random,
            k,
            alphabet,
            length,
            codewords,
        })
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn message_symbols(&self) -> usize {
        self.k
    }

    pub fn block_length(&self) -> usize {
        self.length
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn messages(&self) -> usize {
        self.codewords.len()
    }

    pub fn codeword(&self, message: usize) -> &[usize] {
        &self.codewords[message]
    }

    /// Bits per channel use, `k log₂ d / N`.
    pub fn information_rate(&self) -> f64 {
        if self.length == 0 {
            return 0.0;
        }
        self.k as f64 * (self.alphabet as f64).log2() / self.length as f64
    }

    /// Uses of the available measurement per reproduced target measurement, `N / k`.
    pub fn uses_per_symbol(&self) -> f64 {
        self.length as f64 / self.k as f64
    }

    /// Maximum-likelihood message for an outcome string. Ties go to the smallest message; a
    /// string impossible under every codeword is [`Error::Undecodable`].
    pub fn decode(&self, outcomes: &[usize], channel: &ClassicalChannel) -> Result<usize> {
        if outcomes.len() != self.length {
            return Err(Error::ShapeMismatch(format!(
                "{} outcomes for a block of length {}",
                outcomes.len(),
                self.length
            )));
        }
        if channel.inputs() != self.alphabet {
            return Err(Error::ShapeMismatch(format!(
                "channel with {} inputs for a code over {} symbols",
                channel.inputs(),
                self.alphabet
            )));
        }
        match self.kind {
            // the likelihood factorizes over segments, so per-segment decisions are the ML decision
            CodeKind::Repetition { copies } => outcomes
                .chunks(copies)
                .try_fold(0usize, |acc, seg| Ok(acc * self.alphabet + ml_decode(seg, channel.rows())?)),
            CodeKind::Random => {
                let mut best: Option<(usize, f64)> = None;
                for (i, word) in self.codewords.iter().enumerate() {
                    let mut ll = 0.0;
                    for (&x, &a) in word.iter().zip(outcomes) {
                        let p = *channel.row(x).get(a).ok_or_else(|| {
                            Error::InvalidArgument(format!("outcome {a} outside the channel"))
                        })?;
                        if p <= 0.0 {
                            ll = f64::NEG_INFINITY;
                            break;
                        }
                        ll += p.ln();
                    }
                    if ll > f64::NEG_INFINITY && best.is_none_or(|(_, b)| ll > b) {
                        best = Some((i, ll));
                    }
                }
                best.map(|(i, _)| i).ok_or(Error::Undecodable)
            }
        }
    }
}

fn message_weights(code: &BlockCode, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = code.messages();
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) => {
            let sum: f64 = w.iter().sum();
            if w.len() != n {
                return Err(Error::ShapeMismatch(format!("{} weights for {n} messages", w.len())));
            }
            if w.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument("message weights are not a distribution".into()));
            }
            Ok(w.to_vec())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSimulation {
    pub error_rate: f64,
    pub standard_error: f64,
    /// Empirical frequency of each decoded message.
    pub effective_distribution: Vec<f64>,
    /// Fraction of trials that could not be decoded; counted as errors.
    pub undecodable: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Monte Carlo block error. Messages are drawn from `weights` (`|αᵢ|²`, uniform by default);
/// trials run in chunks of 4096, each on its own substream.
pub fn simulate_block_protocol(
    channel: &ClassicalChannel,
    code: &BlockCode,
    weights: Option<&[f64]>,
    trials: usize,
    rng: &Rng,
) -> Result<BlockSimulation> {
    if trials == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let w = message_weights(code, weights)?;
    if channel.inputs() != code.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "channel with {} inputs for a code over {} symbols",
            channel.inputs(),
            code.alphabet()
        )));
    }
    let chunks = trials.div_ceil(CHUNK);
    let base = rng.substream() << 32;
    let tallies: Vec<Result<(usize, usize, Vec<usize>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng.fork(base + c as u64);
            let n = CHUNK.min(trials - c * CHUNK);
            let (mut errors, mut undecodable) = (0, 0);
            let mut decoded = vec![0usize; code.messages()];
            let mut outcomes = vec![0usize; code.block_length()];
            for _ in 0..n {
                let i = r.categorical(&w);
                for (o, &x) in outcomes.iter_mut().zip(code.codeword(i)) {
                    *o = r.categorical(channel.row(x));
                }
                match code.decode(&outcomes, channel) {
                    Ok(j) => {
                        decoded[j] += 1;
                        errors += usize::from(j != i);
                    }
                    Err(Error::Undecodable) => {
                        errors += 1;
                        undecodable += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok((errors, undecodable, decoded))
        })
        .collect();
    let (mut errors, mut undecodable) = (0, 0);
    let mut decoded = vec![0usize; code.messages()];
    for t in tallies {
        let (e, u, d) = t?;
        errors += e;
        undecodable += u;
        for (acc, x) in decoded.iter_mut().zip(d) {
            *acc += x;
        }
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    Ok(BlockSimulation {
        error_rate: p,
        standard_error: (p * (1.0 - p) / n).sqrt(),
        effective_distribution: decoded.into_iter().map(|c| c as f64 / n).collect(),
        undecodable: undecodable as f64 / n,
        trials,
        seed: rng.seed(),
    })
}

/// Exact distribution of decoded messages.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistribution {
    pub error_rate: f64,
    pub decoded: Vec<f64>,
    pub undecodable: f64,
}

fn for_each_string(m: usize, n: usize, limit: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| m.checked_pow(n))
        .filter(|&t| t <= limit)
        .ok_or_else(|| Error::TooLarge(format!("{m}^{n} outcome strings exceed {limit}")))?;
    for s in 0..total {
        f(&digits(s, m, n))?;
    }
    Ok(())
}

/// Sums over every outcome string of the classical picture: message `i` with weight `wᵢ`,
/// outcomes i.i.d. from the channel rows of its codeword.
pub fn block_distribution_exact(
    channel: &ClassicalChannel,
    code: &BlockCode,
    weights: Option<&[f64]>,
) -> Result<BlockDistribution> {
    let w = message_weights(code, weights)?;
    let mut decoded = vec![0.0; code.messages()];
    let (mut error, mut undecodable) = (0.0, 0.0);
    for_each_string(channel.outputs(), code.block_length(), EXACT_STRING_LIMIT, |a| {
        let guess = match code.decode(a, channel) {
            Ok(j) => Some(j),
            Err(Error::Undecodable) => None,
            Err(e) => return Err(e),
        };
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            let p: f64 = code.codeword(i).iter().zip(a).map(|(&x, &o)| channel.row(x)[o]).product();
            let mass = wi * p;
            match guess {
                Some(j) => {
                    decoded[j] += mass;
                    if j != i {
                        error += mass;
                    }
                }
                None => {
                    undecodable += mass;
                    error += mass;
                }
            }
        }
        Ok(())
    })?;
    Ok(BlockDistribution {
        error_rate: error,
        decoded,
        undecodable,
    })
}

/// Exact block error of the `k`-symbol repetition code under uniform messages:
/// `1 − (1 − e)^k` with `e` the per-symbol error from outcome-type enumeration.
pub fn repetition_error_exact(channel: &ClassicalChannel, k: usize, copies: usize) -> Result<f64> {
    let basis = CloningBasis::from_table(channel.rows().to_vec());
    let per_symbol = cloning_error_rate(&basis, copies, ErrorRateMode::Exact, &Rng::new(0, 0))?.average;
    Ok(1.0 - (1.0 - per_symbol).powi(k as i32))
}

/// Outcome statistics of the quantum protocol on the encoded superposition
/// `Σᵢ αᵢ |cᵢ⟩`, with each of the `N` subsystems measured by `available` and the result
/// decoded with the associated channel. Returns the decoded distribution; `error_rate` is
/// `Σᵢ |αᵢ|² P(decoded ≠ i)` only when the codeword branches do not interfere.
pub fn block_distribution_statevector(
    available: &Povm,
    channel: &ClassicalChannel,
    code: &BlockCode,
    amplitudes: &[Complex64],
) -> Result<BlockDistribution> {
    if amplitudes.len() != code.messages() {
        return Err(Error::ShapeMismatch(format!(
            "{} amplitudes for {} messages",
            amplitudes.len(),
            code.messages()
        )));
    }
    if available.dim() != code.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "measurement on dimension {} for a code over {} symbols",
            available.dim(),
            code.alphabet()
        )));
    }
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    let support: Vec<usize> = (0..amplitudes.len()).filter(|&i| amplitudes[i].norm_sqr() > 0.0).collect();
    let mut decoded = vec![0.0; code.messages()];
    let (mut error, mut undecodable) = (0.0, 0.0);
    for_each_string(available.outcomes(), code.block_length(), 1 << 16, |a| {
        // ⟨Φ|M_{a₁}⊗…⊗M_{a_N}|Φ⟩ = Σ_{i,i'} αᵢ* α_{i'} Πₜ ⟨c_{i,t}|M_{aₜ}|c_{i',t}⟩
        let mut p = Complex64::new(0.0, 0.0);
        for &i in &support {
            for &i2 in &support {
                let mut term = amplitudes[i].conj() * amplitudes[i2];
                for ((&x, &y), &o) in code.codeword(i).iter().zip(code.codeword(i2)).zip(a) {
                    term *= available.element(o)[(x, y)];
                }
                p += term;
            }
        }
        let p = p.re.max(0.0);
        match code.decode(a, channel) {
            Ok(j) => {
                decoded[j] += p;
                // the classical error weight of this string
                for &i in &support {
                    if i != j {
                        let pi: f64 = code.codeword(i).iter().zip(a).map(|(&x, &o)| channel.row(x)[o]).product();
                        error += amplitudes[i].norm_sqr() * pi;
                    }
                }
            }
            Err(Error::Undecodable) => {
                undecodable += p;
                error += p;
            }
            Err(e) => return Err(e),
        }
        Ok(())
    })?;
    Ok(BlockDistribution {
        error_rate: error,
        decoded,
        undecodable,
    })
}
