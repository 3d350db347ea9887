//! Independent oracles for the random-codebook error, and explicit codes.
//!
//! - [`exhaustive_expected_error`] enumerates every source and codeword
//!   sequence at tiny `n`;
//! - [`mc_expected_error`] samples source sequences and codebooks;
//! - [`derandomize_code`] draws candidate codebooks and keeps the best one,
//!   turning the random-coding argument into a concrete encoder/decoder.
//!
//! Randomness is keyed by `(seed, index)`: trial `t` draws from a ChaCha
//! stream selected by `t`, so results do not depend on thread scheduling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::types::{CellBounds, Threshold};

/// Largest `|U|ⁿ` or `|V|ⁿ` the exhaustive oracles will enumerate.
pub const EXHAUSTIVE_CAP: u64 = 1_000_000;

const CODEBOOK_SALT: u64 = 0x636f_6465_626f_6f6b;

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_size(alphabet: usize, n: usize) -> Result<()> {
    let sequences = (alphabet as f64).powi(n as i32);
    if sequences > EXHAUSTIVE_CAP as f64 {
        return Err(Error::InstanceTooLarge { sequences, cap: EXHAUSTIVE_CAP });
    }
    Ok(())
}

/// Every sequence of length `n` over `{0..k}` with positive probability
/// under the i.i.d. law `probs`, paired with that probability.
fn all_sequences(probs: &[f64], n: usize) -> Vec<(Vec<usize>, f64)> {
    let k = probs.len();
    let mut out = Vec::new();
    let mut seq = vec![0usize; n];
    loop {
        let p: f64 = seq.iter().map(|&s| probs[s]).product();
        if p > 0.0 {
            out.push((seq.clone(), p));
        }
        // odometer increment, last position fastest
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            seq[i] += 1;
            if seq[i] < k {
                break;
            }
            seq[i] = 0;
        }
    }
}

/// Joint-typicality test for sequence pairs at a fixed blocklength.
#[derive(Clone, Debug)]
pub struct PairTypicality {
    bounds: CellBounds,
    size_v: usize,
}

impl PairTypicality {
    pub fn new(dist: &JointDistribution, n: usize, delta: &Threshold) -> Self {
        PairTypicality { bounds: CellBounds::new(dist, n as u64, delta), size_v: dist.size_v() }
    }

    pub fn is_typical(&self, u: &[usize], v: &[usize]) -> bool {
        debug_assert_eq!(u.len(), v.len());
        let mut counts = vec![0u64; self.bounds.lo().len()];
        for (&a, &b) in u.iter().zip(v) {
            counts[a * self.size_v + b] += 1;
        }
        self.bounds.admits(&counts)
    }
}

/// `E[p_C]` by brute force: for each `uⁿ`, `Π(uⁿ)` is summed over every
/// `vⁿ` and raised to the power `m`.
pub fn exhaustive_expected_error(n: usize, m: u64, dist: &JointDistribution, delta: &Threshold) -> Result<f64> {
    check_size(dist.size_u(), n)?;
    check_size(dist.size_v(), n)?;
    let typical = PairTypicality::new(dist, n, delta);
    let vs = all_sequences(dist.marginal_v().probs(), n);
    let us = all_sequences(dist.marginal_u().probs(), n);
    let total: f64 = us
        .par_iter()
        .map(|(u, pu)| {
            let pi: f64 = vs.iter().filter(|(v, _)| typical.is_typical(u, v)).map(|(_, pv)| pv).sum();
            let miss = (1.0 - pi).max(0.0);
            pu * if m <= i32::MAX as u64 { miss.powi(m as i32) } else { miss.powf(m as f64) }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total.min(1.0))
}

/// A Monte Carlo error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub mean: f64,
    pub trials: u64,
    /// `√(mean(1 − mean)/trials)`.
    pub std_error: f64,
    pub seed: u64,
}

impl ErrorEstimate {
    fn from_failures(failures: u64, trials: u64, seed: u64) -> Self {
        let mean = failures as f64 / trials as f64;
        ErrorEstimate { mean, trials, std_error: (mean * (1.0 - mean) / trials as f64).sqrt(), seed }
    }

    /// `|mean − exact| / std_error`; `0` when both agree exactly, `∞` when a
    /// zero-variance estimate disagrees.
    pub fn z_score(&self, exact: f64) -> f64 {
        let gap = (self.mean - exact).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

struct Samplers {
    u: WeightedIndex<f64>,
    v: WeightedIndex<f64>,
}

impl Samplers {
    fn new(dist: &JointDistribution) -> Self {
        Samplers {
            u: WeightedIndex::new(dist.marginal_u().probs()).expect("valid marginal"),
            v: WeightedIndex::new(dist.marginal_v().probs()).expect("valid marginal"),
        }
    }
}

/// Estimates `E[p_C]`: each trial draws `Uⁿ` and a fresh codebook of `m`
/// i.i.d. `P_Vⁿ` codewords, and fails when no codeword is jointly typical
/// with `Uⁿ`.
pub fn mc_expected_error(
    n: usize,
    m: u64,
    dist: &JointDistribution,
    delta: &Threshold,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::PreconditionViolated("trials must be at least 1".into()));
    }
    let bounds = CellBounds::new(dist, n as u64, delta);
    let samplers = Samplers::new(dist);
    let size_v = dist.size_v();
    let cells = dist.size_u() * size_v;
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u: Vec<usize> = (0..n).map(|_| samplers.u.sample(&mut rng)).collect();
            let mut counts = vec![0u64; cells];
            for _ in 0..m {
                counts.iter_mut().for_each(|c| *c = 0);
                let mut ok = true;
                for &a in &u {
                    let cell = a * size_v + samplers.v.sample(&mut rng);
                    counts[cell] += 1;
                    if counts[cell] > bounds.hi()[cell] {
                        ok = false;
                        break;
                    }
                }
                if ok && bounds.admits(&counts) {
                    return 0;
                }
            }
            1
        })
        .sum();
    Ok(ErrorEstimate::from_failures(failures, trials, seed))
}

/// An explicit codebook: the encoder sends the first index whose codeword is
/// jointly typical with the source (index 0 if none), the decoder outputs
/// that codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    codewords: Vec<Vec<usize>>,
    /// Seed the codebook was drawn from, for provenance.
    pub seed: u64,
}

impl Codebook {
    pub fn new(n: usize, codewords: Vec<Vec<usize>>, seed: u64) -> Result<Self> {
        if codewords.is_empty() {
            return Err(Error::PreconditionViolated("codebook must be nonempty".into()));
        }
        if let Some(bad) = codewords.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch { expected: n, actual: bad.len() });
        }
        Ok(Codebook { n, codewords, seed })
    }

    /// Draws `m` i.i.d. `P_Vⁿ` codewords from the stream `(seed, index)`.
    pub fn sample(dist: &JointDistribution, n: usize, m: usize, seed: u64, index: u64) -> Self {
        let v = WeightedIndex::new(dist.marginal_v().probs()).expect("valid marginal");
        let mut rng = trial_rng(seed ^ CODEBOOK_SALT, index);
        let codewords = (0..m).map(|_| (0..n).map(|_| v.sample(&mut rng)).collect()).collect();
        Codebook { n, codewords, seed }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.codewords.len()
    }

    pub fn codewords(&self) -> &[Vec<usize>] {
        &self.codewords
    }

    pub fn encode(&self, u: &[usize], typical: &PairTypicality) -> usize {
        self.codewords.iter().position(|c| typical.is_typical(u, c)).unwrap_or(0)
    }

    pub fn decode(&self, index: usize) -> &[usize] {
        &self.codewords[index]
    }

    /// One codeword per line, symbols as `V` labels separated by spaces,
    /// preceded by a `# seed` comment.
    pub fn to_text(&self, dist: &JointDistribution) -> String {
        let mut out = format!("# seed {}\n", self.seed);
        for c in &self.codewords {
            let line: Vec<&str> = c.iter().map(|&s| dist.alphabet_v()[s].as_str()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, dist: &JointDistribution) -> Result<Self> {
        let mut seed = 0;
        let mut codewords = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(s) = comment.trim().strip_prefix("seed") {
                    seed = s.trim().parse().map_err(|_| Error::Parse(format!("bad seed line {line:?}")))?;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            codewords.push(line.split_whitespace().map(|s| dist.symbol_v(s)).collect::<Result<Vec<_>>>()?);
        }
        let n = codewords.first().map_or(0, Vec::len);
        Self::new(n, codewords, seed)
    }
}

/// How a code's error probability is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Sum over every source sequence (subject to [`EXHAUSTIVE_CAP`]).
    Exhaustive,
    /// Sample source sequences.
    MonteCarlo { trials: u64, seed: u64 },
}

impl EvalMode {
    /// Exhaustive when `|U|ⁿ` fits under the cap, Monte Carlo otherwise.
    pub fn auto(dist: &JointDistribution, n: usize, trials: u64, seed: u64) -> Self {
        if check_size(dist.size_u(), n).is_ok() {
            EvalMode::Exhaustive
        } else {
            EvalMode::MonteCarlo { trials, seed }
        }
    }
}

/// A code's error probability, exact or estimated.
#[derive(Clone, Debug, PartialEq)]
pub enum CodeError {
    Exact(f64),
    Estimate(ErrorEstimate),
}

impl CodeError {
    pub fn value(&self) -> f64 {
        match self {
            CodeError::Exact(p) => *p,
            CodeError::Estimate(e) => e.mean,
        }
    }
}

/// `P[(Uⁿ, τ(σ(Uⁿ))) not jointly typical]` for a fixed codebook.
pub fn evaluate_code(
    code: &Codebook,
    dist: &JointDistribution,
    delta: &Threshold,
    mode: EvalMode,
) -> Result<CodeError> {
    let n = code.n();
    let typical = PairTypicality::new(dist, n, delta);
    let fails = |u: &[usize]| !typical.is_typical(u, code.decode(code.encode(u, &typical)));
    match mode {
        EvalMode::Exhaustive => {
            check_size(dist.size_u(), n)?;
            let us = all_sequences(dist.marginal_u().probs(), n);
            let p: f64 = us.iter().filter(|(u, _)| fails(u)).map(|(_, p)| p).sum();
            Ok(CodeError::Exact(p.min(1.0)))
        }
        EvalMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::PreconditionViolated("trials must be at least 1".into()));
            }
            let u_law = WeightedIndex::new(dist.marginal_u().probs()).expect("valid marginal");
            let failures: u64 = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, t);
                    let u: Vec<usize> = (0..n).map(|_| u_law.sample(&mut rng)).collect();
                    u64::from(fails(&u))
                })
                .sum();
            Ok(CodeError::Estimate(ErrorEstimate::from_failures(failures, trials, seed)))
        }
    }
}

/// The best of several sampled codebooks.
#[derive(Clone, Debug)]
pub struct DerandomizedCode {
    pub codebook: Codebook,
    pub error: CodeError,
    /// Measured error of every candidate, in draw order.
    pub candidate_errors: Vec<f64>,
}

/// Draws `candidates` random codebooks of size `m`, measures each with
/// `mode`, and returns the one with the smallest error (first on ties).
pub fn derandomize_code(
    n: usize,
    m: usize,
    dist: &JointDistribution,
    delta: &Threshold,
    candidates: usize,
    seed: u64,
    mode: EvalMode,
) -> Result<DerandomizedCode> {
    if candidates == 0 || m == 0 {
        return Err(Error::PreconditionViolated("need at least one candidate and one codeword".into()));
    }
    let results = (0..candidates)
        .into_par_iter()
        .map(|j| {
            let code = Codebook::sample(dist, n, m, seed, j as u64);
            let err = evaluate_code(&code, dist, delta, mode)?;
            Ok((code, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let candidate_errors: Vec<f64> = results.iter().map(|(_, e)| e.value()).collect();
    let best =
        candidate_errors.iter().enumerate().fold(0, |best, (j, &e)| if e < candidate_errors[best] { j } else { best });
    let (codebook, error) = results.into_iter().nth(best).expect("nonempty");
    Ok(DerandomizedCode { codebook, error, candidate_errors })
}
