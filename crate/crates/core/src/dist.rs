//! Finite distributions with exact rational probabilities.
//!
//! Probabilities are ingested as rationals so that support membership is an
//! exact zero test; every numeric functional works on the `f64` rendering.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Parses `"num/den"`, an integer, or a plain decimal such as `"0.04"` into
/// an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10u8), frac_part.len());
    let r = BigRational::new(num, den);
    Ok(if negative { -r } else { r })
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A probability mass function on `{0, …, len-1}`.
#[derive(Clone, PartialEq)]
pub struct Pmf {
    exact: Vec<BigRational>,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(exact: Vec<BigRational>) -> Result<Self> {
        if exact.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, p) in exact.iter().enumerate() {
            if p.is_negative() {
                return Err(Error::NegativeProbability { at: i.to_string(), value: p.to_string() });
            }
        }
        if exact.iter().all(Zero::is_zero) {
            return Err(Error::EmptySupport);
        }
        let sum: BigRational = exact.iter().sum();
        if !sum.is_one() {
            return Err(Error::NotNormalized { sum: sum.to_string() });
        }
        Ok(Self::from_validated(exact))
    }

    fn from_validated(exact: Vec<BigRational>) -> Self {
        let probs = exact.iter().map(ratio_to_f64).collect();
        Pmf { exact, probs }
    }

    /// Normalizes nonnegative integer weights.
    pub fn from_weights(weights: &[u64]) -> Result<Self> {
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(Error::EmptySupport);
        }
        let den = BigInt::from(total);
        Self::new(weights.iter().map(|&w| BigRational::new(BigInt::from(w), den.clone())).collect())
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn in_support(&self, i: usize) -> bool {
        !self.exact[i].is_zero()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.in_support(i))
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    /// The minimum nonzero probability, exactly.
    pub fn min_prob_exact(&self) -> BigRational {
        self.exact.iter().filter(|p| !p.is_zero()).min().cloned().expect("nonempty support")
    }

    /// The minimum nonzero probability.
    pub fn min_prob(&self) -> f64 {
        ratio_to_f64(&self.min_prob_exact())
    }

    /// SHA-256 of the exact probabilities; identifies the distribution in caches.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for p in &self.exact {
            h.update(p.to_string().as_bytes());
            h.update(b";");
        }
        h.finalize().into()
    }
}

impl fmt::Debug for Pmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.exact.iter().map(|p| p.to_string())).finish()
    }
}

/// `D(p‖q)` in bits; `+∞` when `p` is not absolutely continuous w.r.t. `q`.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut d = 0.0;
    for x in p.support() {
        if !q.in_support(x) {
            return f64::INFINITY;
        }
        let ratio = &p.exact[x] / &q.exact[x];
        d += p.probs[x] * ratio_to_f64(&ratio).log2();
    }
    d
}

/// A target joint distribution `P_UV` on a finite product alphabet.
#[derive(Clone)]
pub struct JointDistribution {
    alphabet_u: Vec<String>,
    alphabet_v: Vec<String>,
    /// Row-major: index `u * |V| + v`.
    exact: Vec<BigRational>,
    probs: Vec<f64>,
    marginal_u: Pmf,
    marginal_v: Pmf,
    conditionals: Vec<Option<Pmf>>,
}

impl fmt::Debug for JointDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JointDistribution")
            .field("alphabet_u", &self.alphabet_u)
            .field("alphabet_v", &self.alphabet_v)
            .field("prob", &self.exact.iter().map(|p| p.to_string()).collect::<Vec<_>>())
            .finish()
    }
}

impl JointDistribution {
    /// Builds a distribution from labelled entries; unlisted pairs get probability 0.
    pub fn from_entries<S, I>(alphabet_u: Vec<String>, alphabet_v: Vec<String>, entries: I) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = ((S, S), BigRational)>,
    {
        let index = |alphabet: &[String]| -> Result<HashMap<String, usize>> {
            if alphabet.is_empty() {
                return Err(Error::EmptyAlphabet);
            }
            let mut map = HashMap::new();
            for (i, s) in alphabet.iter().enumerate() {
                if map.insert(s.clone(), i).is_some() {
                    return Err(Error::DuplicateSymbol(s.clone()));
                }
            }
            Ok(map)
        };
        let iu = index(&alphabet_u)?;
        let iv = index(&alphabet_v)?;
        let width = alphabet_v.len();
        let mut table: Vec<Option<BigRational>> = vec![None; alphabet_u.len() * width];
        for ((u, v), p) in entries {
            let (u, v) = (u.as_ref(), v.as_ref());
            let ui = *iu.get(u).ok_or_else(|| Error::UnknownSymbol(u.to_string()))?;
            let vi = *iv.get(v).ok_or_else(|| Error::UnknownSymbol(v.to_string()))?;
            let slot = &mut table[ui * width + vi];
            if slot.is_some() {
                return Err(Error::DuplicateEntry { u: u.to_string(), v: v.to_string() });
            }
            *slot = Some(p);
        }
        let exact = table.into_iter().map(|p| p.unwrap_or_else(BigRational::zero)).collect();
        Self::build(alphabet_u, alphabet_v, exact)
    }

    /// Builds a distribution from a dense row-major table, labelling symbols `0, 1, …`.
    pub fn from_table(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let nu = rows.len();
        if nu == 0 {
            return Err(Error::EmptyAlphabet);
        }
        let nv = rows[0].len();
        if nv == 0 {
            return Err(Error::EmptyAlphabet);
        }
        for r in &rows {
            if r.len() != nv {
                return Err(Error::LengthMismatch { expected: nv, actual: r.len() });
            }
        }
        let labels = |k: usize| (0..k).map(|i| i.to_string()).collect();
        Self::build(labels(nu), labels(nv), rows.into_iter().flatten().collect())
    }

    /// Dense table of integer weights, normalized exactly.
    pub fn from_weights(rows: &[Vec<u64>]) -> Result<Self> {
        let total: u64 = rows.iter().flatten().sum();
        if total == 0 {
            return Err(Error::EmptySupport);
        }
        let den = BigInt::from(total);
        Self::from_table(
            rows.iter().map(|r| r.iter().map(|&w| BigRational::new(BigInt::from(w), den.clone())).collect()).collect(),
        )
    }

    fn build(alphabet_u: Vec<String>, alphabet_v: Vec<String>, exact: Vec<BigRational>) -> Result<Self> {
        let (nu, nv) = (alphabet_u.len(), alphabet_v.len());
        for (i, p) in exact.iter().enumerate() {
            if p.is_negative() {
                return Err(Error::NegativeProbability {
                    at: format!("({}, {})", alphabet_u[i / nv], alphabet_v[i % nv]),
                    value: p.to_string(),
                });
            }
        }
        if exact.iter().all(Zero::is_zero) {
            return Err(Error::EmptySupport);
        }
        let sum: BigRational = exact.iter().sum();
        if !sum.is_one() {
            return Err(Error::NotNormalized { sum: sum.to_string() });
        }
        let mu: Vec<BigRational> = (0..nu).map(|u| exact[u * nv..(u + 1) * nv].iter().sum()).collect();
        let mv: Vec<BigRational> = (0..nv).map(|v| (0..nu).map(|u| &exact[u * nv + v]).sum()).collect();
        let conditionals = (0..nu)
            .map(|u| {
                (!mu[u].is_zero())
                    .then(|| Pmf::from_validated(exact[u * nv..(u + 1) * nv].iter().map(|p| p / &mu[u]).collect()))
            })
            .collect();
        let probs = exact.iter().map(ratio_to_f64).collect();
        Ok(JointDistribution {
            alphabet_u,
            alphabet_v,
            exact,
            probs,
            marginal_u: Pmf::from_validated(mu),
            marginal_v: Pmf::from_validated(mv),
            conditionals,
        })
    }

    pub fn alphabet_u(&self) -> &[String] {
        &self.alphabet_u
    }

    pub fn alphabet_v(&self) -> &[String] {
        &self.alphabet_v
    }

    pub fn size_u(&self) -> usize {
        self.alphabet_u.len()
    }

    pub fn size_v(&self) -> usize {
        self.alphabet_v.len()
    }

    pub fn exact(&self, u: usize, v: usize) -> &BigRational {
        &self.exact[u * self.size_v() + v]
    }

    pub fn prob(&self, u: usize, v: usize) -> f64 {
        self.probs[u * self.size_v() + v]
    }

    /// Row-major joint probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn in_support(&self, u: usize, v: usize) -> bool {
        !self.exact(u, v).is_zero()
    }

    pub fn marginal_u(&self) -> &Pmf {
        &self.marginal_u
    }

    pub fn marginal_v(&self) -> &Pmf {
        &self.marginal_v
    }

    /// `P_{V|u}`, or `None` when `P_U(u) = 0`.
    pub fn conditional(&self, u: usize) -> Option<&Pmf> {
        self.conditionals[u].as_ref()
    }

    /// The joint table as a single pmf over `|U|·|V|` cells.
    pub fn joint_pmf(&self) -> Pmf {
        Pmf::from_validated(self.exact.clone())
    }

    /// `π_{P_U}`, `π_{P_V}`, `π_{P_UV}`: minimum nonzero probabilities.
    pub fn min_prob_u(&self) -> f64 {
        self.marginal_u.min_prob()
    }

    pub fn min_prob_v(&self) -> f64 {
        self.marginal_v.min_prob()
    }

    pub fn min_prob_uv(&self) -> f64 {
        ratio_to_f64(self.exact.iter().filter(|p| !p.is_zero()).min().expect("nonempty support"))
    }

    pub fn symbol_u(&self, label: &str) -> Result<usize> {
        self.alphabet_u.iter().position(|s| s == label).ok_or_else(|| Error::UnknownSymbol(label.to_string()))
    }

    pub fn symbol_v(&self, label: &str) -> Result<usize> {
        self.alphabet_v.iter().position(|s| s == label).ok_or_else(|| Error::UnknownSymbol(label.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(text)?;
        file.into_distribution()
    }

    pub fn to_json(&self) -> String {
        let file = DistributionFile {
            alphabet_u: self.alphabet_u.clone(),
            alphabet_v: self.alphabet_v.clone(),
            entries: (0..self.size_u())
                .flat_map(|u| (0..self.size_v()).map(move |v| (u, v)))
                .filter(|&(u, v)| self.in_support(u, v))
                .map(|(u, v)| EntryRecord {
                    u: self.alphabet_u[u].clone(),
                    v: self.alphabet_v[v].clone(),
                    p: self.exact(u, v).to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

/// On-disk distribution document.
///
/// ```json
/// {
///   "alphabet_u": ["0", "1"],
///   "alphabet_v": ["0", "1"],
///   "entries": [
///     { "u": "0", "v": "0", "p": "1/3" },
///     { "u": "0", "v": "1", "p": "1/3" },
///     { "u": "1", "v": "0", "p": "1/3" }
///   ]
/// }
/// ```
///
/// Pairs absent from `entries` have probability zero. `p` accepts
/// `"num/den"`, integers and plain decimals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub alphabet_u: Vec<String>,
    pub alphabet_v: Vec<String>,
    pub entries: Vec<EntryRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    pub u: String,
    pub v: String,
    pub p: String,
}

impl DistributionFile {
    pub fn into_distribution(self) -> Result<JointDistribution> {
        let entries =
            self.entries.into_iter().map(|e| Ok(((e.u, e.v), parse_rational(&e.p)?))).collect::<Result<Vec<_>>>()?;
        JointDistribution::from_entries(self.alphabet_u, self.alphabet_v, entries)
    }
}

/// The running example: `P = ⅓δ₀₀ + ⅓δ₀₁ + ⅓δ₁₀` on `{0,1}²`.
pub fn example_distribution() -> JointDistribution {
    JointDistribution::from_weights(&[vec![1, 1], vec![1, 0]]).expect("valid")
}
