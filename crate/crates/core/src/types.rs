//! Method of types: empirical types, typicality tests, enumeration of
//! typical joint types, exact type-class probabilities and type
//! quantization.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::compositions::for_each_bounded_composition;
use crate::dist::{parse_rational, ratio_to_f64, JointDistribution, Pmf};
use crate::error::{Error, Result};

/// A typicality threshold `δ ≥ 0`, held exactly.
///
/// Decimal and fractional inputs keep their exact value; an `f64` is taken
/// at its exact binary value. Cell-count intervals are then decided without
/// rounding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Threshold(BigRational);

impl Threshold {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() {
            return Err(Error::InvalidThreshold(value.to_string()));
        }
        Ok(Threshold(value))
    }

    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidThreshold(value.to_string()));
        }
        Self::new(BigRational::from_f64(value).expect("finite"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_rational(text)?)
    }

    pub fn exact(&self) -> &BigRational {
        &self.0
    }

    pub fn value(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

/// How the typicality threshold is chosen for each blocklength.
#[derive(Clone, Debug, PartialEq)]
pub enum TypicalitySpec {
    /// The same `δ` for every `n`.
    Fixed(Threshold),
    /// `δₙ = c·√(ln n / n)`, which satisfies `δₙ → 0` and `nδₙ² → ∞`.
    Convention { c: f64 },
}

impl TypicalitySpec {
    pub fn delta(&self, n: u64) -> Result<f64> {
        match self {
            TypicalitySpec::Fixed(t) => Ok(t.value()),
            TypicalitySpec::Convention { c } => {
                if n < 2 {
                    return Err(Error::PreconditionViolated(format!(
                        "n too small: the δ-convention needs n >= 2, got {n}"
                    )));
                }
                let n = n as f64;
                Ok(c * (n.ln() / n).sqrt())
            }
        }
    }

    pub fn threshold(&self, n: u64) -> Result<Threshold> {
        match self {
            TypicalitySpec::Fixed(t) => Ok(t.clone()),
            TypicalitySpec::Convention { .. } => Threshold::from_f64(self.delta(n)?),
        }
    }
}

/// Occurrence counts of a sequence over `{0, …, len-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector {
    counts: Vec<u64>,
}

impl TypeVector {
    pub fn new(counts: Vec<u64>) -> Self {
        TypeVector { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn as_distribution(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn as_pmf(&self) -> Result<Pmf> {
        Pmf::from_weights(&self.counts)
    }
}

/// The type of `sequence`, whose symbols index an alphabet of `alphabet_size`.
pub fn type_of(sequence: &[usize], alphabet_size: usize) -> Result<TypeVector> {
    if sequence.is_empty() {
        return Err(Error::PreconditionViolated("empty sequence".into()));
    }
    let mut counts = vec![0u64; alphabet_size];
    for &s in sequence {
        *counts.get_mut(s).ok_or_else(|| Error::UnknownSymbol(s.to_string()))? += 1;
    }
    Ok(TypeVector { counts })
}

/// Pair counts `N(u,v)` of a sequence pair, i.e. a joint type `T_U T_{V|U}`
/// kept as integers. Stored row-major with `width = |V|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionalTypeTable {
    width: usize,
    counts: Vec<u64>,
}

impl ConditionalTypeTable {
    pub fn from_flat(width: usize, counts: Vec<u64>) -> Self {
        assert!(width > 0 && counts.len().is_multiple_of(width));
        ConditionalTypeTable { width, counts }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == width));
        Self::from_flat(width, rows.concat())
    }

    pub fn from_sequences(u: &[usize], v: &[usize], size_u: usize, size_v: usize) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch { expected: u.len(), actual: v.len() });
        }
        let mut counts = vec![0u64; size_u * size_v];
        for (&a, &b) in u.iter().zip(v) {
            if a >= size_u {
                return Err(Error::UnknownSymbol(a.to_string()));
            }
            if b >= size_v {
                return Err(Error::UnknownSymbol(b.to_string()));
            }
            counts[a * size_v + b] += 1;
        }
        Ok(Self::from_flat(size_v, counts))
    }

    pub fn count(&self, u: usize, v: usize) -> u64 {
        self.counts[u * self.width + v]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn rows(&self) -> usize {
        self.counts.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, u: usize) -> &[u64] {
        &self.counts[u * self.width..(u + 1) * self.width]
    }

    /// `n_u = N(u | uⁿ)` for every `u`.
    pub fn row_totals(&self) -> TypeVector {
        TypeVector::new((0..self.rows()).map(|u| self.row(u).iter().sum()).collect())
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The joint type as a type over the product alphabet.
    pub fn joint_type(&self) -> TypeVector {
        TypeVector::new(self.counts.clone())
    }
}

fn ceil_to_u64(r: &BigRational) -> u64 {
    if r.is_negative() {
        0
    } else {
        r.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

/// Floor of `r`, or `None` when `r < 0`.
fn floor_to_u64(r: &BigRational) -> Option<u64> {
    if r.is_negative() {
        None
    } else {
        Some(r.floor().to_integer().to_u64().unwrap_or(u64::MAX))
    }
}

/// Per-cell admissible counts for joint typicality at blocklength `n`:
/// `count(u,v) ∈ [⌈n(P−δ)⌉, ⌊n(P+δ)⌋] ∩ [0, n]`, and `0` off the support.
/// An empty interval is recorded as `lo > hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellBounds {
    n: u64,
    width: usize,
    lo: Vec<u64>,
    hi: Vec<u64>,
}

impl CellBounds {
    pub fn new(dist: &JointDistribution, n: u64, delta: &Threshold) -> Self {
        let nr = BigRational::from_integer(BigInt::from(n));
        let slack = &nr * delta.exact();
        let cells = dist.size_u() * dist.size_v();
        let mut lo = Vec::with_capacity(cells);
        let mut hi = Vec::with_capacity(cells);
        for u in 0..dist.size_u() {
            for v in 0..dist.size_v() {
                let p = dist.exact(u, v);
                if p.is_zero() {
                    lo.push(0);
                    hi.push(0);
                    continue;
                }
                let centre = &nr * p;
                let l = ceil_to_u64(&(&centre - &slack));
                match floor_to_u64(&(&centre + &slack)) {
                    Some(h) => {
                        lo.push(l);
                        hi.push(h.min(n));
                    }
                    None => {
                        lo.push(1);
                        hi.push(0);
                    }
                }
            }
        }
        CellBounds { n, width: dist.size_v(), lo, hi }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn lo(&self) -> &[u64] {
        &self.lo
    }

    pub fn hi(&self) -> &[u64] {
        &self.hi
    }

    pub fn row_lo(&self, u: usize) -> &[u64] {
        &self.lo[u * self.width..(u + 1) * self.width]
    }

    pub fn row_hi(&self, u: usize) -> &[u64] {
        &self.hi[u * self.width..(u + 1) * self.width]
    }

    /// Whether a flat count table of total `n` satisfies every cell interval.
    pub fn admits(&self, counts: &[u64]) -> bool {
        counts.len() == self.lo.len()
            && counts.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| l <= c && c <= h)
    }
}

/// `|N(u,v)/n − P(u,v)| ≤ δ` for every cell and `N(u,v) = 0` off `supp P`.
pub fn is_jointly_typical(table: &ConditionalTypeTable, dist: &JointDistribution, delta: &Threshold) -> bool {
    if table.width() != dist.size_v() || table.rows() != dist.size_u() {
        return false;
    }
    let n = table.n();
    if n == 0 {
        return false;
    }
    CellBounds::new(dist, n, delta).admits(table.counts())
}

/// Conditional typicality of `vⁿ` given `uⁿ`:
/// `|N(u,v) − N(u)·P(v|u)| ≤ nδ` for every cell, and `N(u,v) = 0` whenever
/// `P(v|u) = 0`. Rows with `P_U(u) = 0` have no conditional and admit no
/// occurrences.
pub fn is_conditionally_typical(table: &ConditionalTypeTable, dist: &JointDistribution, delta: &Threshold) -> bool {
    if table.width() != dist.size_v() || table.rows() != dist.size_u() {
        return false;
    }
    let n = BigRational::from_integer(BigInt::from(table.n()));
    let slack = &n * delta.exact();
    let totals = table.row_totals();
    for u in 0..dist.size_u() {
        let cond = dist.conditional(u);
        let nu = BigRational::from_integer(BigInt::from(totals.counts()[u]));
        for v in 0..dist.size_v() {
            let c = table.count(u, v);
            let p = match cond {
                Some(pmf) if pmf.in_support(v) => &pmf.exact()[v],
                _ => {
                    if c != 0 {
                        return false;
                    }
                    continue;
                }
            };
            let dev = BigRational::from_integer(BigInt::from(c)) - &nu * p;
            if dev.abs() > slack {
                return false;
            }
        }
    }
    true
}

/// All joint count tables of denominator `n` that are jointly typical, in
/// lexicographic order of the row-major cell counts.
pub fn enumerate_typical_joint_types(n: u64, dist: &JointDistribution, delta: &Threshold) -> Vec<ConditionalTypeTable> {
    let bounds = CellBounds::new(dist, n, delta);
    let width = dist.size_v();
    let mut out = Vec::new();
    for_each_bounded_composition(n, bounds.lo(), bounds.hi(), |c| {
        out.push(ConditionalTypeTable::from_flat(width, c.to_vec()));
    });
    out
}

fn ln_factorial(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// `ln k!` for `k ≤ max`, tabulated from log-Γ.
#[derive(Clone, Debug)]
pub(crate) struct LogFactorials(Vec<f64>);

impl LogFactorials {
    pub(crate) fn new(max: u64) -> Self {
        LogFactorials((0..=max).map(ln_factorial).collect())
    }

    fn get(&self, k: u64) -> f64 {
        self.0.get(k as usize).copied().unwrap_or_else(|| ln_factorial(k))
    }
}

/// `log₂ Λ` from counts, natural logs of the base probabilities and a log-factorial source.
fn log2_lambda_with<F: Fn(u64) -> f64>(counts: &[u64], ln_base: &[f64], ln_fact: F) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut acc = ln_fact(n);
    for (&c, &lp) in counts.iter().zip(ln_base) {
        if c == 0 {
            continue;
        }
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        acc += c as f64 * lp - ln_fact(c);
    }
    acc / std::f64::consts::LN_2
}

pub(crate) fn ln_probs(base: &Pmf) -> Vec<f64> {
    base.probs().iter().map(|p| if *p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect()
}

/// `log₂ Λ(n, T, P)`: the log-probability that an i.i.d.-`base` sequence of
/// length `n = T.n()` has type `T`. Returns `−∞` when `T` charges a symbol
/// outside `supp base`.
pub fn log2_type_probability(t: &TypeVector, base: &Pmf) -> f64 {
    assert_eq!(t.len(), base.len(), "type and base distribution differ in alphabet size");
    log2_lambda_with(t.counts(), &ln_probs(base), ln_factorial)
}

/// Evaluates `log₂ Λ` against one base distribution, optionally through a
/// shared [`LambdaCache`].
pub(crate) struct LambdaEvaluator<'a> {
    ln_base: Vec<f64>,
    digest: [u8; 32],
    factorials: &'a LogFactorials,
    cache: Option<&'a LambdaCache>,
}

impl<'a> LambdaEvaluator<'a> {
    pub(crate) fn new(base: &Pmf, factorials: &'a LogFactorials, cache: Option<&'a LambdaCache>) -> Self {
        LambdaEvaluator { ln_base: ln_probs(base), digest: base.digest(), factorials, cache }
    }

    pub(crate) fn log2(&self, counts: &[u64]) -> f64 {
        let compute = || log2_lambda_with(counts, &self.ln_base, |k| self.factorials.get(k));
        match self.cache {
            Some(cache) => cache.get_or_insert_with(&self.digest, counts, compute),
            None => compute(),
        }
    }
}

const CACHE_MAGIC: &[u8; 8] = b"LAMBDA\x00\x01";
const CACHE_VERSION: u32 = 1;

type CacheKey = ([u8; 32], Vec<u64>);

/// Memo table of `log₂ Λ` values keyed by (base-distribution digest, count
/// vector). The blocklength is the sum of the counts, so entries stay valid
/// across blocklengths.
///
/// Values are the exact `f64` results of the uncached computation, so a warm
/// run reproduces a cold run bit for bit. Inserts stop once `capacity` entries
/// are held.
#[derive(Debug)]
pub struct LambdaCache {
    map: RwLock<HashMap<CacheKey, f64>>,
    capacity: usize,
}

impl Default for LambdaCache {
    fn default() -> Self {
        Self::with_capacity_limit(1 << 22)
    }
}

impl LambdaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_limit(capacity: usize) -> Self {
        LambdaCache { map: RwLock::new(HashMap::new()), capacity }
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn get_or_insert_with<F: FnOnce() -> f64>(&self, digest: &[u8; 32], counts: &[u64], compute: F) -> f64 {
        let key = (*digest, counts.to_vec());
        if let Some(&v) = self.map.read().expect("cache lock").get(&key) {
            return v;
        }
        let value = compute();
        let mut map = self.map.write().expect("cache lock");
        if map.len() < self.capacity {
            map.entry(key).or_insert(value);
        }
        value
    }

    /// Serializes to the versioned binary format: magic, version, entry
    /// count, entries sorted by key, then a SHA-256 of everything before it.
    pub fn to_bytes(&self) -> Vec<u8> {
        let map = self.map.read().expect("cache lock");
        let mut entries: Vec<(&CacheKey, &f64)> = map.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = Vec::new();
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        for ((digest, counts), value) in entries {
            out.extend_from_slice(digest);
            out.extend_from_slice(&(counts.len() as u32).to_le_bytes());
            for c in counts {
                out.extend_from_slice(&c.to_le_bytes());
            }
            out.extend_from_slice(&value.to_bits().to_le_bytes());
        }
        let check: [u8; 32] = Sha256::digest(&out).into();
        out.extend_from_slice(&check);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |why: &str| Error::Parse(format!("lambda cache: {why}"));
        if bytes.len() < 8 + 4 + 8 + 32 {
            return Err(corrupt("truncated"));
        }
        let (body, check) = bytes.split_at(bytes.len() - 32);
        let expected: [u8; 32] = Sha256::digest(body).into();
        if expected.as_slice() != check {
            return Err(corrupt("checksum mismatch"));
        }
        if &body[..8] != CACHE_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut cursor = Cursor { bytes: body, pos: 8 };
        let version = cursor.u32().ok_or_else(|| corrupt("truncated"))?;
        if version != CACHE_VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let count = cursor.u64().ok_or_else(|| corrupt("truncated"))?;
        let mut map = HashMap::new();
        for _ in 0..count {
            let digest: [u8; 32] = cursor.take(32).ok_or_else(|| corrupt("truncated"))?.try_into().expect("32 bytes");
            let k = cursor.u32().ok_or_else(|| corrupt("truncated"))?;
            let counts =
                (0..k).map(|_| cursor.u64()).collect::<Option<Vec<u64>>>().ok_or_else(|| corrupt("truncated"))?;
            let value = f64::from_bits(cursor.u64().ok_or_else(|| corrupt("truncated"))?);
            map.insert((digest, counts), value);
        }
        if cursor.pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(LambdaCache { map: RwLock::new(map), capacity: usize::MAX })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + k)?;
        self.pos += k;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

/// Rounds `target` to a type of denominator `k` with the same support:
/// `C(x) = (⌊k·B(x)⌋ + ε_x)/k`, the `+1`s going to the largest fractional
/// parts (ties to the lower symbol index).
///
/// The result satisfies `‖C − B‖_∞ ≤ 1/k` and
/// `D(C‖A) ≤ D(B‖A) + (|X|/k)·log₂ max(k, 1/π_A)`.
pub fn quantize_to_type(target: &Pmf, base: &Pmf, k: u64) -> Result<TypeVector> {
    if target.len() != base.len() {
        return Err(Error::LengthMismatch { expected: base.len(), actual: target.len() });
    }
    if let Some(symbol) = target.support().find(|&x| !base.in_support(x)) {
        return Err(Error::SupportViolation { symbol });
    }
    let kr = BigRational::from_integer(BigInt::from(k));
    let min_b = target.min_prob_exact();
    if &kr * &min_b < BigRational::from_integer(1.into()) {
        return Err(Error::KTooSmall { k, required: (BigRational::from_integer(1.into()) / min_b).ceil().to_string() });
    }
    let mut counts = vec![0u64; target.len()];
    let mut fractions: Vec<(BigRational, usize)> = Vec::new();
    let mut assigned = 0u64;
    for x in target.support() {
        let scaled = &kr * &target.exact()[x];
        let floor = scaled.floor();
        counts[x] = floor.to_integer().to_u64().expect("fits");
        assigned += counts[x];
        fractions.push((scaled - floor, x));
    }
    let deficit = (k - assigned) as usize;
    fractions.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, x) in fractions.into_iter().take(deficit) {
        counts[x] += 1;
    }
    debug_assert_eq!(counts.iter().sum::<u64>(), k);
    Ok(TypeVector::new(counts))
}

/// `gcd`-reduced rational `count / n`, for exact comparisons in tests and callers.
pub fn count_ratio(count: u64, n: u64) -> BigRational {
    let g = count.gcd(&n).max(1);
    BigRational::new(BigInt::from(count / g), BigInt::from(n / g))
}
