//! Achievability quantities: the probability `Π(T_U)` that an independent
//! `P_V`-codeword is jointly typical with a source sequence of type `T_U`,
//! the exact expected random-codebook error, the optimal random-codebook
//! rate, its Gaussian approximation and the non-asymptotic upper bound.

use std::f64::consts::LN_2;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::compositions::for_each_bounded_composition;
use crate::dist::{kl_divergence, JointDistribution};
use crate::error::{Error, Result};
use crate::gaussian::q_inverse;
use crate::info::InfoProfile;
use crate::types::{count_ratio, CellBounds, LambdaCache, LambdaEvaluator, LogFactorials, Threshold, TypeVector};

/// Below this, `−ln(1−Π)` is evaluated as `Π(1 + Π/2)` from `log₂ Π`, so
/// that probabilities smaller than the smallest double still count.
const SMALL_PI: f64 = 1e-12;

/// `log₂ Σ 2^xᵢ`, accumulated in a fixed order.
#[derive(Clone, Copy, Debug)]
struct Log2SumExp {
    max: f64,
    scaled: f64,
}

impl Log2SumExp {
    fn new() -> Self {
        Log2SumExp { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp2() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp2();
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.log2()
        }
    }
}

/// Computes `log₂ Π(T_U)` for many U-types at one blocklength.
///
/// Joint typicality is a per-cell condition, so the admissible conditional
/// tables for a fixed `T_U` are exactly the products of admissible rows, and
/// the sum over tables of `∏_u Λ(n_u, T_{V|u}, P_V)` factors into a product
/// of per-row sums. Each row sum depends only on `(u, n_u)` and is memoized.
struct PiEvaluator<'a> {
    bounds: CellBounds,
    lambda_v: LambdaEvaluator<'a>,
    rows: Vec<Vec<Option<f64>>>,
}

impl<'a> PiEvaluator<'a> {
    fn new(
        dist: &JointDistribution,
        n: u64,
        delta: &Threshold,
        factorials: &'a LogFactorials,
        cache: Option<&'a LambdaCache>,
    ) -> Self {
        PiEvaluator {
            bounds: CellBounds::new(dist, n, delta),
            lambda_v: LambdaEvaluator::new(dist.marginal_v(), factorials, cache),
            rows: vec![vec![None; n as usize + 1]; dist.size_u()],
        }
    }

    /// `log₂ Σ_{row} Λ(n_u, row, P_V)` over admissible rows with total `n_u`.
    fn row(&mut self, u: usize, nu: u64) -> f64 {
        if let Some(v) = self.rows[u][nu as usize] {
            return v;
        }
        let mut acc = Log2SumExp::new();
        let lambda = &self.lambda_v;
        for_each_bounded_composition(nu, self.bounds.row_lo(u), self.bounds.row_hi(u), |c| {
            acc.push(lambda.log2(c));
        });
        let v = acc.value();
        self.rows[u][nu as usize] = Some(v);
        v
    }

    fn log2_pi(&mut self, t_u: &[u64]) -> f64 {
        let mut total = 0.0;
        for (u, &nu) in t_u.iter().enumerate() {
            let r = self.row(u, nu);
            if r == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += r;
        }
        total.min(0.0)
    }
}

fn check_type(t_u: &TypeVector, dist: &JointDistribution) -> Result<()> {
    if t_u.len() != dist.size_u() {
        return Err(Error::LengthMismatch { expected: dist.size_u(), actual: t_u.len() });
    }
    if t_u.n() == 0 {
        return Err(Error::PreconditionViolated("type with n = 0".into()));
    }
    Ok(())
}

/// `log₂ Π_δ(T_U)`; `−∞` when no typical completion of the type exists.
pub fn log2_prob_typical_given_type(t_u: &TypeVector, dist: &JointDistribution, delta: &Threshold) -> Result<f64> {
    check_type(t_u, dist)?;
    let n = t_u.n();
    let factorials = LogFactorials::new(n);
    let mut eval = PiEvaluator::new(dist, n, delta, &factorials, None);
    Ok(eval.log2_pi(t_u.counts()))
}

/// `Π_δ(T_U)`: the probability that `V̂ⁿ ~ P_Vⁿ`, independent of a source
/// sequence of type `T_U`, is jointly typical with it.
pub fn prob_typical_given_type(t_u: &TypeVector, dist: &JointDistribution, delta: &Threshold) -> Result<f64> {
    Ok(log2_prob_typical_given_type(t_u, dist, delta)?.exp2())
}

/// One source type with its probability and typical-completion probability.
#[derive(Clone, Debug)]
pub struct TypeTerm {
    pub t_u: TypeVector,
    /// `Λ(n, T_U, P_U)`.
    pub lambda: f64,
    /// `log₂ Π(T_U)`; `−∞` when no typical completion exists.
    pub log2_pi: f64,
    /// `ln(−ln(1 − Π))`, the per-codeword log-hazard.
    ln_hazard: f64,
}

impl TypeTerm {
    pub fn pi(&self) -> f64 {
        self.log2_pi.exp2()
    }

    pub fn is_feasible(&self) -> bool {
        self.log2_pi > f64::NEG_INFINITY
    }

    /// `Λ·(1 − Π)^m`, given `ln m`.
    fn error_term(&self, ln_m: f64) -> f64 {
        if !self.is_feasible() {
            return self.lambda;
        }
        if self.ln_hazard == f64::INFINITY {
            return 0.0;
        }
        self.lambda * (-(ln_m + self.ln_hazard).exp()).exp()
    }
}

fn ln_hazard(log2_pi: f64) -> f64 {
    if log2_pi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let pi = log2_pi.exp2();
    if pi >= 1.0 {
        f64::INFINITY
    } else if pi < SMALL_PI {
        log2_pi * LN_2 + (0.5 * pi).ln_1p()
    } else {
        (-(-pi).ln_1p()).ln()
    }
}

pub(crate) fn ln_biguint(m: &BigUint) -> f64 {
    let bits = m.bits();
    if bits <= 1000 {
        m.to_f64().expect("fits").ln()
    } else {
        let shift = bits - 64;
        (m >> shift).to_f64().expect("fits").ln() + shift as f64 * LN_2
    }
}

pub(crate) fn log2_biguint(m: &BigUint) -> f64 {
    if m.bits() <= 1000 {
        m.to_f64().expect("fits").log2()
    } else {
        ln_biguint(m) / LN_2
    }
}

/// The read-only table `{(T_U, Λ(n,T_U,P_U), Π(T_U))}` for one `(n, δ, P)`,
/// from which `E[p_C]` is evaluated for any codebook size.
///
/// Source types range over every count vector of total `n` supported on
/// `supp P_U`; types charging a symbol outside it have `Λ = 0`.
#[derive(Clone, Debug)]
pub struct PiTable {
    n: u64,
    delta: Threshold,
    size_v: usize,
    terms: Vec<TypeTerm>,
    floor: f64,
}

impl PiTable {
    pub fn build(dist: &JointDistribution, n: u64, delta: &Threshold) -> Self {
        Self::build_with_cache(dist, n, delta, None)
    }

    pub fn build_with_cache(dist: &JointDistribution, n: u64, delta: &Threshold, cache: Option<&LambdaCache>) -> Self {
        assert!(n >= 1, "blocklength must be positive");
        let factorials = LogFactorials::new(n);
        let lambda_u = LambdaEvaluator::new(dist.marginal_u(), &factorials, cache);
        let mut pi = PiEvaluator::new(dist, n, delta, &factorials, cache);
        let pu = dist.marginal_u();
        let lo = vec![0u64; dist.size_u()];
        let hi: Vec<u64> = (0..dist.size_u()).map(|u| if pu.in_support(u) { n } else { 0 }).collect();
        let mut terms = Vec::new();
        for_each_bounded_composition(n, &lo, &hi, |c| {
            let lambda = lambda_u.log2(c).exp2();
            // types with Λ below the double range contribute exactly zero
            let log2_pi = if lambda > 0.0 { pi.log2_pi(c) } else { f64::NEG_INFINITY };
            terms.push(TypeTerm { t_u: TypeVector::new(c.to_vec()), lambda, log2_pi, ln_hazard: ln_hazard(log2_pi) });
        });
        let floor = terms.iter().filter(|t| !t.is_feasible()).map(|t| t.lambda).sum::<f64>().min(1.0);
        PiTable { n, delta: delta.clone(), size_v: dist.size_v(), terms, floor }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn delta(&self) -> &Threshold {
        &self.delta
    }

    pub fn terms(&self) -> &[TypeTerm] {
        &self.terms
    }

    /// `P[Π(T_U) = 0]`: the limit of `E[p_C]` as the codebook grows.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `E[p_C] = Σ_{T_U} (1 − Π(T_U))^m Λ(n, T_U, P_U)`.
    pub fn error(&self, m: &BigUint) -> f64 {
        assert!(!m.is_zero(), "codebook must be nonempty");
        let ln_m = ln_biguint(m);
        let e: f64 = self.terms.iter().map(|t| t.error_term(ln_m)).sum();
        e.clamp(0.0, 1.0)
    }

    pub fn error_u64(&self, m: u64) -> f64 {
        self.error(&BigUint::from(m))
    }

    pub fn curve<I: IntoIterator<Item = BigUint>>(&self, sizes: I) -> ErrorCurve {
        let mut points: Vec<(BigUint, f64)> = sizes
            .into_iter()
            .map(|m| {
                let e = self.error(&m);
                (m, e)
            })
            .collect();
        points.sort_by(|a, b| a.0.cmp(&b.0));
        ErrorCurve { n: self.n, delta: self.delta.value(), points, floor: self.floor }
    }

    /// Smallest `m` with `E[p_C](m) ≤ eps`, by doubling then bisection.
    pub fn optimal_codebook_size(&self, eps: f64) -> Result<OptimalRate> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::ArgumentOutOfRange(eps));
        }
        if self.floor > eps {
            return Err(Error::Infeasible { floor: self.floor, eps });
        }
        let one = BigUint::one();
        let first = self.error(&one);
        let finish = |m: BigUint, error: f64, below: Option<f64>| OptimalRate {
            rate: log2_biguint(&m) / self.n as f64,
            m_star: m,
            error,
            error_below: below,
        };
        if first <= eps {
            return Ok(finish(one, first, None));
        }
        let cap_bits = (self.n as f64 * ((self.size_v as f64).log2() + 2.0)).ceil() as u64;
        let mut lo = one;
        let mut lo_err = first;
        let mut hi = BigUint::from(2u8);
        let mut hi_err = self.error(&hi);
        while hi_err > eps {
            if hi.bits() > cap_bits {
                return Err(Error::SearchCapExceeded { cap_bits });
            }
            lo = hi.clone();
            lo_err = hi_err;
            hi <<= 1;
            hi_err = self.error(&hi);
        }
        while &hi - &lo > BigUint::one() {
            let mid: BigUint = (&lo + &hi) >> 1;
            let e = self.error(&mid);
            if e <= eps {
                hi = mid;
                hi_err = e;
            } else {
                lo = mid;
                lo_err = e;
            }
        }
        Ok(finish(hi, hi_err, Some(lo_err)))
    }
}

/// `E[p_C]` as a function of codebook size at one `(n, δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurve {
    pub n: u64,
    pub delta: f64,
    pub points: Vec<(BigUint, f64)>,
    pub floor: f64,
}

/// Result of the codebook-size search.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalRate {
    /// `(1/n) log₂ m*`.
    pub rate: f64,
    pub m_star: BigUint,
    /// `E[p_C](m*) ≤ eps`.
    pub error: f64,
    /// `E[p_C](m* − 1) > eps`; `None` when `m* = 1`.
    pub error_below: Option<f64>,
}

/// Exact expected error of a random codebook of `m` i.i.d. `P_Vⁿ` codewords.
pub fn expected_codebook_error(n: u64, m: u64, dist: &JointDistribution, delta: &Threshold) -> f64 {
    PiTable::build(dist, n, delta).error_u64(m)
}

/// `P[Π(T_U) = 0]`, the error no codebook size can remove.
pub fn error_floor(n: u64, dist: &JointDistribution, delta: &Threshold) -> f64 {
    PiTable::build(dist, n, delta).floor()
}

/// `R♯(n, ε)`: the smallest rate whose random codebook has `E[p_C] ≤ ε`.
pub fn optimal_random_codebook_rate(
    n: u64,
    dist: &JointDistribution,
    delta: &Threshold,
    eps: f64,
) -> Result<OptimalRate> {
    PiTable::build(dist, n, delta).optimal_codebook_size(eps)
}

/// `R̄(n, ε) = I(U;V) + √(𝕍/n)·Q⁻¹(ε)`.
pub fn gaussian_approx_rate(n: u64, dist: &JointDistribution, eps: f64) -> Result<f64> {
    let profile = InfoProfile::compute(dist);
    gaussian_approx_rate_from(&profile, n, eps)
}

pub fn gaussian_approx_rate_from(profile: &InfoProfile, n: u64, eps: f64) -> Result<f64> {
    let qi = q_inverse(eps)?;
    if profile.coordination_variance == 0.0 {
        return Ok(profile.mutual_information);
    }
    Ok(profile.mutual_information + (profile.coordination_variance / n as f64).sqrt() * qi)
}

/// `|M| = ⌈2^{n·r*}⌉` and its rate `(1/n) log₂ |M| ≤ r* + 2/n`.
pub fn round_rate(r_star: f64, n: u64) -> Result<(BigUint, f64)> {
    if !r_star.is_finite() || r_star < 0.0 || n == 0 {
        return Err(Error::ArgumentOutOfRange(r_star));
    }
    let exponent = n as f64 * r_star;
    let power = exponent.exp2();
    if !power.is_finite() {
        return Err(Error::Overflow { log2_m: exponent });
    }
    let m = num_bigint::BigUint::from(1u8)
        .max(num_traits::FromPrimitive::from_f64(power.ceil()).expect("finite nonnegative"));
    let rate = log2_biguint(&m) / n as f64;
    Ok((m, rate))
}

/// One validity condition of the non-asymptotic bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub satisfied: bool,
    /// The value `n` (or `ε`) has to clear.
    pub threshold: f64,
}

/// Additive pieces of the non-asymptotic rate bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundTerms {
    pub mutual_information: f64,
    /// `2(|U||V|+1)·log₂(n+1)/n`.
    pub polylog_penalty: f64,
    /// `2/n`, from rounding the rate to an integer codebook size.
    pub rounding: f64,
    /// `√(𝕍/n)·Q⁻¹(q_inverse_argument)`; zero when `𝕍 = 0`, `+∞` when the
    /// argument leaves `(0, 1)`.
    pub dispersion: f64,
    /// `ε − (2|U|+1)·e^{−nδ²π_U²/2} − 1/(2√(nπ_U))`.
    pub q_inverse_argument: f64,
}

impl BoundTerms {
    pub fn sum(&self) -> f64 {
        self.mutual_information + self.polylog_penalty + self.rounding + self.dispersion
    }
}

/// The non-asymptotic achievability bound with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: u64,
    pub delta: f64,
    pub eps: f64,
    /// The bound, present only when every condition holds.
    pub rate: Option<f64>,
    pub valid: bool,
    pub terms: BoundTerms,
    pub conditions: Vec<Condition>,
}

impl BoundReport {
    /// The term sum regardless of validity.
    pub fn unconditional_rate(&self) -> f64 {
        self.terms.sum()
    }

    pub fn failed_conditions(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.satisfied)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rate {
            Some(r) => writeln!(f, "exact bound: valid, rate <= {r}")?,
            None => writeln!(f, "exact bound: invalid (term sum {})", self.unconditional_rate())?,
        }
        let t = &self.terms;
        writeln!(f, "  I(U;V)             {}", t.mutual_information)?;
        writeln!(f, "  polylog penalty    {}", t.polylog_penalty)?;
        writeln!(f, "  rounding 2/n       {}", t.rounding)?;
        writeln!(f, "  dispersion         {}", t.dispersion)?;
        writeln!(f, "  Q^-1 argument      {}", t.q_inverse_argument)?;
        for c in &self.conditions {
            let mark = if c.satisfied { "ok  " } else { "FAIL" };
            writeln!(f, "  [{mark}] {} (threshold {})", c.name, c.threshold)?;
        }
        Ok(())
    }
}

pub const COND_N_TYPICAL: &str = "n >= 4/(pi_U^2 delta)";
pub const COND_N_JOINT: &str = "n >= 2/pi_UV";
pub const COND_N_PRODUCT: &str = "n >= 2/(pi_U pi_V)";
pub const COND_EPS: &str = "eps > (2|U|+1) exp(-n delta^2 pi_U^2/2) + 1/(2 sqrt(n pi_U))";

/// The non-asymptotic upper bound on the optimal rate at fixed `δ`:
///
/// `I + 2(|U||V|+1)log₂(n+1)/n + 2/n + √(𝕍/n)·Q⁻¹(ε − (2|U|+1)e^{−nδ²π_U²/2} − 1/(2√(nπ_U)))`,
///
/// valid for `n ≥ 4/(π_U²δ), 2/π_UV, 2/(π_Uπ_V)` and `ε` above the
/// subtracted slack. Never fails; invalid inputs come back as diagnostics.
pub fn achievability_bound(n: u64, dist: &JointDistribution, delta: &Threshold, eps: f64) -> BoundReport {
    let profile = InfoProfile::compute(dist);
    achievability_bound_from(&profile, dist.size_u(), dist.size_v(), n, delta.value(), eps)
}

pub fn achievability_bound_from(
    profile: &InfoProfile,
    size_u: usize,
    size_v: usize,
    n: u64,
    delta: f64,
    eps: f64,
) -> BoundReport {
    let nf = n as f64;
    let (pu, pv, puv) = (profile.min_prob_u, profile.min_prob_v, profile.min_prob_uv);
    let (su, sv) = (size_u as f64, size_v as f64);

    let slack = (2.0 * su + 1.0) * (-nf * delta * delta * pu * pu / 2.0).exp() + 1.0 / (2.0 * (nf * pu).sqrt());
    let arg = eps - slack;
    let dispersion = if profile.coordination_variance == 0.0 {
        0.0
    } else if arg > 0.0 && arg < 1.0 {
        (profile.coordination_variance / nf).sqrt() * q_inverse(arg).expect("in range")
    } else {
        f64::INFINITY
    };
    let terms = BoundTerms {
        mutual_information: profile.mutual_information,
        polylog_penalty: 2.0 * (su * sv + 1.0) * (nf + 1.0).log2() / nf,
        rounding: 2.0 / nf,
        dispersion,
        q_inverse_argument: arg,
    };

    let at_least = |name, threshold: f64| Condition { name, satisfied: nf >= threshold, threshold };
    let conditions = vec![
        Condition { name: "0 < eps < 1", satisfied: eps > 0.0 && eps < 1.0, threshold: eps },
        Condition { name: "0 < delta < 1", satisfied: delta > 0.0 && delta < 1.0, threshold: delta },
        at_least(COND_N_TYPICAL, 4.0 / (pu * pu * delta)),
        at_least(COND_N_JOINT, 2.0 / puv),
        at_least(COND_N_PRODUCT, 2.0 / (pu * pv)),
        Condition { name: COND_EPS, satisfied: eps > slack, threshold: slack },
    ];
    let valid = conditions.iter().all(|c| c.satisfied);
    BoundReport { n, delta, eps, rate: valid.then(|| terms.sum()), valid, terms, conditions }
}

/// Outcome of the conditional-probability lower bound at one source type.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalBound {
    /// `−log₂ Π_δ(T_U)`.
    pub lhs: f64,
    /// `2|U||V|·log₂(n+1) + Σ_u n_u·D(P_{V|u}‖P_V)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates `log₂(1/Π_δ(uⁿ)) ≤ 2|U||V|log₂(n+1) + Σ_t D(P_{V|u_t}‖P_V)` for a
/// source type in the `δπ_U/2`-typical set, under the blocklength conditions.
pub fn conditional_probability_bound(
    t_u: &TypeVector,
    dist: &JointDistribution,
    delta: &Threshold,
) -> Result<ConditionalBound> {
    check_type(t_u, dist)?;
    let n = t_u.n();
    let nf = n as f64;
    let pu = dist.marginal_u();
    let pi_u = dist.min_prob_u();
    let d = delta.value();
    for (name, threshold) in [
        (COND_N_TYPICAL, 4.0 / (pi_u * pi_u * d)),
        (COND_N_JOINT, 2.0 / dist.min_prob_uv()),
        (COND_N_PRODUCT, 2.0 / (pi_u * dist.min_prob_v())),
    ] {
        if nf < threshold {
            return Err(Error::PreconditionViolated(format!("{name}: n = {n} < {threshold}")));
        }
    }
    let radius: BigRational = delta.exact() * pu.min_prob_exact() / BigRational::from_integer(2.into());
    for (u, &c) in t_u.counts().iter().enumerate() {
        let p = &pu.exact()[u];
        let typical = if p.is_zero() {
            c == 0
        } else {
            let dev = count_ratio(c, n) - p;
            num_traits::Signed::abs(&dev) <= radius
        };
        if !typical {
            return Err(Error::PreconditionViolated(format!(
                "source type is not (delta pi_U / 2)-typical at symbol {u}"
            )));
        }
    }
    let lhs = -log2_prob_typical_given_type(t_u, dist, delta)?;
    let divergence: f64 = t_u
        .counts()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(u, &c)| c as f64 * kl_divergence(dist.conditional(u).expect("typical type"), dist.marginal_v()))
        .sum();
    let rhs = 2.0 * (dist.size_u() * dist.size_v()) as f64 * (nf + 1.0).log2() + divergence;
    Ok(ConditionalBound { lhs, rhs, holds: lhs <= rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::example_distribution;
    use crate::types::{enumerate_typical_joint_types, log2_type_probability, ConditionalTypeTable};

    fn t(s: &str) -> Threshold {
        Threshold::parse(s).unwrap()
    }

    /// Π summed over whole admissible tables in the linear domain.
    fn pi_by_tables(t_u: &TypeVector, dist: &JointDistribution, delta: &Threshold) -> f64 {
        let n = t_u.n();
        enumerate_typical_joint_types(n, dist, delta)
            .into_iter()
            .filter(|table: &ConditionalTypeTable| table.row_totals() == *t_u)
            .map(|table| {
                (0..dist.size_u())
                    .map(|u| log2_type_probability(&TypeVector::new(table.row(u).to_vec()), dist.marginal_v()).exp2())
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn pi_factorization_matches_table_sum() {
        let dists = [
            example_distribution(),
            JointDistribution::from_weights(&[vec![1, 2, 1], vec![3, 0, 2]]).unwrap(),
            JointDistribution::from_weights(&[vec![1, 1], vec![1, 1]]).unwrap(),
        ];
        for dist in &dists {
            for (n, delta) in [(6, "0.2"), (9, "0.15"), (12, "0.1")] {
                let delta = t(delta);
                let lo = vec![0; dist.size_u()];
                let hi = vec![n; dist.size_u()];
                for_each_bounded_composition(n, &lo, &hi, |c| {
                    let tv = TypeVector::new(c.to_vec());
                    let a = prob_typical_given_type(&tv, dist, &delta).unwrap();
                    let b = pi_by_tables(&tv, dist, &delta);
                    assert!((a - b).abs() < 1e-13, "{c:?}: {a} vs {b}");
                });
            }
        }
    }

    #[test]
    fn infeasible_blocklength() {
        let p = example_distribution();
        let delta = t("0.04");
        assert_eq!(prob_typical_given_type(&TypeVector::new(vec![7, 3]), &p, &delta).unwrap(), 0.0);
        let table = PiTable::build(&p, 10, &delta);
        assert_eq!(table.floor(), 1.0);
        for m in [1u64, 2, 1000, u64::MAX] {
            assert_eq!(table.error_u64(m), 1.0);
        }
        assert!(matches!(table.optimal_codebook_size(0.1), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn constant_v() {
        // |V| = 1: Π is 1 when the single completion is typical, else 0
        let p = JointDistribution::from_weights(&[vec![1], vec![2]]).unwrap();
        let delta = t("0.1");
        assert_eq!(prob_typical_given_type(&TypeVector::new(vec![1, 2]), &p, &delta).unwrap(), 1.0);
        assert_eq!(prob_typical_given_type(&TypeVector::new(vec![3, 0]), &p, &delta).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_has_zero_floor_and_rate() {
        let p = JointDistribution::from_weights(&[vec![1]]).unwrap();
        for n in [1, 7, 50] {
            let table = PiTable::build(&p, n, &t("0"));
            assert_eq!(table.floor(), 0.0);
            assert_eq!(table.error_u64(1), 0.0);
            let r = table.optimal_codebook_size(0.1).unwrap();
            assert_eq!(r.m_star, BigUint::one());
            assert_eq!(r.rate, 0.0);
        }
    }

    #[test]
    fn error_is_monotone_and_sandwiched() {
        let p = example_distribution();
        let table = PiTable::build(&p, 40, &t("0.025"));
        let mut prev = 1.0;
        for k in 0..80 {
            let e = table.error(&(BigUint::one() << k));
            assert!(e <= prev && e >= table.floor() && e <= 1.0);
            prev = e;
        }
        let huge = table.error(&(BigUint::one() << 4000));
        assert!((huge - table.floor()).abs() < 1e-15);
    }

    #[test]
    fn dichotomy_self_consistency() {
        let p = example_distribution();
        let table = PiTable::build(&p, 60, &t("0.2"));
        for eps in [0.05, 0.1, 0.3, 0.7] {
            let r = table.optimal_codebook_size(eps).unwrap();
            assert!(table.error(&r.m_star) <= eps);
            if r.m_star > BigUint::one() {
                assert!(table.error(&(&r.m_star - 1u8)) > eps);
            }
        }
    }

    #[test]
    fn gaussian_rate_examples() {
        let p = example_distribution();
        let q1 = crate::gaussian::q_function(1.0);
        let r = gaussian_approx_rate(100, &p, q1).unwrap();
        let expected = 3f64.log2() - 4.0 / 3.0 + (1.0f64 / 18.0 / 100.0).sqrt();
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.275199).abs() < 1e-6);
        let i = InfoProfile::compute(&p).mutual_information;
        assert_eq!(gaussian_approx_rate(37, &p, 0.5).unwrap(), i);
        let product = JointDistribution::from_weights(&[vec![1, 3], vec![2, 6]]).unwrap();
        assert_eq!(gaussian_approx_rate(10, &product, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn rate_rounding_examples() {
        let (m, r) = round_rate(0.0, 17).unwrap();
        assert_eq!((m, r), (BigUint::one(), 0.0));
        let (m, r) = round_rate(0.25, 100).unwrap();
        assert_eq!(m, BigUint::from(33_554_432u64));
        assert_eq!(r, 0.25);
        let (m, r) = round_rate(0.2516, 40).unwrap();
        assert_eq!(m, BigUint::from(1071u32));
        assert!((r - 1071f64.log2() / 40.0).abs() < 1e-15);
        assert!(r <= 0.2516 + 0.05);
        assert!(matches!(round_rate(2.0, 600), Err(Error::Overflow { .. })));
        assert!(round_rate(-0.1, 5).is_err());
    }

    #[test]
    fn bound_invalid_at_small_n() {
        let report = achievability_bound(400, &example_distribution(), &t("0.01"), 0.1);
        assert!(!report.valid);
        assert_eq!(report.rate, None);
        let failed: Vec<_> = report.failed_conditions().map(|c| c.name).collect();
        assert!(failed.contains(&COND_N_TYPICAL));
        let c = report.conditions.iter().find(|c| c.name == COND_N_TYPICAL).unwrap();
        assert!((c.threshold - 3600.0).abs() < 1e-9);
    }

    #[test]
    fn bound_valid_at_large_n() {
        let report = achievability_bound(20000, &example_distribution(), &t("0.1"), 0.1);
        assert!(report.valid, "{report}");
        let t = &report.terms;
        let expected = t.mutual_information + t.polylog_penalty + t.rounding + t.dispersion;
        assert_eq!(report.rate, Some(expected));
        assert!((t.polylog_penalty - 10.0 * 20001f64.log2() / 20000.0).abs() < 1e-15);
        assert!(t.dispersion > 0.0);
    }

    #[test]
    fn bound_without_dispersion() {
        let product = JointDistribution::from_weights(&[vec![1, 1], vec![1, 1]]).unwrap();
        let n = 5000;
        let report = achievability_bound(n, &product, &t("0.2"), 0.1);
        assert!(report.valid, "{report}");
        let nf = n as f64;
        let expected = 2.0 * 5.0 * (nf + 1.0).log2() / nf + 2.0 / nf;
        assert!((report.rate.unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn conditional_bound_preconditions() {
        let p = example_distribution();
        let e = conditional_probability_bound(&TypeVector::new(vec![27, 13]), &p, &t("0.025")).unwrap_err();
        assert!(matches!(e, Error::PreconditionViolated(ref m) if m.contains("4/(pi_U^2 delta)")), "{e}");
        // far from P_U: not typical
        let e = conditional_probability_bound(&TypeVector::new(vec![1000, 1000]), &p, &t("0.1")).unwrap_err();
        assert!(matches!(e, Error::PreconditionViolated(ref m) if m.contains("typical")), "{e}");
    }

    #[test]
    fn conditional_bound_holds_at_exact_proportions() {
        let p = example_distribution();
        let b = conditional_probability_bound(&TypeVector::new(vec![1334, 666]), &p, &t("0.1"));
        let b = b.unwrap_or_else(|_| {
            conditional_probability_bound(&TypeVector::new(vec![1333, 667]), &p, &t("0.1")).unwrap()
        });
        assert!(b.holds, "{b:?}");
        let product = JointDistribution::from_weights(&[vec![1, 1], vec![1, 1]]).unwrap();
        let b = conditional_probability_bound(&TypeVector::new(vec![200, 200]), &product, &t("0.1")).unwrap();
        assert!(b.holds && b.rhs - b.lhs >= 0.0);
    }
}
