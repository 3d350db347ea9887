//! Single-letter information functionals of a joint distribution, in bits.

use num_traits::Zero;

use crate::dist::{kl_divergence, ratio_to_f64, JointDistribution};
use crate::error::{Error, Result};

/// Deviations `|D(P_{V|u}‖P_V) - I|` at or below this many ulps of `max(1, I)`
/// are rounding noise: the conditional divergence is treated as constant.
const CONSTANT_DIVERGENCE_ULPS: f64 = 32.0;

/// `ı(u;v) = log₂ P(u,v) / (P_U(u) P_V(v))`.
///
/// The ratio is formed in exact arithmetic, so independent pairs give
/// exactly zero.
pub fn information_density(dist: &JointDistribution, u: usize, v: usize) -> Result<f64> {
    let p = dist.exact(u, v);
    if p.is_zero() {
        return Err(Error::OutsideSupport { u, v });
    }
    let ratio = p / (&dist.marginal_u().exact()[u] * &dist.marginal_v().exact()[v]);
    Ok(ratio_to_f64(&ratio).log2())
}

/// Summary of the quantities the achievability bounds depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoProfile {
    /// `I(U;V)`.
    pub mutual_information: f64,
    /// `D(P_{V|u}‖P_V) = E[ı(U;V) | U = u]`; `None` off `supp P_U`.
    pub cond_divergence: Vec<Option<f64>>,
    /// `𝕍 = Var(E[ı(U;V) | U])`, bits².
    pub coordination_variance: f64,
    /// `E|D(P_{V|U}‖P_V) - I(U;V)|³`, bits³.
    pub third_abs_moment: f64,
    pub min_prob_u: f64,
    pub min_prob_v: f64,
    pub min_prob_uv: f64,
}

impl InfoProfile {
    pub fn compute(dist: &JointDistribution) -> Self {
        let pu = dist.marginal_u();
        let pv = dist.marginal_v();
        let cond_divergence: Vec<Option<f64>> =
            (0..dist.size_u()).map(|u| dist.conditional(u).map(|c| kl_divergence(c, pv))).collect();

        let mut mi = 0.0;
        for u in 0..dist.size_u() {
            for v in 0..dist.size_v() {
                if dist.in_support(u, v) {
                    mi += dist.prob(u, v) * information_density(dist, u, v).expect("in support");
                }
            }
        }

        let noise = CONSTANT_DIVERGENCE_ULPS * f64::EPSILON * mi.abs().max(1.0);
        let deviations: Vec<(f64, f64)> = pu
            .support()
            .map(|u| {
                let z = cond_divergence[u].expect("u in support") - mi;
                (pu.prob(u), z)
            })
            .collect();
        let constant = deviations.iter().all(|&(_, z)| z.abs() <= noise);
        let (variance, third) = if constant {
            (0.0, 0.0)
        } else {
            deviations.iter().fold((0.0, 0.0), |(v2, v3), &(p, z)| (v2 + p * z * z, v3 + p * z.abs().powi(3)))
        };

        InfoProfile {
            mutual_information: mi,
            cond_divergence,
            coordination_variance: variance,
            third_abs_moment: third,
            min_prob_u: dist.min_prob_u(),
            min_prob_v: dist.min_prob_v(),
            min_prob_uv: dist.min_prob_uv(),
        }
    }
}

/// Returns `(𝕍, Var(ı) - E[Var(ı | U)])`; the two agree by the law of total
/// variance.
pub fn variance_decomposition(dist: &JointDistribution) -> (f64, f64) {
    let profile = InfoProfile::compute(dist);
    let mi = profile.mutual_information;
    let mut total = 0.0;
    let mut within = 0.0;
    for u in dist.marginal_u().support() {
        let du = profile.cond_divergence[u].expect("u in support");
        for v in 0..dist.size_v() {
            if !dist.in_support(u, v) {
                continue;
            }
            let i = information_density(dist, u, v).expect("in support");
            let p = dist.prob(u, v);
            total += p * (i - mi).powi(2);
            within += p * (i - du).powi(2);
        }
    }
    (profile.coordination_variance, total - within)
}

/// Returns `(E|Z|³ / 𝕍^{3/2}, 1/√π_{P_U})` with `Z = D(P_{V|U}‖P_V) - I(U;V)`.
/// The first never exceeds the second.
pub fn third_moment_ratio(dist: &JointDistribution) -> Result<(f64, f64)> {
    let profile = InfoProfile::compute(dist);
    if profile.coordination_variance == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ratio = profile.third_abs_moment / profile.coordination_variance.powf(1.5);
    Ok((ratio, 1.0 / profile.min_prob_u.sqrt()))
}
