//! Finite-blocklength achievability bounds for empirical coordination.
//!
//! An encoder observes an i.i.d. source `Uⁿ ~ P_U` and sends one of `|M|`
//! messages; the decoder emits `Vⁿ`. The pair succeeds when its joint type
//! lies within `δ` of a target `P_UV` (sup-norm, with no mass outside the
//! support). This crate computes, for a finite target distribution:
//!
//! - the exact expected error of a random codebook, by splitting along the
//!   types of `Uⁿ` ([`bounds::PiTable`]);
//! - the smallest random-codebook rate meeting a target error
//!   ([`bounds::optimal_random_codebook_rate`]);
//! - the Gaussian approximation `I(U;V) + √(𝕍/n)·Q⁻¹(ε)`
//!   ([`bounds::gaussian_approx_rate`]);
//! - a non-asymptotic upper bound with its validity conditions
//!   ([`bounds::achievability_bound`]);
//!
//! together with brute-force and Monte Carlo oracles in [`simulate`].
//!
//! All rates are in bits per symbol.

pub mod bounds;
pub mod compositions;
pub mod dist;
mod error;
pub mod gaussian;
pub mod info;
pub mod simulate;
pub mod types;

pub use bounds::{
    achievability_bound, conditional_probability_bound, error_floor, expected_codebook_error, gaussian_approx_rate,
    optimal_random_codebook_rate, prob_typical_given_type, round_rate, BoundReport, ErrorCurve, OptimalRate, PiTable,
};
pub use dist::{JointDistribution, Pmf};
pub use error::{Error, Result};
pub use gaussian::{q_function, q_inverse};
pub use info::{information_density, InfoProfile};
pub use types::{ConditionalTypeTable, LambdaCache, Threshold, TypeVector, TypicalitySpec};
