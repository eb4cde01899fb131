//! Simulation and Monte-Carlo verification for the self-similar jump SDE
//!
//! ```text
//! Z_t = Z_0 + ∫ Z_{s-}^β dL_s + θ ∫ Z_s^η ds,    η = 1 - α(1 - β)
//! ```
//!
//! driven by a spectrally positive α-stable Lévy process `L` with
//! `log E[exp(-λ L_1)] = λ^α`, α ∈ (1, 2).
//!
//! The numerical core (special functions, parameters, samplers, schemes and
//! the Lamperti construction) is generic over the floating-point type through
//! [`Scalar`]; the aliases at the crate root fix it to `f64`, which is what the
//! Monte-Carlo harness and the command line use.

// Negated float comparisons are deliberate: they send NaN down the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod error;
pub mod lamperti;
pub mod mc;
pub mod params;
pub mod quad;
pub mod scalar;
pub mod sde;
pub mod specfun;
pub mod stable;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use stable::RngStream;

pub type ExtReal = specfun::ExtReal<f64>;
pub type Parameters = params::Parameters<f64>;
pub type Parameters32 = params::Parameters<f32>;
pub type JumpEvent = stable::JumpEvent<f64>;
pub type SamplePath = sde::SamplePath<f64>;
pub type SamplePath32 = sde::SamplePath<f32>;
pub type SchemeConfig = sde::SchemeConfig<f64>;
pub type LevyPathXi = lamperti::LevyPathXi<f64>;
pub type ExponentialFunctional = lamperti::ExponentialFunctional<f64>;

pub use mc::{KsReport, McConfig, McSummary};
pub use params::{BoundaryFlag, Regime, RegimeTag};
