//! Validated model parameters and the three-regime classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfun;

/// Parameter bundle `(α, β, θ)` with the derived constants.
///
/// Construct through [`Parameters::derive`]; the fields are public for
/// reading but a hand-built value skips validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parameters<T> {
    /// Stability index, in `(1, 2)`.
    pub alpha: T,
    /// Noise Hölder exponent, in `[1 - 1/α, 1)`.
    pub beta: T,
    /// Drift coefficient, `>= 0`.
    pub theta: T,
    /// Drift exponent `1 - α(1 - β)`, in `[0, 1)`.
    pub eta: T,
    /// Self-similarity index `1/(1 - η)`.
    pub gamma_index: T,
    /// `Γ(αβ)/Γ(η)`, zero when `η = 0`.
    pub threshold_low: T,
    /// `Γ(α)`.
    pub threshold_high: T,
    /// Constant of the Lévy density.
    pub c_alpha: T,
}

impl<T: Scalar> Parameters<T> {
    /// Validates `(α, β, θ)` and fills in the derived constants.
    pub fn derive(alpha: T, beta: T, theta: T) -> Result<Self> {
        if alpha.is_nan() || !(alpha > T::one() && alpha < T::lit(2.0)) {
            return Err(Error::Validation("alpha must lie in (1,2)".into()));
        }
        let edge = T::one() - T::one() / alpha;
        if beta.is_nan() || beta < edge - T::lit(1e-12) || beta >= T::one() {
            return Err(Error::Validation(format!(
                "beta must lie in [1-1/alpha, 1) = [{edge}, 1)"
            )));
        }
        if theta.is_nan() || theta < T::zero() || !theta.is_finite() {
            return Err(Error::Validation("theta must be finite and >= 0".into()));
        }
        let eta = specfun::eta_of(alpha, beta)?;
        // η = 0 snaps β onto the edge so that 1 - η = α(1 - β) holds exactly
        let beta = if eta == T::zero() { edge } else { beta };
        Ok(Parameters {
            alpha,
            beta,
            theta,
            eta,
            gamma_index: T::one() / (T::one() - eta),
            threshold_low: specfun::threshold_low(alpha, beta)?,
            threshold_high: specfun::gamma_pos(alpha),
            c_alpha: specfun::c_alpha(alpha)?,
        })
    }

    /// Same `(α, β)` with a different drift coefficient.
    pub fn with_theta(&self, theta: T) -> Result<Self> {
        Self::derive(self.alpha, self.beta, theta)
    }

    /// Whether `β` sits on the lower edge `1 - 1/α` (equivalently `η = 0`).
    pub fn beta_at_lower_edge(&self) -> bool {
        self.eta == T::zero()
    }

    /// Constant drift `(1 - η)(θ - Γ(αβ)/Γ(η))` of the power-transformed equation.
    pub fn v_drift(&self) -> T {
        (T::one() - self.eta) * (self.theta - self.threshold_low)
    }

    pub fn to_f64(&self) -> Parameters<f64> {
        Parameters {
            alpha: self.alpha.as_f64(),
            beta: self.beta.as_f64(),
            theta: self.theta.as_f64(),
            eta: self.eta.as_f64(),
            gamma_index: self.gamma_index.as_f64(),
            threshold_low: self.threshold_low.as_f64(),
            threshold_high: self.threshold_high.as_f64(),
            c_alpha: self.c_alpha.as_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RegimeTag {
    /// `θ <= Γ(αβ)/Γ(η)`: no solution spending zero time at the origin.
    NoClassSSolution,
    /// `Γ(αβ)/Γ(η) < θ < Γ(α)`: a unique class-S solution exists and hits
    /// zero almost surely, next to the solution trapped at zero.
    NonUniqueWithClassS,
    /// `θ >= Γ(α)`: zero is never reached.
    NeverHitsZero,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::NoClassSSolution => "NoClassSSolution",
            RegimeTag::NonUniqueWithClassS => "NonUniqueWithClassS",
            RegimeTag::NeverHitsZero => "NeverHitsZero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BoundaryFlag {
    BetaAtLowerEdge,
    ThetaAtLowThreshold,
    ThetaAtHighThreshold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub boundary_flags: Vec<BoundaryFlag>,
}

impl Regime {
    pub fn has_flag(&self, flag: BoundaryFlag) -> bool {
        self.boundary_flags.contains(&flag)
    }
}

/// Absolute tolerance for setting boundary flags. Classification itself uses
/// the strict comparisons.
pub const BOUNDARY_TOL: f64 = 1e-9;

pub fn classify_regime<T: Scalar>(params: &Parameters<T>) -> Regime {
    let theta = params.theta;
    let tag = if theta <= params.threshold_low {
        RegimeTag::NoClassSSolution
    } else if theta < params.threshold_high {
        RegimeTag::NonUniqueWithClassS
    } else {
        RegimeTag::NeverHitsZero
    };
    let tol = T::lit(BOUNDARY_TOL);
    let mut boundary_flags = Vec::new();
    if params.beta_at_lower_edge() {
        boundary_flags.push(BoundaryFlag::BetaAtLowerEdge);
    }
    if (theta - params.threshold_low).abs() <= tol {
        boundary_flags.push(BoundaryFlag::ThetaAtLowThreshold);
    }
    if (theta - params.threshold_high).abs() <= tol {
        boundary_flags.push(BoundaryFlag::ThetaAtHighThreshold);
    }
    Regime { tag, boundary_flags }
}
