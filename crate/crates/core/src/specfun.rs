//! Gamma function and the closed-form scalar quantities of the model.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::params::Parameters;
use crate::scalar::Scalar;

/// A real number extended with `+∞`.
///
/// `+∞` only ever arises as `Γ(0)`; division of a finite positive number by it
/// gives `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExtReal<T> {
    Finite(T),
    PosInfinity,
}

impl<T: Scalar> ExtReal<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::PosInfinity)
    }

    /// The value as a scalar, mapping `+∞` to the scalar's infinity.
    pub fn value(&self) -> T {
        match *self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInfinity => T::infinity(),
        }
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// `numerator / self` for a finite numerator, with `x / +∞ = 0`.
    pub fn divide_into(&self, numerator: T) -> T {
        match *self {
            ExtReal::Finite(v) => numerator / v,
            ExtReal::PosInfinity => T::zero(),
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos sum and shifted argument for `x >= 1/2`.
#[inline]
fn lanczos_parts<T: Scalar>(x: T) -> (T, T) {
    let xm1 = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (xm1 + T::lit(i as f64));
    }
    let t = xm1 + T::lit(LANCZOS_G + 0.5);
    (acc, t)
}

/// `Γ(x)` for finite `x > 0`, without the domain checks of [`gamma_fn`].
pub fn gamma_pos<T: Scalar>(x: T) -> T {
    if x < T::lit(0.5) {
        return gamma_pos(x + T::one()) / x;
    }
    if x > T::lit(171.0) {
        return T::infinity();
    }
    // integers up to 20 get the exact factorial
    if x <= T::lit(21.0) && x == x.floor() {
        let n = x.as_f64() as u64;
        return T::lit((1..n).product::<u64>() as f64);
    }
    let (acc, t) = lanczos_parts(x);
    let sqrt_2pi = (T::lit(2.0) * T::PI()).sqrt();
    // t^(x - 1/2) e^-t split in two halves to postpone overflow near x = 171
    let half = t.powf((x - T::lit(0.5)) / T::lit(2.0));
    sqrt_2pi * half * (half * (-t).exp()) * acc
}

/// `Γ(x)` for `x >= 0`, with `Γ(0) = +∞`.
pub fn gamma_fn<T: Scalar>(x: T) -> Result<ExtReal<T>> {
    if x.is_nan() || x < T::zero() {
        return Err(domain(format!("gamma_fn requires x >= 0, got {x}")));
    }
    if x == T::zero() {
        return Ok(ExtReal::PosInfinity);
    }
    Ok(ExtReal::Finite(gamma_pos(x)))
}

/// `log Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x <= T::zero() {
        return Err(domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos<T: Scalar>(x: T) -> T {
    if x < T::lit(0.5) {
        return ln_gamma_pos(x + T::one()) - x.ln();
    }
    let (acc, t) = lanczos_parts(x);
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    half_ln_2pi + (x - T::lit(0.5)) * t.ln() - t + acc.ln()
}

pub(crate) fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::one() && alpha < T::lit(2.0)) {
        return Err(domain(format!("alpha must lie in (1,2), got {alpha}")));
    }
    Ok(())
}

/// Constant of the Lévy density `c_α x^{-1-α}`: `α(α-1)/Γ(2-α)`.
pub fn c_alpha<T: Scalar>(alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    Ok(alpha * (alpha - T::one()) / gamma_pos(T::lit(2.0) - alpha))
}

/// Laplace exponent `ψ(λ) = log E[exp(λ ξ_1)] = λ(θ - Γ(α-λ)/Γ(1-λ))` of the
/// Lamperti Lévy process, for `λ ∈ [0, 1)`.
pub fn laplace_exponent_xi<T: Scalar>(lambda: T, params: &Parameters<T>) -> Result<T> {
    if lambda.is_nan() || lambda < T::zero() || lambda >= T::one() {
        return Err(domain(format!("laplace exponent requires 0 <= lambda < 1, got {lambda}")));
    }
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    let ratio = gamma_pos(params.alpha - lambda) / gamma_pos(T::one() - lambda);
    Ok(lambda * (params.theta - ratio))
}

/// `ψ(1 - η)`, the continuous extension to the right end of the Cramér window.
///
/// For `η > 0` this is the formula itself; for `η = 0` it is `ψ(1) = θ`
/// under `Γ(0) = +∞`.
pub fn laplace_exponent_at_edge<T: Scalar>(params: &Parameters<T>) -> T {
    let lambda = T::one() - params.eta;
    lambda * (params.theta - params.threshold_low)
}

/// `E[ξ_1] = θ - Γ(α)`.
pub fn xi_mean_drift<T: Scalar>(params: &Parameters<T>) -> T {
    params.theta - params.threshold_high
}

/// Checks `(α, β)` against `α ∈ (1,2)`, `β ∈ [1-1/α, 1)`, returning `η`
/// (snapped to `0` within `1e-12` of the lower edge).
pub(crate) fn eta_of<T: Scalar>(alpha: T, beta: T) -> Result<T> {
    check_alpha(alpha)?;
    let edge = T::one() - T::one() / alpha;
    let tol = T::lit(1e-12);
    if beta.is_nan() || beta < edge - tol || beta >= T::one() {
        return Err(domain(format!(
            "beta must lie in [1-1/alpha, 1) = [{edge}, 1), got {beta}"
        )));
    }
    if (beta - edge).abs() <= tol {
        return Ok(T::zero());
    }
    Ok(T::one() - alpha * (T::one() - beta))
}

/// `Γ(αβ)/Γ(η)`, which is `0` at `η = 0`.
pub fn threshold_low<T: Scalar>(alpha: T, beta: T) -> Result<T> {
    let eta = eta_of(alpha, beta)?;
    let den = gamma_fn(eta)?;
    Ok(den.divide_into(gamma_pos(alpha * beta)))
}

/// Whether `Γ(αβ)/Γ(η) < Γ(α)`.
pub fn threshold_inequality_holds<T: Scalar>(alpha: T, beta: T) -> Result<bool> {
    let low = threshold_low(alpha, beta)?;
    Ok(low < gamma_pos(alpha))
}

/// Gap `Γ(α) - Γ(αβ)/Γ(η)`; below [`MARGINAL_GAP`] the strict inequality is
/// considered numerically marginal.
pub fn threshold_gap<T: Scalar>(alpha: T, beta: T) -> Result<T> {
    Ok(gamma_pos(alpha) - threshold_low(alpha, beta)?)
}

pub const MARGINAL_GAP: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: Stirling series for log Γ at x + 30, shifted back by
    /// the recurrence.
    fn gamma_oracle(x: f64) -> f64 {
        let n = 30;
        let z = x + n as f64;
        let b = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360_360.0,
            1.0 / 156.0,
        ];
        let mut series = 0.0;
        let mut zp = z;
        for c in b {
            series += c / zp;
            zp *= z * z;
        }
        let lg = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series;
        let mut prod = 1.0;
        for k in 0..n {
            prod *= x + k as f64;
        }
        lg.exp() / prod
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_fn(1.0).unwrap(), ExtReal::Finite(1.0));
        assert_relative_eq!(gamma_fn(1.0_f64).unwrap().value(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(0.5).unwrap().value(), 1.772_453_850_905_516, max_relative = 1e-13);
        assert!(gamma_fn(0.0_f64).unwrap().is_infinite());
        assert_relative_eq!(gamma_fn(1.5).unwrap().value(), 0.886_226_925_452_758, max_relative = 1e-13);
        assert!(gamma_fn(-0.1_f64).is_err());
    }

    #[test]
    fn gamma_matches_oracle() {
        assert_relative_eq!(gamma_oracle(1.5), 0.886_226_925_452_758, max_relative = 1e-13);
        let mut x = 0.05;
        while x <= 10.0 {
            let g = gamma_fn(x).unwrap().value();
            let o = gamma_oracle(x);
            assert!(((g - o) / o).abs() <= 1e-12, "x={x} got {g} oracle {o}");
            x += 0.0137;
        }
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.05f64;
        while x <= 9.0 {
            let g1 = gamma_pos(x + 1.0);
            assert!((g1 - x * gamma_pos(x)).abs() <= 1e-11 * g1, "x={x}");
            x += 0.01;
        }
    }

    #[test]
    fn ln_gamma_consistent() {
        for &x in &[0.01f64, 0.3, 1.0, 2.5, 7.0, 50.0] {
            assert_relative_eq!(ln_gamma(x).unwrap(), gamma_pos(x).ln(), max_relative = 1e-12, epsilon = 1e-14);
        }
        assert_relative_eq!(ln_gamma(200.0_f64).unwrap(), 857.933_669_825_857_2, max_relative = 1e-13);
    }

    #[test]
    fn gamma_f32() {
        assert_relative_eq!(gamma_fn(0.5_f32).unwrap().value(), 1.772_453_9, max_relative = 1e-5);
    }

    #[test]
    fn c_alpha_values() {
        assert_relative_eq!(c_alpha(1.5).unwrap(), 0.423_142_187_660_817_2, max_relative = 1e-12);
        assert_relative_eq!(c_alpha(1.9).unwrap(), 0.179_744_428_045_114_1, max_relative = 1e-12);
        assert!(c_alpha(1.000_001).unwrap() < 1e-5);
        assert!(c_alpha(2.0).is_err());
        assert!(c_alpha(1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert!(threshold_inequality_holds(1.5, 0.5).unwrap());
        assert_relative_eq!(threshold_low(1.5, 0.5).unwrap(), 0.337_989_120_033_642_4, max_relative = 1e-12);
        assert_eq!(threshold_low(1.5, 1.0 / 3.0).unwrap(), 0.0);
        assert!(threshold_inequality_holds(1.5, 1.0 / 3.0).unwrap());
        assert!(threshold_inequality_holds(1.9, 0.9).unwrap());
        assert!(threshold_inequality_holds(1.5, 0.2).is_err());
        assert!(threshold_inequality_holds(2.5, 0.9).is_err());
    }

    #[test]
    fn threshold_grid() {
        for i in 0..50 {
            let alpha = 1.01 + 0.98 * i as f64 / 49.0;
            let lo = 1.0 - 1.0 / alpha;
            for j in 0..50 {
                let beta = lo + (0.99 - lo) * j as f64 / 49.0;
                assert!(threshold_inequality_holds(alpha, beta).unwrap(), "alpha={alpha} beta={beta}");
                assert!(threshold_gap(alpha, beta).unwrap() > 0.0);
            }
        }
    }
}
