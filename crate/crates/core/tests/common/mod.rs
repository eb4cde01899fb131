//! Oracles shared by the integration tests. They avoid the crate's own
//! quadrature and gamma routines.
#![allow(dead_code)]

/// Composite Simpson rule for `∫_0^∞ f(x) dx` after `x = e^s`, over
/// `s ∈ [lo, hi]` with `2m` panels.
pub fn integrate_log_axis<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (hi - lo) / n as f64;
    let g = |s: f64| {
        let x = s.exp();
        f(x) * x
    };
    let mut acc = g(lo) + g(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite Simpson rule on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `log Γ(x)` by the Stirling series at `x + 20`, shifted back.
pub fn ln_gamma_oracle(x: f64) -> f64 {
    let shift = 20.0;
    let y = x + shift;
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    let stirling = (y - 0.5) * y.ln() - y + 0.5 * (2.0 * std::f64::consts::PI).ln() + series;
    let mut correction = 0.0;
    for k in 0..shift as usize {
        correction += (x + k as f64).ln();
    }
    stirling - correction
}

pub fn gamma_oracle(x: f64) -> f64 {
    ln_gamma_oracle(x).exp()
}

/// `c_α = α(α-1)/Γ(2-α)` from the oracle gamma.
pub fn c_alpha_oracle(alpha: f64) -> f64 {
    alpha * (alpha - 1.0) / gamma_oracle(2.0 - alpha)
}

/// `∫_0^∞ core(x) c_α x^{-1-α} dx` for `core(x) = a2 x² + O(x³)` near zero
/// and `O(x)` at infinity. The piece below `e^{-60}` is taken from the
/// leading Taylor term.
pub fn levy_integral<F: Fn(f64) -> f64>(alpha: f64, a2: f64, core: F) -> f64 {
    let c = c_alpha_oracle(alpha);
    let lo = -60.0f64;
    let head = a2 * c * (lo * (2.0 - alpha)).exp() / (2.0 - alpha);
    head + integrate_log_axis(|x| core(x) * c * x.powf(-1.0 - alpha), lo, 400.0, 200_000)
}
