//! Jump-adapted Euler schemes for the Z-equation and its power transform.
//!
//! Jumps of the driver above the cutoff are placed exactly at their Poisson
//! times; between them the state follows a deterministic Euler sub-grid of
//! `grid_step`. The compensator of the kept jumps enters as a drift, and the
//! discarded small jumps are either dropped (they have mean zero) or replaced
//! by a centred Gaussian of matching variance.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::Parameters;
use crate::quad;
use crate::scalar::Scalar;
use crate::specfun::gamma_pos;
use crate::stable::{compensator_above, small_jump_moments, JumpStream, RngStream};

/// Values below this count as "at zero" when measuring occupation time.
pub const ZERO_LEVEL: f64 = 1e-12;

/// Càdlàg path sampled at the scheme's grid and jump times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub absorbed_at: Option<T>,
}

impl<T: Scalar> SamplePath<T> {
    pub fn constant(value: T, horizon: T) -> Self {
        SamplePath { times: vec![T::zero(), horizon], values: vec![value, value], absorbed_at: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("non-empty path")
    }

    pub fn last_value(&self) -> T {
        *self.values.last().expect("non-empty path")
    }

    /// Value of the càdlàg path at time `t` (the last recorded point at or
    /// before `t`).
    pub fn value_at(&self, t: T) -> T {
        let idx = self.times.partition_point(|&s| s <= t);
        self.values[idx.saturating_sub(1)]
    }

    /// Checks the structural invariants: starts at time 0, strictly increasing
    /// times, nonnegative values, zero from the absorption time on.
    pub fn check_invariants(&self) -> bool {
        if self.times.is_empty() || self.times.len() != self.values.len() || self.times[0] != T::zero() {
            return false;
        }
        if !self.times.windows(2).all(|w| w[0] < w[1]) {
            return false;
        }
        if !self.values.iter().all(|&v| v >= T::zero()) {
            return false;
        }
        match self.absorbed_at {
            Some(ta) => self.times.iter().zip(&self.values).all(|(&t, &v)| t < ta || v == T::zero()),
            None => true,
        }
    }

    /// Fraction of `[0, horizon]` spent below [`ZERO_LEVEL`].
    pub fn zero_occupation_fraction(&self) -> T {
        self.occupation_below(T::lit(ZERO_LEVEL))
    }

    /// Fraction of `[0, horizon]` spent strictly below `level`, reading the
    /// path as piecewise constant.
    pub fn occupation_below(&self, level: T) -> T {
        let total = self.horizon() - self.times[0];
        if total <= T::zero() {
            return T::zero();
        }
        let mut at_zero = T::zero();
        for i in 0..self.times.len() - 1 {
            if self.values[i] < level {
                at_zero = at_zero + (self.times[i + 1] - self.times[i]);
            }
        }
        at_zero / total
    }

    /// Keeps every `k`-th point plus the first, the last and the absorption
    /// point.
    pub fn downsample(&self, every: usize) -> Self {
        if every <= 1 {
            return self.clone();
        }
        let n = self.times.len();
        let keep = |i: usize| i == 0 || i == n - 1 || i.is_multiple_of(every) || Some(self.times[i]) == self.absorbed_at;
        let (times, values) = (0..n)
            .filter(|&i| keep(i))
            .map(|i| (self.times[i], self.values[i]))
            .unzip();
        SamplePath { times, values, absorbed_at: self.absorbed_at }
    }
}

/// Discretization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig<T> {
    /// Deterministic sub-step between jumps.
    pub grid_step: T,
    /// Jumps of the driver below this size are not simulated individually.
    /// `+∞` switches the jumps off entirely.
    pub jump_cutoff: T,
    /// Replace the discarded small jumps by a matching Gaussian.
    pub gaussian_refinement: bool,
    pub horizon: T,
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn new(grid_step: T, jump_cutoff: T, gaussian_refinement: bool, horizon: T) -> Result<Self> {
        let cfg = SchemeConfig { grid_step, jump_cutoff, gaussian_refinement, horizon };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Grid step `1e-3` and the default cutoff for `alpha`, without the
    /// Gaussian refinement.
    pub fn default_for(alpha: T, horizon: T) -> Self {
        SchemeConfig {
            grid_step: T::lit(1e-3).min(horizon),
            jump_cutoff: crate::stable::default_cutoff(alpha),
            gaussian_refinement: false,
            horizon,
        }
    }

    pub fn with_horizon(mut self, horizon: T) -> Self {
        self.horizon = horizon;
        self.grid_step = self.grid_step.min(horizon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(domain(format!("horizon must be finite and > 0, got {}", self.horizon)));
        }
        if !(self.grid_step > T::zero()) || self.grid_step > self.horizon {
            return Err(domain(format!(
                "grid_step must lie in (0, horizon], got {} with horizon {}",
                self.grid_step, self.horizon
            )));
        }
        if !(self.jump_cutoff > T::zero()) {
            return Err(domain(format!("jump_cutoff must be > 0, got {}", self.jump_cutoff)));
        }
        if self.gaussian_refinement && self.jump_cutoff.is_infinite() {
            return Err(domain("gaussian refinement needs a finite jump_cutoff"));
        }
        Ok(())
    }
}

/// Jump of the transformed process: `g(v, x) = v (1 + v^{-1/α} x)^{1-η} - v`,
/// with `g(0, x) = 0`.
#[inline]
pub fn jump_map_g<T: Scalar>(v: T, x: T, params: &Parameters<T>) -> T {
    if v <= T::zero() {
        return T::zero();
    }
    let rel = x * v.powf(-T::one() / params.alpha);
    v * ((T::one() - params.eta) * rel.ln_1p()).exp_m1()
}

/// Constant `2^{1-1/α}(1-η)` of the Hölder modulus of `g` in `v`.
pub fn modulus_constant<T: Scalar>(params: &Parameters<T>) -> T {
    T::lit(2.0).powf(T::one() - T::one() / params.alpha) * (T::one() - params.eta)
}

/// Whether `|g(v2,x) - g(v1,x)| <= C |v2-v1|^{1-1/α} x` holds, allowing for
/// rounding in the evaluation of `g`.
pub fn modulus_bound_check<T: Scalar>(v1: T, v2: T, x: T, params: &Parameters<T>) -> bool {
    let g1 = jump_map_g(v1, x, params);
    let g2 = jump_map_g(v2, x, params);
    let bound = modulus_constant(params) * (v2 - v1).abs().powf(T::one() - T::one() / params.alpha) * x;
    let slack = T::lit(8.0) * T::epsilon() * (g1.abs() + g2.abs());
    (g2 - g1).abs() <= bound + slack
}

/// Whether `g(·, x)` is nondecreasing between `v1` and `v2`.
pub fn jump_map_monotone<T: Scalar>(v1: T, v2: T, x: T, params: &Parameters<T>) -> bool {
    let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
    let g_lo = jump_map_g(lo, x, params);
    let g_hi = jump_map_g(hi, x, params);
    g_hi >= g_lo - T::lit(8.0) * T::epsilon() * g_lo.abs()
}

/// Compensator rate of the kept jumps of the transformed process,
///
/// ```text
/// ∫_eps^∞ g(v, x) c_α x^{-1-α} dx = K(eps v^{-1/α}),
/// K(u) = ∫_u^∞ ((1 + y)^{1-η} - 1) c_α y^{-1-α} dy,
/// ```
///
/// tabulated on a log grid in `u` with cubic interpolation. Node values use
/// the convergent series for `u <= 1/2` and `u >= 2` and adaptive quadrature
/// in between.
#[derive(Debug, Clone)]
pub struct VCompensator<T> {
    alpha: T,
    lambda: T,
    c_alpha: T,
    /// `K(0+)` minus its singular part: `-λ Γ(α-λ)/Γ(1-λ)`.
    regular_part: T,
    log_u_min: T,
    log_u_step: T,
    log_k: Vec<T>,
}

const TABLE_LOG_U_MIN: f64 = -27.0;
const TABLE_LOG_U_MAX: f64 = 27.0;
const TABLE_NODES: usize = 2701;

impl<T: Scalar> VCompensator<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        let lambda = T::one() - params.eta;
        let regular_part = if params.eta == T::zero() {
            T::zero()
        } else {
            -lambda * gamma_pos(params.alpha - lambda) / gamma_pos(params.eta)
        };
        let mut table = VCompensator {
            alpha: params.alpha,
            lambda,
            c_alpha: params.c_alpha,
            regular_part,
            log_u_min: T::lit(TABLE_LOG_U_MIN),
            log_u_step: T::lit((TABLE_LOG_U_MAX - TABLE_LOG_U_MIN) / (TABLE_NODES - 1) as f64),
            log_k: Vec::new(),
        };
        let k_two = table.tail_series(T::lit(2.0));
        table.log_k = (0..TABLE_NODES)
            .map(|i| {
                let u = (table.log_u_min + table.log_u_step * T::lit(i as f64)).exp();
                table.exact(u, k_two).ln()
            })
            .collect();
        table
    }

    fn small_u_series(&self, u: T) -> T {
        let (alpha, lambda, c) = (self.alpha, self.lambda, self.c_alpha);
        let mut sum = T::zero();
        let mut binom = lambda * (lambda - T::one()) / T::lit(2.0);
        let mut upow = u * u;
        let mut k = 2usize;
        while binom != T::zero() && k < 4000 {
            let kt = T::lit(k as f64);
            let term = binom * upow / (kt - alpha);
            sum = sum + term;
            if term.abs() <= T::epsilon() * T::lit(1e-2) * sum.abs() {
                break;
            }
            binom = binom * (lambda - kt) / (kt + T::one());
            upow = upow * u;
            k += 1;
        }
        let sing = lambda * c * u.powf(T::one() - alpha) / (alpha - T::one());
        self.regular_part + sing - c * u.powf(-alpha) * sum
    }

    fn tail_series(&self, u: T) -> T {
        let (alpha, lambda, c) = (self.alpha, self.lambda, self.c_alpha);
        let mut sum = T::zero();
        let mut binom = T::one();
        let mut upow = T::one();
        let inv_u = T::one() / u;
        let mut k = 0usize;
        while binom != T::zero() && k < 4000 {
            let kt = T::lit(k as f64);
            let term = binom * upow / (alpha + kt - lambda);
            sum = sum + term;
            if k > 0 && term.abs() <= T::epsilon() * T::lit(1e-2) * sum.abs() {
                break;
            }
            binom = binom * (lambda - kt) / (kt + T::one());
            upow = upow * inv_u;
            k += 1;
        }
        c * (u.powf(lambda - alpha) * sum - u.powf(-alpha) / alpha)
    }

    /// `K(u)` from series or quadrature, without the table.
    pub fn exact_rate(&self, u: T) -> T {
        self.exact(u, self.tail_series(T::lit(2.0)))
    }

    fn exact(&self, u: T, k_two: T) -> T {
        if u <= T::lit(0.5) {
            self.small_u_series(u)
        } else if u >= T::lit(2.0) {
            self.tail_series(u)
        } else {
            let (alpha, lambda, c) = (self.alpha, self.lambda, self.c_alpha);
            let f = |y: T| c * (lambda * y.ln_1p()).exp_m1() * y.powf(-T::one() - alpha);
            k_two + quad::integrate(f, u, T::lit(2.0), T::lit(1e-15), T::lit(1e-14))
        }
    }

    /// `K(u)`; zero at `u = +∞`.
    #[inline]
    pub fn rate(&self, u: T) -> T {
        if u.is_infinite() {
            return T::zero();
        }
        let x = (u.ln() - self.log_u_min) / self.log_u_step;
        let last = (self.log_k.len() - 1) as f64;
        let xf = x.as_f64();
        if !(xf >= 1.0 && xf < last - 2.0) {
            return self.exact_rate(u);
        }
        let i = xf.floor() as usize;
        let s = x - T::lit(i as f64);
        let (p0, p1, p2, p3) = (self.log_k[i - 1], self.log_k[i], self.log_k[i + 1], self.log_k[i + 2]);
        // Catmull-Rom
        let half = T::lit(0.5);
        let a = -half * p0 + T::lit(1.5) * p1 - T::lit(1.5) * p2 + half * p3;
        let b = p0 - T::lit(2.5) * p1 + T::lit(2.0) * p2 - half * p3;
        let cc = -half * p0 + half * p2;
        (((a * s + b) * s + cc) * s + p1).exp()
    }

    /// Compensator rate at state `v` for cutoff `eps`.
    #[inline]
    pub fn rate_at(&self, v: T, eps: T) -> T {
        if v <= T::zero() || eps.is_infinite() {
            return T::zero();
        }
        self.rate(eps * v.powf(-T::one() / self.alpha))
    }
}

/// Receives the scheme's output points.
trait Recorder<T> {
    fn push(&mut self, t: T, v: T);
    /// Overwrites the value of the most recent point (coincident times).
    fn set_last(&mut self, v: T);
}

struct FullPath<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Copy> Recorder<T> for FullPath<T> {
    fn push(&mut self, t: T, v: T) {
        self.times.push(t);
        self.values.push(v);
    }

    fn set_last(&mut self, v: T) {
        if let Some(last) = self.values.last_mut() {
            *last = v;
        }
    }
}

/// Keeps only the terminal value.
struct Terminal<T> {
    value: T,
}

impl<T: Copy> Recorder<T> for Terminal<T> {
    fn push(&mut self, _t: T, v: T) {
        self.value = v;
    }

    fn set_last(&mut self, v: T) {
        self.value = v;
    }
}

/// Outcome of a run of the absorbed scheme when only the end state is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalState<T> {
    pub value: T,
    pub absorbed_at: Option<T>,
}

fn check_start<T: Scalar>(x: T, name: &str, strict: bool) -> Result<()> {
    let bad = x.is_nan() || !x.is_finite() || if strict { x <= T::zero() } else { x < T::zero() };
    if bad {
        let rel = if strict { "> 0" } else { ">= 0" };
        return Err(domain(format!("{name} must be finite and {rel}, got {x}")));
    }
    Ok(())
}

/// Euler integration of `v' = c - K(eps v^{-1/α})` over `dt`, sub-stepped so
/// that no step removes more than half of `v`. The flow has a positive
/// equilibrium near zero, which a plain Euler step overshoots and then
/// clamps repeatedly.
fn drift_flow<T: Scalar>(mut v: T, dt: T, c: T, comp: &VCompensator<T>, eps: T) -> T {
    let half = T::lit(0.5);
    let mut left = dt;
    for _ in 0..10_000 {
        let drift = c - comp.rate_at(v, eps);
        if drift < T::zero() && v <= T::zero() {
            return T::zero();
        }
        let mut h = left;
        if drift < T::zero() && -drift * h > half * v {
            h = half * v / -drift;
        }
        v = v + drift * h;
        left = left - h;
        if left <= dt * T::lit(1e-12) {
            break;
        }
    }
    v
}

fn run_v<T: Scalar, R: Recorder<T>>(
    params: &Parameters<T>,
    comp: &VCompensator<T>,
    v0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
    rec: &mut R,
) -> Result<()> {
    cfg.validate()?;
    check_start(v0, "v0", false)?;
    let jumps = JumpStream::new(cfg.jump_cutoff.as_f64(), params.alpha.as_f64())?;
    let eps = cfg.jump_cutoff;
    let c = params.v_drift();
    let lambda = T::one() - params.eta;
    let noise_exp = T::one() - T::one() / params.alpha;
    let var_rate = if cfg.gaussian_refinement {
        small_jump_moments(eps, params)?.variance_rate
    } else {
        T::zero()
    };
    let horizon = cfg.horizon;

    let mut t = T::zero();
    let mut v = v0;
    rec.push(t, v);
    let mut next_jump = jumps.next_after(0.0, rng);
    while t < horizon {
        let t_grid = (t + cfg.grid_step).min(horizon);
        let (t_next, jump) = match next_jump {
            Some(j) if T::lit(j.time) <= t_grid => (T::lit(j.time), Some(T::lit(j.size))),
            _ => (t_grid, None),
        };
        let dt = t_next - t;
        if dt > T::zero() {
            v = drift_flow(v, dt, c, comp, eps);
            if cfg.gaussian_refinement && v > T::zero() {
                // linearized small-jump variance: g(v, x) ≈ (1-η) v^{1-1/α} x
                let scale = lambda * v.powf(noise_exp);
                v = v + scale * (var_rate * dt).sqrt() * T::lit(rng.std_normal());
            }
            if v < T::zero() {
                v = T::zero();
            }
        }
        if let Some(x) = jump {
            v = v + jump_map_g(v, x, params);
            next_jump = jumps.next_after(t_next.as_f64(), rng);
        }
        if dt > T::zero() {
            rec.push(t_next, v);
        } else {
            rec.set_last(v);
        }
        t = t_next;
    }
    Ok(())
}

/// Simulates the power-transformed equation
/// `V_t = V_0 + c t + ∫∫ g(V_{s-}, x) (N - N')(ds, dx)` on `[0, horizon]`,
/// with `c = (1-η)(θ - Γ(αβ)/Γ(η))`. Negative excursions are clamped to 0.
pub fn simulate_v<T: Scalar>(
    params: &Parameters<T>,
    v0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
) -> Result<SamplePath<T>> {
    let comp = VCompensator::new(params);
    simulate_v_with(params, &comp, v0, cfg, rng)
}

/// [`simulate_v`] with a prebuilt compensator table.
pub fn simulate_v_with<T: Scalar>(
    params: &Parameters<T>,
    comp: &VCompensator<T>,
    v0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
) -> Result<SamplePath<T>> {
    let mut rec = FullPath { times: Vec::new(), values: Vec::new() };
    run_v(params, comp, v0, cfg, rng, &mut rec)?;
    Ok(SamplePath { times: rec.times, values: rec.values, absorbed_at: None })
}

/// `V` at the horizon only.
pub fn simulate_v_terminal<T: Scalar>(
    params: &Parameters<T>,
    comp: &VCompensator<T>,
    v0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
) -> Result<T> {
    let mut rec = Terminal { value: v0 };
    run_v(params, comp, v0, cfg, rng, &mut rec)?;
    Ok(rec.value)
}

fn run_z_absorbed<T: Scalar, R: Recorder<T>>(
    params: &Parameters<T>,
    z0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
    rec: &mut R,
) -> Result<Option<T>> {
    cfg.validate()?;
    check_start(z0, "z0", true)?;
    let jumps = JumpStream::new(cfg.jump_cutoff.as_f64(), params.alpha.as_f64())?;
    let (comp, var_rate) = if cfg.jump_cutoff.is_infinite() {
        (T::zero(), T::zero())
    } else {
        let m = small_jump_moments(cfg.jump_cutoff, params)?;
        let var = if cfg.gaussian_refinement { m.variance_rate } else { T::zero() };
        (compensator_above(cfg.jump_cutoff, params.alpha)?, var)
    };
    let (beta, eta, theta) = (params.beta, params.eta, params.theta);
    let horizon = cfg.horizon;

    let mut t = T::zero();
    let mut z = z0;
    rec.push(t, z);
    let mut next_jump = jumps.next_after(0.0, rng);
    while t < horizon {
        let t_grid = (t + cfg.grid_step).min(horizon);
        let (t_next, jump) = match next_jump {
            Some(j) if T::lit(j.time) <= t_grid => (T::lit(j.time), Some(T::lit(j.size))),
            _ => (t_grid, None),
        };
        let dt = t_next - t;
        if dt > T::zero() {
            let zb = z.powf(beta);
            z = z + (theta * z.powf(eta) - zb * comp) * dt;
            if cfg.gaussian_refinement {
                z = z + zb * (var_rate * dt).sqrt() * T::lit(rng.std_normal());
            }
            if z <= T::zero() {
                rec.push(t_next, T::zero());
                if t_next < horizon {
                    rec.push(horizon, T::zero());
                }
                return Ok(Some(t_next));
            }
        }
        if let Some(x) = jump {
            z = z + z.powf(beta) * x;
            next_jump = jumps.next_after(t_next.as_f64(), rng);
        }
        if dt > T::zero() {
            rec.push(t_next, z);
        } else {
            rec.set_last(z);
        }
        t = t_next;
    }
    Ok(None)
}

/// Simulates the Z-equation directly, absorbing the path the first time the
/// scheme value reaches `<= 0`.
pub fn simulate_z_absorbed<T: Scalar>(
    params: &Parameters<T>,
    z0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
) -> Result<SamplePath<T>> {
    let mut rec = FullPath { times: Vec::new(), values: Vec::new() };
    let absorbed_at = run_z_absorbed(params, z0, cfg, rng, &mut rec)?;
    Ok(SamplePath { times: rec.times, values: rec.values, absorbed_at })
}

/// End state of [`simulate_z_absorbed`] without storing the path.
pub fn simulate_z_absorbed_terminal<T: Scalar>(
    params: &Parameters<T>,
    z0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
) -> Result<TerminalState<T>> {
    let mut rec = Terminal { value: z0 };
    let absorbed_at = run_z_absorbed(params, z0, cfg, rng, &mut rec)?;
    Ok(TerminalState { value: rec.value, absorbed_at })
}

/// The class-S solution `Z = V^{1/(1-η)}`, which leaves zero again after
/// hitting it. Only exists for `θ > Γ(αβ)/Γ(η)`.
pub fn simulate_z_extended<T: Scalar>(
    params: &Parameters<T>,
    z0: T,
    cfg: &SchemeConfig<T>,
    rng: &mut RngStream,
) -> Result<SamplePath<T>> {
    require_class_s(params)?;
    check_start(z0, "z0", false)?;
    let v0 = z0.powf(T::one() - params.eta);
    let v = simulate_v(params, v0, cfg, rng)?;
    Ok(power_transform(&v, params.gamma_index))
}

pub(crate) fn require_class_s<T: Scalar>(params: &Parameters<T>) -> Result<()> {
    if params.theta <= params.threshold_low {
        return Err(Error::Regime(format!(
            "theta = {} <= Gamma(alpha*beta)/Gamma(eta) = {}: no solution spending zero time at 0 exists",
            params.theta, params.threshold_low
        )));
    }
    Ok(())
}

/// Raises every value to `exponent`; times and absorption are unchanged.
pub fn power_transform<T: Scalar>(path: &SamplePath<T>, exponent: T) -> SamplePath<T> {
    SamplePath {
        times: path.times.clone(),
        values: path.values.iter().map(|&v| if v == T::zero() { v } else { v.powf(exponent) }).collect(),
        absorbed_at: path.absorbed_at,
    }
}

/// First recorded time at which the path is `<= level`.
pub fn hitting_time<T: Scalar>(path: &SamplePath<T>, level: T) -> Option<T> {
    path.times.iter().zip(&path.values).find(|(_, &v)| v <= level).map(|(&t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> Parameters<f64> {
        Parameters::derive(1.5, 0.5, 0.5).unwrap()
    }

    #[test]
    fn g_examples() {
        let p = p();
        assert_eq!(jump_map_g(0.0, 3.0, &p), 0.0);
        assert!(jump_map_g(2.0, 1e-300, &p).abs() < 1e-299);
        assert_relative_eq!(jump_map_g(1.0, 1.0, &p), 2f64.powf(0.75) - 1.0, max_relative = 1e-14);
        assert_relative_eq!(jump_map_g(1.0, 1.0, &p), 0.681_792_830_507_429, max_relative = 1e-13);
        for &x in &[0.1, 2.0, 40.0] {
            assert_relative_eq!(jump_map_g(1.0, x, &p), (1.0 + x).powf(0.75) - 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn modulus_examples() {
        let p = p();
        assert_relative_eq!(modulus_constant(&p), 0.944_940_787_421_154_8, max_relative = 1e-13);
        assert!(modulus_bound_check(3.0, 3.0, 1.0, &p));
        assert!(modulus_bound_check(0.0, 10.0, 10.0, &p));
        assert!(jump_map_monotone(0.5, 4.0, 2.0, &p));
    }

    #[test]
    fn compensator_table_matches_exact() {
        for &(a, b) in &[(1.5, 0.5), (1.2, 0.4), (1.8, 0.9), (1.5, 1.0 / 3.0)] {
            let params = Parameters::derive(a, b, 0.5).unwrap();
            let comp = VCompensator::new(&params);
            let mut lu = -26.0;
            while lu < 26.0 {
                let u = f64::exp(lu);
                let (t, e) = (comp.rate(u), comp.exact_rate(u));
                assert!(((t - e) / e).abs() < 1e-7, "alpha={a} u={u} table={t} exact={e}");
                lu += 0.173;
            }
            assert_eq!(comp.rate(f64::INFINITY), 0.0);
            assert_eq!(comp.rate_at(0.0, 1e-3), 0.0);
        }
    }

    #[test]
    fn compensator_series_continuous() {
        let params = p();
        let comp = VCompensator::new(&params);
        for &u in &[0.5, 2.0] {
            let below = comp.exact_rate(u * (1.0 - 1e-9));
            let above = comp.exact_rate(u * (1.0 + 1e-9));
            assert!(((below - above) / above).abs() < 1e-8, "u={u}");
        }
    }

    #[test]
    fn compensator_lower_edge_closed_form() {
        // η = 0: g(1, y) = y and K(u) = c_α u^{1-α}/(α-1)
        let params = Parameters::derive(1.5, 1.0 / 3.0, 0.5).unwrap();
        let comp = VCompensator::new(&params);
        for &u in &[1e-6f64, 0.3, 1.0, 7.0, 1e5] {
            let expect = params.c_alpha * u.powf(-0.5) / 0.5;
            assert_relative_eq!(comp.rate(u), expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(1e-3, 1e-3, false, 1.0).is_ok());
        assert!(SchemeConfig::new(2.0, 1e-3, false, 1.0).is_err());
        assert!(SchemeConfig::new(1e-3, 0.0, false, 1.0).is_err());
        assert!(SchemeConfig::new(1e-3, f64::INFINITY, true, 1.0).is_err());
        assert!(SchemeConfig::new(1e-3, 1e-3, false, 0.0).is_err());
    }

    #[test]
    fn constant_path_without_generators() {
        let params = Parameters::derive(1.5, 0.5, 0.0).unwrap();
        let params = params.with_theta(params.threshold_low).unwrap();
        let cfg = SchemeConfig::new(0.01, f64::INFINITY, false, 1.0).unwrap();
        let path = simulate_v(&params, 1.0, &cfg, &mut RngStream::new(0, 0)).unwrap();
        assert!(path.values.iter().all(|&v| v == 1.0));
        assert!(path.check_invariants());
        assert_relative_eq!(path.horizon(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn paths_respect_invariants_and_replay() {
        let params = p();
        let cfg = SchemeConfig::new(1e-2, 1e-2, true, 2.0).unwrap();
        for seed in 0..5 {
            let v = simulate_v(&params, 0.3, &cfg, &mut RngStream::new(seed, 1)).unwrap();
            assert!(v.check_invariants());
            let z = simulate_z_absorbed(&params, 0.3, &cfg, &mut RngStream::new(seed, 1)).unwrap();
            assert!(z.check_invariants());
            let z2 = simulate_z_absorbed(&params, 0.3, &cfg, &mut RngStream::new(seed, 1)).unwrap();
            assert_eq!(z, z2);
            let term = simulate_z_absorbed_terminal(&params, 0.3, &cfg, &mut RngStream::new(seed, 1)).unwrap();
            assert_eq!(term.value, z.last_value());
            assert_eq!(term.absorbed_at, z.absorbed_at);
        }
    }

    #[test]
    fn ode_limit() {
        let params = p();
        let cfg = SchemeConfig::new(1e-4, f64::INFINITY, false, 1.0).unwrap();
        let path = simulate_z_absorbed(&params, 0.5, &cfg, &mut RngStream::new(0, 0)).unwrap();
        let k = 1.0 - params.eta;
        let mut max_err: f64 = 0.0;
        for (&t, &z) in path.times.iter().zip(&path.values) {
            let exact = (0.5f64.powf(k) + k * params.theta * t).powf(1.0 / k);
            max_err = max_err.max((z - exact).abs());
        }
        assert!(max_err < 1e-4 * 2.0, "max err {max_err}");
        assert_eq!(hitting_time(&path, 0.0), None);
    }

    #[test]
    fn extended_requires_class_s() {
        let params = Parameters::derive(1.5, 0.5, 0.2).unwrap();
        let cfg = SchemeConfig::default_for(1.5, 1.0);
        let err = simulate_z_extended(&params, 1.0, &cfg, &mut RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::Regime(_)));
    }

    #[test]
    fn power_transform_examples() {
        let path = SamplePath::constant(4.0, 1.0);
        assert_eq!(power_transform(&path, 1.0), path);
        assert_eq!(power_transform(&path, 0.5).values, vec![2.0, 2.0]);
        let mixed = SamplePath { times: vec![0.0, 0.5, 1.0], values: vec![0.3f64, 0.0, 7.0], absorbed_at: None };
        let back = power_transform(&power_transform(&mixed, 0.75), 1.0 / 0.75);
        for (&a, &b) in back.values.iter().zip(&mixed.values) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn hitting_time_examples() {
        let path = SamplePath {
            times: vec![0.0, 1.0, 3.2, 5.0],
            values: vec![1.0, 0.4, 0.0, 0.0],
            absorbed_at: Some(3.2),
        };
        assert_eq!(hitting_time(&path, 0.0), Some(3.2));
        assert_eq!(hitting_time(&path, 0.5), Some(1.0));
        assert_eq!(hitting_time(&SamplePath::constant(1.0, 2.0), 0.0), None);
        assert_eq!(path.value_at(3.0), 0.4);
        assert_eq!(path.value_at(10.0), 0.0);
    }

    #[test]
    fn occupation_and_downsample() {
        let path = SamplePath {
            times: vec![0.0, 1.0, 2.0, 4.0],
            values: vec![1.0, 0.0, 2.0, 2.0],
            absorbed_at: None,
        };
        assert_relative_eq!(path.zero_occupation_fraction(), 0.25);
        let d = path.downsample(2);
        assert_eq!(d.times, vec![0.0, 2.0, 4.0]);
    }
}
