//! The Lévy process attached to the absorbed Z-equation by Lamperti's
//! transformation, its exponential functional, and the reconstruction
//! `Z_t = x0 exp(ξ_{τ(t x0^{-1/γ})})`.
//!
//! `ξ` is simulated in the form
//!
//! ```text
//! ξ_t = (θ + ∫ (log(1+x) - x) ν(dx)) t + ∫∫ log(1+x) (N - N')(ds, dx),
//! ν(dx) = c_α x^{-1-α} dx,
//! ```
//!
//! keeping the atoms of `N` above a cutoff `eps`. The drift between atoms is
//! repaired so that `E[ξ_1] = θ - Γ(α)` exactly for every cutoff.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::Parameters;
use crate::quad;
use crate::scalar::Scalar;
use crate::sde::SamplePath;
use crate::specfun::laplace_exponent_xi;
use crate::stable::{compensator_above, default_cutoff, JumpStream, RngStream};

/// Path of `ξ`: affine between the recorded atoms, with `values[i]` the
/// post-jump value at `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyPathXi<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// `E[ξ_1] = θ - Γ(α)`.
    pub drift_used: T,
    pub cutoff_used: T,
    /// `∫_eps^∞ log(1+x) ν(dx)`, the compensator of the kept jumps.
    pub compensator_rate: T,
}

impl<T: Scalar> LevyPathXi<T> {
    /// Slope of the affine pieces.
    pub fn slope(&self) -> T {
        self.drift_used - self.compensator_rate
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("non-empty path")
    }

    pub fn last_value(&self) -> T {
        *self.values.last().expect("non-empty path")
    }
}

/// `∫_0^eps x^{1-α} h(x) dx` for bounded smooth `h`, after the substitution
/// `s = x^{2-α}` that removes the endpoint singularity.
fn integrate_small<T: Scalar, F: Fn(T) -> T>(h: F, alpha: T, eps: T) -> T {
    let p = T::lit(2.0) - alpha;
    let upper = eps.powf(p);
    let inv_p = T::one() / p;
    quad::integrate(|s: T| h(s.powf(inv_p)), T::zero(), upper, T::lit(1e-16), T::lit(1e-13)) / p
}

/// `(x - log(1+x))/x²`, stable near zero.
fn log_gap_ratio<T: Scalar>(x: T) -> T {
    if x < T::lit(1e-3) {
        T::lit(0.5) - x / T::lit(3.0) + x * x / T::lit(4.0) - x * x * x / T::lit(5.0)
    } else {
        (x - x.ln_1p()) / (x * x)
    }
}

/// `(log(1+x)/x)²`, stable near zero.
fn log_ratio_sq<T: Scalar>(x: T) -> T {
    let r = if x < T::lit(1e-8) { T::one() - x / T::lit(2.0) } else { x.ln_1p() / x };
    r * r
}

/// Drift repair `r(eps) = ∫_0^eps (x - log(1+x)) ν(dx)`.
pub fn truncation_repair<T: Scalar>(params: &Parameters<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(domain(format!("cutoff must be > 0, got {eps}")));
    }
    if eps.is_infinite() {
        return Ok(params.threshold_high);
    }
    Ok(params.c_alpha * integrate_small(log_gap_ratio, params.alpha, eps))
}

/// Variance rate `∫_0^eps log(1+x)² ν(dx)` of the discarded jumps of `ξ`.
pub fn small_jump_variance_xi<T: Scalar>(params: &Parameters<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) || eps.is_infinite() {
        return Err(domain(format!("cutoff must be finite and > 0, got {eps}")));
    }
    Ok(params.c_alpha * integrate_small(log_ratio_sq, params.alpha, eps))
}

/// Precomputed constants for simulating `ξ` at one cutoff.
#[derive(Debug, Clone)]
pub struct XiDriver<T> {
    drift: T,
    compensator: T,
    cutoff: T,
    jumps: JumpStream,
    /// Gaussian replacement of the discarded jumps, as a variance rate.
    small_variance: Option<T>,
}

impl<T: Scalar> XiDriver<T> {
    /// Driver keeping atoms above `eps`; the discarded ones are dropped.
    pub fn new(params: &Parameters<T>, eps: T) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(domain(format!("cutoff must be > 0, got {eps}")));
        }
        let drift = params.theta - params.threshold_high;
        let compensator = if eps.is_infinite() {
            T::zero()
        } else {
            compensator_above(eps, params.alpha)? - params.threshold_high + truncation_repair(params, eps)?
        };
        Ok(XiDriver {
            drift,
            compensator,
            cutoff: eps,
            jumps: JumpStream::new(eps.as_f64(), params.alpha.as_f64())?,
            small_variance: None,
        })
    }

    /// Same as [`XiDriver::new`] but with the discarded jumps replaced by a
    /// centred Gaussian of matching variance.
    pub fn with_gaussian_refinement(params: &Parameters<T>, eps: T) -> Result<Self> {
        let mut d = Self::new(params, eps)?;
        d.small_variance = Some(small_jump_variance_xi(params, eps)?);
        Ok(d)
    }

    pub fn slope(&self) -> T {
        self.drift - self.compensator
    }

    pub fn compensator_rate(&self) -> T {
        self.compensator
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    /// One draw of `ξ_t`.
    pub fn sample_increment(&self, t: T, rng: &mut RngStream) -> T {
        let tf = t.as_f64();
        let mut jump_sum = 0.0;
        let mut clock = 0.0;
        while let Some(ev) = self.jumps.next_after(clock, rng) {
            if ev.time > tf {
                break;
            }
            jump_sum += ev.size.ln_1p();
            clock = ev.time;
        }
        let mut x = self.slope() * t + T::lit(jump_sum);
        if let Some(var) = self.small_variance {
            x = x + (var * t).sqrt() * T::lit(rng.std_normal());
        }
        x
    }
}

/// Simulates `ξ` on `[0, horizon]`, keeping atoms above `eps`.
pub fn simulate_xi<T: Scalar>(
    params: &Parameters<T>,
    horizon: T,
    eps: T,
    rng: &mut RngStream,
) -> Result<LevyPathXi<T>> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be finite and > 0, got {horizon}")));
    }
    let driver = XiDriver::new(params, eps)?;
    let slope = driver.slope();
    let mut times = vec![T::zero()];
    let mut values = vec![T::zero()];
    let (mut t, mut xi) = (T::zero(), T::zero());
    while let Some(ev) = driver.jumps.next_after(t.as_f64(), rng) {
        let te = T::lit(ev.time);
        if te >= horizon {
            break;
        }
        xi = xi + slope * (te - t) + T::lit(ev.size.ln_1p());
        t = te;
        if t > *times.last().expect("non-empty") {
            times.push(t);
            values.push(xi);
        } else {
            *values.last_mut().expect("non-empty") = xi;
        }
    }
    times.push(horizon);
    values.push(xi + slope * (horizon - t));
    Ok(LevyPathXi {
        times,
        values,
        drift_used: driver.drift,
        cutoff_used: eps,
        compensator_rate: driver.compensator,
    })
}

/// `∫ exp(k (x0 + s u)) du` over `[0, dt]`.
#[inline]
fn exp_affine_integral<T: Scalar>(k: T, xi0: T, slope: T, dt: T) -> T {
    let z = k * slope * dt;
    let ratio = if z.abs() < T::lit(1e-8) { T::one() + z / T::lit(2.0) } else { z.exp_m1() / z };
    (k * xi0).exp() * dt * ratio
}

/// Inverse of [`exp_affine_integral`] in `dt`.
#[inline]
fn exp_affine_inverse<T: Scalar>(k: T, xi0: T, slope: T, target: T) -> T {
    let y = target * (-k * xi0).exp();
    let ks = k * slope;
    if (ks * y).abs() < T::lit(1e-12) {
        y * (T::one() - ks * y / T::lit(2.0))
    } else {
        (ks * y).ln_1p() / ks
    }
}

/// `A_t = ∫_0^t exp(k ξ_s) ds` along a simulated `ξ`, with `k = 1 - η`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFunctional<T> {
    /// `A` at the recorded times of `ξ`.
    pub a: SamplePath<T>,
    xi_values: Vec<T>,
    slope: T,
    exponent: T,
}

/// Integrates `exp(exponent · ξ)` exactly along the affine pieces of `ξ`.
pub fn exponential_functional<T: Scalar>(xi: &LevyPathXi<T>, exponent: T) -> ExponentialFunctional<T> {
    let slope = xi.slope();
    let mut acc = T::zero();
    let mut values = Vec::with_capacity(xi.times.len());
    values.push(T::zero());
    for i in 1..xi.times.len() {
        acc = acc + exp_affine_integral(exponent, xi.values[i - 1], slope, xi.times[i] - xi.times[i - 1]);
        values.push(acc);
    }
    ExponentialFunctional {
        a: SamplePath { times: xi.times.clone(), values, absorbed_at: None },
        xi_values: xi.values.clone(),
        slope,
        exponent,
    }
}

impl<T: Scalar> ExponentialFunctional<T> {
    /// `A` at an arbitrary time within the horizon.
    pub fn value_at(&self, s: T) -> T {
        let times = &self.a.times;
        let i = times.partition_point(|&u| u <= s).saturating_sub(1).min(times.len() - 1);
        self.a.values[i] + exp_affine_integral(self.exponent, self.xi_values[i], self.slope, s - times[i])
    }

    /// `ξ` at an arbitrary time within the horizon.
    pub fn xi_at(&self, s: T) -> T {
        let times = &self.a.times;
        let i = times.partition_point(|&u| u <= s).saturating_sub(1);
        self.xi_values[i] + self.slope * (s - times[i])
    }

    /// `τ(t) = inf{s : A_s > t}`.
    pub fn time_change_inverse(&self, t: T) -> Result<T> {
        let reachable = self.a.last_value();
        if t.is_nan() || t < T::zero() || t > reachable {
            return Err(Error::HorizonExhausted { requested: t.as_f64(), reachable: reachable.as_f64() });
        }
        let vals = &self.a.values;
        let i = vals.partition_point(|&a| a <= t).saturating_sub(1).min(vals.len() - 2);
        let s = self.a.times[i] + exp_affine_inverse(self.exponent, self.xi_values[i], self.slope, t - vals[i]);
        Ok(s.min(self.a.times[i + 1]))
    }
}

/// Settings for the Lamperti reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LampertiConfig<T> {
    /// Cutoff of the atoms of `ξ`.
    pub cutoff: T,
    /// The path counts as absorbed once `Z/x0` falls below this level; the
    /// remaining time to zero is a factor `floor^{1-η}` smaller than the
    /// natural time scale.
    pub absorption_floor: T,
    /// Extra output points every `record_step` units of `ξ`-time.
    pub record_step: T,
}

impl<T: Scalar> LampertiConfig<T> {
    pub fn default_for(alpha: T) -> Self {
        LampertiConfig { cutoff: default_cutoff(alpha), absorption_floor: T::lit(1e-6), record_step: T::lit(0.01) }
    }
}

/// Streams `ξ` until real time `horizon` or absorption, calling `emit` with
/// `(t, Z_t)` at each atom and record point.
fn run_lamperti<T: Scalar, F: FnMut(T, T)>(
    params: &Parameters<T>,
    x0: T,
    horizon: T,
    cfg: &LampertiConfig<T>,
    rng: &mut RngStream,
    mut emit: F,
) -> Result<Option<T>> {
    if x0.is_nan() || !(x0 > T::zero()) || !x0.is_finite() {
        return Err(domain(format!("x0 must be finite and > 0, got {x0}")));
    }
    if horizon.is_nan() || horizon < T::zero() {
        return Err(domain(format!("horizon must be >= 0, got {horizon}")));
    }
    if !(cfg.absorption_floor > T::zero() && cfg.absorption_floor < T::one()) || !(cfg.record_step > T::zero()) {
        return Err(domain("absorption_floor must lie in (0,1) and record_step be > 0"));
    }
    let driver = XiDriver::new(params, cfg.cutoff)?;
    let k = T::one() - params.eta;
    let slope = driver.slope();
    let time_scale = x0.powf(k);
    let floor = cfg.absorption_floor.ln();
    emit(T::zero(), x0);
    if horizon == T::zero() {
        return Ok(None);
    }
    // A-budget corresponding to the real-time horizon
    let budget = horizon / time_scale;

    let (mut s, mut xi, mut a) = (T::zero(), T::zero(), T::zero());
    let mut next = driver.jumps.next_after(0.0, rng);
    let max_xi_time = T::lit(1e9);
    loop {
        let s_rec = s + cfg.record_step;
        let (s_next, jump) = match next {
            Some(ev) if T::lit(ev.time) <= s_rec => (T::lit(ev.time), Some(T::lit(ev.size))),
            _ => (s_rec, None),
        };
        let ds = s_next - s;
        let da = exp_affine_integral(k, xi, slope, ds);
        if a + da >= budget {
            let dt = exp_affine_inverse(k, xi, slope, budget - a).min(ds);
            emit(horizon, x0 * (xi + slope * dt).exp());
            return Ok(None);
        }
        let xi_end = xi + slope * ds;
        if xi_end < floor {
            // affine piece crosses the floor inside the segment
            let ds_floor = if slope < T::zero() { ((floor - xi) / slope).max(T::zero()).min(ds) } else { ds };
            let t0 = time_scale * (a + exp_affine_integral(k, xi, slope, ds_floor));
            emit(t0, T::zero());
            if t0 < horizon {
                emit(horizon, T::zero());
            }
            return Ok(Some(t0));
        }
        a = a + da;
        xi = xi_end;
        if let Some(x) = jump {
            xi = xi + x.ln_1p();
            next = driver.jumps.next_after(s_next.as_f64(), rng);
        }
        s = s_next;
        emit(time_scale * a, x0 * xi.exp());
        if s > max_xi_time {
            return Err(domain("lamperti reconstruction did not reach the horizon"));
        }
    }
}

/// Builds `Z_t = x0 exp(ξ_{τ(t x0^{-1/γ})})` on `[0, horizon]`, absorbed at
/// zero once `Z` falls below the configured floor.
pub fn lamperti_pssmp<T: Scalar>(
    params: &Parameters<T>,
    x0: T,
    horizon: T,
    rng: &mut RngStream,
) -> Result<SamplePath<T>> {
    lamperti_pssmp_with(params, x0, horizon, &LampertiConfig::default_for(params.alpha), rng)
}

pub fn lamperti_pssmp_with<T: Scalar>(
    params: &Parameters<T>,
    x0: T,
    horizon: T,
    cfg: &LampertiConfig<T>,
    rng: &mut RngStream,
) -> Result<SamplePath<T>> {
    let mut times: Vec<T> = Vec::new();
    let mut values: Vec<T> = Vec::new();
    let absorbed_at = run_lamperti(params, x0, horizon, cfg, rng, |t, z| {
        match times.last() {
            Some(&last) if t <= last => *values.last_mut().expect("non-empty") = z,
            _ => {
                times.push(t);
                values.push(z);
            }
        }
    })?;
    Ok(SamplePath { times, values, absorbed_at })
}

/// `Z_t` of the Lamperti reconstruction at a single time.
pub fn lamperti_marginal<T: Scalar>(
    params: &Parameters<T>,
    x0: T,
    t: T,
    cfg: &LampertiConfig<T>,
    rng: &mut RngStream,
) -> Result<T> {
    let mut last = x0;
    run_lamperti(params, x0, t, cfg, rng, |_, z| last = z)?;
    Ok(last)
}

/// Number of log-spaced points in `(0, 1-η)` scanned by
/// [`cramer_condition_check`].
pub const CRAMER_GRID: usize = 512;

/// Whether `E[exp(a ξ_1)] > 1` for some `0 < a < 1-η`.
///
/// `ψ` is convex with `ψ(0) = 0`, so the scan over a log grid plus the right
/// end of the window (as a limit) detects a positive value.
pub fn cramer_condition_check<T: Scalar>(params: &Parameters<T>) -> bool {
    let k = T::one() - params.eta;
    let positive = |a: T| laplace_exponent_xi(a, params).map(|v| v > T::zero()).unwrap_or(false);
    let grid_hit = (0..CRAMER_GRID).any(|i| {
        let frac = T::lit(10f64.powf(-6.0 + 6.0 * i as f64 / CRAMER_GRID as f64));
        positive(k * frac)
    });
    grid_hit || positive(k - T::lit(1e-9)) || crate::specfun::laplace_exponent_at_edge(params) > T::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(theta: f64) -> Parameters<f64> {
        Parameters::derive(1.5, 0.5, theta).unwrap()
    }

    /// Series oracle for r(eps): c_α Σ_{k>=2} (-1)^k eps^{k-α} / (k (k-α)).
    fn repair_series(params: &Parameters<f64>, eps: f64) -> f64 {
        let a = params.alpha;
        let mut sum = 0.0;
        for k in 2..400 {
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * eps.powf(kf - a) / (kf * (kf - a));
        }
        params.c_alpha * sum
    }

    #[test]
    fn repair_matches_series() {
        for &eps in &[1e-4, 1e-3, 1e-2, 0.3] {
            let params = p(0.5);
            assert_relative_eq!(truncation_repair(&params, eps).unwrap(), repair_series(&params, eps), max_relative = 1e-10);
        }
    }

    #[test]
    fn compensator_consistent_with_direct_quadrature() {
        let params = p(0.5);
        let eps = 0.05;
        let d = XiDriver::new(&params, eps).unwrap();
        // ∫_eps^∞ log(1+x) c x^{-1-α} dx, tail mapped by x = 1/y
        let c = params.c_alpha;
        let head = quad::integrate(|x: f64| x.ln_1p() * c * x.powf(-2.5), eps, 1.0, 1e-14, 1e-13);
        let tail = quad::integrate(|y: f64| if y == 0.0 { 0.0 } else { (1.0 / y).ln_1p() * c * y.powf(0.5) }, 0.0, 1.0, 1e-14, 1e-13);
        assert_relative_eq!(d.compensator_rate(), head + tail, max_relative = 1e-8);
    }

    #[test]
    fn xi_path_structure() {
        let params = p(0.5);
        let mut rng = RngStream::new(3, 0);
        let xi = simulate_xi(&params, 2.0, 1e-2, &mut rng).unwrap();
        assert_eq!(xi.values[0], 0.0);
        assert_eq!(xi.times[0], 0.0);
        assert_eq!(xi.horizon(), 2.0);
        assert!(xi.times.windows(2).all(|w| w[0] < w[1]));
        // affine between atoms: each increment minus the slope part is a positive jump
        for i in 1..xi.times.len() - 1 {
            let jump = xi.values[i] - xi.values[i - 1] - xi.slope() * (xi.times[i] - xi.times[i - 1]);
            assert!(jump > 0.0);
        }
        assert_relative_eq!(xi.drift_used, 0.5 - params.threshold_high, epsilon = 1e-15);
        assert!(simulate_xi(&params, 0.0, 1e-2, &mut rng).is_err());
        assert!(simulate_xi(&params, 1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn functional_zero_path() {
        let xi = LevyPathXi {
            times: vec![0.0, 1.0, 2.5],
            values: vec![0.0, 0.0, 0.0],
            drift_used: 0.0,
            cutoff_used: f64::INFINITY,
            compensator_rate: 0.0,
        };
        let a = exponential_functional(&xi, 0.75);
        assert_eq!(a.a.values, vec![0.0, 1.0, 2.5]);
        for &t in &[0.0, 0.3, 1.0, 2.4] {
            assert_relative_eq!(a.time_change_inverse(t).unwrap(), t, epsilon = 1e-14);
        }
        assert!(matches!(a.time_change_inverse(3.0), Err(Error::HorizonExhausted { .. })));
    }

    #[test]
    fn functional_pure_drift() {
        let (k, drift) = (0.75, -0.4);
        let xi = LevyPathXi {
            times: vec![0.0, 0.7, 3.0],
            values: vec![0.0, 0.7 * drift, 3.0 * drift],
            drift_used: drift,
            cutoff_used: f64::INFINITY,
            compensator_rate: 0.0,
        };
        let a = exponential_functional(&xi, k);
        let closed = |t: f64| ((k * drift * t).exp() - 1.0) / (k * drift);
        for (&t, &v) in a.a.times.iter().zip(&a.a.values) {
            assert_relative_eq!(v, closed(t), max_relative = 1e-13, epsilon = 1e-15);
        }
        assert_relative_eq!(a.value_at(1.9), closed(1.9), max_relative = 1e-13);
        for &t in &[0.1, 0.5, 1.0, 1.4] {
            let tau = a.time_change_inverse(t).unwrap();
            assert_relative_eq!(tau, (1.0 + k * drift * t).ln() / (k * drift), max_relative = 1e-12);
            assert_relative_eq!(a.value_at(tau), t, max_relative = 1e-10);
        }
    }

    #[test]
    fn functional_monotone_and_round_trip() {
        let params = p(0.5);
        let xi = simulate_xi(&params, 3.0, 1e-2, &mut RngStream::new(9, 9)).unwrap();
        let a = exponential_functional(&xi, 1.0 - params.eta);
        assert!(a.a.values.windows(2).all(|w| w[1] > w[0]));
        let top = a.a.last_value();
        for i in 0..50 {
            let t = top * i as f64 / 50.0;
            let tau = a.time_change_inverse(t).unwrap();
            assert!((a.value_at(tau) - t).abs() <= 1e-10 * top.max(1.0));
        }
    }

    #[test]
    fn pssmp_starts_at_x0() {
        let params = p(0.5);
        let path = lamperti_pssmp(&params, 1.7, 0.5, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(path.values[0], 1.7);
        assert_eq!(path.times[0], 0.0);
        assert!(path.check_invariants());
        let z = lamperti_marginal(&params, 1.7, 0.0, &LampertiConfig::default_for(1.5), &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(z, 1.7);
        let z = lamperti_marginal(&params, 1.7, 0.5, &LampertiConfig::default_for(1.5), &mut RngStream::new(0, 0)).unwrap();
        assert_relative_eq!(z, path.last_value(), max_relative = 1e-12);
    }

    #[test]
    fn pssmp_deterministic_drift() {
        // no atoms: ξ_s = (θ - Γ(α)) s, so Z solves z' = (θ - Γ(α)) z^η
        let params = p(1.2);
        let cfg = LampertiConfig { cutoff: f64::INFINITY, absorption_floor: 1e-9, record_step: 0.05 };
        let path = lamperti_pssmp_with(&params, 1.0, 2.0, &cfg, &mut RngStream::new(0, 0)).unwrap();
        let (k, d) = (0.75, 1.2 - params.threshold_high);
        for (&t, &z) in path.times.iter().zip(&path.values) {
            assert_relative_eq!(z, (1.0 + k * d * t).powf(1.0 / k), max_relative = 1e-10);
        }
    }

    #[test]
    fn cramer_examples() {
        assert!(cramer_condition_check(&p(0.5)));
        assert!(!cramer_condition_check(&p(0.0)));
        assert!(!cramer_condition_check(&p(0.3)));
        let edge = Parameters::derive(1.5, 1.0 / 3.0, 0.01).unwrap();
        assert!(cramer_condition_check(&edge));
        assert!(!cramer_condition_check(&edge.with_theta(0.0).unwrap()));
    }
}
