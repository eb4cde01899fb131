//! Monte-Carlo harness: seeded parallel path generation, estimators with
//! error bars, the two-sample KS test, and the verification experiments.
//!
//! Path `i` of an experiment always draws from stream `i` (side B of a
//! two-sample experiment from `i + SIDE_B_OFFSET`). Results are collected in
//! index order before any reduction, so every estimate is bit-identical for
//! any number of workers.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::lamperti::{lamperti_marginal, LampertiConfig, XiDriver};
use crate::params::Parameters;
use crate::sde::{
    require_class_s, simulate_v_terminal, simulate_z_absorbed_terminal, SchemeConfig, VCompensator,
};
use crate::specfun::laplace_exponent_xi;
use crate::stable::{sample_stable_increment, RngStream};

/// Stream offset separating the two sides of a two-sample experiment.
pub const SIDE_B_OFFSET: u64 = 1 << 32;

/// Two-sided 1% asymptotic KS constant.
pub const KS_CONSTANT_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub n: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        let workers = std::thread::available_parallelism().map(|w| w.get()).unwrap_or(1);
        McConfig { n, seed, workers }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl McSummary {
    pub fn from_mean_se(n: usize, mean: f64, std_error: f64) -> Self {
        McSummary { n, mean, std_error, ci95_low: mean - 1.96 * std_error, ci95_high: mean + 1.96 * std_error }
    }

    /// Sample mean and `s/sqrt(n)`.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(domain("empty sample"));
        }
        let n = xs.len();
        let mean = compensated_sum(xs.iter().copied()) / n as f64;
        let se = if n > 1 {
            let ss = compensated_sum(xs.iter().map(|&x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self::from_mean_se(n, mean, se))
    }

    /// Proportion with the binomial standard error.
    pub fn from_indicators(hits: &[bool]) -> Result<Self> {
        if hits.is_empty() {
            return Err(domain("empty sample"));
        }
        let n = hits.len();
        let p = hits.iter().filter(|&&h| h).count() as f64 / n as f64;
        Ok(Self::from_mean_se(n, p, (p * (1.0 - p) / n as f64).sqrt()))
    }

    pub fn overlaps(&self, other: &McSummary) -> bool {
        self.ci95_low <= other.ci95_high && other.ci95_low <= self.ci95_high
    }
}

/// Neumaier summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub critical_value_1pct: f64,
    pub pass: bool,
}

pub fn ks_critical_value(n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    KS_CONSTANT_1PCT * ((a + b) / (a * b)).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic at the 1% level.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsReport> {
    if xs.is_empty() || ys.is_empty() {
        return Err(domain("ks_two_sample needs two nonempty samples"));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(domain("ks_two_sample: NaN in sample"));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        // advance both samples past the next value of the merged grid
        let v = a[i].min(b[j]);
        while i < n1 && a[i] <= v {
            i += 1;
        }
        while j < n2 && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let critical_value_1pct = ks_critical_value(n1, n2);
    Ok(KsReport { statistic: d, n1, n2, critical_value_1pct, pass: d < critical_value_1pct })
}

pub fn derive_stream(seed: u64, id: u64) -> RngStream {
    RngStream::new(seed, id)
}

/// Evaluates `f(i, stream_i)` for `i < n` on `workers` threads, worker `w`
/// taking the indices `≡ w (mod workers)`. Output is in index order.
pub fn parallel_indexed<R, F>(n: usize, seed: u64, stream_offset: u64, workers: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, &mut RngStream) -> Result<R> + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    let run = |w: usize| -> Result<Vec<(usize, R)>> {
        (w..n)
            .step_by(workers)
            .map(|i| {
                let mut rng = derive_stream(seed, stream_offset + i as u64);
                f(i, &mut rng).map(|r| (i, r))
            })
            .collect()
    };
    let parts: Vec<Result<Vec<(usize, R)>>> = if workers == 1 {
        vec![run(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|w| s.spawn(move || run(w))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    for part in parts {
        for (i, r) in part? {
            slots[i] = Some(r);
        }
    }
    Ok(slots.into_iter().map(|r| r.expect("every index visited")).collect())
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(domain(format!("n must be >= {min}, got {n}")));
    }
    Ok(())
}

/// Absorption time (or `None`) of each simulated Z-path up to `cfg.horizon`.
pub fn absorption_times(
    params: &Parameters<f64>,
    z0: f64,
    cfg: &SchemeConfig<f64>,
    mc: &McConfig,
) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    parallel_indexed(mc.n, mc.seed, 0, mc.workers, |_, rng| {
        Ok(simulate_z_absorbed_terminal(params, z0, cfg, rng)?.absorbed_at)
    })
}

/// Fraction of absorbed Z-paths with `T₀ <= cfg.horizon`, with its binomial
/// standard error.
pub fn estimate_extinction_probability(
    params: &Parameters<f64>,
    z0: f64,
    cfg: &SchemeConfig<f64>,
    mc: &McConfig,
) -> Result<McSummary> {
    Ok(extinction_curve(params, z0, cfg, &[cfg.horizon], mc)?.remove(0))
}

/// Censored extinction estimates at several horizons from one batch of paths
/// run to the largest horizon in `horizons`.
pub fn extinction_curve(
    params: &Parameters<f64>,
    z0: f64,
    cfg: &SchemeConfig<f64>,
    horizons: &[f64],
    mc: &McConfig,
) -> Result<Vec<McSummary>> {
    check_n(mc.n, 100)?;
    let top = horizons.iter().copied().fold(f64::NAN, f64::max);
    if horizons.is_empty() || !(top > 0.0) {
        return Err(domain("horizons must be nonempty and positive"));
    }
    let cfg = cfg.with_horizon(top);
    let times = absorption_times(params, z0, &cfg, mc)?;
    horizons
        .iter()
        .map(|&h| {
            let hits: Vec<bool> = times.iter().map(|t| t.is_some_and(|t| t <= h)).collect();
            McSummary::from_indicators(&hits)
        })
        .collect()
}

/// Summary of `V_t - (V_0 + c t)` with `c = (1-η)(θ - Γ(αβ)/Γ(η))`. The
/// horizon of `cfg` is replaced by `t`.
pub fn drift_identity_check(
    params: &Parameters<f64>,
    v0: f64,
    t: f64,
    cfg: &SchemeConfig<f64>,
    mc: &McConfig,
) -> Result<McSummary> {
    require_class_s(params)?;
    if !(v0 >= 0.0) || !v0.is_finite() || !(t >= 0.0) || !t.is_finite() {
        return Err(domain("drift_identity_check needs finite v0 >= 0 and t >= 0"));
    }
    check_n(mc.n, 2)?;
    if t == 0.0 {
        return Ok(McSummary::from_mean_se(mc.n, 0.0, 0.0));
    }
    let cfg = cfg.with_horizon(t);
    let comp = VCompensator::new(params);
    let predicted = v0 + params.v_drift() * t;
    let xs = parallel_indexed(mc.n, mc.seed, 0, mc.workers, |_, rng| {
        Ok(simulate_v_terminal(params, &comp, v0, &cfg, rng)? - predicted)
    })?;
    McSummary::from_samples(&xs)
}

/// Monte-Carlo estimate of a log-Laplace transform next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    /// `log` of the sample mean of `exp(±λ X)`.
    pub estimate: f64,
    /// Delta-method standard error of `estimate`.
    pub std_error: f64,
    pub exact: f64,
}

impl LaplaceEstimate {
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.exact) / self.std_error
    }

    pub fn relative_error(&self) -> f64 {
        ((self.estimate - self.exact) / self.exact).abs()
    }
}

fn log_mean_exp(xs: &[f64], lambda: f64, exact: f64) -> Result<LaplaceEstimate> {
    let ys: Vec<f64> = xs.iter().map(|&x| (lambda * x).exp()).collect();
    let s = McSummary::from_samples(&ys)?;
    Ok(LaplaceEstimate { lambda, estimate: s.mean.ln(), std_error: s.std_error / s.mean, exact })
}

/// Samples of `ξ_horizon`. With `refine`, the discarded jumps are replaced by
/// a Gaussian of matching variance.
pub fn sample_xi_endpoints(
    params: &Parameters<f64>,
    horizon: f64,
    eps: f64,
    refine: bool,
    mc: &McConfig,
) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be finite and > 0, got {horizon}")));
    }
    let driver =
        if refine { XiDriver::with_gaussian_refinement(params, eps)? } else { XiDriver::new(params, eps)? };
    parallel_indexed(mc.n, mc.seed, 0, mc.workers, |_, rng| Ok(driver.sample_increment(horizon, rng)))
}

/// `log E[exp(λ ξ_1)]` against `ψ(λ)` for each `λ`, from one batch of `ξ_1`.
pub fn laplace_check_xi(
    params: &Parameters<f64>,
    lambdas: &[f64],
    eps: f64,
    refine: bool,
    mc: &McConfig,
) -> Result<Vec<LaplaceEstimate>> {
    check_n(mc.n, 2)?;
    let xs = sample_xi_endpoints(params, 1.0, eps, refine, mc)?;
    lambdas.iter().map(|&l| log_mean_exp(&xs, l, laplace_exponent_xi(l, params)?)).collect()
}

/// Sample mean of `ξ_1`, to compare with `θ - Γ(α)`.
pub fn xi_mean_check(params: &Parameters<f64>, eps: f64, refine: bool, mc: &McConfig) -> Result<McSummary> {
    check_n(mc.n, 2)?;
    McSummary::from_samples(&sample_xi_endpoints(params, 1.0, eps, refine, mc)?)
}

/// `log E[exp(-λ L_1)]` against `λ^α` for the stable driver.
pub fn laplace_check_driver(alpha: f64, lambdas: &[f64], mc: &McConfig) -> Result<Vec<LaplaceEstimate>> {
    check_n(mc.n, 2)?;
    crate::specfun::c_alpha(alpha)?;
    let xs = parallel_indexed(mc.n, mc.seed, 0, mc.workers, |_, rng| Ok(-sample_stable_increment(1.0, alpha, rng)?))?;
    lambdas
        .iter()
        .map(|&l| {
            if !(l > 0.0) {
                return Err(domain(format!("lambda must be > 0, got {l}")));
            }
            log_mean_exp(&xs, l, l.powf(alpha))
        })
        .collect()
}

/// Which solution the scaling test runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolutionKind {
    /// Stopped at the first hitting time of zero.
    Absorbed,
    /// Class-S solution through the power transformation.
    Extended,
}

fn z_marginal(
    params: &Parameters<f64>,
    kind: SolutionKind,
    z0: f64,
    t: f64,
    cfg: &SchemeConfig<f64>,
    comp: Option<&VCompensator<f64>>,
    rng: &mut RngStream,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(z0);
    }
    let cfg = cfg.with_horizon(t);
    match kind {
        SolutionKind::Absorbed => Ok(simulate_z_absorbed_terminal(params, z0, &cfg, rng)?.value),
        SolutionKind::Extended => {
            let comp = comp.expect("compensator table for the extended solution");
            let v0 = z0.powf(1.0 - params.eta);
            let v = simulate_v_terminal(params, comp, v0, &cfg, rng)?;
            Ok(if v == 0.0 { 0.0 } else { v.powf(params.gamma_index) })
        }
    }
}

/// Settings for [`self_similarity_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimSetup {
    pub x0: f64,
    pub c: f64,
    pub t: f64,
    pub kind: SolutionKind,
    /// Time exponent used for side A; `None` means the true `1/γ = 1-η`.
    pub time_exponent: Option<f64>,
}

/// KS test of `c Z_{c^{-1/γ} t}` from `x0` (side A) against `Z_t` from
/// `c x0` (side B).
pub fn self_similarity_test(
    params: &Parameters<f64>,
    setup: &SelfSimSetup,
    cfg: &SchemeConfig<f64>,
    mc: &McConfig,
) -> Result<KsReport> {
    check_n(mc.n, 1000)?;
    let SelfSimSetup { x0, c, t, kind, time_exponent } = *setup;
    if !(x0 > 0.0) || !(c > 0.0) || !(t >= 0.0) || !(x0 * c).is_finite() || !t.is_finite() {
        return Err(domain("self_similarity_test needs x0 > 0, c > 0, t >= 0"));
    }
    let comp = match kind {
        SolutionKind::Extended => {
            require_class_s(params)?;
            Some(VCompensator::new(params))
        }
        SolutionKind::Absorbed => None,
    };
    let k = time_exponent.unwrap_or(1.0 - params.eta);
    let t_a = c.powf(-k) * t;
    let a = parallel_indexed(mc.n, mc.seed, 0, mc.workers, |_, rng| {
        Ok(c * z_marginal(params, kind, x0, t_a, cfg, comp.as_ref(), rng)?)
    })?;
    let b = parallel_indexed(mc.n, mc.seed, SIDE_B_OFFSET, mc.workers, |_, rng| {
        z_marginal(params, kind, c * x0, t, cfg, comp.as_ref(), rng)
    })?;
    ks_two_sample(&a, &b)
}

/// KS test between the Lamperti construction (side A, built from
/// `lamperti_params`) and the absorbed scheme (side B, from `params`) at time
/// `t`. Absorbed paths count as 0 on both sides.
pub fn lamperti_vs_sde_test_with(
    lamperti_params: &Parameters<f64>,
    params: &Parameters<f64>,
    x0: f64,
    t: f64,
    lcfg: &LampertiConfig<f64>,
    cfg: &SchemeConfig<f64>,
    mc: &McConfig,
) -> Result<KsReport> {
    check_n(mc.n, 1000)?;
    if !(x0 > 0.0) || !(t >= 0.0) || !t.is_finite() {
        return Err(domain("lamperti_vs_sde_test needs x0 > 0 and finite t >= 0"));
    }
    let a = parallel_indexed(mc.n, mc.seed, 0, mc.workers, |_, rng| {
        lamperti_marginal(lamperti_params, x0, t, lcfg, rng)
    })?;
    let b = parallel_indexed(mc.n, mc.seed, SIDE_B_OFFSET, mc.workers, |_, rng| {
        z_marginal(params, SolutionKind::Absorbed, x0, t, cfg, None, rng)
    })?;
    ks_two_sample(&a, &b)
}

pub fn lamperti_vs_sde_test(
    params: &Parameters<f64>,
    x0: f64,
    t: f64,
    lcfg: &LampertiConfig<f64>,
    cfg: &SchemeConfig<f64>,
    mc: &McConfig,
) -> Result<KsReport> {
    lamperti_vs_sde_test_with(params, params, x0, t, lcfg, cfg, mc)
}

/// Result of checking monotone decrease of the extinction estimates.
pub fn nonincreasing_up_to_overlap(estimates: &[McSummary]) -> bool {
    estimates.windows(2).all(|w| w[1].mean <= w[0].mean || w[1].overlaps(&w[0]))
}
