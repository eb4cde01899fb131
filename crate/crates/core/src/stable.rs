//! Sampling primitives for the spectrally positive α-stable driver.
//!
//! The driver is pinned by its Laplace transform, `log E[exp(-λ L_t)] = t λ^α`,
//! with Lévy measure `c_α x^{-1-α} dx` on `(0, ∞)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::params::Parameters;
use crate::scalar::Scalar;
use crate::specfun::{c_alpha, check_alpha};

/// Reproducible random stream addressed by `(seed, stream_id)`.
///
/// Backed by ChaCha8, which has 2^64 independent streams per seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    #[inline]
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }

    #[inline]
    pub fn std_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One atom of the driving Poisson random measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent<T> {
    pub time: T,
    pub size: T,
}

/// Standard spectrally positive stable variate with `E[exp(-λ L_1)] = exp(λ^α)`.
///
/// Chambers–Mallows–Stuck with skewness 1 and scale `|cos(πα/2)|^{1/α}`; with
/// that scale the usual prefactor `(1 + tan²(πα/2))^{1/(2α)}` cancels.
fn standard_stable(alpha: f64, rng: &mut RngStream) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let b = FRAC_PI_2 - PI / alpha;
    let v = PI * (rng.inner.random::<f64>() - 0.5);
    let w = rng.exp1();
    let shifted = alpha * (v + b);
    let head = shifted.sin() / v.cos().powf(1.0 / alpha);
    let tail = ((v - shifted).cos() / w).powf((1.0 - alpha) / alpha);
    head * tail
}

/// One sample of `L_dt`.
pub fn sample_stable_increment<T: Scalar>(dt: T, alpha: T, rng: &mut RngStream) -> Result<T> {
    if dt.is_nan() || dt <= T::zero() {
        return Err(domain(format!("stable increment requires dt > 0, got {dt}")));
    }
    check_alpha(alpha)?;
    let a = alpha.as_f64();
    let x = dt.as_f64().powf(1.0 / a) * standard_stable(a, rng);
    Ok(T::lit(x))
}

/// Total mass of the Lévy measure above `eps`: `c_α eps^{-α}/α`.
pub fn jump_rate_above<T: Scalar>(eps: T, alpha: T) -> Result<T> {
    if eps.is_nan() || eps <= T::zero() {
        return Err(domain(format!("jump cutoff must be > 0, got {eps}")));
    }
    let c = c_alpha(alpha)?;
    Ok(c * eps.powf(-alpha) / alpha)
}

/// Compensator of the jumps above `eps`: `∫_eps^∞ x c_α x^{-1-α} dx = c_α eps^{1-α}/(α-1)`.
pub fn compensator_above<T: Scalar>(eps: T, alpha: T) -> Result<T> {
    if eps.is_nan() || eps <= T::zero() {
        return Err(domain(format!("jump cutoff must be > 0, got {eps}")));
    }
    let c = c_alpha(alpha)?;
    Ok(c * eps.powf(T::one() - alpha) / (alpha - T::one()))
}

/// Pareto-distributed jump size above `eps`.
#[inline]
fn pareto_size(eps: f64, inv_alpha: f64, rng: &mut RngStream) -> f64 {
    eps * rng.open_unit().powf(-inv_alpha)
}

/// Atoms of the Poisson random measure on `(t0, t1] × (eps, ∞)`, sorted by time.
pub fn sample_jumps_above<T: Scalar>(
    eps: T,
    t0: T,
    t1: T,
    params: &Parameters<T>,
    rng: &mut RngStream,
) -> Result<Vec<JumpEvent<T>>> {
    if !(t1 > t0) {
        return Err(domain(format!("jump window requires t0 < t1, got ({t0}, {t1}]")));
    }
    let rate = jump_rate_above(eps, params.alpha)?;
    let mean = (rate * (t1 - t0)).as_f64();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| domain(format!("poisson mean {mean}: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    let (a, b) = (t0.as_f64(), t1.as_f64());
    let (e, inv_alpha) = (eps.as_f64(), 1.0 / params.alpha.as_f64());
    let mut events: Vec<JumpEvent<T>> = (0..count)
        .map(|_| {
            let time = b - (b - a) * rng.inner.random::<f64>();
            let size = pareto_size(e, inv_alpha, rng);
            JumpEvent { time: T::lit(time), size: T::lit(size) }
        })
        .collect();
    events.sort_by(|x, y| x.time.partial_cmp(&y.time).expect("finite jump times"));
    Ok(events)
}

/// Compensator and variance rates attached to a jump cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallJumpMoments<T> {
    /// Compensator of the jumps kept above the cutoff, `c_α eps^{1-α}/(α-1)`;
    /// subtracted by the caller as a drift.
    pub mean_rate: T,
    /// Second moment of the discarded jumps, `c_α eps^{2-α}/(2-α)`.
    pub variance_rate: T,
}

pub fn small_jump_moments<T: Scalar>(eps: T, params: &Parameters<T>) -> Result<SmallJumpMoments<T>> {
    let alpha = params.alpha;
    let mean_rate = compensator_above(eps, alpha)?;
    let variance_rate = params.c_alpha * eps.powf(T::lit(2.0) - alpha) / (T::lit(2.0) - alpha);
    Ok(SmallJumpMoments { mean_rate, variance_rate })
}

/// Default cutoff: `1e-3` for `α <= 1.6`, `1e-4` above.
pub fn default_cutoff<T: Scalar>(alpha: T) -> T {
    if alpha <= T::lit(1.6) {
        T::lit(1e-3)
    } else {
        T::lit(1e-4)
    }
}

/// Sequential generator of jump atoms above a cutoff, via exponential
/// inter-arrival times. Equal in law to [`sample_jumps_above`] on any window.
#[derive(Debug, Clone, Copy)]
pub struct JumpStream {
    eps: f64,
    inv_alpha: f64,
    rate: f64,
}

impl JumpStream {
    /// `eps = +∞` gives an empty stream.
    pub fn new(eps: f64, alpha: f64) -> Result<Self> {
        let rate = if eps.is_infinite() { 0.0 } else { jump_rate_above(eps, alpha)? };
        Ok(JumpStream { eps, inv_alpha: 1.0 / alpha, rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Next atom strictly after `from`, or `None` if the stream is empty.
    #[inline]
    pub fn next_after(&self, from: f64, rng: &mut RngStream) -> Option<JumpEvent<f64>> {
        if self.rate == 0.0 {
            return None;
        }
        let time = from + rng.exp1() / self.rate;
        let size = pareto_size(self.eps, self.inv_alpha, rng);
        Some(JumpEvent { time, size })
    }
}
