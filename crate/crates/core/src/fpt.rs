//! First-passage density bounds and scale-function exit probabilities.
//!
//! A diffusion `dX = nu(X) dt + sigma dB` with constant `sigma` becomes a
//! unit-noise diffusion `dY = mu(Y) dt + dB` under the Lamperti map
//! `Y = X / sigma`, with `mu(y) = nu(sigma y) / sigma`. For such a diffusion
//! started at `x` and a boundary `g(t)` the first-passage density admits the
//! Girsanov-type bounds
//!
//! ```text
//! down-crossing, g(0) < x, g(t+h) - g(t) <= K h:
//!   B*(t) = (x - g(t) + K t) / t * q(t, x, g(t)) * exp(G(g(t)) - G(x) - t M*(t) / 2)
//!   M*(t) = essinf over [min_{s<=t} g(s), inf) of mu' + mu^2
//!
//! up-crossing, g(0) > x, g(t+h) - g(t) >= -K h:
//!   B°(t) = (g(t) + K t - x) / t * q(t, x, g(t)) * exp(G(g(t)) - G(x) - t M(t) / 2)
//!   M(t)  = essinf over (-inf, max_{s<=t} g(s)] of mu' + mu^2
//! ```
//!
//! where `q` is the Brownian transition density and `G(y) = ∫_0^y mu`.
//! For a driftless Brownian motion and a flat boundary the bound is the exact
//! reflection-principle density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::drift::Drift;
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::quadrature::{log_integrate_exp, QuadOptions};
use crate::rng::{derive_seed, AuxUniforms};
use crate::sde::{EulerStepper, StreamId};
use crate::stats::{mean_se, MeanSe};

/// Standard normal distribution function.
fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// The unit-noise diffusion obtained from `nu` and a constant `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDiffusion<D> {
    nu: D,
    sigma: f64,
}

/// Lamperti transform for constant noise: `mu(y) = nu(sigma y) / sigma`,
/// `F(x) = x / sigma`.
pub fn lamperti<D: Drift>(nu: D, sigma: f64) -> Result<UnitDiffusion<D>> {
    ensure_finite(sigma, "sigma")?;
    ensure(sigma != 0.0, || "the Lamperti transform needs nonzero noise".into())?;
    Ok(UnitDiffusion { nu, sigma })
}

impl<D: Drift> UnitDiffusion<D> {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn nu(&self) -> &D {
        &self.nu
    }

    /// `F(x) = x / sigma`.
    pub fn to_unit(&self, x: f64) -> f64 {
        x / self.sigma
    }

    /// `F^{-1}(y) = sigma y`.
    pub fn from_unit(&self, y: f64) -> f64 {
        self.sigma * y
    }

    /// `H(y) = mu'(y) + mu(y)^2`.
    pub fn h(&self, y: f64) -> f64 {
        let m = self.value(y);
        self.derivative(y) + m * m
    }

    /// Essential infimum of `mu' + mu^2` over `[lo, hi]` (ends may be
    /// infinite), from the drift's closed-form critical points when
    /// available and a refined grid search otherwise.
    pub fn essinf(&self, lo: f64, hi: f64) -> Result<f64> {
        ensure(!lo.is_nan() && !hi.is_nan() && lo < hi, || {
            format!("essinf range [{lo}, {hi}] is empty")
        })?;
        let bps = self.breakpoints();
        // a singular derivative at a kink inside the range sends H to -inf
        for &b in &bps {
            if b >= lo && b <= hi && !self.derivative(b).is_finite() {
                return Ok(f64::NEG_INFINITY);
            }
        }
        match self.nu.h_critical_points(self.sigma) {
            Some(crit) => {
                let crit: Vec<f64> = crit.iter().map(|c| c / self.sigma).collect();
                Ok(self.essinf_candidates(lo, hi, &bps, &crit))
            }
            None => essinf_grid(|y| self.h(y), lo, hi, &bps),
        }
    }

    fn essinf_candidates(&self, lo: f64, hi: f64, bps: &[f64], crit: &[f64]) -> f64 {
        let nudge = |v: f64| 1e-12 * (1.0 + v.abs());
        let mut pts: Vec<f64> = Vec::new();
        if lo.is_finite() {
            pts.push(lo + nudge(lo));
        }
        if hi.is_finite() {
            pts.push(hi - nudge(hi));
        }
        for &b in bps {
            pts.push(b - nudge(b));
            pts.push(b + nudge(b));
        }
        pts.extend_from_slice(crit);
        // proxies inside the outermost branches (constant or monotone there)
        let (bmin, bmax) = bps
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        pts.push(bmin - 1.0);
        pts.push(bmax + 1.0);
        pts.iter()
            .filter(|&&y| y > lo && y < hi)
            .map(|&y| self.h(y))
            .fold(f64::INFINITY, f64::min)
    }
}

impl<D: Drift> Drift for UnitDiffusion<D> {
    fn value(&self, y: f64) -> f64 {
        self.nu.value(self.sigma * y) / self.sigma
    }

    fn derivative(&self, y: f64) -> f64 {
        self.nu.derivative(self.sigma * y)
    }

    /// `G(y) = ∫_0^y mu = Φ(sigma y) / sigma^2`.
    fn antiderivative(&self, y: f64) -> f64 {
        self.nu.antiderivative(self.sigma * y) / (self.sigma * self.sigma)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.nu.breakpoints().iter().map(|b| b / self.sigma).collect()
    }

    fn h_critical_points(&self, sigma: f64) -> Option<Vec<f64>> {
        // H of the unit diffusion at noise `sigma` is H of nu at sigma * self.sigma
        self.nu
            .h_critical_points(sigma * self.sigma)
            .map(|v| v.iter().map(|c| c / self.sigma).collect())
    }
}

/// Minimum of `h` over `[lo, hi]` by grid search refined until the estimate
/// moves by less than `1e-6`. Infinite ends are truncated to a window that
/// extends ten units beyond the outermost breakpoint.
pub fn essinf_grid<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
    let (bmin, bmax) = breaks
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let a = if lo.is_finite() { lo } else { bmin.min(hi) - 10.0 };
    let b = if hi.is_finite() { hi } else { bmax.max(lo) + 10.0 };
    let scan = |n: usize| -> (f64, f64) {
        let mut best = (f64::INFINITY, a);
        for i in 0..=n {
            let y = a + (b - a) * i as f64 / n as f64;
            let v = h(y);
            if v < best.0 {
                best = (v, y);
            }
        }
        best
    };
    let mut n = 1000;
    let mut best = scan(n);
    loop {
        n *= 4;
        let next = scan(n);
        let moved = (next.0 - best.0).abs();
        best = if next.0 < best.0 { next } else { best };
        if moved <= 1e-6 || n > 1 << 22 {
            break;
        }
    }
    // local golden-section polish around the grid minimizer
    let w = (b - a) / n as f64;
    let (mut l, mut r) = ((best.1 - 2.0 * w).max(a), (best.1 + 2.0 * w).min(b));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = r - phi * (r - l);
        let d = l + phi * (r - l);
        if h(c) < h(d) {
            r = d;
        } else {
            l = c;
        }
    }
    let v = best.0.min(h(0.5 * (l + r)));
    if v.is_nan() {
        return Err(Error::NonFinite("essinf of mu' + mu^2".into()));
    }
    Ok(v)
}

/// Boundary `g(t)` in the unit-diffusion coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Constant(f64),
    Linear { intercept: f64, slope: f64 },
}

impl Boundary {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Boundary::Constant(c) => c,
            Boundary::Linear { intercept, slope } => intercept + slope * t,
        }
    }

    /// `(min, max)` of `g` over `[0, t]`.
    pub fn range(&self, t: f64) -> (f64, f64) {
        let (a, b) = (self.at(0.0), self.at(t));
        (a.min(b), a.max(b))
    }

    fn slope(&self) -> f64 {
        match *self {
            Boundary::Constant(_) => 0.0,
            Boundary::Linear { slope, .. } => slope,
        }
    }
}

/// Which first passage is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    /// `tau`: the path starts below the boundary and crosses it upward.
    Up,
    /// `rho`: the path starts above the boundary and crosses it downward.
    Down,
}

/// A first-passage problem for a unit-noise diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTask {
    pub boundary: Boundary,
    /// One-sided increment constant of the boundary.
    #[serde(rename = "K")]
    pub k: f64,
    pub direction: Crossing,
    /// Start point.
    pub x: f64,
    /// Horizon.
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl BoundaryTask {
    /// Passage of the lower auxiliary diffusion from `0` up to `delta`,
    /// in unit coordinates, with the increment constant `K = delta`.
    pub fn lower_aux_rise(delta: f64, sigma: f64, horizon: f64) -> Self {
        Self {
            boundary: Boundary::Constant(delta / sigma),
            k: delta,
            direction: Crossing::Up,
            x: 0.0,
            horizon,
        }
    }

    /// Passage of the upper auxiliary diffusion from `delta` down to `0`,
    /// in unit coordinates.
    pub fn upper_aux_return(delta: f64, sigma: f64, horizon: f64) -> Self {
        Self {
            boundary: Boundary::Constant(0.0),
            k: 0.0,
            direction: Crossing::Down,
            x: delta / sigma,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.x, "start")?;
        ensure_finite(self.k, "K")?;
        ensure_finite(self.horizon, "horizon")?;
        ensure_finite(self.boundary.at(0.0), "boundary")?;
        ensure_finite(self.boundary.slope(), "boundary slope")?;
        ensure(self.k >= 0.0, || format!("K must be nonnegative, got {}", self.k))?;
        ensure(self.horizon > 0.0, || {
            format!("horizon must be positive, got {}", self.horizon)
        })?;
        let g0 = self.boundary.at(0.0);
        let slope = self.boundary.slope();
        match self.direction {
            Crossing::Up => {
                ensure(g0 > self.x, || {
                    format!("up-crossing needs g(0) = {g0} above the start {}", self.x)
                })?;
                ensure(slope >= -self.k, || {
                    format!("boundary falls faster ({slope}) than K = {} allows", self.k)
                })?;
            }
            Crossing::Down => {
                ensure(g0 < self.x, || {
                    format!("down-crossing needs g(0) = {g0} below the start {}", self.x)
                })?;
                ensure(slope <= self.k, || {
                    format!("boundary rises faster ({slope}) than K = {} allows", self.k)
                })?;
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary, positive before the passage.
    fn gap(&self, t: f64, y: f64) -> f64 {
        match self.direction {
            Crossing::Up => self.boundary.at(t) - y,
            Crossing::Down => y - self.boundary.at(t),
        }
    }
}

/// The essential infimum `M(t)` or `M*(t)` entering the bound at time `t`.
pub fn bound_essinf<D: Drift>(task: &BoundaryTask, ud: &UnitDiffusion<D>, t: f64) -> Result<f64> {
    let (gmin, gmax) = task.boundary.range(t);
    let m = match task.direction {
        Crossing::Up => ud.essinf(f64::NEG_INFINITY, gmax)?,
        Crossing::Down => ud.essinf(gmin, f64::INFINITY)?,
    };
    if !m.is_finite() {
        return Err(Error::NonFinite(format!(
            "essinf of mu' + mu^2 is {m}; the density bound is vacuous"
        )));
    }
    Ok(m)
}

/// Natural log of the density bound at time `t`.
pub fn log_density_bound<D: Drift>(task: &BoundaryTask, ud: &UnitDiffusion<D>, t: f64) -> Result<f64> {
    task.validate()?;
    ensure(t > 0.0 && t.is_finite(), || format!("time must be positive, got {t}"))?;
    let m = bound_essinf(task, ud, t)?;
    Ok(log_bound_with(task, ud, t, m))
}

fn log_bound_with<D: Drift>(task: &BoundaryTask, ud: &UnitDiffusion<D>, t: f64, m: f64) -> f64 {
    let g = task.boundary.at(t);
    let lead = match task.direction {
        Crossing::Up => g + task.k * t - task.x,
        Crossing::Down => task.x - g + task.k * t,
    };
    if lead <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let d = g - task.x;
    let log_q = -d * d / (2.0 * t) - 0.5 * (2.0 * std::f64::consts::PI * t).ln();
    (lead / t).ln() + log_q + ud.antiderivative(g) - ud.antiderivative(task.x) - 0.5 * t * m
}

/// The density bound `B*(t)` or `B°(t)`.
pub fn density_bound<D: Drift>(task: &BoundaryTask, ud: &UnitDiffusion<D>, t: f64) -> Result<f64> {
    Ok(log_density_bound(task, ud, t)?.exp())
}

/// Simulates first-passage times of `dX = drift dt + amp dB` from `x0`
/// through `boundary`, one replica per noise stream.
///
/// Each Euler step that stays on the near side is checked for an unseen
/// excursion with the Brownian-bridge crossing probability
/// `exp(-2 d0 d1 / (amp^2 dt))` (`d0`, `d1` the distances to the boundary at
/// the step ends); a bridge passage is dated at the step midpoint, a grid
/// passage by linear interpolation.
#[allow(clippy::too_many_arguments)]
pub fn first_passage_times<D: Drift>(
    drift: &D,
    amp: f64,
    task: &BoundaryTask,
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    task.validate()?;
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
    ensure(amp > 0.0 && amp.is_finite(), || {
        format!("noise amplitude must be positive, got {amp}")
    })?;
    let steps = (task.horizon / dt).ceil() as u64;
    let bridge_seed = derive_seed(seed, 0xF1257);
    let scale = 2.0 / (amp * amp * dt);
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stepper = EulerStepper::new(drift, amp, dt, StreamId::new(seed, r as u64));
            let mut aux = AuxUniforms::new(bridge_seed, r as u64);
            let mut y = task.x;
            let mut d0 = task.gap(0.0, y);
            for i in 0..steps {
                let t0 = i as f64 * dt;
                let t1 = t0 + dt;
                let y1 = stepper.step(y);
                let d1 = task.gap(t1, y1);
                if d1 <= 0.0 {
                    let t = t0 + dt * d0 / (d0 - d1);
                    return (t <= task.horizon).then_some(t);
                }
                let e = -scale * d0 * d1;
                if e > -40.0 && aux.uniform() < e.exp() {
                    let t = t0 + 0.5 * dt;
                    return (t <= task.horizon).then_some(t);
                }
                y = y1;
                d0 = d1;
            }
            None
        })
        .collect())
}

/// Histogram-versus-bound comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptReport {
    /// Bin midpoints.
    pub bins: Vec<f64>,
    /// Empirical (possibly defective) density per bin.
    pub empirical: Vec<f64>,
    /// Bound averaged over each bin. A midpoint value would understate the
    /// mass of a tight bound wherever the density is convex, e.g. in the
    /// first bins where it rises from zero.
    pub bound: Vec<f64>,
    /// Monte Carlo standard error per bin.
    pub se: Vec<f64>,
    /// Indices of bins whose empirical density exceeds bound + 3 SE.
    pub violations: Vec<usize>,
    pub passages: usize,
    pub replicas: usize,
    /// Set when no passage happened within the horizon.
    pub inconclusive: bool,
}

/// Settings for [`verify_density_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub replicas: usize,
    pub bins: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            replicas: 100_000,
            bins: 40,
            dt: 1e-3,
            seed: 0xF17,
        }
    }
}

/// Simulates the unit diffusion and compares the first-passage histogram on
/// `(0, T]` with the bin averages of the density bound.
pub fn verify_density_bound<D: Drift>(
    ud: &UnitDiffusion<D>,
    task: &BoundaryTask,
    cfg: &VerifyConfig,
) -> Result<FptReport> {
    ensure(cfg.replicas >= 10_000, || {
        format!("need at least 10^4 replicas, got {}", cfg.replicas)
    })?;
    ensure(cfg.bins >= 1, || "need at least one bin".into())?;
    let times = first_passage_times(ud, 1.0, task, cfg.dt, cfg.replicas, cfg.seed)?;
    let width = task.horizon / cfg.bins as f64;
    let mut counts = vec![0usize; cfg.bins];
    let mut passages = 0;
    for t in times.iter().flatten() {
        let b = ((t / width) as usize).min(cfg.bins - 1);
        counts[b] += 1;
        passages += 1;
    }
    let n = cfg.replicas as f64;
    let mut report = FptReport {
        bins: Vec::with_capacity(cfg.bins),
        empirical: Vec::with_capacity(cfg.bins),
        bound: Vec::with_capacity(cfg.bins),
        se: Vec::with_capacity(cfg.bins),
        violations: Vec::new(),
        passages,
        replicas: cfg.replicas,
        inconclusive: passages == 0,
    };
    for (i, &c) in counts.iter().enumerate() {
        let mid = (i as f64 + 0.5) * width;
        let p = c as f64 / n;
        let emp = p / width;
        let se = (p * (1.0 - p) / n).sqrt() / width;
        let bound = bin_average_bound(task, ud, i as f64 * width, (i + 1) as f64 * width)?;
        if emp > bound + 3.0 * se {
            report.violations.push(i);
        }
        report.bins.push(mid);
        report.empirical.push(emp);
        report.bound.push(bound);
        report.se.push(se);
    }
    Ok(report)
}

fn bin_average_bound<D: Drift>(task: &BoundaryTask, ud: &UnitDiffusion<D>, a: f64, b: f64) -> Result<f64> {
    let lo = a.max(1e-9 * b);
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-9,
        max_intervals: 2000,
    };
    let m_flat = match task.boundary {
        Boundary::Constant(_) => Some(bound_essinf(task, ud, b)?),
        Boundary::Linear { .. } => None,
    };
    let log_b = |t: f64| match m_flat {
        Some(m) => log_bound_with(task, ud, t, m),
        None => log_density_bound(task, ud, t).unwrap_or(f64::INFINITY),
    };
    Ok(log_integrate_exp(log_b, lo, b, &[], opts)?.exp() / (b - a))
}

/// `log ∫_0^{t_max} exp(theta t) B(t) dt`.
pub fn bound_log_mgf<D: Drift>(
    task: &BoundaryTask,
    ud: &UnitDiffusion<D>,
    theta: f64,
    t_max: f64,
) -> Result<f64> {
    task.validate()?;
    ensure(t_max > 0.0 && t_max.is_finite(), || format!("bad upper limit {t_max}"))?;
    // the essinf is constant in t for flat boundaries; evaluate it once then
    let flat = matches!(task.boundary, Boundary::Constant(_));
    let m_flat = if flat { Some(bound_essinf(task, ud, t_max)?) } else { None };
    let log_b = |t: f64| -> f64 {
        let m = match m_flat {
            Some(m) => m,
            None => bound_essinf(task, ud, t).unwrap_or(f64::NEG_INFINITY),
        };
        if !m.is_finite() {
            return f64::INFINITY;
        }
        theta * t + log_bound_with(task, ud, t, m)
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let lower = 1e-9 * t_max;
    let breaks: Vec<f64> = [1e-3, 1e-2, 0.1, 1.0, 10.0]
        .iter()
        .map(|f| f * t_max)
        .collect();
    log_integrate_exp(log_b, lower, t_max, &breaks, opts)
}

/// Truncated m.g.f. integrals of the bound over growing horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundMgf {
    pub theta: f64,
    pub horizons: Vec<f64>,
    pub log_values: Vec<f64>,
    /// The last doubling of the horizon changed the integral by less than
    /// one part in a million.
    pub finite: bool,
}

pub fn bound_mgf<D: Drift>(
    task: &BoundaryTask,
    ud: &UnitDiffusion<D>,
    theta: f64,
    horizons: &[f64],
) -> Result<BoundMgf> {
    ensure(horizons.len() >= 2, || "need at least two horizons".into())?;
    let log_values = horizons
        .iter()
        .map(|&h| bound_log_mgf(task, ud, theta, h))
        .collect::<Result<Vec<_>>>()?;
    let k = log_values.len();
    let finite = (log_values[k - 1] - log_values[k - 2]).abs() < 1e-6;
    Ok(BoundMgf {
        theta,
        horizons: horizons.to_vec(),
        log_values,
        finite,
    })
}

fn exit_logs<D: Drift>(drift: &D, amp: f64, a: f64, x: f64, b: f64) -> Result<(f64, f64, f64)> {
    for (v, what) in [(amp, "noise amplitude"), (a, "a"), (x, "x"), (b, "b")] {
        ensure_finite(v, what)?;
    }
    ensure(amp > 0.0, || format!("noise amplitude must be positive, got {amp}"))?;
    ensure(a < x && x < b, || format!("need a < x < b, got {a}, {x}, {b}"))?;
    let c = 2.0 / (amp * amp);
    // log of the scale density; the reference point only shifts it and
    // cancels in the ratio
    let log_s = |u: f64| -c * drift.antiderivative(u);
    let breaks: Vec<f64> = drift.breakpoints();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let lower = log_integrate_exp(log_s, a, x, &breaks, opts)?;
    let upper = log_integrate_exp(log_s, x, b, &breaks, opts)?;
    let total = log_integrate_exp(log_s, a, b, &breaks, opts)?;
    Ok((lower, upper, total))
}

/// Probability that `dX = drift dt + amp dB` started at `x` reaches `b`
/// before `a`: `∫_a^x s / ∫_a^b s` with `s(u) = exp(-(2/amp^2) ∫ drift)`,
/// evaluated in the log domain.
pub fn exit_probability<D: Drift>(drift: &D, amp: f64, a: f64, x: f64, b: f64) -> Result<f64> {
    let (lower, _, total) = exit_logs(drift, amp, a, x, b)?;
    Ok((lower - total).exp().min(1.0))
}

/// Natural log of [`exit_probability`], accurate when the probability
/// underflows.
pub fn log_exit_probability<D: Drift>(drift: &D, amp: f64, a: f64, x: f64, b: f64) -> Result<f64> {
    let (lower, _, total) = exit_logs(drift, amp, a, x, b)?;
    Ok((lower - total).min(0.0))
}

/// Probability of reaching `a` before `b`, computed from its own integral.
pub fn exit_probability_down<D: Drift>(drift: &D, amp: f64, a: f64, x: f64, b: f64) -> Result<f64> {
    let (_, upper, total) = exit_logs(drift, amp, a, x, b)?;
    Ok((upper - total).exp().min(1.0))
}

/// Monte Carlo estimate of [`exit_probability`] with bridge-corrected exit
/// detection at both ends.
pub fn exit_probability_mc<D: Drift>(
    drift: &D,
    amp: f64,
    a: f64,
    x: f64,
    b: f64,
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<MeanSe> {
    ensure(a < x && x < b, || format!("need a < x < b, got {a}, {x}, {b}"))?;
    ensure(dt > 0.0 && amp > 0.0, || "dt and amplitude must be positive".into())?;
    let scale = 2.0 / (amp * amp * dt);
    let bridge_seed = derive_seed(seed, 0xE817);
    let hits: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stepper = EulerStepper::new(drift, amp, dt, StreamId::new(seed, r as u64));
            let mut aux = AuxUniforms::new(bridge_seed, r as u64);
            let mut y = x;
            loop {
                let y1 = stepper.step(y);
                if y1 >= b {
                    return 1.0;
                }
                if y1 <= a {
                    return 0.0;
                }
                let up = (-scale * (b - y) * (b - y1)).exp();
                let down = (-scale * (y - a) * (y1 - a)).exp();
                let u = aux.uniform();
                if u < up {
                    return 1.0;
                }
                if u < up + down {
                    return 0.0;
                }
                y = y1;
            }
        })
        .collect();
    mean_se(&hits)
}

/// Exact survival `P(T > t)` of the passage of `sigma B(s) + mu s` to
/// `delta > 0` (inverse Gaussian law, `mu >= 0`).
pub fn bm_drift_survival(delta: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    let st = sigma * t.sqrt();
    let a = norm_cdf((delta - mu * t) / st);
    let z = (-delta - mu * t) / st;
    let b = (2.0 * mu * delta / (sigma * sigma) + norm_cdf(z).ln()).exp();
    (a - b).max(0.0)
}

/// The survival bound in the drift-specific form
/// `delta / (sigma sqrt(2 pi t^3)) exp(mu (2 delta - mu t) / (2 sigma^2))`.
///
/// Bounding `∫_t^inf exp(-mu^2 u / (2 sigma^2)) du` by its integrand at `t`
/// drops a factor `2 sigma^2 / mu^2`, so the display is a valid bound only
/// when `mu^2 >= 2 sigma^2`; [`bm_drift_survival_bound`] keeps the factor.
pub fn bm_drift_survival_display(delta: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    let pre = delta / (sigma * (2.0 * std::f64::consts::PI * t.powi(3)).sqrt());
    pre * (mu * (2.0 * delta - mu * t) / (2.0 * sigma * sigma)).exp()
}

/// The display with the integration factor restored; valid for all `mu > 0`.
pub fn bm_drift_survival_bound(delta: f64, mu: f64, sigma: f64, t: f64) -> f64 {
    bm_drift_survival_display(delta, mu, sigma, t) * 2.0 * sigma * sigma / (mu * mu)
}

/// The final exponential form
/// `delta / (sigma sqrt(2 pi t^3)) e^{delta^2/sigma^2} e^{-delta^2 t / (2 sigma^2)}`,
/// which dominates the display whenever `mu >= delta` and `t >= 2`.
pub fn bm_drift_survival_exponential(delta: f64, sigma: f64, t: f64) -> f64 {
    let pre = delta / (sigma * (2.0 * std::f64::consts::PI * t.powi(3)).sqrt());
    pre * (delta * delta * (2.0 - t) / (2.0 * sigma * sigma)).exp()
}
