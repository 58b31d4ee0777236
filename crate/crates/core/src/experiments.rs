//! Desk-scale reproductions of the tail statements.
//!
//! * [`tail_curve_cycle`]: `log P(C_1^delta >= u)` against `u^r` by splitting
//!   on the running cycle area; the slope estimates `-V*`.
//! * [`tail_curve_additive`]: `log P(A(t) >= b)` against `t^r`, crude Monte
//!   Carlo with a splitting fallback once exceedances get scarce.
//! * [`weibull_sum_check`]: the one-big-jump LDP for sums of Weibull
//!   variables, by conditional Monte Carlo on the largest term, cross-checked
//!   by splitting on the partial sum.
//! * [`cramer_rate`] and [`n_delta_concentration`]: renewal-count
//!   concentration with a numerically computed Legendre transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cycles::{mgf_estimate, CycleDetector, DetectorConfig};
use crate::drift::{Drift, DriftSpec};
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::params::{ModelParams, ScalingExponents};
use crate::rng::{derive_seed, AuxUniforms};
use crate::sde::{abs_pow, EulerStepper, StreamId};
use crate::splitting::{crude_scores, estimate_tail, Advance, SplittingConfig, SplittingModel};
use crate::stats::{log_mean_exp, mean_se, ols, pairwise_sum, quantile, wls, LinearFit};

/// Splitting model for the area of the first regeneration cycle.
#[derive(Debug, Clone)]
pub struct CycleAreaModel {
    pub drift: DriftSpec,
    pub sigma: f64,
    pub detector: DetectorConfig,
    pub dt: f64,
    /// Safety cap on a single cycle's length.
    pub max_time: f64,
}

/// A particle inside the first cycle.
#[derive(Debug, Clone)]
pub struct CycleParticle {
    x: f64,
    t: f64,
    det: CycleDetector,
    /// Area of the completed cycle once it has closed.
    done: Option<f64>,
}

impl CycleAreaModel {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        params.validate()?;
        ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
        Ok(Self {
            drift: DriftSpec::exact(params.kappa),
            sigma: params.sigma,
            detector: DetectorConfig::new(params.delta, params.p).with_bridge(params.sigma),
            dt,
            max_time: 1e5,
        })
    }
}

impl SplittingModel for CycleAreaModel {
    type State = CycleParticle;

    fn initial(&self) -> CycleParticle {
        CycleParticle {
            x: 0.0,
            t: 0.0,
            det: CycleDetector::new(self.detector, 0.0, Some(AuxUniforms::new(0, 0)))
                .expect("validated in new"),
            done: None,
        }
    }

    fn score(&self, s: &CycleParticle) -> f64 {
        s.done.unwrap_or_else(|| s.det.open_area())
    }

    fn advance(&self, mut s: CycleParticle, level: f64, stream: StreamId) -> Advance<CycleParticle> {
        if let Some(a) = s.done {
            return if a >= level {
                Advance::Reached(s)
            } else {
                Advance::Died { score: a }
            };
        }
        s.det
            .set_bridge_stream(AuxUniforms::new(derive_seed(stream.seed, 0xB21D), stream.replica));
        let mut stepper = EulerStepper::new(&self.drift, self.sigma, self.dt, stream);
        while s.t < self.max_time {
            let x1 = stepper.step(s.x);
            let t1 = s.t + self.dt;
            if let Some(rec) = s.det.push(s.t, s.x, t1, x1) {
                s.done = Some(rec.area);
                return if rec.area >= level {
                    Advance::Reached(s)
                } else {
                    Advance::Died { score: rec.area }
                };
            }
            s.x = x1;
            s.t = t1;
            if s.det.open_area() >= level {
                return Advance::Reached(s);
            }
        }
        Advance::Died {
            score: s.det.open_area(),
        }
    }
}

/// Splitting model for the time average `A(t) = (1/t) ∫_0^t |X|^p` from
/// `X(0) = x0`; the score is the running integral divided by `t`.
#[derive(Debug, Clone)]
pub struct AdditiveModel {
    pub drift: DriftSpec,
    pub sigma: f64,
    pub p: f64,
    pub horizon: f64,
    pub x0: f64,
    pub dt: f64,
}

/// `(time, state, running integral / horizon)`.
pub type AdditiveState = (f64, f64, f64);

impl SplittingModel for AdditiveModel {
    type State = AdditiveState;

    fn initial(&self) -> AdditiveState {
        (0.0, self.x0, 0.0)
    }

    fn score(&self, s: &AdditiveState) -> f64 {
        s.2
    }

    fn advance(&self, s: AdditiveState, level: f64, stream: StreamId) -> Advance<AdditiveState> {
        let (mut t, mut x, mut a) = s;
        let mut stepper = EulerStepper::new(&self.drift, self.sigma, self.dt, stream);
        let w = 0.5 / self.horizon;
        while t < self.horizon - 1e-12 {
            let h = self.dt.min(self.horizon - t);
            let x1 = if h == self.dt {
                stepper.step(x)
            } else {
                // shortened last step
                let z = stepper.step(0.0) / (self.sigma * self.dt.sqrt());
                x + self.drift.value(x) * h + self.sigma * h.sqrt() * z
            };
            a += w * h * (abs_pow(x, self.p) + abs_pow(x1, self.p));
            t += h;
            x = x1;
            if a >= level {
                return Advance::Reached((t, x, a));
            }
        }
        Advance::Died { score: a }
    }
}

/// Splitting model for `(1/n) Σ_{i <= count} X_i` with i.i.d.
/// `P(X >= s) = exp(-s^shape)`; the score is the running normalized sum.
#[derive(Debug, Clone, Copy)]
pub struct WeibullSumModel {
    pub shape: f64,
    pub count: usize,
    pub n: usize,
}

/// `(terms drawn, running sum, largest term)`.
pub type WeibullState = (usize, f64, f64);

impl WeibullSumModel {
    fn draw(&self, aux: &mut AuxUniforms) -> f64 {
        (-aux.uniform().ln()).powf(1.0 / self.shape)
    }

    /// Draws the remaining terms of a partial sum.
    pub fn complete(&self, s: WeibullState, stream: StreamId) -> WeibullState {
        let (mut k, mut sum, mut big) = s;
        let mut aux = AuxUniforms::new(derive_seed(stream.seed, 0xC0), stream.replica);
        while k < self.count {
            let v = self.draw(&mut aux);
            k += 1;
            sum += v;
            big = big.max(v);
        }
        (k, sum, big)
    }
}

impl SplittingModel for WeibullSumModel {
    type State = WeibullState;

    fn initial(&self) -> WeibullState {
        (0, 0.0, 0.0)
    }

    fn score(&self, s: &WeibullState) -> f64 {
        s.1 / self.n as f64
    }

    fn advance(&self, s: WeibullState, level: f64, stream: StreamId) -> Advance<WeibullState> {
        let (mut k, mut sum, mut big) = s;
        let mut aux = AuxUniforms::new(stream.seed, stream.replica);
        let target = level * self.n as f64;
        while k < self.count {
            let v = self.draw(&mut aux);
            k += 1;
            sum += v;
            big = big.max(v);
            if sum >= target {
                return Advance::Reached((k, sum, big));
            }
        }
        Advance::Died {
            score: sum / self.n as f64,
        }
    }
}

/// Estimated log-probabilities against a power of the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    /// Thresholds `u` (cycle areas) or horizons `t`.
    pub levels: Vec<f64>,
    pub prob: Vec<f64>,
    pub log_prob: Vec<f64>,
    pub se_log: Vec<f64>,
    /// Points with no exceedance at all; excluded from the fits.
    pub degenerate: Vec<bool>,
    /// Exponent of the abscissa `level^r`.
    pub speed_r: f64,
    /// Inverse-variance weighted fit of `log_prob` on `level^r`.
    pub fit: LinearFit,
    /// Unweighted fit on the same points.
    pub fit_ols: LinearFit,
}

impl TailCurve {
    fn build(
        levels: Vec<f64>,
        prob: Vec<f64>,
        se_log: Vec<f64>,
        degenerate: Vec<bool>,
        speed_r: f64,
    ) -> Result<Self> {
        let log_prob: Vec<f64> = prob.iter().map(|p| p.ln()).collect();
        let (fit, fit_ols) = fit_curve(&levels, &log_prob, &se_log, &degenerate, speed_r)?;
        Ok(Self {
            levels,
            prob,
            log_prob,
            se_log,
            degenerate,
            speed_r,
            fit,
            fit_ols,
        })
    }

    /// Weighted and unweighted fits against `level^r_alt` instead.
    pub fn refit(&self, r_alt: f64) -> Result<(LinearFit, LinearFit)> {
        fit_curve(&self.levels, &self.log_prob, &self.se_log, &self.degenerate, r_alt)
    }

    /// Points usable in a fit.
    pub fn usable(&self) -> usize {
        self.degenerate.iter().filter(|d| !**d).count()
    }
}

fn fit_curve(
    levels: &[f64],
    log_prob: &[f64],
    se_log: &[f64],
    degenerate: &[bool],
    r: f64,
) -> Result<(LinearFit, LinearFit)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for i in 0..levels.len() {
        if degenerate[i] {
            continue;
        }
        x.push(levels[i].powf(r));
        y.push(log_prob[i]);
        w.push(1.0 / se_log[i].max(1e-12).powi(2));
    }
    if x.len() < 2 {
        return Err(Error::Inconclusive(format!(
            "only {} tail points have exceedances",
            x.len()
        )));
    }
    Ok((wls(&x, &y, &w)?, ols(&x, &y)?))
}

/// Splitting estimates of `P(C_1^delta >= u)` across `u_grid`, fitted
/// against `u^r`.
pub fn tail_curve_cycle(
    params: &ModelParams,
    u_grid: &[f64],
    splitting: &SplittingConfig,
    dt: f64,
) -> Result<TailCurve> {
    params.validate_asymptotic()?;
    check_grid(u_grid, "threshold")?;
    let r = params.scaling()?.speed_r;
    let model = CycleAreaModel::new(params, dt)?;
    let est = estimate_tail(&model, u_grid, splitting)?;
    TailCurve::build(
        est.targets.iter().map(|e| e.level).collect(),
        est.targets.iter().map(|e| e.prob).collect(),
        est.targets.iter().map(|e| e.se_log).collect(),
        est.targets.iter().map(|e| e.degenerate).collect(),
        r,
    )
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    ensure(grid.len() >= 2, || format!("need at least two {what} values"))?;
    for &g in grid {
        ensure_finite(g, what)?;
        ensure(g > 0.0, || format!("{what} values must be positive, got {g}"))?;
    }
    ensure(grid.windows(2).all(|w| w[0] < w[1]), || {
        format!("{what} grid must be increasing")
    })
}

/// Settings for [`tail_curve_additive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdditiveTailConfig {
    /// Crude Monte Carlo replicas per horizon.
    pub replicas: usize,
    /// Below this many crude exceedances the splitting estimate is used.
    pub min_hits: usize,
    pub splitting: SplittingConfig,
    pub dt: f64,
    pub seed: u64,
}

impl Default for AdditiveTailConfig {
    fn default() -> Self {
        Self {
            replicas: 4000,
            min_hits: 100,
            splitting: SplittingConfig::default(),
            dt: 5e-3,
            seed: 0xADD,
        }
    }
}

/// Estimates of `P(A(t) >= b)` from `X(0) = 0` across `t_grid`, fitted
/// against `t^r`.
pub fn tail_curve_additive(
    params: &ModelParams,
    t_grid: &[f64],
    b: f64,
    cfg: &AdditiveTailConfig,
) -> Result<TailCurve> {
    params.validate_asymptotic()?;
    check_grid(t_grid, "horizon")?;
    ensure_finite(b, "b")?;
    ensure(cfg.replicas >= 10, || "need at least 10 replicas".into())?;
    let r = params.scaling()?.speed_r;
    let mut prob = Vec::new();
    let mut se_log = Vec::new();
    let mut degenerate = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let model = AdditiveModel {
            drift: DriftSpec::exact(params.kappa),
            sigma: params.sigma,
            p: params.p,
            horizon: t,
            x0: 0.0,
            dt: cfg.dt,
        };
        let seed = derive_seed(cfg.seed, i as u64);
        let scores = crude_scores(&model, cfg.replicas, seed);
        let hits = scores.iter().filter(|&&a| a >= b).count();
        let n = cfg.replicas as f64;
        if hits >= cfg.min_hits {
            // continuity-corrected variance keeps the weight finite at p = 1
            let p = hits as f64 / n;
            let pc = (hits as f64 + 0.5) / (n + 1.0);
            prob.push(p);
            se_log.push(((1.0 - pc) / (n * pc)).sqrt());
            degenerate.push(false);
        } else {
            let sp = SplittingConfig {
                seed: derive_seed(cfg.splitting.seed, i as u64),
                ..cfg.splitting
            };
            let est = estimate_tail(&model, &[b], &sp)?;
            let e = est.targets[0];
            prob.push(e.prob);
            se_log.push(e.se_log);
            degenerate.push(e.degenerate);
        }
    }
    TailCurve::build(t_grid.to_vec(), prob, se_log, degenerate, r)
}

/// One row of [`weibull_sum_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullRow {
    pub n: usize,
    /// Conditional Monte Carlo estimate of `log P` (largest-term
    /// conditioning).
    pub log_prob: f64,
    pub se_log: f64,
    /// Splitting estimate of `log P` on the running sum, a cross-check.
    /// Splitting on the sum favours many moderate terms over one big jump,
    /// so it needs far more effort for the same accuracy.
    pub log_prob_split: f64,
    pub se_log_split: f64,
    /// `log P / n^r`.
    pub normalized: f64,
    pub limit: f64,
    /// `|normalized / limit - 1|`.
    pub rel_err: f64,
    /// Weighted median share of the largest term given the exceedance.
    pub median_max_share: f64,
    /// The same median over the splitting survivors (biased towards
    /// many-small-terms paths; diagnostic only).
    pub split_max_share: f64,
    /// `(x - mB) / x`, the share carried by a single big jump.
    pub jump_share: f64,
}

/// Report of [`weibull_sum_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullReport {
    pub shape: f64,
    pub b: f64,
    pub x: f64,
    /// Weibull mean `Γ(1 + 1/r)`.
    pub mean: f64,
    pub rows: Vec<WeibullRow>,
}

/// Compares `(1/n^r) log P((1/n) Σ_{i <= floor(nB)} X_i >= x)` with the
/// limit `-(x - mB)^r` across `n_grid`.
pub fn weibull_sum_check(
    shape: f64,
    n_grid: &[usize],
    x: f64,
    b: f64,
    splitting: &SplittingConfig,
    cmc_replicas: usize,
) -> Result<WeibullReport> {
    ensure(shape > 0.0 && shape < 1.0, || format!("shape must lie in (0, 1), got {shape}"))?;
    ensure(b > 0.0 && b.is_finite(), || format!("B must be positive, got {b}"))?;
    let mean = gamma(1.0 + 1.0 / shape);
    ensure(x > mean * b, || format!("x = {x} must exceed mB = {}", mean * b))?;
    ensure(cmc_replicas >= 2, || "need at least two conditional MC replicas".into())?;
    let limit = -(x - mean * b).powf(shape);
    let mut rows = Vec::new();
    for (i, &n) in n_grid.iter().enumerate() {
        ensure(n >= 1, || "n must be positive".into())?;
        let count = (n as f64 * b).floor() as usize;
        ensure(count >= 2, || format!("floor(nB) = {count} is too small"))?;
        let model = WeibullSumModel { shape, count, n };
        let sp = SplittingConfig {
            seed: derive_seed(splitting.seed, i as u64),
            ..*splitting
        };
        let est = estimate_tail(&model, &[x], &sp)?;
        let e = est.targets[0];
        // finish the walks that crossed early, then look at the big term
        let finished: Vec<WeibullState> = est
            .final_states
            .par_iter()
            .enumerate()
            .map(|(j, s)| model.complete(*s, StreamId::new(derive_seed(sp.seed, 0xF1), j as u64)))
            .collect();
        let shares: Vec<f64> = finished.iter().map(|s| s.2 / s.1).collect();
        let split_max_share = if shares.is_empty() {
            f64::NAN
        } else {
            quantile(&shares, 0.5)?
        };
        let cmc = weibull_cmc(shape, count, x * n as f64, cmc_replicas, derive_seed(sp.seed, 0xCC))?;
        let normalized = cmc.log_prob / (n as f64).powf(shape);
        rows.push(WeibullRow {
            n,
            log_prob: cmc.log_prob,
            se_log: cmc.se_log,
            log_prob_split: e.log_prob,
            se_log_split: e.se_log,
            normalized,
            limit,
            rel_err: (normalized / limit - 1.0).abs(),
            median_max_share: cmc.median_max_share,
            split_max_share,
            jump_share: (x - mean * b) / x,
        });
    }
    Ok(WeibullReport {
        shape,
        b,
        x,
        mean,
        rows,
    })
}

/// Conditional Monte Carlo for `P(S_N >= s)`, conditioning on the largest
/// term: with `M` and `S` the maximum and sum of `N - 1` draws,
/// `N * Fbar(max(M, s - S))` is unbiased. Drawing the largest term from its
/// tail beyond that point, weighted by the estimator, samples the law of the
/// walk given the exceedance, which yields the max-share median.
struct Cmc {
    log_prob: f64,
    se_log: f64,
    median_max_share: f64,
}

fn weibull_cmc(shape: f64, count: usize, s: f64, replicas: usize, seed: u64) -> Result<Cmc> {
    let draws: Vec<(f64, f64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut aux = AuxUniforms::new(seed, r);
            let mut sum = 0.0;
            let mut big: f64 = 0.0;
            for _ in 1..count {
                let v = (-aux.uniform().ln()).powf(1.0 / shape);
                sum += v;
                big = big.max(v);
            }
            let y = big.max(s - sum).max(0.0);
            let jump = (y.powf(shape) - aux.uniform().ln()).powf(1.0 / shape);
            ((count as f64).ln() - y.powf(shape), jump / (sum + jump))
        })
        .collect();
    let logs: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let lp = log_mean_exp(&logs);
    let rel: Vec<f64> = logs.iter().map(|l| (l - lp).exp()).collect();
    let m = mean_se(&rel)?;
    let mut by_share: Vec<(f64, f64)> = draws.iter().zip(&rel).map(|(d, w)| (d.1, *w)).collect();
    by_share.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * pairwise_sum(&rel);
    let mut acc = 0.0;
    let mut median = f64::NAN;
    for (share, w) in by_share {
        acc += w;
        if acc >= half {
            median = share;
            break;
        }
    }
    Ok(Cmc {
        log_prob: lp,
        se_log: m.se / m.mean,
        median_max_share: median,
    })
}

/// Numerical Legendre transform of an empirical log-m.g.f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CramerRate {
    pub z: f64,
    pub value: f64,
    pub theta: f64,
    /// `[theta_lo, theta_hi]` searched; `theta_hi` is the edge of the
    /// stable m.g.f. window.
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// The maximizer sits on the window edge, so `value` is a lower bound.
    pub at_edge: bool,
}

/// `Λ*(z) = sup_θ (θ z - log mean exp(θ τ))` over the θ for which the
/// empirical m.g.f. is stable (see [`mgf_estimate`]).
pub fn cramer_rate(durations: &[f64], z: f64) -> Result<CramerRate> {
    ensure_finite(z, "z")?;
    ensure(z > 0.0, || format!("z must be positive, got {z}"))?;
    if durations.len() < 2 {
        return Err(Error::Empty("duration sample".into()));
    }
    let mean = pairwise_sum(durations) / durations.len() as f64;
    let min = durations.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda = |th: f64| -> f64 {
        let v: Vec<f64> = durations.iter().map(|t| th * t).collect();
        log_mean_exp(&v)
    };
    let phi = |th: f64| th * z - lambda(th);
    // edge of the stable window on the positive side
    let stable = |th: f64| mgf_estimate(durations, th).map(|m| m.stable).unwrap_or(false);
    let mut hi = 0.0;
    let mut step = 0.05 / mean;
    let mut probe = step;
    if stable(probe) {
        for _ in 0..60 {
            hi = probe;
            step *= 2.0;
            probe = hi + step;
            if !stable(probe) {
                break;
            }
        }
        let (mut a, mut b) = (hi, probe);
        for _ in 0..50 {
            let c = 0.5 * (a + b);
            if stable(c) {
                a = c;
            } else {
                b = c;
            }
        }
        hi = a;
    } else {
        let (mut a, mut b) = (0.0, probe);
        for _ in 0..50 {
            let c = 0.5 * (a + b);
            if stable(c) {
                a = c;
            } else {
                b = c;
            }
        }
        hi = a;
    }
    if z > mean && hi <= 0.0 {
        return Err(Error::Inconclusive(
            "empirical m.g.f. has no stable window above 0".into(),
        ));
    }
    if z <= min {
        // the tilted mean never gets down to z
        return Ok(CramerRate {
            z,
            value: f64::INFINITY,
            theta: f64::NEG_INFINITY,
            theta_lo: f64::NEG_INFINITY,
            theta_hi: hi,
            at_edge: true,
        });
    }
    // bracket on the negative side: expand until phi starts to decrease
    let mut lo = -1.0 / mean;
    for _ in 0..200 {
        let d = phi(lo) - phi(lo * 1.001);
        if d > 0.0 {
            break;
        }
        lo *= 2.0;
    }
    // golden-section search on the concave phi
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = phi(d);
        }
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
    }
    let theta = 0.5 * (a + b);
    let value = phi(theta).max(0.0);
    Ok(CramerRate {
        z,
        value,
        theta,
        theta_lo: lo,
        theta_hi: hi,
        at_edge: (hi - theta).abs() <= 1e-6 * (1.0 + hi.abs()),
    })
}

/// `Ĩ_N(x)`: the smaller of the two Cramér rates governing
/// `|N(t)/t - 1/mean| >= x`, each scaled by its number of renewals per unit
/// time. The upper-deviation term exists only for `x < 1/mean`.
pub fn renewal_rate(durations: &[f64], x: f64) -> Result<f64> {
    ensure(x > 0.0 && x.is_finite(), || format!("x must be positive, got {x}"))?;
    let mean = pairwise_sum(durations) / durations.len() as f64;
    let low = mean / (1.0 + x * mean);
    let lower_term = (x + 1.0 / mean) * cramer_rate(durations, low)?.value;
    if x * mean < 1.0 {
        let high = mean / (1.0 - x * mean);
        let upper_term = (1.0 / mean - x) * cramer_rate(durations, high)?.value;
        Ok(lower_term.min(upper_term))
    } else {
        Ok(lower_term)
    }
}

/// Renewal counts `N(t)` built from i.i.d. durations drawn from `pool`.
pub fn resampled_counts(pool: &[f64], t: f64, replicas: usize, seed: u64) -> Vec<usize> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut aux = AuxUniforms::new(seed, r);
            let mut s = 0.0;
            let mut k = 0;
            loop {
                s += pool[aux.index(pool.len())];
                if s > t {
                    return k;
                }
                k += 1;
            }
        })
        .collect()
}

/// Report of [`n_delta_concentration`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub t: f64,
    pub x: f64,
    pub mean_duration: f64,
    pub replicas: usize,
    pub exceedances: usize,
    /// `(1/t) log(exceedances / replicas)`; `-inf` without exceedances.
    pub log_rate: f64,
    pub log_rate_se: f64,
    /// `Ĩ_N(x)`.
    pub rate: f64,
    /// No exceedance was seen, so only the trivial upper bound is checked.
    pub upper_bound_only: bool,
    /// `log_rate <= -rate + 3 se`.
    pub consistent: bool,
}

/// Empirical `P(|N(t)/t - 1/mean| >= x)` against `exp(-t Ĩ_N(x))`.
///
/// Cycle durations come from `pool` (simulated cycles); each replica's
/// counting process is assembled by resampling them, which is exact for a
/// renewal process up to the pool's sampling error.
pub fn n_delta_concentration(pool: &[f64], t: f64, x: f64, replicas: usize, seed: u64) -> Result<ConcentrationReport> {
    ensure(pool.len() >= 100, || format!("duration pool too small ({})", pool.len()))?;
    ensure(t > 0.0 && t.is_finite(), || format!("t must be positive, got {t}"))?;
    ensure(replicas >= 10, || "need at least 10 replicas".into())?;
    let mean = pairwise_sum(pool) / pool.len() as f64;
    let rate = renewal_rate(pool, x)?;
    let counts = resampled_counts(pool, t, replicas, seed);
    let exceed = counts
        .iter()
        .filter(|&&k| (k as f64 / t - 1.0 / mean).abs() >= x)
        .count();
    let n = replicas as f64;
    let (log_rate, se) = if exceed == 0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        let f = exceed as f64 / n;
        (f.ln() / t, ((1.0 - f) / (n * f)).sqrt() / t)
    };
    Ok(ConcentrationReport {
        t,
        x,
        mean_duration: mean,
        replicas,
        exceedances: exceed,
        log_rate,
        log_rate_se: se,
        rate,
        upper_bound_only: exceed == 0,
        consistent: log_rate <= -rate + 3.0 * se,
    })
}

/// `E[N(t)/t] - 1/mean` with its standard error, from resampled renewals.
pub fn renewal_bias(pool: &[f64], t: f64, replicas: usize, seed: u64) -> Result<(f64, f64)> {
    let mean = pairwise_sum(pool) / pool.len() as f64;
    let v: Vec<f64> = resampled_counts(pool, t, replicas, seed)
        .iter()
        .map(|&k| k as f64 / t - 1.0 / mean)
        .collect();
    let m = mean_se(&v)?;
    Ok((m.mean, m.se))
}

/// The slope a cycle tail curve should approach: `-V*`.
pub fn expected_cycle_slope(v_star: f64) -> f64 {
    -v_star
}

/// The limit slope of the additive tail against `t^r`:
/// `-((b - E|X|^p) v 0)^r V*`.
pub fn expected_additive_slope(params: &ModelParams, b: f64, moment: f64, v_star: f64) -> Result<f64> {
    let ex = ScalingExponents::new(params.kappa, params.p)?;
    Ok(-((b - moment).max(0.0)).powf(ex.speed_r) * v_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut aux = AuxUniforms::new(seed, 0);
        (0..n).map(|_| -aux.uniform().ln()).collect()
    }

    #[test]
    fn cramer_rate_of_exponential() {
        let s = exp_sample(200_000, 1);
        let c = cramer_rate(&s, 2.0).unwrap();
        let exact = 1.0 - 2f64.ln();
        assert!((c.value - exact).abs() < 0.05 * exact, "{c:?}");
        let low = cramer_rate(&s, 0.5).unwrap();
        let exact = 0.5 - 1.0 - 0.5f64.ln();
        assert!((low.value - exact).abs() < 0.05 * exact, "{low:?}");
    }

    #[test]
    fn cramer_rate_vanishes_at_the_mean() {
        let s = exp_sample(50_000, 2);
        let mean = pairwise_sum(&s) / s.len() as f64;
        assert!(cramer_rate(&s, mean).unwrap().value < 1e-8);
    }

    #[test]
    fn renewal_rate_regimes() {
        let s = exp_sample(100_000, 3);
        let small = renewal_rate(&s, 0.2).unwrap();
        let large = renewal_rate(&s, 0.4).unwrap();
        assert!(small > 0.0 && large > small);
        // beyond 1/mean only the lower deviation is possible
        assert!(renewal_rate(&s, 2.0).unwrap() > 0.0);
    }

    #[test]
    fn weibull_model_completion() {
        let m = WeibullSumModel {
            shape: 0.5,
            count: 10,
            n: 10,
        };
        let s = m.complete((3, 1.0, 1.0), StreamId::new(1, 0));
        assert_eq!(s.0, 10);
        assert!(s.1 > 1.0 && s.2 <= s.1);
    }

    #[test]
    fn cmc_matches_exact_single_term() {
        // with one term the estimator is exact: P(X >= s) = exp(-s^r)
        let c = weibull_cmc(0.5, 1, 9.0, 10, 1).unwrap();
        assert!((c.log_prob + 3.0).abs() < 1e-12 && c.se_log == 0.0);
        assert!(c.median_max_share == 1.0);
    }
}
