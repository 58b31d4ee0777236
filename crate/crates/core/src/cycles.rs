//! Regeneration cycles.
//!
//! Starting from `B_0 = 0` with `X(0) = 0`, the alternating hitting times are
//!
//! ```text
//! A_j = inf{ s > B_{j-1} : |X(s)| >= delta }
//! B_j = inf{ s > A_j     : X(s) = 0 }
//! ```
//!
//! and cycle `j` is the segment `[B_{j-1}, B_j]` with duration
//! `tau_j = B_j - B_{j-1}` and area `C_j = ∫ |X|^p` over it. Cycles are i.i.d.
//! by the strong Markov property, which is what the regenerative estimators
//! here rely on.
//!
//! Detection is streaming: [`CycleDetector`] consumes one Euler step at a time
//! so long runs never store the path. Crossing times inside a step are found by
//! linear interpolation. Returns to zero can also be missed entirely between
//! two grid points of the same sign; the optional Brownian-bridge correction
//! declares such a hidden crossing with probability
//! `exp(-2 x0 x1 / (a^2 dt))` and splits the step at its midpoint.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::Drift;
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::rng::{derive_seed, AuxUniforms};
use crate::sde::{abs_pow, EulerStepper, SamplePath, StreamId};
use crate::stats::{mean_se, ratio_estimate, sorted_quantile, MeanSe, RatioEstimate};

/// One completed regeneration cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub start: f64,
    pub end: f64,
    pub duration: f64,
    pub area: f64,
    pub peak: f64,
    /// Time at which `|X|` first reached `delta` inside the cycle.
    pub a_time: f64,
}

/// Detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub delta: f64,
    pub p: f64,
    /// Noise amplitude used by the bridge correction for returns to zero;
    /// `None` disables the correction.
    pub bridge_amp: Option<f64>,
}

impl DetectorConfig {
    pub fn new(delta: f64, p: f64) -> Self {
        Self {
            delta,
            p,
            bridge_amp: None,
        }
    }

    pub fn with_bridge(mut self, amp: f64) -> Self {
        self.bridge_amp = Some(amp);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.delta, "delta")?;
        ensure(self.delta > 0.0, || format!("delta must be positive, got {}", self.delta))?;
        ensure_finite(self.p, "p")?;
        ensure(self.p >= 0.0, || format!("p must be nonnegative, got {}", self.p))?;
        if let Some(a) = self.bridge_amp {
            ensure(a > 0.0 && a.is_finite(), || {
                format!("bridge amplitude must be positive, got {a}")
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    SeekA,
    SeekB,
}

/// Online cycle detector fed one step `(t0, x0) -> (t1, x1)` at a time.
#[derive(Debug, Clone)]
pub struct CycleDetector {
    cfg: DetectorConfig,
    aux: Option<AuxUniforms>,
    phase: Phase,
    start: f64,
    a_time: f64,
    area: f64,
    peak: f64,
}

impl CycleDetector {
    /// A detector whose first cycle starts at `start` (where `X = 0`).
    /// `aux` supplies the bridge-test uniforms and is required when the
    /// bridge correction is on.
    pub fn new(cfg: DetectorConfig, start: f64, aux: Option<AuxUniforms>) -> Result<Self> {
        cfg.validate()?;
        ensure(cfg.bridge_amp.is_none() || aux.is_some(), || {
            "bridge correction needs an auxiliary uniform stream".into()
        })?;
        Ok(Self {
            cfg,
            aux,
            phase: Phase::SeekA,
            start,
            a_time: f64::NAN,
            area: 0.0,
            peak: 0.0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Area accumulated in the open (incomplete) cycle.
    pub fn open_area(&self) -> f64 {
        self.area
    }

    /// Start time of the open cycle.
    pub fn open_start(&self) -> f64 {
        self.start
    }

    /// Replaces the bridge-test stream, e.g. when a cloned detector must
    /// continue independently of its parent. No-op without the correction.
    pub fn set_bridge_stream(&mut self, aux: AuxUniforms) {
        if self.cfg.bridge_amp.is_some() {
            self.aux = Some(aux);
        }
    }

    /// Whether the open cycle has already visited the `delta` layer.
    pub fn open_reached_delta(&self) -> bool {
        self.phase == Phase::SeekB
    }

    fn close(&mut self, t_end: f64) -> CycleRecord {
        let rec = CycleRecord {
            start: self.start,
            end: t_end,
            duration: t_end - self.start,
            area: self.area,
            peak: self.peak,
            a_time: self.a_time,
        };
        self.phase = Phase::SeekA;
        self.start = t_end;
        self.a_time = f64::NAN;
        self.area = 0.0;
        self.peak = 0.0;
        rec
    }

    /// Consumes one step and returns the cycle it completes, if any.
    #[inline]
    pub fn push(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> Option<CycleRecord> {
        let p = self.cfg.p;
        let dt = t1 - t0;
        let f0 = abs_pow(x0, p);
        let f1 = abs_pow(x1, p);
        match self.phase {
            Phase::SeekA => {
                self.area += 0.5 * (f0 + f1) * dt;
                self.peak = self.peak.max(x1.abs());
                let d = self.cfg.delta;
                if x1.abs() >= d {
                    let level = if x1 > 0.0 { d } else { -d };
                    let w = if x1 == x0 { 1.0 } else { (level - x0) / (x1 - x0) };
                    self.a_time = t0 + w.clamp(0.0, 1.0) * dt;
                    self.phase = Phase::SeekB;
                }
                None
            }
            Phase::SeekB => {
                if x1 == 0.0 || x0 * x1 < 0.0 {
                    let w = x0 / (x0 - x1);
                    let tc = t0 + w * dt;
                    self.area += 0.5 * f0 * (tc - t0);
                    let rec = self.close(tc);
                    self.area = 0.5 * f1 * (t1 - tc);
                    self.peak = x1.abs();
                    return Some(rec);
                }
                if let Some(amp) = self.cfg.bridge_amp {
                    let expo = -2.0 * x0 * x1 / (amp * amp * dt);
                    if expo > -40.0 {
                        let u = self.aux.as_mut().expect("checked in new").uniform();
                        if u < expo.exp() {
                            let tm = t0 + 0.5 * dt;
                            self.area += 0.5 * f0 * (tm - t0);
                            let rec = self.close(tm);
                            self.area = 0.5 * f1 * (t1 - tm);
                            self.peak = x1.abs();
                            return Some(rec);
                        }
                    }
                }
                self.area += 0.5 * (f0 + f1) * dt;
                self.peak = self.peak.max(x1.abs());
                None
            }
        }
    }
}

/// Cycles found in one path plus the bookkeeping needed for additivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleScan {
    pub cycles: Vec<CycleRecord>,
    /// The path did not start at 0, so the first cycle is not a true
    /// regeneration cycle (it is still reported, as `cycles[0]`).
    pub leading_truncated: bool,
    /// Start of the incomplete trailing segment (excluded from `cycles`).
    pub trailing_start: f64,
    /// Area of the incomplete trailing segment.
    pub trailing_area: f64,
}

/// Decomposes a stored path into cycles.
///
/// The bridge correction, when configured, draws its uniforms from the
/// auxiliary stream of the path's seed, so the result is replayable.
pub fn detect_cycles(path: &SamplePath, cfg: &DetectorConfig) -> Result<CycleScan> {
    cfg.validate()?;
    if path.is_empty() {
        return Err(Error::Empty("sample path".into()));
    }
    let aux = cfg
        .bridge_amp
        .map(|_| AuxUniforms::new(path.seed.seed, path.seed.replica));
    let mut det = CycleDetector::new(*cfg, path.times[0], aux)?;
    let mut cycles = Vec::new();
    for i in 1..path.len() {
        if let Some(rec) = det.push(path.times[i - 1], path.values[i - 1], path.times[i], path.values[i]) {
            cycles.push(rec);
        }
    }
    Ok(CycleScan {
        cycles,
        leading_truncated: path.values[0] != 0.0,
        trailing_start: det.open_start(),
        trailing_area: det.open_area(),
    })
}

/// `N(t) = max{k : B_k <= t}` for records sorted by end time.
pub fn renewal_count(records: &[CycleRecord], t: f64) -> usize {
    records.partition_point(|r| r.end <= t)
}

/// Summary of a cycle sample observed up to time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalStats {
    pub n_cycles: usize,
    pub mean_tau: MeanSe,
    pub mean_area: MeanSe,
    pub t: f64,
}

pub fn renewal_stats(records: &[CycleRecord], t: f64) -> Result<RenewalStats> {
    let n = renewal_count(records, t);
    let done = &records[..n];
    let taus: Vec<f64> = done.iter().map(|r| r.duration).collect();
    let areas: Vec<f64> = done.iter().map(|r| r.area).collect();
    Ok(RenewalStats {
        n_cycles: n,
        mean_tau: mean_se(&taus)?,
        mean_area: mean_se(&areas)?,
        t,
    })
}

/// Regenerative estimate `mean(C) / mean(tau)` of `E|X(inf)|^p`, with a
/// delta-method 95% interval.
pub fn regenerative_moment_ratio(records: &[CycleRecord]) -> Result<RatioEstimate> {
    ensure(records.len() >= 2, || {
        format!("need at least two complete cycles, got {}", records.len())
    })?;
    let areas: Vec<f64> = records.iter().map(|r| r.area).collect();
    let taus: Vec<f64> = records.iter().map(|r| r.duration).collect();
    ratio_estimate(&areas, &taus)
}

/// Distribution of the largest cycle's share of the total area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigJumpReport {
    /// Replicas whose normalized total area reached `b`.
    pub qualifying: usize,
    pub replicas: usize,
    /// `max_j C_j / sum_j C_j` for each qualifying replica.
    pub shares: Vec<f64>,
    pub median_share: Option<f64>,
    /// The same statistic over all replicas, unconditioned.
    pub unconditioned_median: Option<f64>,
}

impl BigJumpReport {
    pub fn is_empty(&self) -> bool {
        self.qualifying == 0
    }
}

fn max_share(areas: &[f64]) -> Option<f64> {
    let total: f64 = areas.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let max = areas.iter().copied().fold(0.0, f64::max);
    Some(max / total)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(sorted_quantile(&v, 0.5))
}

/// Among replicas with `(1/t) sum_j C_j >= b`, the share of the largest
/// cycle. `replicas[i]` holds the cycle areas of replica `i`.
pub fn big_jump_diagnostic(replicas: &[Vec<f64>], t: f64, b: f64) -> Result<BigJumpReport> {
    ensure_finite(t, "t")?;
    ensure(t > 0.0, || format!("horizon must be positive, got {t}"))?;
    ensure_finite(b, "b")?;
    let mut shares = Vec::new();
    let mut all = Vec::new();
    for areas in replicas {
        let Some(s) = max_share(areas) else { continue };
        all.push(s);
        if areas.iter().sum::<f64>() / t >= b {
            shares.push(s);
        }
    }
    Ok(BigJumpReport {
        qualifying: shares.len(),
        replicas: replicas.len(),
        median_share: median(shares.clone()),
        unconditioned_median: median(all),
        shares,
    })
}

/// Empirical moment-generating function with a tail-stability diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfEstimate {
    pub theta: f64,
    pub value: f64,
    pub se: f64,
    /// Estimate with the sample capped at its 99% quantile.
    pub truncated_99: f64,
    /// `value / truncated_99`; near 1 when the top 1% carries little weight.
    pub tail_ratio: f64,
    pub stable: bool,
}

/// Tail ratio above which an m.g.f. estimate is declared unstable.
pub const MGF_STABILITY_LIMIT: f64 = 1.1;

/// `mean(exp(theta * tau))` and the 99%-vs-100% truncation diagnostic.
pub fn mgf_estimate(durations: &[f64], theta: f64) -> Result<MgfEstimate> {
    ensure_finite(theta, "theta")?;
    if durations.is_empty() {
        return Err(Error::Empty("durations".into()));
    }
    if theta == 0.0 {
        return Ok(MgfEstimate {
            theta,
            value: 1.0,
            se: 0.0,
            truncated_99: 1.0,
            tail_ratio: 1.0,
            stable: true,
        });
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cap = sorted_quantile(&sorted, 0.99);
    let vals: Vec<f64> = durations.iter().map(|t| (theta * t).exp()).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Ok(MgfEstimate {
            theta,
            value: f64::INFINITY,
            se: f64::INFINITY,
            truncated_99: f64::INFINITY,
            tail_ratio: f64::INFINITY,
            stable: false,
        });
    }
    let full = mean_se(&vals)?;
    let capped: Vec<f64> = durations.iter().map(|t| (theta * t.min(cap)).exp()).collect();
    let trunc = mean_se(&capped)?.mean;
    let tail_ratio = full.mean / trunc;
    Ok(MgfEstimate {
        theta,
        value: full.mean,
        se: full.se,
        truncated_99: trunc,
        tail_ratio,
        // for theta < 0 the ratio is below 1 and the estimate is always stable
        stable: tail_ratio.is_finite() && (tail_ratio - 1.0).abs() <= MGF_STABILITY_LIMIT - 1.0,
    })
}

/// When to stop a cycle simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Simulate exactly up to this time.
    Horizon(f64),
    /// Stop once the first detector has completed this many cycles.
    Cycles(usize),
}

/// Simulates one replica from `X(0) = 0` and runs every detector on the same
/// path. The path itself is never stored.
pub fn simulate_cycles<D: Drift>(
    drift: &D,
    noise_amp: f64,
    dt: f64,
    configs: &[DetectorConfig],
    stop: StopRule,
    stream: StreamId,
) -> Result<Vec<CycleScan>> {
    ensure(!configs.is_empty(), || "no detector configured".into())?;
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
    ensure(noise_amp > 0.0 && noise_amp.is_finite(), || {
        format!("noise amplitude must be positive, got {noise_amp}")
    })?;
    let max_steps = match stop {
        StopRule::Horizon(h) => {
            ensure(h > 0.0 && h.is_finite(), || format!("horizon must be positive, got {h}"))?;
            ((h / dt) - 1e-9).ceil().max(1.0) as u64
        }
        StopRule::Cycles(n) => {
            ensure(n > 0, || "cycle target must be positive".into())?;
            u64::MAX
        }
    };
    let mut dets = configs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let aux = c.bridge_amp.map(|_| {
                AuxUniforms::new(derive_seed(stream.seed, k as u64), stream.replica)
            });
            CycleDetector::new(*c, 0.0, aux)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Vec<CycleRecord>> = vec![Vec::new(); configs.len()];
    let mut stepper = EulerStepper::new(drift, noise_amp, dt, stream);
    let mut x = 0.0;
    let mut step: u64 = 0;
    while step < max_steps {
        let t0 = step as f64 * dt;
        let t1 = (step + 1) as f64 * dt;
        let x1 = stepper.step(x);
        if !x1.is_finite() {
            return Err(Error::NonFinite(format!("state diverged at t = {t1}")));
        }
        for (det, recs) in dets.iter_mut().zip(out.iter_mut()) {
            if let Some(r) = det.push(t0, x, t1, x1) {
                recs.push(r);
            }
        }
        x = x1;
        step += 1;
        if let StopRule::Cycles(n) = stop {
            if out[0].len() >= n {
                break;
            }
        }
    }
    Ok(dets
        .into_iter()
        .zip(out)
        .map(|(d, cycles)| CycleScan {
            cycles,
            leading_truncated: false,
            trailing_start: d.open_start(),
            trailing_area: d.open_area(),
        })
        .collect())
}

/// Runs [`simulate_cycles`] on `replicas` independent streams in parallel and
/// concatenates complete cycles in replica order (deterministic regardless of
/// thread count). Each replica restarts from 0, so the pooled cycles are
/// i.i.d.
pub fn simulate_cycles_pooled<D: Drift>(
    drift: &D,
    noise_amp: f64,
    dt: f64,
    configs: &[DetectorConfig],
    stop: StopRule,
    seed: u64,
    replicas: usize,
) -> Result<Vec<Vec<CycleRecord>>> {
    ensure(replicas > 0, || "need at least one replica".into())?;
    let scans: Vec<Vec<CycleScan>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_cycles(drift, noise_amp, dt, configs, stop, StreamId::new(seed, r)))
        .collect::<Result<_>>()?;
    let mut pooled = vec![Vec::new(); configs.len()];
    for scan in scans {
        for (k, s) in scan.into_iter().enumerate() {
            pooled[k].extend(s.cycles);
        }
    }
    Ok(pooled)
}

/// Writes `start,end,duration,area,peak` rows with a header.
pub fn write_cycles_csv<W: Write>(records: &[CycleRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["start", "end", "duration", "area", "peak"])?;
    for r in records {
        w.write_record([
            r.start.to_string(),
            r.end.to_string(),
            r.duration.to_string(),
            r.area.to_string(),
            r.peak.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
