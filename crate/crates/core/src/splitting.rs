//! Fixed-effort multilevel splitting for monotone-score rare events.
//!
//! A model evolves a particle until its score reaches a level or the particle
//! dies. With levels `L_1 < ... < L_K` the probability of ever reaching `L_K`
//! factors as `prod_k P(reach L_k | reached L_{k-1})`; each factor is
//! estimated from a fixed number of particles restarted from states resampled
//! among the previous level's survivors. Levels come from a pilot run, placed
//! at a quantile of the scores reached from the current level (success about
//! `1 - quantile` per stage), merged with the caller's target levels.
//!
//! Independent batches give the standard errors; every particle draws its
//! noise from a stream addressed by (batch, stage, particle), so results do
//! not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::rng::{derive_seed, AuxUniforms};
use crate::sde::StreamId;
use crate::stats::{mean_se, sorted_quantile};

/// Result of advancing one particle.
#[derive(Debug, Clone, PartialEq)]
pub enum Advance<S> {
    /// The score reached the level; the state at that moment.
    Reached(S),
    /// The particle died; the largest score it attained.
    Died { score: f64 },
}

/// A particle system with a score that only counts upward crossings.
pub trait SplittingModel: Sync {
    type State: Clone + Send + Sync;

    fn initial(&self) -> Self::State;

    /// Current score of a state.
    fn score(&self, state: &Self::State) -> f64;

    /// Evolves `state` with fresh randomness from `stream` until its score
    /// reaches `level` or it dies. `level = inf` runs it to death.
    fn advance(&self, state: Self::State, level: f64, stream: StreamId) -> Advance<Self::State>;
}

/// Splitting knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplittingConfig {
    /// Particles per stage in each batch.
    pub particles: usize,
    /// Independent batches (standard errors come from their spread).
    pub batches: usize,
    /// Particles per stage in the level-placement pilot.
    pub pilot_particles: usize,
    /// Pilot quantile used to place the next level.
    pub quantile: f64,
    pub max_levels: usize,
    pub seed: u64,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        Self {
            particles: 2000,
            batches: 8,
            pilot_particles: 1000,
            quantile: 0.8,
            max_levels: 60,
            seed: 0x5917,
        }
    }
}

impl SplittingConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.particles >= 10, || {
            format!("need at least 10 particles per stage, got {}", self.particles)
        })?;
        ensure(self.batches >= 2, || {
            format!("need at least two batches for error bars, got {}", self.batches)
        })?;
        ensure(self.pilot_particles >= 10, || "pilot needs at least 10 particles".into())?;
        ensure(self.quantile > 0.0 && self.quantile < 1.0, || {
            format!("level quantile must lie in (0, 1), got {}", self.quantile)
        })?;
        ensure(self.max_levels >= 1, || "need at least one level".into())?;
        Ok(())
    }
}

/// Estimate of `P(score ever reaches level)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub level: f64,
    pub prob: f64,
    pub se: f64,
    pub log_prob: f64,
    /// Delta-method standard error of `log_prob`.
    pub se_log: f64,
    /// Batches with a nonzero estimate.
    pub nonzero_batches: usize,
    /// No batch reached the level.
    pub degenerate: bool,
}

/// Output of [`estimate_tail`].
#[derive(Debug, Clone)]
pub struct TailEstimate<S> {
    /// Estimates at the requested targets, in increasing order.
    pub targets: Vec<LevelEstimate>,
    /// All levels used (pilot levels merged with the targets).
    pub levels: Vec<f64>,
    /// Survivor states at the highest target, pooled over batches.
    pub final_states: Vec<S>,
}

fn advance_all<M: SplittingModel>(
    model: &M,
    states: &[M::State],
    level: f64,
    seed: u64,
) -> Vec<Advance<M::State>> {
    states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if model.score(s) >= level {
                Advance::Reached(s.clone())
            } else {
                model.advance(s.clone(), level, StreamId::new(seed, i as u64))
            }
        })
        .collect()
}

fn resample<S: Clone>(pool: &[S], n: usize, seed: u64) -> Vec<S> {
    let mut aux = AuxUniforms::new(seed, 0);
    (0..n).map(|_| pool[aux.index(pool.len())].clone()).collect()
}

/// Places levels up to `top` with a pilot run. The returned levels are
/// strictly increasing; the list stops early if the pilot cannot make
/// progress (every particle dies below the next candidate level).
pub fn place_levels<M: SplittingModel>(model: &M, top: f64, cfg: &SplittingConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let seed = derive_seed(cfg.seed, 0x9170);
    let mut states = vec![model.initial(); cfg.pilot_particles];
    let mut current = f64::NEG_INFINITY;
    let mut levels = Vec::new();
    for stage in 0..cfg.max_levels as u64 {
        let runs = advance_all(model, &states, f64::INFINITY, derive_seed(seed, 2 * stage));
        let mut scores: Vec<f64> = runs
            .iter()
            .map(|r| match r {
                Advance::Died { score } => *score,
                Advance::Reached(s) => model.score(s),
            })
            .collect();
        scores.sort_by(f64::total_cmp);
        let mut next = sorted_quantile(&scores, cfg.quantile);
        if next <= current {
            // quantile stuck on an atom; take the next score above the level
            match scores.iter().find(|&&v| v > current) {
                Some(&v) => next = v,
                None => break,
            }
        }
        if next >= top {
            levels.push(top);
            break;
        }
        levels.push(next);
        current = next;
        let runs = advance_all(model, &states, next, derive_seed(seed, 2 * stage + 1));
        let survivors: Vec<M::State> = runs
            .into_iter()
            .filter_map(|r| match r {
                Advance::Reached(s) => Some(s),
                Advance::Died { .. } => None,
            })
            .collect();
        if survivors.is_empty() {
            break;
        }
        states = resample(&survivors, cfg.pilot_particles, derive_seed(seed, 0x5E00 + stage));
    }
    Ok(levels)
}

/// Runs fixed-effort splitting through `levels` (strictly increasing) and
/// returns per-level estimates plus the survivors at the last level.
pub fn run_levels<M: SplittingModel>(
    model: &M,
    levels: &[f64],
    cfg: &SplittingConfig,
) -> Result<(Vec<LevelEstimate>, Vec<M::State>)> {
    cfg.validate()?;
    ensure(!levels.is_empty(), || "no splitting levels".into())?;
    ensure(levels.windows(2).all(|w| w[0] < w[1]), || {
        "splitting levels must be strictly increasing".into()
    })?;
    let k = levels.len();
    let mut per_batch: Vec<Vec<f64>> = Vec::with_capacity(cfg.batches);
    let mut finals = Vec::new();
    for b in 0..cfg.batches as u64 {
        let bseed = derive_seed(cfg.seed, 0xB000 + b);
        let mut states = vec![model.initial(); cfg.particles];
        let mut prob = 1.0;
        let mut probs = vec![0.0; k];
        for (stage, &level) in levels.iter().enumerate() {
            let runs = advance_all(model, &states, level, derive_seed(bseed, stage as u64));
            let survivors: Vec<M::State> = runs
                .into_iter()
                .filter_map(|r| match r {
                    Advance::Reached(s) => Some(s),
                    Advance::Died { .. } => None,
                })
                .collect();
            prob *= survivors.len() as f64 / cfg.particles as f64;
            probs[stage] = prob;
            if survivors.is_empty() {
                break;
            }
            if stage + 1 == k {
                finals.extend(survivors);
                break;
            }
            states = resample(
                &survivors,
                cfg.particles,
                derive_seed(bseed, 0x5E00 + stage as u64),
            );
        }
        per_batch.push(probs);
    }
    let estimates = (0..k)
        .map(|i| {
            let xs: Vec<f64> = per_batch.iter().map(|p| p[i]).collect();
            let m = mean_se(&xs)?;
            let nonzero = xs.iter().filter(|&&v| v > 0.0).count();
            Ok(LevelEstimate {
                level: levels[i],
                prob: m.mean,
                se: m.se,
                log_prob: m.mean.ln(),
                se_log: if m.mean > 0.0 { m.se / m.mean } else { f64::INFINITY },
                nonzero_batches: nonzero,
                degenerate: nonzero == 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((estimates, finals))
}

/// Estimates `P(score reaches u)` for every `u` in `targets`.
pub fn estimate_tail<M: SplittingModel>(
    model: &M,
    targets: &[f64],
    cfg: &SplittingConfig,
) -> Result<TailEstimate<M::State>> {
    ensure(!targets.is_empty(), || "no target levels".into())?;
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let top = *sorted.last().expect("non-empty");
    let mut levels = place_levels(model, top, cfg)?;
    levels.extend_from_slice(&sorted);
    levels.sort_by(f64::total_cmp);
    // drop near-duplicates, always keeping the targets themselves
    let mut merged: Vec<f64> = Vec::with_capacity(levels.len());
    for l in levels {
        if let Some(&last) = merged.last() {
            let tight = (l - last).abs() <= 1e-9 * l.abs().max(1.0);
            if tight {
                continue;
            }
        }
        merged.push(l);
    }
    let (all, finals) = run_levels(model, &merged, cfg)?;
    let targets = sorted
        .iter()
        .map(|&u| {
            *all.iter()
                .find(|e| (e.level - u).abs() <= 1e-9 * u.abs().max(1.0))
                .expect("targets are among the levels")
        })
        .collect();
    Ok(TailEstimate {
        targets,
        levels: merged,
        final_states: finals,
    })
}

/// Crude Monte Carlo: runs `replicas` particles to death and returns the
/// final scores in replica order.
pub fn crude_scores<M: SplittingModel>(model: &M, replicas: usize, seed: u64) -> Vec<f64> {
    let init = vec![model.initial(); replicas];
    advance_all(model, &init, f64::INFINITY, seed)
        .into_iter()
        .map(|r| match r {
            Advance::Died { score } => score,
            Advance::Reached(s) => model.score(&s),
        })
        .collect()
}
