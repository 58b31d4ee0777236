//! Operations behind the subcommands.
//!
//! Each operation has a knob type with defaults. Resolving a manifest fills
//! in the defaults (the resolved knobs are what gets hashed); executing it
//! produces the CSV table, the JSON result, a headline number and a figure.

use std::path::{Path, PathBuf};

use langevin_ldp::cycles::{
    regenerative_moment_ratio, simulate_cycles_pooled, write_cycles_csv, DetectorConfig,
    StopRule,
};
use langevin_ldp::drift::DriftFamily;
use langevin_ldp::experiments::{
    cramer_rate, expected_additive_slope, expected_cycle_slope, n_delta_concentration,
    renewal_bias, renewal_rate, tail_curve_additive, tail_curve_cycle, weibull_sum_check,
    AdditiveTailConfig, TailCurve,
};
use langevin_ldp::fpt::{lamperti, verify_density_bound, BoundaryTask, VerifyConfig};
use langevin_ldp::rng::derive_seed;
use langevin_ldp::sde::{area_functional, simulate_scaled, StreamId};
use langevin_ldp::splitting::SplittingConfig;
use langevin_ldp::stationary::moment_p_closed_form;
use langevin_ldp::stats::mean_se;
use langevin_ldp::variational::{extrapolate_t, RateFunctionalSpec, VariationalInstance};
use langevin_ldp::{density, moment_p, simulate_path, DriftSpec, ModelParams, StationaryLaw};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::manifest::{Manifest, Operation};
use crate::svg::{thin, Figure, Series};
use crate::Failure;

/// What an operation produced.
pub struct Outcome {
    pub csv: Vec<u8>,
    pub result: Value,
    /// `(name, value)` of the number `report` aggregates.
    pub headline: (String, f64),
    pub figure: Option<Figure>,
    /// False when the numerics did not converge; artifacts are still
    /// written and the exit status is 3.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateKnobs {
    pub drift: DriftFamily,
    pub eps: f64,
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Replica index of the noise stream.
    pub replica: u64,
    /// When set, simulate the small-noise process at this scale instead.
    pub scale_t: Option<f64>,
}

impl Default for SimulateKnobs {
    fn default() -> Self {
        Self {
            drift: DriftFamily::ExactD,
            eps: 0.0,
            x0: 0.0,
            horizon: 10.0,
            dt: 1e-3,
            replica: 0,
            scale_t: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclesKnobs {
    pub dt: f64,
    /// Time simulated per replica.
    pub horizon: f64,
    pub replicas: usize,
    /// Bridge-correct returns to zero between grid points.
    pub bridge: bool,
}

impl Default for CyclesKnobs {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 1000.0,
            replicas: 4,
            bridge: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryKnobs {
    /// Moments to tabulate; the manifest's `p` when empty.
    pub p_grid: Vec<f64>,
}

/// `{x0, T, m, p, kappa, sigma, drift, eps, N}`; `p`, `kappa` and `sigma`
/// default to the manifest's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalKnobs {
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub m: f64,
    pub p: Option<f64>,
    pub kappa: Option<f64>,
    pub sigma: Option<f64>,
    pub drift: DriftFamily,
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for VariationalKnobs {
    fn default() -> Self {
        Self {
            x0: 0.0,
            horizon: 4.0,
            m: 1.0,
            p: None,
            kappa: None,
            sigma: None,
            drift: DriftFamily::ExactD,
            eps: 0.0,
            n: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FptKnobs {
    pub drift: DriftFamily,
    pub eps: f64,
    /// Explicit boundary problem. Without it the auxiliary drifts use their
    /// standard problems (rise from 0 to delta, return from delta to 0).
    pub task: Option<BoundaryTask>,
    pub horizon: f64,
    pub replicas: usize,
    pub bins: usize,
    pub dt: f64,
}

impl Default for FptKnobs {
    fn default() -> Self {
        let v = VerifyConfig::default();
        Self {
            drift: DriftFamily::AuxLowerLEps,
            eps: 0.25,
            task: None,
            horizon: 5.0,
            replicas: v.replicas,
            bins: v.bins,
            dt: v.dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    /// `P(C_1^delta >= u)` over thresholds `u`.
    Cycle,
    /// `P(A(t) >= b)` over horizons `t`.
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailsKnobs {
    pub kind: TailKind,
    pub grid: Vec<f64>,
    /// Additive threshold, absolute...
    pub b: Option<f64>,
    /// ...or as a multiple of `E|X(inf)|^p`.
    pub b_factor: Option<f64>,
    pub dt: Option<f64>,
    /// Crude Monte Carlo replicas per horizon (additive only).
    pub replicas: usize,
    pub min_hits: usize,
    pub splitting: SplittingConfig,
    /// Also solve for `V*` and report the slope it predicts.
    pub compare_v_star: bool,
}

impl Default for TailsKnobs {
    fn default() -> Self {
        Self {
            kind: TailKind::Cycle,
            grid: Vec::new(),
            b: None,
            b_factor: None,
            dt: None,
            replicas: 4000,
            min_hits: 100,
            splitting: SplittingConfig::default(),
            compare_v_star: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeibullKnobs {
    pub shape: f64,
    pub n_grid: Vec<usize>,
    pub x: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub cmc_replicas: usize,
    pub splitting: SplittingConfig,
}

impl Default for WeibullKnobs {
    fn default() -> Self {
        Self {
            shape: 0.5,
            n_grid: vec![25, 100, 400],
            x: 4.0,
            b: 1.0,
            cmc_replicas: 1_000_000,
            splitting: SplittingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenewalKnobs {
    pub dt: f64,
    /// Time simulated per replica for the pool of cycle durations.
    pub pool_horizon: f64,
    pub pool_replicas: usize,
    pub t: f64,
    /// Deviation, absolute...
    pub x: Option<f64>,
    /// ...or as a multiple of `1 / E(tau)`.
    pub x_factor: f64,
    pub replicas: usize,
}

impl Default for RenewalKnobs {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            pool_horizon: 5000.0,
            pool_replicas: 8,
            t: 200.0,
            x: None,
            x_factor: 0.2,
            replicas: 100_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportKnobs {
    /// Output directories of earlier runs, relative to the manifest.
    pub runs: Vec<PathBuf>,
}

/// A manifest with its knobs parsed and defaults filled in.
pub enum Plan {
    Simulate(SimulateKnobs),
    Cycles(CyclesKnobs),
    Stationary(StationaryKnobs),
    Variational(VariationalInstance),
    Fpt(FptKnobs),
    Tails(TailsKnobs),
    Weibull(WeibullKnobs),
    Renewal(RenewalKnobs),
    Report(ReportKnobs),
}

impl Plan {
    pub fn resolve(m: &Manifest) -> Result<Plan, Failure> {
        if m.operation != Operation::Report && m.operation != Operation::Weibull {
            m.params.validate()?;
        }
        Ok(match m.operation {
            Operation::Simulate => Plan::Simulate(m.knobs()?),
            Operation::Cycles => Plan::Cycles(m.knobs()?),
            Operation::Stationary => Plan::Stationary(m.knobs()?),
            Operation::Variational => {
                let k: VariationalKnobs = m.knobs()?;
                Plan::Variational(VariationalInstance {
                    x0: k.x0,
                    horizon: k.horizon,
                    m: k.m,
                    p: k.p.unwrap_or(m.params.p),
                    kappa: k.kappa.unwrap_or(m.params.kappa),
                    sigma: k.sigma.unwrap_or(m.params.sigma),
                    drift: k.drift,
                    eps: k.eps,
                    n: k.n,
                })
            }
            Operation::Fpt => Plan::Fpt(m.knobs()?),
            Operation::Tails => {
                m.params.validate_asymptotic()?;
                let mut k: TailsKnobs = m.knobs()?;
                // random streams come from the manifest seed
                k.splitting.seed = 0;
                if k.kind == TailKind::Additive && k.b.is_some() == k.b_factor.is_some() {
                    return Err(Failure::invalid("additive tails need exactly one of b and b_factor"));
                }
                Plan::Tails(k)
            }
            Operation::Weibull => {
                let mut k: WeibullKnobs = m.knobs()?;
                k.splitting.seed = 0;
                Plan::Weibull(k)
            }
            Operation::Renewal => Plan::Renewal(m.knobs()?),
            Operation::Report => Plan::Report(m.knobs()?),
        })
    }

    pub fn knobs_value(&self) -> Value {
        let v = match self {
            Plan::Simulate(k) => serde_json::to_value(k),
            Plan::Cycles(k) => serde_json::to_value(k),
            Plan::Stationary(k) => serde_json::to_value(k),
            Plan::Variational(k) => serde_json::to_value(k),
            Plan::Fpt(k) => serde_json::to_value(k),
            Plan::Tails(k) => serde_json::to_value(k),
            Plan::Weibull(k) => serde_json::to_value(k),
            Plan::Renewal(k) => serde_json::to_value(k),
            Plan::Report(k) => serde_json::to_value(k),
        };
        v.expect("knobs serialize")
    }

    pub fn execute(&self, m: &Manifest, base: &Path) -> Result<Outcome, Failure> {
        match self {
            Plan::Simulate(k) => simulate(m, k),
            Plan::Cycles(k) => cycles(m, k),
            Plan::Stationary(k) => stationary(m, k),
            Plan::Variational(k) => variational(k),
            Plan::Fpt(k) => fpt(m, k),
            Plan::Tails(k) => tails(m, k),
            Plan::Weibull(k) => weibull(m, k),
            Plan::Renewal(k) => renewal(m, k),
            Plan::Report(k) => crate::report::report(k, base),
        }
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

fn drift_spec(family: DriftFamily, kappa: f64, eps: f64) -> DriftSpec {
    DriftSpec { family, eps, kappa }
}

fn simulate(m: &Manifest, k: &SimulateKnobs) -> Result<Outcome, Failure> {
    let spec = drift_spec(k.drift, m.params.kappa, k.eps);
    let stream = StreamId::new(m.seed, k.replica);
    let path = match k.scale_t {
        Some(t) => simulate_scaled(&m.params, t, &spec, k.x0, k.horizon, k.dt, stream)?,
        None => simulate_path(&m.params, &spec, k.x0, k.horizon, k.dt, stream)?,
    };
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    let area = area_functional(&path, m.params.p, None)?;
    let avg = area / k.horizon;
    let points: Vec<(f64, f64)> = path.times.iter().copied().zip(path.values.iter().copied()).collect();
    Ok(Outcome {
        csv,
        result: json!({
            "steps": path.len() - 1,
            "final_value": path.final_value(),
            "area": area,
            "time_average": avg,
        }),
        headline: ("time_average".into(), avg),
        figure: Some(Figure {
            title: "Sample path".into(),
            x_label: "time".into(),
            y_label: "X".into(),
            series: vec![Series::line("X(t)", thin(points, 2000))],
            ..Default::default()
        }),
        converged: true,
    })
}

fn cycles(m: &Manifest, k: &CyclesKnobs) -> Result<Outcome, Failure> {
    let p = &m.params;
    let mut det = DetectorConfig::new(p.delta, p.p);
    if k.bridge {
        det = det.with_bridge(p.sigma);
    }
    let recs = simulate_cycles_pooled(
        &DriftSpec::exact(p.kappa),
        p.sigma,
        k.dt,
        &[det],
        StopRule::Horizon(k.horizon),
        m.seed,
        k.replicas,
    )?
    .remove(0);
    let mut csv = Vec::new();
    write_cycles_csv(&recs, &mut csv)?;
    let ratio = regenerative_moment_ratio(&recs)?;
    let target = moment_p(&StationaryLaw::new(p.kappa, p.sigma)?, p.p)?;
    let durations: Vec<f64> = recs.iter().map(|r| r.duration).collect();
    let areas: Vec<f64> = recs.iter().map(|r| r.area).collect();
    let points: Vec<(f64, f64)> = durations.iter().copied().zip(areas.iter().copied()).take(5000).collect();
    Ok(Outcome {
        csv,
        result: json!({
            "cycles": recs.len(),
            "mean_duration": mean_se(&durations)?,
            "mean_area": mean_se(&areas)?,
            "moment_ratio": ratio,
            "stationary_moment": target,
        }),
        headline: ("moment_ratio".into(), ratio.ratio),
        figure: Some(Figure {
            title: "Regeneration cycles".into(),
            x_label: "duration".into(),
            y_label: "area".into(),
            series: vec![Series::scatter("cycles", points)],
            ..Default::default()
        }),
        converged: true,
    })
}

fn stationary(m: &Manifest, k: &StationaryKnobs) -> Result<Outcome, Failure> {
    let p = &m.params;
    let law = StationaryLaw::new(p.kappa, p.sigma)?;
    let grid = if k.p_grid.is_empty() { vec![p.p] } else { k.p_grid.clone() };
    let mut rows = Vec::new();
    for &q in &grid {
        rows.push(vec![
            q.to_string(),
            moment_p(&law, q)?.to_string(),
            moment_p_closed_form(&law, q)?.to_string(),
        ]);
    }
    let moment = moment_p(&law, p.p)?;
    let cut = law.tail_cutoff(0.0).min(10.0);
    let curve: Vec<(f64, f64)> = (0..=400)
        .map(|i| {
            let x = -cut + 2.0 * cut * i as f64 / 400.0;
            (x, density(&law, x))
        })
        .collect();
    Ok(Outcome {
        csv: csv_table(&["p", "moment", "closed_form"], rows)?,
        result: json!({
            "kappa": p.kappa,
            "sigma": p.sigma,
            "p": p.p,
            "moment": moment,
            "closed_form": moment_p_closed_form(&law, p.p)?,
            "log_normalizer": law.log_normalizer,
        }),
        headline: ("moment".into(), moment),
        figure: Some(Figure {
            title: "Stationary density".into(),
            x_label: "x".into(),
            y_label: "density".into(),
            series: vec![Series::line("pi(x)", curve)],
            ..Default::default()
        }),
        converged: true,
    })
}

fn variational(inst: &VariationalInstance) -> Result<Outcome, Failure> {
    let r = inst.solve()?;
    let mut csv = Vec::new();
    r.path.write_csv(&mut csv)?;
    let points: Vec<(f64, f64)> = r.path.grid().into_iter().zip(r.path.values.iter().copied()).collect();
    Ok(Outcome {
        csv,
        result: json!({
            "instance": inst,
            "value": r.value,
            "area_residual": r.area_residual,
            "multiplier": r.multiplier,
            "iterations": r.iterations,
            "converged": r.converged,
        }),
        headline: ("value".into(), r.value),
        figure: Some(Figure {
            title: "Optimal path".into(),
            x_label: "s".into(),
            y_label: "xi(s)".into(),
            series: vec![Series::line("xi", points)],
            ..Default::default()
        }),
        converged: r.converged,
    })
}

fn fpt(m: &Manifest, k: &FptKnobs) -> Result<Outcome, Failure> {
    let p = &m.params;
    let task = match (k.task, k.drift) {
        (Some(t), _) => t,
        (None, DriftFamily::AuxLowerLEps) => BoundaryTask::lower_aux_rise(p.delta, p.sigma, k.horizon),
        (None, DriftFamily::AuxUpperUEps) => BoundaryTask::upper_aux_return(p.delta, p.sigma, k.horizon),
        (None, other) => {
            return Err(Failure::invalid(format!("drift {other:?} needs an explicit task")));
        }
    };
    let ud = lamperti(drift_spec(k.drift, p.kappa, k.eps), p.sigma)?;
    let cfg = VerifyConfig {
        replicas: k.replicas,
        bins: k.bins,
        dt: k.dt,
        seed: m.seed,
    };
    let r = verify_density_bound(&ud, &task, &cfg)?;
    let rows = (0..r.bins.len()).map(|i| {
        vec![
            r.bins[i].to_string(),
            r.empirical[i].to_string(),
            r.se[i].to_string(),
            r.bound[i].to_string(),
        ]
    });
    let csv = csv_table(&["bin", "empirical", "se", "bound"], rows)?;
    let emp: Vec<(f64, f64)> = r.bins.iter().copied().zip(r.empirical.iter().copied()).collect();
    let bnd: Vec<(f64, f64)> = r.bins.iter().copied().zip(r.bound.iter().copied()).collect();
    let mut result = serde_json::to_value(&r).map_err(io)?;
    result["task"] = serde_json::to_value(task).map_err(io)?;
    Ok(Outcome {
        csv,
        headline: ("violations".into(), r.violations.len() as f64),
        result,
        figure: Some(Figure {
            title: "First-passage density against its bound".into(),
            x_label: "t".into(),
            y_label: "density".into(),
            series: vec![Series::scatter("empirical", emp), Series::line("bound", bnd)],
            ..Default::default()
        }),
        converged: !r.inconclusive,
    })
}

fn v_star(p: &ModelParams) -> Result<f64, Failure> {
    let spec = RateFunctionalSpec::new(DriftSpec::exact(p.kappa), p.sigma, 0.0, 2.0);
    let sweep = extrapolate_t(&spec, p.p, 1.0, &[2.0, 4.0, 8.0], 1.0 / 64.0)?;
    Ok(sweep.limit_estimate)
}

fn tails(m: &Manifest, k: &TailsKnobs) -> Result<Outcome, Failure> {
    let p = &m.params;
    let splitting = SplittingConfig {
        seed: derive_seed(m.seed, 0x7A),
        ..k.splitting
    };
    let moment = moment_p(&StationaryLaw::new(p.kappa, p.sigma)?, p.p)?;
    let (curve, b) = match k.kind {
        TailKind::Cycle => (tail_curve_cycle(p, &k.grid, &splitting, k.dt.unwrap_or(1e-3))?, None),
        TailKind::Additive => {
            let b = k.b.unwrap_or_else(|| k.b_factor.unwrap_or(0.0) * moment);
            let cfg = AdditiveTailConfig {
                replicas: k.replicas,
                min_hits: k.min_hits,
                splitting,
                dt: k.dt.unwrap_or(1e-2),
                seed: m.seed,
            };
            (tail_curve_additive(p, &k.grid, b, &cfg)?, Some(b))
        }
    };
    let mut result = tail_json(&curve)?;
    result["moment"] = json!(moment);
    if let Some(b) = b {
        result["b"] = json!(b);
    }
    if k.compare_v_star {
        let v = v_star(p)?;
        let expected = match b {
            None => expected_cycle_slope(v),
            Some(b) => expected_additive_slope(p, b, moment, v)?,
        };
        result["v_star"] = json!(v);
        result["expected_slope"] = json!(expected);
        result["slope_ratio"] = json!(curve.fit.slope / expected);
    }
    let rows = (0..curve.levels.len()).map(|i| {
        vec![
            curve.levels[i].to_string(),
            curve.levels[i].powf(curve.speed_r).to_string(),
            curve.prob[i].to_string(),
            curve.log_prob[i].to_string(),
            curve.se_log[i].to_string(),
            curve.degenerate[i].to_string(),
        ]
    });
    let csv = csv_table(&["level", "level_r", "prob", "log_prob", "se_log", "degenerate"], rows)?;
    Ok(Outcome {
        csv,
        headline: ("slope".into(), curve.fit.slope),
        figure: Some(tail_figure(&curve, k.kind)),
        result,
        converged: true,
    })
}

fn tail_json(c: &TailCurve) -> Result<Value, Failure> {
    let (r1, _) = c.refit(1.0)?;
    let (rh, _) = c.refit(c.speed_r / 2.0)?;
    Ok(json!({
        "curve": c,
        "refit_r1": r1,
        "refit_half_r": rh,
    }))
}

fn tail_figure(c: &TailCurve, kind: TailKind) -> Figure {
    let pts: Vec<(f64, f64)> = (0..c.levels.len())
        .filter(|&i| !c.degenerate[i])
        .map(|i| (c.levels[i].powf(c.speed_r), c.log_prob[i]))
        .collect();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let line = vec![
        (lo, c.fit.intercept + c.fit.slope * lo),
        (hi, c.fit.intercept + c.fit.slope * hi),
    ];
    let (what, var) = match kind {
        TailKind::Cycle => ("cycle area", "u"),
        TailKind::Additive => ("time average", "t"),
    };
    Figure {
        title: format!("Tail of the {what}"),
        x_label: format!("{var}^{:.4}", c.speed_r),
        y_label: "log P".into(),
        series: vec![
            Series::scatter("estimate", pts),
            Series::line(&format!("fit, slope {:.4}, R2 {:.4}", c.fit.slope, c.fit.r2), line),
        ],
        ..Default::default()
    }
}

fn weibull(m: &Manifest, k: &WeibullKnobs) -> Result<Outcome, Failure> {
    let splitting = SplittingConfig {
        seed: derive_seed(m.seed, 0x3B),
        ..k.splitting
    };
    let rep = weibull_sum_check(k.shape, &k.n_grid, k.x, k.b, &splitting, k.cmc_replicas)?;
    let rows = rep.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.log_prob.to_string(),
            r.se_log.to_string(),
            r.log_prob_split.to_string(),
            r.se_log_split.to_string(),
            r.normalized.to_string(),
            r.limit.to_string(),
            r.rel_err.to_string(),
            r.median_max_share.to_string(),
            r.split_max_share.to_string(),
        ]
    });
    let csv = csv_table(
        &[
            "n",
            "log_prob",
            "se_log",
            "log_prob_split",
            "se_log_split",
            "normalized",
            "limit",
            "rel_err",
            "median_max_share",
            "split_max_share",
        ],
        rows,
    )?;
    let last = rep.rows.last().map(|r| r.normalized).unwrap_or(f64::NAN);
    let pts: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.n as f64, r.normalized)).collect();
    let limit = rep.rows.first().map(|r| r.limit).unwrap_or(f64::NAN);
    let span: Vec<(f64, f64)> = pts.iter().map(|(n, _)| (*n, limit)).collect();
    Ok(Outcome {
        csv,
        headline: ("normalized".into(), last),
        result: serde_json::to_value(&rep).map_err(io)?,
        figure: Some(Figure {
            title: "Weibull sums: normalized log-probability".into(),
            x_label: "n".into(),
            y_label: "log P / n^r".into(),
            series: vec![Series::scatter("estimate", pts), Series::line("limit", span)],
            ..Default::default()
        }),
        converged: true,
    })
}

fn renewal(m: &Manifest, k: &RenewalKnobs) -> Result<Outcome, Failure> {
    let p = &m.params;
    let det = DetectorConfig::new(p.delta, p.p).with_bridge(p.sigma);
    let pool: Vec<f64> = simulate_cycles_pooled(
        &DriftSpec::exact(p.kappa),
        p.sigma,
        k.dt,
        &[det],
        StopRule::Horizon(k.pool_horizon),
        m.seed,
        k.pool_replicas,
    )?
    .remove(0)
    .iter()
    .map(|r| r.duration)
    .collect();
    if pool.len() < 100 {
        return Err(Failure::invalid(format!("only {} cycles in the pool", pool.len())));
    }
    let mean = pool.iter().sum::<f64>() / pool.len() as f64;
    let x = k.x.unwrap_or(k.x_factor / mean);
    let rep = n_delta_concentration(&pool, k.t, x, k.replicas, derive_seed(m.seed, 0xC0))?;
    let bias_t = renewal_bias(&pool, k.t, k.replicas, derive_seed(m.seed, 0xB1))?;
    let bias_2t = renewal_bias(&pool, 2.0 * k.t, k.replicas, derive_seed(m.seed, 0xB2))?;
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for i in 0..=40 {
        let z = mean * (0.3 + 1.7 * i as f64 / 40.0);
        let c = cramer_rate(&pool, z)?;
        rows.push(vec![z.to_string(), c.value.to_string(), c.at_edge.to_string()]);
        curve.push((z, c.value));
    }
    Ok(Outcome {
        csv: csv_table(&["z", "rate", "at_edge"], rows)?,
        headline: ("log_rate".into(), rep.log_rate),
        result: json!({
            "pool": pool.len(),
            "report": rep,
            "renewal_rate": renewal_rate(&pool, x)?,
            "bias_t": bias_t,
            "bias_2t": bias_2t,
        }),
        figure: Some(Figure {
            title: "Legendre transform of the cycle-duration log-m.g.f.".into(),
            x_label: "z".into(),
            y_label: "rate".into(),
            series: vec![Series::line("Lambda*(z)", curve)],
            ..Default::default()
        }),
        converged: true,
    })
}
