//! The constrained variational problem behind the rate constant.
//!
//! For a drift `g`, start `x0` and horizon `T`, the Freidlin–Wentzell action is
//!
//! ```text
//! I(xi) = ∫_0^T |xi'(s) - g(xi(s))|^2 / sigma^2 ds,
//! ```
//!
//! and `V(x0, T, g, m) = inf { I(xi) : xi(0) = x0, ∫_0^T |xi|^p >= m }`;
//! `V+` adds the constraint `xi >= 0`. The rate constant is
//! `V*(0, inf, D, 1)`.
//!
//! # Discretization
//!
//! On `N` uniform intervals of width `h = T/N`, with `xi_0 = x0` pinned,
//!
//! ```text
//! I_N(xi)  = sum_i h ((xi_{i+1} - xi_i)/h - g((xi_i + xi_{i+1})/2))^2 / sigma^2
//! A_N(xi)  = sum_i h (|xi_i|^p + |xi_{i+1}|^p) / 2
//! ```
//!
//! # Solver
//!
//! An augmented Lagrangian handles the single inequality `A_N >= m`; each
//! inner problem is solved by a projected L-BFGS preconditioned with the
//! kinetic tridiagonal `2/(h sigma^2) tridiag(-1, 2, -1)`. Starting paths are
//! one-bump tents whose height makes the area constraint tight, plus four
//! randomized tents; the best result wins, ties going to the path of smallest
//! L² norm.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{Drift, DriftFamily, DriftSpec};
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::optim::{minimize, LbfgsOptions, Tridiagonal};
use crate::rng::AuxUniforms;
use crate::sde::abs_pow;

/// Drift, noise level, start point and horizon of one action functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionalSpec {
    pub drift: DriftSpec,
    pub sigma: f64,
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl RateFunctionalSpec {
    pub fn new(drift: DriftSpec, sigma: f64, x0: f64, horizon: f64) -> Self {
        Self {
            drift,
            sigma,
            x0,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.drift.validate()?;
        ensure_finite(self.sigma, "sigma")?;
        ensure_finite(self.x0, "x0")?;
        ensure_finite(self.horizon, "T")?;
        ensure(self.sigma > 0.0, || format!("sigma must be positive, got {}", self.sigma))?;
        ensure(self.horizon > 0.0, || format!("T must be positive, got {}", self.horizon))?;
        Ok(())
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_start(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_drift(mut self, drift: DriftSpec) -> Self {
        self.drift = drift;
        self
    }
}

/// A path on the uniform grid `s_i = i T / N`, `i = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathVector {
    pub horizon: f64,
    pub values: Vec<f64>,
}

impl PathVector {
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.intervals();
        (0..=n)
            .map(|i| if i == n { self.horizon } else { i as f64 * self.step() })
            .collect()
    }

    /// Samples `f` on the grid of `n` intervals over `[0, horizon]`.
    pub fn from_fn(horizon: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = horizon / n as f64;
        Self {
            horizon,
            values: (0..=n).map(|i| f(i as f64 * h)).collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.step()).sqrt()
    }

    /// Writes `time,value` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "value"])?;
        for (t, x) in self.grid().iter().zip(&self.values) {
            w.write_record([t.to_string(), x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Discrete action `I_N` (forward differences, midpoint drift).
pub fn rate_functional(path: &PathVector, spec: &RateFunctionalSpec) -> Result<f64> {
    spec.validate()?;
    ensure(path.values.len() >= 2, || "path needs at least one interval".into())?;
    ensure((path.horizon - spec.horizon).abs() <= 1e-12 * spec.horizon, || {
        format!("path horizon {} differs from T = {}", path.horizon, spec.horizon)
    })?;
    let h = path.step();
    let inv_s2 = 1.0 / (spec.sigma * spec.sigma);
    let mut acc = 0.0;
    for w in path.values.windows(2) {
        let d = (w[1] - w[0]) / h - spec.drift.value(0.5 * (w[0] + w[1]));
        acc += h * d * d;
    }
    Ok(acc * inv_s2)
}

/// Trapezoid approximation `A_N` of `∫ |xi|^p`.
pub fn path_area(path: &PathVector, p: f64) -> f64 {
    let h = path.step();
    path.values
        .windows(2)
        .map(|w| 0.5 * h * (abs_pow(w[0], p) + abs_pow(w[1], p)))
        .sum()
}

/// Optimal value, path and diagnostics of one discretized instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    pub value: f64,
    pub path: PathVector,
    /// `A_N(path) - m`.
    pub area_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Lagrange multiplier of the area constraint.
    pub multiplier: f64,
}

/// Box constraints applied to `xi_1..xi_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathBounds {
    pub lower: f64,
    pub upper: f64,
}

impl PathBounds {
    pub const FREE: PathBounds = PathBounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const NONNEGATIVE: PathBounds = PathBounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Randomized tents tried in addition to the base tent.
    pub extra_starts: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Inner tolerance factor `c`: stop at projected gradient `c (1 + |I|)`.
    pub grad_tol: f64,
    /// Relative feasibility tolerance on the area constraint.
    pub feas_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            extra_starts: 4,
            max_outer: 60,
            max_inner: 4000,
            grad_tol: 1e-8,
            feas_tol: 1e-8,
            seed: 0x5EED,
        }
    }
}

/// Floor on `|xi|` inside derivative evaluations only.
const DERIV_FLOOR: f64 = 1e-12;

fn floored(x: f64) -> f64 {
    if x.abs() >= DERIV_FLOOR {
        x
    } else if x < 0.0 {
        -DERIV_FLOOR
    } else {
        DERIV_FLOOR
    }
}

struct Problem<'a> {
    spec: &'a RateFunctionalSpec,
    p: f64,
    m: f64,
    n: usize,
    h: f64,
}

impl Problem<'_> {
    fn full(&self, z: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        buf.push(self.spec.x0);
        buf.extend_from_slice(z);
    }

    /// Action and its gradient with respect to `xi_1..xi_N`.
    fn action(&self, xi: &[f64], grad: &mut [f64]) -> f64 {
        let h = self.h;
        let inv_s2 = 1.0 / (self.spec.sigma * self.spec.sigma);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut acc = 0.0;
        for i in 0..self.n {
            let (a, b) = (xi[i], xi[i + 1]);
            let mid = 0.5 * (a + b);
            let d = (b - a) / h - self.spec.drift.value(mid);
            acc += h * d * d;
            let gp = self.spec.drift.derivative(floored(mid));
            let c = 2.0 * h * d * inv_s2;
            // d/d xi_{i+1} and d/d xi_i
            grad[i] += c * (1.0 / h - 0.5 * gp);
            if i > 0 {
                grad[i - 1] += c * (-1.0 / h - 0.5 * gp);
            }
        }
        acc * inv_s2
    }

    fn area(&self, xi: &[f64], grad: &mut [f64]) -> f64 {
        let h = self.h;
        let p = self.p;
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += 0.5 * h * (abs_pow(xi[i], p) + abs_pow(xi[i + 1], p));
        }
        for k in 1..=self.n {
            let w = if k == self.n { 0.5 * h } else { h };
            let x = floored(xi[k]);
            grad[k - 1] = w * p * abs_pow(x, p - 1.0) * x.signum();
        }
        acc
    }

    fn preconditioner(&self) -> Tridiagonal {
        let c = 2.0 / (self.h * self.spec.sigma * self.spec.sigma);
        let mut diag = vec![2.0 * c; self.n];
        diag[self.n - 1] = c;
        Tridiagonal {
            diag,
            off: vec![-c; self.n - 1],
        }
    }

    fn path(&self, z: &[f64]) -> PathVector {
        let mut v = Vec::with_capacity(self.n + 1);
        self.full(z, &mut v);
        PathVector {
            horizon: self.spec.horizon,
            values: v,
        }
    }
}

struct Solved {
    z: Vec<f64>,
    value: f64,
    area: f64,
    iterations: usize,
    converged: bool,
    multiplier: f64,
}

fn solve_from(prob: &Problem, mut z: Vec<f64>, bounds: PathBounds, opts: &SolverOptions) -> Solved {
    let n = prob.n;
    let lo = vec![bounds.lower; n];
    let hi = vec![bounds.upper; n];
    let pre = prob.preconditioner();
    let m = prob.m;
    let mut lambda: f64 = 0.0;
    let mut buf = Vec::with_capacity(n + 1);
    // the penalty for dropping the whole area must beat the start's action,
    // or the first inner solve slides to the zero path, where the area
    // gradient vanishes and the solver cannot climb back
    prob.full(&z, &mut buf);
    let start_action = prob.action(&buf, &mut vec![0.0; n]);
    let mm = m.max(1e-8);
    let mut rho = (10.0 / mm).max(20.0 * start_action / (mm * mm));
    let mut ga = vec![0.0; n];
    let mut total_iters = 0;
    let mut prev_viol = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_outer {
        // gradient tolerance relative to the current action
        prob.full(&z, &mut buf);
        let scale = prob.action(&buf, &mut vec![0.0; n]).abs().max(1.0);
        let inner_opts = LbfgsOptions {
            memory: 12,
            max_iter: opts.max_inner,
            grad_tol: opts.grad_tol * (1.0 + scale),
        };
        let z_prev = z.clone();
        let out = minimize(
            |z, g| {
                let mut full = Vec::with_capacity(n + 1);
                prob.full(z, &mut full);
                let f = prob.action(&full, g);
                let mut ga = vec![0.0; n];
                let a = prob.area(&full, &mut ga);
                let t = (m - a + lambda / rho).max(0.0);
                for i in 0..n {
                    g[i] -= rho * t * ga[i];
                }
                f + 0.5 * rho * t * t - lambda * lambda / (2.0 * rho)
            },
            &mut z,
            &lo,
            &hi,
            Some(&pre),
            &inner_opts,
        );
        total_iters += out.iterations;
        prob.full(&z, &mut buf);
        let mut a = prob.area(&buf, &mut ga);
        if m > 0.0 && a < 1e-3 * m {
            z = z_prev;
            rho = (rho * 100.0).min(1e12);
            prob.full(&z, &mut buf);
            a = prob.area(&buf, &mut ga);
            prev_viol = (m - a).abs();
            continue;
        }
        let c = m - a;
        let viol = c.max(-lambda / rho).abs();
        lambda = (lambda + rho * c).max(0.0);
        if viol <= opts.feas_tol * m.max(1e-300) && out.converged {
            converged = true;
            break;
        }
        if m == 0.0 && out.converged {
            converged = true;
            break;
        }
        if viol > 0.25 * prev_viol {
            rho = (rho * 10.0).min(1e12);
        }
        prev_viol = viol;
    }
    prob.full(&z, &mut buf);
    let mut g = vec![0.0; n];
    let value = prob.action(&buf, &mut g);
    let area = prob.area(&buf, &mut ga);
    Solved {
        z,
        value,
        area,
        iterations: total_iters,
        converged,
        multiplier: lambda,
    }
}

/// Tent start: `x0 (1 - s/w0)_+ + sign * H * tent(s; a, w)` with `H` chosen so
/// the area constraint holds with equality (clamped into the bounds).
fn tent_start(prob: &Problem, bounds: PathBounds, a: f64, w: f64) -> Result<Vec<f64>> {
    let n = prob.n;
    let h = prob.h;
    let x0 = prob.spec.x0;
    let sign = if x0 < 0.0 { -1.0 } else { 1.0 };
    let w0 = w.max(h);
    let shape = |s: f64| {
        let u = (s - a) / w;
        if (0.0..=1.0).contains(&u) {
            1.0 - (2.0 * u - 1.0).abs()
        } else {
            0.0
        }
    };
    let build = |height: f64| -> Vec<f64> {
        (1..=n)
            .map(|i| {
                let s = i as f64 * h;
                let v = x0 * (1.0 - s / w0).max(0.0) + sign * height * shape(s);
                v.clamp(bounds.lower, bounds.upper)
            })
            .collect()
    };
    let area_of = |z: &[f64]| {
        let mut full = Vec::with_capacity(n + 1);
        prob.full(z, &mut full);
        let mut scratch = vec![0.0; n];
        prob.area(&full, &mut scratch)
    };
    if area_of(&build(0.0)) >= prob.m {
        return Ok(build(0.0));
    }
    let mut hi = 1.0;
    while area_of(&build(hi)) < prob.m {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidParameter(
                "area constraint is infeasible within the bounds".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area_of(&build(mid)) < prob.m {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(build(hi))
}

/// General solver: `inf I_N` subject to `A_N >= m` and `bounds` on
/// `xi_1..xi_N`.
pub fn solve_box(
    spec: &RateFunctionalSpec,
    p: f64,
    m: f64,
    n: usize,
    bounds: PathBounds,
    opts: &SolverOptions,
) -> Result<VariationalResult> {
    spec.validate()?;
    ensure_finite(p, "p")?;
    ensure_finite(m, "m")?;
    ensure(p > 0.0, || format!("p must be positive, got {p}"))?;
    ensure(m >= 0.0, || format!("m must be nonnegative, got {m}"))?;
    ensure(n >= 32, || format!("need at least 32 intervals, got {n}"))?;
    ensure(bounds.lower < bounds.upper, || "empty path bounds".into())?;
    let prob = Problem {
        spec,
        p,
        m,
        n,
        h: spec.horizon / n as f64,
    };
    let t = spec.horizon;
    let mut starts = vec![tent_start(&prob, bounds, 0.0, 0.5 * t)?];
    let mut u = AuxUniforms::new(opts.seed, 0);
    for _ in 0..opts.extra_starts {
        let w = t * (0.2 + 0.7 * u.uniform());
        let a = (t - w) * 0.5 * u.uniform();
        starts.push(tent_start(&prob, bounds, a, w)?);
    }
    let solved: Vec<Solved> = starts
        .into_par_iter()
        .map(|z| solve_from(&prob, z, bounds, opts))
        .collect();
    let mut best: Option<(Solved, f64)> = None;
    let feas = |s: &Solved| s.area >= m - 10.0 * opts.feas_tol * m.max(1e-300);
    for s in solved {
        let norm = prob.path(&s.z).l2_norm();
        let better = match &best {
            None => true,
            Some((b, bnorm)) => {
                let (fs, fb) = (feas(&s), feas(b));
                if fs != fb {
                    fs
                } else {
                    let tie = 1e-9 * (1.0 + b.value.abs());
                    s.value < b.value - tie || ((s.value - b.value).abs() <= tie && norm < *bnorm)
                }
            }
        };
        if better {
            best = Some((s, norm));
        }
    }
    let (b, _) = best.expect("at least one start");
    Ok(VariationalResult {
        value: b.value,
        area_residual: b.area - m,
        path: prob.path(&b.z),
        iterations: b.iterations,
        converged: b.converged,
        multiplier: b.multiplier,
    })
}

/// `V(x0, T, g, m)` on `N` intervals.
pub fn solve_v(spec: &RateFunctionalSpec, p: f64, m: f64, n: usize) -> Result<VariationalResult> {
    solve_box(spec, p, m, n, PathBounds::FREE, &SolverOptions::default())
}

/// `V+(x0, T, g, m)`: as [`solve_v`] with `xi >= 0` (requires `x0 >= 0`).
pub fn solve_v_plus(spec: &RateFunctionalSpec, p: f64, m: f64, n: usize) -> Result<VariationalResult> {
    ensure(spec.x0 >= 0.0, || format!("V+ needs x0 >= 0, got {}", spec.x0))?;
    solve_box(spec, p, m, n, PathBounds::NONNEGATIVE, &SolverOptions::default())
}

/// Values of `V+` along an increasing horizon grid at fixed step `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSweep {
    pub horizons: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest increase `v_{k+1} - v_k` observed (0 when non-increasing).
    pub max_increase: f64,
    pub monotone: bool,
    /// Relative change over the last doubling.
    pub last_rel_change: f64,
    pub plateau: bool,
    /// Geometric tail extrapolation of the values (the last value when the
    /// differences do not contract).
    pub limit_estimate: f64,
    pub all_converged: bool,
}

/// Solves `V+` at each horizon with step `h` (so the grids nest) and checks
/// the monotone decrease in `T`.
pub fn extrapolate_t(
    spec: &RateFunctionalSpec,
    p: f64,
    m: f64,
    horizons: &[f64],
    h: f64,
) -> Result<HorizonSweep> {
    ensure(horizons.len() >= 3, || "need at least three horizons".into())?;
    ensure(horizons.windows(2).all(|w| w[1] > w[0]), || "horizons must increase".into())?;
    ensure(h > 0.0 && h.is_finite(), || format!("step must be positive, got {h}"))?;
    let results: Vec<VariationalResult> = horizons
        .par_iter()
        .map(|&t| {
            let n = ((t / h).round() as usize).max(32);
            solve_v_plus(&spec.with_horizon(t), p, m, n)
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let max_increase = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let vlast = *values.last().unwrap();
    let tol = 1e-6 * (1.0 + vlast.abs());
    let k = values.len();
    let (v1, v2, v3) = (values[k - 3], values[k - 2], values[k - 1]);
    let last_rel_change = if v2 == 0.0 { 0.0 } else { (v2 - v3).abs() / v2.abs() };
    let d1 = v1 - v2;
    let d2 = v2 - v3;
    let limit_estimate = if d1 > 0.0 && d2 > 0.0 && d2 < d1 {
        let q = d2 / d1;
        v3 - d2 * q / (1.0 - q)
    } else {
        v3
    };
    Ok(HorizonSweep {
        horizons: horizons.to_vec(),
        values,
        max_increase,
        monotone: max_increase <= tol,
        last_rel_change,
        plateau: last_rel_change < 1e-3,
        limit_estimate,
        all_converged: results.iter().all(|r| r.converged),
    })
}

/// One row of the mollification study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollificationRow {
    pub eps: f64,
    /// `V+(0, T, u_eps, 1)`.
    pub v_zero: f64,
    /// `V+(eps, T, u_eps, 1)`.
    pub v_shifted: f64,
    /// `|v_shifted - v_zero|`.
    pub start_gap: f64,
    /// `4 eps^(2 kappa) / sigma^2`.
    pub start_bound: f64,
    /// `V+(0, T, D, 1) - v_zero`.
    pub drift_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollificationStudy {
    pub kappa: f64,
    pub sigma: f64,
    pub p: f64,
    pub v_exact: f64,
    pub rows: Vec<MollificationRow>,
}

impl MollificationStudy {
    /// Every start gap within `4 eps^(2 kappa)/sigma^2 + tol`.
    pub fn start_bound_holds(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.start_gap <= r.start_bound + tol)
    }

    /// The mollified value never exceeds the exact-drift value (up to `tol`)
    /// and the gap shrinks as `eps` decreases.
    pub fn converges_monotonically(&self, tol: f64) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        rows.iter().all(|r| r.drift_gap >= -tol)
            && rows.windows(2).all(|w| w[0].drift_gap <= w[1].drift_gap + tol)
    }
}

/// Computes `V+(0, T, u_eps, 1)`, `V+(eps, T, u_eps, 1)` and
/// `V+(0, T, D, 1)` over an `eps` grid.
pub fn mollification_gap(
    eps_grid: &[f64],
    kappa: f64,
    sigma: f64,
    p: f64,
    horizon: f64,
    n: usize,
) -> Result<MollificationStudy> {
    ensure(!eps_grid.is_empty(), || "empty eps grid".into())?;
    ensure(eps_grid.iter().all(|e| *e > 0.0 && *e < 1.0), || "eps must lie in (0, 1)".into())?;
    let base = RateFunctionalSpec::new(DriftSpec::exact(kappa), sigma, 0.0, horizon);
    let exact = solve_v_plus(&base, p, 1.0, n)?;
    let rows = eps_grid
        .par_iter()
        .map(|&eps| {
            let spec = base.with_drift(DriftSpec::mollified(kappa, eps));
            let zero = solve_v_plus(&spec, p, 1.0, n)?;
            let shifted = solve_v_plus(&spec.with_start(eps), p, 1.0, n)?;
            Ok(MollificationRow {
                eps,
                v_zero: zero.value,
                v_shifted: shifted.value,
                start_gap: (shifted.value - zero.value).abs(),
                start_bound: 4.0 * eps.powf(2.0 * kappa) / (sigma * sigma),
                drift_gap: exact.value - zero.value,
                converged: zero.converged && shifted.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MollificationStudy {
        kappa,
        sigma,
        p,
        v_exact: exact.value,
        rows,
    })
}

/// Outcome of the shifted-path comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPathCheck {
    /// `inf` over paths from `x` confined to `[y, M + x]`, lower drift.
    pub shifted_inf: f64,
    /// `inf` over paths from `0` confined to `[0, M]`, exact drift.
    pub base_inf: f64,
    /// `(2 x^kappa / sigma^2)(M + M^kappa T + x^kappa T)`.
    pub slack: f64,
    /// `base_inf - (shifted_inf - slack)`; positive when the inequality holds.
    pub margin: f64,
    pub holds: bool,
    pub converged: bool,
}

/// Parameters of the shifted-path comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPathInstance {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "M")]
    pub cap: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub p: f64,
    pub m: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub eps: f64,
    /// Lower drift: `OneSidedLowerUEps` or `MollifiedUEps`.
    pub lower_family: DriftFamily,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Checks `inf_{A>y,M+x} I_{x,g} - slack < inf_{A+,M} I_{0,D}` by solving
/// both box-constrained problems.
pub fn shifted_path_bound_check(inst: &ShiftedPathInstance) -> Result<ShiftedPathCheck> {
    let ShiftedPathInstance {
        x,
        y,
        cap,
        horizon,
        p,
        m,
        kappa,
        sigma,
        eps,
        lower_family,
        n,
    } = *inst;
    ensure(x >= eps, || format!("need x >= eps, got x = {x}, eps = {eps}"))?;
    ensure(x > y, || format!("need x > y, got x = {x}, y = {y}"))?;
    ensure(cap > 0.0, || format!("M must be positive, got {cap}"))?;
    let lower = match lower_family {
        DriftFamily::OneSidedLowerUEps => DriftSpec::one_sided_lower(kappa, eps),
        DriftFamily::MollifiedUEps => DriftSpec::mollified(kappa, eps),
        other => {
            return Err(Error::InvalidParameter(format!(
                "shifted-path check takes u_eps or ũ_eps, got {other:?}"
            )))
        }
    };
    let opts = SolverOptions::default();
    let shifted = solve_box(
        &RateFunctionalSpec::new(lower, sigma, x, horizon),
        p,
        m,
        n,
        PathBounds::new(y, cap + x),
        &opts,
    )?;
    let base = solve_box(
        &RateFunctionalSpec::new(DriftSpec::exact(kappa), sigma, 0.0, horizon),
        p,
        m,
        n,
        PathBounds::new(0.0, cap),
        &opts,
    )?;
    let xk = x.powf(kappa);
    let slack = 2.0 * xk / (sigma * sigma) * (cap + cap.powf(kappa) * horizon + xk * horizon);
    let margin = base.value - (shifted.value - slack);
    Ok(ShiftedPathCheck {
        shifted_inf: shifted.value,
        base_inf: base.value,
        slack,
        margin,
        holds: margin > 0.0,
        converged: shifted.converged && base.converged,
    })
}

/// A variational instance as exchanged in JSON:
/// `{x0, T, m, p, kappa, sigma, drift, eps, N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalInstance {
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub m: f64,
    pub p: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub drift: DriftFamily,
    #[serde(default)]
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl VariationalInstance {
    pub fn spec(&self) -> RateFunctionalSpec {
        RateFunctionalSpec::new(
            DriftSpec {
                family: self.drift,
                eps: self.eps,
                kappa: self.kappa,
            },
            self.sigma,
            self.x0,
            self.horizon,
        )
    }

    pub fn solve(&self) -> Result<VariationalResult> {
        solve_v(&self.spec(), self.p, self.m, self.n)
    }
}
