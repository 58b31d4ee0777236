//! Bound-constrained limited-memory BFGS.
//!
//! A compact projected L-BFGS: variables at an active bound (with the gradient
//! pushing outward) are frozen for the iteration, the two-loop recursion runs
//! on the rest, and a backtracking Armijo search moves along the projected
//! path. The initial inverse Hessian can be a symmetric tridiagonal matrix,
//! which is exactly the shape of the kinetic part of a discretized action and
//! removes its `O(N^2)` ill-conditioning.

/// Symmetric tridiagonal matrix used as the initial Hessian approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Solves `K_FF z_F = r_F` on the free set `F` and zeroes the frozen
    /// entries. Couplings to frozen neighbours are dropped.
    fn solve_masked(&self, r: &[f64], free: &[bool], out: &mut [f64]) {
        let n = r.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            if !free[i] {
                c[i] = 0.0;
                d[i] = 0.0;
                continue;
            }
            let a = if i > 0 && free[i - 1] { self.off[i - 1] } else { 0.0 };
            let b = self.diag[i] - a * if i > 0 { c[i - 1] } else { 0.0 };
            let up = if i + 1 < n && free[i + 1] { self.off[i] } else { 0.0 };
            c[i] = up / b;
            d[i] = (r[i] - a * if i > 0 { d[i - 1] } else { 0.0 }) / b;
        }
        for i in (0..n).rev() {
            out[i] = if !free[i] {
                0.0
            } else if i + 1 < n && free[i + 1] {
                d[i] - c[i] * out[i + 1]
            } else {
                d[i]
            };
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub grad_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 12,
            max_iter: 5000,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_grad: f64,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn projected_grad_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..x.len() {
        let y = (x[i] - g[i]).clamp(lo[i], hi[i]);
        m = m.max((x[i] - y).abs());
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x` (projected first).
/// `f` writes the gradient into its second argument and returns the value.
pub fn minimize<F>(
    mut f: F,
    x: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    precond: Option<&Tridiagonal>,
    opts: &LbfgsOptions,
) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    project(x, lo, hi);
    let mut g = vec![0.0; n];
    let mut fx = f(x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut free = vec![true; n];
    let mut d = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut alpha = vec![0.0; opts.memory];
    let mut iters = 0;
    let mut pg = projected_grad_norm(x, &g, lo, hi);
    while iters < opts.max_iter {
        if !fx.is_finite() {
            break;
        }
        if pg <= opts.grad_tol {
            return LbfgsOutcome {
                value: fx,
                iterations: iters,
                converged: true,
                projected_grad: pg,
            };
        }
        iters += 1;
        let span = |i: usize| (hi[i] - lo[i]).abs().min(1.0) * 1e-14 + 1e-300;
        for i in 0..n {
            let at_lo = x[i] <= lo[i] + span(i) && g[i] > 0.0;
            let at_hi = x[i] >= hi[i] - span(i) && g[i] < 0.0;
            free[i] = !(at_lo || at_hi);
        }
        // two-loop recursion on the free coordinates
        for i in 0..n {
            q[i] = if free[i] { g[i] } else { 0.0 };
        }
        let k = s_hist.len();
        for j in (0..k).rev() {
            alpha[j] = rho_hist[j] * dot(&s_hist[j], &q);
            for i in 0..n {
                q[i] -= alpha[j] * y_hist[j][i];
            }
        }
        match precond {
            Some(t) => t.solve_masked(&q, &free, &mut d),
            None => {
                let gamma = if k > 0 {
                    dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
                } else {
                    1.0 / g.iter().map(|v| v.abs()).fold(1e-12, f64::max)
                };
                for i in 0..n {
                    d[i] = gamma * q[i];
                }
            }
        }
        for j in 0..k {
            let beta = rho_hist[j] * dot(&y_hist[j], &d);
            for i in 0..n {
                d[i] += s_hist[j][i] * (alpha[j] - beta);
            }
        }
        for i in 0..n {
            d[i] = if free[i] { -d[i] } else { 0.0 };
        }
        if dot(&d, &g) >= 0.0 {
            // memory went stale; fall back to the (preconditioned) gradient
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for i in 0..n {
                q[i] = if free[i] { g[i] } else { 0.0 };
            }
            match precond {
                Some(t) => t.solve_masked(&q, &free, &mut d),
                None => d.copy_from_slice(&q),
            }
            for v in d.iter_mut() {
                *v = -*v;
            }
            if dot(&d, &g) >= 0.0 {
                break;
            }
        }
        // projected backtracking line search
        let mut step = 1.0;
        let mut accepted = false;
        let mut fn_val = fx;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            project(&mut xn, lo, hi);
            let decrease: f64 = (0..n).map(|i| g[i] * (xn[i] - x[i])).sum();
            fn_val = f(&xn, &mut gn);
            let slack = 1e-14 * fx.abs().max(1e-300);
            if fn_val.is_finite() && fn_val <= fx + 1e-4 * decrease + slack && decrease < 0.0 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if s_hist.is_empty() {
                break;
            }
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        fx = fn_val;
        pg = projected_grad_norm(x, &g, lo, hi);
    }
    LbfgsOutcome {
        value: fx,
        iterations: iters,
        converged: pg <= opts.grad_tol,
        projected_grad: pg,
    }
}
