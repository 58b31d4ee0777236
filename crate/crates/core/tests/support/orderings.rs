//! Pointwise drift orderings and continuity joins on a dense grid.
//!
//! Written against the closed-form branch definitions so that a wrong branch
//! in the library shows up as a disagreement, not just a violated ordering.

#![allow(dead_code)]

use langevin_ldp::{Drift, DriftSpec};

pub struct OrderingReport {
    pub points: usize,
    pub failures: Vec<String>,
}

fn exact(kappa: f64, x: f64) -> f64 {
    -x.signum() * x.abs().powf(kappa)
}

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Checks on `n` points of `[-x_max, x_max]`:
/// * `u_eps >= D` and `ũ_eps <= D` for `x >= 0`,
/// * `L_eps <= D` everywhere,
/// * `U_eps >= D` for `x >= 0` and `x <= -1` (it dips below `D` on `(-1, 0)`),
/// * odd symmetry of `D` and `u_eps`,
/// * continuity of every family across its joins.
pub fn check_orderings(kappa: f64, eps: f64, n: usize, x_max: f64) -> OrderingReport {
    let d = DriftSpec::exact(kappa);
    let u = DriftSpec::mollified(kappa, eps);
    let us = DriftSpec::one_sided_lower(kappa, eps);
    let l = DriftSpec::aux_lower(kappa, eps);
    let up = DriftSpec::aux_upper(kappa, eps);
    let tol = 1e-12;
    let mut failures = Vec::new();
    let mut fail = |what: &str, x: f64, a: f64, b: f64| {
        failures.push(format!("{what} at x = {x}: {a} vs {b}"));
    };
    let xs = grid(n, -x_max, x_max);
    for &x in &xs {
        let dx = d.value(x);
        if (dx - exact(kappa, x)).abs() > tol * (1.0 + dx.abs()) {
            fail("D closed form", x, dx, exact(kappa, x));
        }
        if (d.value(-x) + dx).abs() > tol || (u.value(-x) + u.value(x)).abs() > tol {
            fail("odd symmetry", x, d.value(-x), -dx);
        }
        if l.value(x) > dx + tol {
            fail("L_eps <= D", x, l.value(x), dx);
        }
        if x >= 0.0 {
            if u.value(x) < dx - tol {
                fail("u_eps >= D", x, u.value(x), dx);
            }
            if us.value(x) > dx + tol {
                fail("ũ_eps <= D", x, us.value(x), dx);
            }
        }
        if (x >= 0.0 || x <= -1.0) && up.value(x) < dx - tol {
            fail("U_eps >= D", x, up.value(x), dx);
        }
    }
    // joins: values just left and right of each breakpoint agree
    let h = 1e-10;
    for (name, spec) in [("u_eps", u), ("ũ_eps", us), ("L_eps", l), ("U_eps", up)] {
        for b in spec.breakpoints() {
            let (a, c) = (spec.value(b - h), spec.value(b + h));
            if (a - c).abs() > 1e-6 {
                fail(&format!("{name} continuity"), b, a, c);
            }
        }
    }
    OrderingReport {
        points: xs.len(),
        failures,
    }
}
