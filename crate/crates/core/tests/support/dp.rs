//! Brute-force dynamic-programming oracle for `V+(0, T, D, m)`.
//!
//! State: (position on a grid, remaining area on a grid), stepped over a
//! uniform time grid with the same discrete action as the library
//! (forward difference, midpoint drift, trapezoid area). Each pass searches
//! node-to-node transitions on a position band; later passes narrow the band
//! around the previous optimal path and refine the spacing. Independent of
//! the library's optimizer: no gradients, no multipliers, no starting paths.

#![allow(dead_code)]

pub struct DpPass {
    /// Band half-width around the previous path; `None` means `[0, x_max]`.
    pub half_width: Option<f64>,
    pub nodes: usize,
}

pub struct DpResult {
    pub value: f64,
    pub path: Vec<f64>,
}

fn drift(kappa: f64, x: f64) -> f64 {
    -x.signum() * x.abs().powf(kappa)
}

#[allow(clippy::too_many_arguments)]
pub fn dp_v_plus(
    kappa: f64,
    p: f64,
    sigma: f64,
    m: f64,
    horizon: f64,
    steps: usize,
    x_max: f64,
    area_bins: usize,
    passes: &[DpPass],
) -> DpResult {
    let h = horizon / steps as f64;
    let da = m / area_bins as f64;
    let na = area_bins + 1;
    let inv_s2 = 1.0 / (sigma * sigma);
    let v_max = 6.0 * (1.0 + x_max.powf(kappa));
    let reach = h * v_max;
    let mut centers: Vec<f64> = vec![0.0; steps + 1];
    let mut result = DpResult {
        value: f64::INFINITY,
        path: Vec::new(),
    };
    for pass in passes {
        // position grids per time index
        let grids: Vec<Vec<f64>> = (0..=steps)
            .map(|k| {
                if k == 0 {
                    return vec![0.0];
                }
                let (lo, hi) = match pass.half_width {
                    None => (0.0, x_max),
                    Some(w) => ((centers[k] - w).max(0.0), centers[k] + w),
                };
                (0..pass.nodes)
                    .map(|j| lo + (hi - lo) * j as f64 / (pass.nodes - 1) as f64)
                    .collect()
            })
            .collect();
        let mut next: Vec<f64> = Vec::new();
        // terminal condition
        let last = &grids[steps];
        for _ in 0..last.len() {
            for ia in 0..na {
                next.push(if ia == 0 { 0.0 } else { f64::INFINITY });
            }
        }
        let mut layers: Vec<Vec<f64>> = vec![Vec::new(); steps + 1];
        for k in (0..steps).rev() {
            let gx = &grids[k];
            let gy = &grids[k + 1];
            let mut cur = vec![f64::INFINITY; gx.len() * na];
            for (j, &x) in gx.iter().enumerate() {
                let fx = x.abs().powf(p);
                for (l, &y) in gy.iter().enumerate() {
                    if (y - x).abs() > reach {
                        continue;
                    }
                    let d = (y - x) / h - drift(kappa, 0.5 * (x + y));
                    let cost = h * d * d * inv_s2;
                    let q = 0.5 * h * (fx + y.abs().powf(p)) / da;
                    let s = q.floor() as usize;
                    let f = q - s as f64;
                    let row = &next[l * na..(l + 1) * na];
                    for ia in 0..na {
                        // remaining area after the step: (ia - q) bins
                        let v = if ia <= s {
                            row[0]
                        } else {
                            let hi = ia - s;
                            let lo = hi - 1;
                            let a = row[hi];
                            let b = row[lo];
                            if f == 0.0 {
                                a
                            } else if a.is_finite() && b.is_finite() {
                                (1.0 - f) * a + f * b
                            } else {
                                f64::INFINITY
                            }
                        };
                        let tot = cost + v;
                        let idx = j * na + ia;
                        if tot < cur[idx] {
                            cur[idx] = tot;
                        }
                    }
                }
            }
            layers[k + 1] = std::mem::replace(&mut next, cur);
        }
        let value = next[na - 1];
        layers[0] = next;
        // forward extraction: one-step lookahead against the stored value
        // function at the exact remaining area
        let interp = |row: &[f64], rem: f64| -> f64 {
            let q = (rem / da).max(0.0);
            let lo = q.floor() as usize;
            if lo + 1 >= na {
                return row[na - 1];
            }
            let f = q - lo as f64;
            if f == 0.0 {
                row[lo]
            } else if row[lo].is_finite() && row[lo + 1].is_finite() {
                (1.0 - f) * row[lo] + f * row[lo + 1]
            } else {
                f64::INFINITY
            }
        };
        let mut path = vec![0.0; steps + 1];
        let mut x = 0.0;
        let mut rem = m;
        for k in 0..steps {
            let gy = &grids[k + 1];
            let mut best = (f64::INFINITY, 0usize, rem);
            for (l, &y) in gy.iter().enumerate() {
                if (y - x).abs() > reach {
                    continue;
                }
                let d = (y - x) / h - drift(kappa, 0.5 * (x + y));
                let cost = h * d * d * inv_s2;
                let r2 = rem - 0.5 * h * (x.abs().powf(p) + y.abs().powf(p));
                let tot = cost + interp(&layers[k + 1][l * na..(l + 1) * na], r2);
                if tot < best.0 {
                    best = (tot, l, r2);
                }
            }
            x = gy[best.1];
            rem = best.2;
            path[k + 1] = x;
        }
        centers = path.clone();
        result = DpResult { value, path };
    }
    result
}
