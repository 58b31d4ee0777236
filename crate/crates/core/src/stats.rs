//! Small statistical toolkit: summation, moments, regression, KS, ratio CIs.
//!
//! Reductions use pairwise summation over slices kept in replica order, so a
//! parallel map followed by one of these reductions gives the same bits no
//! matter how the work was scheduled.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> Result<MeanSe> {
    if xs.is_empty() {
        return Err(Error::Empty("sample".into()));
    }
    let n = xs.len();
    let mean = pairwise_sum(xs) / n as f64;
    let se = if n > 1 {
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(MeanSe { mean, se, n })
}

/// Empirical quantile with linear interpolation (type 7).
pub fn quantile(xs: &[f64], q: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("sample".into()));
    }
    ensure((0.0..=1.0).contains(&q), || format!("quantile level {q} outside [0, 1]"))?;
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&s, q))
}

pub(crate) fn sorted_quantile(s: &[f64], q: f64) -> f64 {
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Result of a straight-line fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
}

/// Ordinary least squares.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    wls(x, y, &vec![1.0; x.len()])
}

/// Weighted least squares with weights `w` (inverse variances).
///
/// `slope_se` is the model-based standard error: for unit weights the residual
/// variance is estimated from the data; for genuine inverse-variance weights it
/// is scaled by the reduced chi-square when that exceeds 1.
pub fn wls(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    ensure(y.len() == n && w.len() == n, || "fit inputs differ in length".into())?;
    ensure(n >= 2, || format!("need at least two points to fit, got {n}"))?;
    ensure(w.iter().all(|v| v.is_finite() && *v > 0.0), || {
        "fit weights must be positive and finite".into()
    })?;
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - xm;
        let dy = y[i] - ym;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    ensure(sxx > 0.0, || "abscissae are all equal".into())?;
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = (0..n)
        .map(|i| {
            let e = y[i] - intercept - slope * x[i];
            w[i] * e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let unit = w.iter().all(|v| *v == 1.0);
    let slope_se = if n > 2 {
        let red = ssr / (n - 2) as f64;
        let scale = if unit { red } else { red.max(1.0) };
        (scale / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        slope_se,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// `Q_KS(λ) = 2 Σ (-1)^(k-1) exp(-2 k² λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Ratio estimate `mean(num) / mean(den)` with a delta-method interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl RatioEstimate {
    pub fn overlaps(&self, other: &RatioEstimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Delta-method 95% interval for `E[num] / E[den]` from paired samples.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Result<RatioEstimate> {
    let n = num.len();
    ensure(den.len() == n, || "ratio samples differ in length".into())?;
    ensure(n >= 2, || format!("ratio estimate needs at least two pairs, got {n}"))?;
    let mn = pairwise_sum(num) / n as f64;
    let md = pairwise_sum(den) / n as f64;
    ensure(md != 0.0, || "denominator mean is zero".into())?;
    let ratio = mn / md;
    // residuals of the linearized estimator
    let res: Vec<f64> = num
        .iter()
        .zip(den)
        .map(|(a, b)| {
            let e = a - ratio * b;
            e * e
        })
        .collect();
    let var = pairwise_sum(&res) / (n - 1) as f64;
    let se = (var / n as f64).sqrt() / md.abs();
    Ok(RatioEstimate {
        ratio,
        se,
        lo: ratio - 1.96 * se,
        hi: ratio + 1.96 * se,
        n,
    })
}

/// `log(mean(exp(v)))` computed stably.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    m + (pairwise_sum(&s) / v.len() as f64).ln()
}
