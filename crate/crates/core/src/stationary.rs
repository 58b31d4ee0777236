//! Stationary law of the diffusion.
//!
//! For `dX = -sgn(X)|X|^kappa dt + sigma dB` the invariant density is the Gibbs
//! form
//!
//! ```text
//! pi(x) = exp(-2 |x|^(kappa+1) / ((kappa+1) sigma^2)) / Z
//! ```
//!
//! and its absolute moments have the closed form
//!
//! ```text
//! E|X|^p = ((kappa+1) sigma^2 / 2)^(p/(kappa+1)) Γ((p+1)/(kappa+1)) / Γ(1/(kappa+1)).
//! ```
//!
//! [`moment_p`] integrates numerically; [`moment_p_closed_form`] is the
//! Gamma-ratio route. The two are kept independent so each checks the other.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure, ensure_finite, Result};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryLaw {
    pub kappa: f64,
    pub sigma: f64,
    /// `log Z` with `Z = ∫ exp(-2|x|^(kappa+1) / ((kappa+1) sigma^2)) dx`.
    pub log_normalizer: f64,
}

impl StationaryLaw {
    pub fn new(kappa: f64, sigma: f64) -> Result<Self> {
        ensure_finite(kappa, "kappa")?;
        ensure_finite(sigma, "sigma")?;
        ensure(kappa > 0.0, || format!("kappa must be positive, got {kappa}"))?;
        ensure(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
        let q = kappa + 1.0;
        let c = rate(kappa, sigma);
        // Z = 2 Γ(1/q) / (q c^(1/q))
        let log_normalizer = 2f64.ln() + ln_gamma(1.0 / q) - q.ln() - c.ln() / q;
        Ok(Self {
            kappa,
            sigma,
            log_normalizer,
        })
    }

    fn c(&self) -> f64 {
        rate(self.kappa, self.sigma)
    }

    /// Unnormalized log-density `-c |x|^(kappa+1)`.
    pub fn log_weight(&self, x: f64) -> f64 {
        -self.c() * x.abs().powf(self.kappa + 1.0)
    }

    /// A cutoff beyond which `|x|^p pi(x)` carries less than `1e-12` of mass.
    pub fn tail_cutoff(&self, p: f64) -> f64 {
        let q = self.kappa + 1.0;
        let c = self.c();
        let mut x = (40.0 / c).powf(1.0 / q).max(1.0);
        // grow until x^p e^{-c x^q} (times a generous width) is negligible
        while p * x.ln() - c * x.powf(q) + x.ln() > -40.0 {
            x *= 1.25;
        }
        x
    }
}

fn rate(kappa: f64, sigma: f64) -> f64 {
    2.0 / ((kappa + 1.0) * sigma * sigma)
}

/// `pi(x)`.
pub fn density(law: &StationaryLaw, x: f64) -> f64 {
    (law.log_weight(x) - law.log_normalizer).exp()
}

/// `E|X(inf)|^p` by adaptive quadrature over `[0, x_max]`, using evenness.
pub fn moment_p(law: &StationaryLaw, p: f64) -> Result<f64> {
    ensure_finite(p, "p")?;
    ensure(p >= 0.0, || format!("p must be nonnegative, got {p}"))?;
    if p == 0.0 {
        return Ok(1.0);
    }
    let x_max = law.tail_cutoff(p);
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    // mass and first-moment integrals share the same shift so the ratio is
    // insensitive to the closed-form normalizer
    let num = integrate(|x| x.powf(p) * law.log_weight(x).exp(), 0.0, x_max, opts)?;
    let den = integrate(|x| law.log_weight(x).exp(), 0.0, x_max, opts)?;
    Ok(num.value / den.value)
}

/// Gamma-ratio closed form of `E|X(inf)|^p`, evaluated through log-Gamma.
pub fn moment_p_closed_form(law: &StationaryLaw, p: f64) -> Result<f64> {
    ensure_finite(p, "p")?;
    ensure(p >= 0.0, || format!("p must be nonnegative, got {p}"))?;
    let q = law.kappa + 1.0;
    let scale = q * law.sigma * law.sigma / 2.0;
    let log_m = (p / q) * scale.ln() + ln_gamma((p + 1.0) / q) - ln_gamma(1.0 / q);
    Ok(log_m.exp())
}
