//! Model parameters and the scaling exponents derived from them.
//!
//! The diffusion is
//!
//! ```text
//! dX = -sgn(X) |X|^kappa dt + sigma dB,    0 < kappa <= 1,
//! ```
//!
//! and the additive functional integrates `|X|^p`. Large excursions live on
//! the space scale `t^(alpha/p)` and the time scale `t^beta`, with
//!
//! ```text
//! alpha = p / (p + 1 - kappa)
//! beta  = (1 - kappa) / (p + 1 - kappa)
//! r     = (kappa + 1) / (p + 1 - kappa)      (the large-deviation speed exponent)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ensure_finite, Error, Result};

/// The tuple `(kappa, p, sigma, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub p: f64,
    pub sigma: f64,
    /// Width of the boundary layer that defines regeneration cycles.
    pub delta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            p: 4.0,
            sigma: 1.0,
            delta: 0.5,
        }
    }
}

impl ModelParams {
    pub fn new(kappa: f64, p: f64, sigma: f64, delta: f64) -> Result<Self> {
        let params = Self {
            kappa,
            p,
            sigma,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks the structural constraints. Does not enforce `p > 2 kappa`;
    /// see [`ModelParams::validate_asymptotic`].
    ///
    /// `kappa > 1` is accepted so the simulator can be used exploratively.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_noise(false)
    }

    /// As [`ModelParams::validate`], optionally admitting `sigma = 0` (the
    /// deterministic limit used by the simulator).
    pub fn validate_with_noise(&self, allow_zero_sigma: bool) -> Result<()> {
        for (v, name) in [
            (self.kappa, "kappa"),
            (self.p, "p"),
            (self.sigma, "sigma"),
            (self.delta, "delta"),
        ] {
            ensure_finite(v, name)?;
        }
        ensure(self.kappa > 0.0, || format!("kappa must be positive, got {}", self.kappa))?;
        ensure(self.p >= 0.0, || format!("p must be nonnegative, got {}", self.p))?;
        ensure(self.sigma > 0.0 || (allow_zero_sigma && self.sigma == 0.0), || {
            format!("sigma must be positive, got {}", self.sigma)
        })?;
        ensure(self.delta > 0.0, || format!("delta must be positive, got {}", self.delta))?;
        Ok(())
    }

    /// Validation for every operation that relies on the tail asymptotics.
    pub fn validate_asymptotic(&self) -> Result<()> {
        self.validate()?;
        ensure(self.kappa <= 1.0, || {
            format!("asymptotic results need kappa <= 1, got {}", self.kappa)
        })?;
        check_regime(self.kappa, self.p)
    }

    pub fn scaling(&self) -> Result<ScalingExponents> {
        ScalingExponents::new(self.kappa, self.p)
    }
}

fn check_regime(kappa: f64, p: f64) -> Result<()> {
    if p > 2.0 * kappa {
        Ok(())
    } else {
        Err(Error::InvalidRegime { kappa, p })
    }
}

/// `(alpha, beta, r)` for a given `(kappa, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub alpha: f64,
    pub beta: f64,
    pub speed_r: f64,
}

impl ScalingExponents {
    /// Fails with [`Error::InvalidRegime`] unless `p > 2 kappa`.
    pub fn new(kappa: f64, p: f64) -> Result<Self> {
        ensure_finite(kappa, "kappa")?;
        ensure_finite(p, "p")?;
        ensure(kappa > 0.0, || format!("kappa must be positive, got {kappa}"))?;
        check_regime(kappa, p)?;
        let denom = p + 1.0 - kappa;
        Ok(Self {
            alpha: p / denom,
            beta: (1.0 - kappa) / denom,
            speed_r: (kappa + 1.0) / denom,
        })
    }

    /// Exponent of `t` in the noise amplitude of the rescaled process,
    /// `(1 + kappa) / (2 (p + 1 - kappa))`, which equals `r / 2`.
    pub fn noise_exponent(&self) -> f64 {
        0.5 * self.speed_r
    }

    /// Noise amplitude `sigma * t^(-r/2)` of the small-noise diffusion `X_t`.
    pub fn scaled_noise(&self, sigma: f64, t: f64) -> f64 {
        sigma * t.powf(-self.noise_exponent())
    }

    /// Space scale `t^(alpha/p)`.
    pub fn space_scale(&self, p: f64, t: f64) -> f64 {
        t.powf(self.alpha / p)
    }

    /// Time scale `t^beta`.
    pub fn time_scale(&self, t: f64) -> f64 {
        t.powf(self.beta)
    }
}
