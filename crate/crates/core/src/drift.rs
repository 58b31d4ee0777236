//! Drift families.
//!
//! `ExactD` is the model drift `D(x) = -sgn(x)|x|^kappa`. It fails to be
//! Lipschitz at the origin when `kappa < 1`, so comparison arguments work
//! with Lipschitz modifications of it:
//!
//! ```text
//! u_eps(x)  = D(x)                 |x| >= eps      (mollified, dominates D on x >= 0)
//!           = -x / eps^(1-kappa)   |x| <= eps
//!
//! ũ_eps(x)  = -x^kappa             x >= eps        (one-sided, dominated by D on x >= 0)
//!           = -eps^kappa           x <  eps
//!
//! L_eps(x)  = -x^kappa             x >  eps        (lower auxiliary, L_eps <= D everywhere)
//!           = -eps^kappa           x <= eps
//!
//! U_eps(x)  =  x^kappa             x >  eps        (upper auxiliary)
//!           =  x / eps^(1-kappa)   0 <= x <= eps
//!           =  |x|^(kappa+1)       -1 <= x < 0
//!           =  |x|^kappa           x < -1
//! ```
//!
//! Note that `U_eps < D` on `(-1, 0)`; it dominates `D` on `[0, inf)` and on
//! `(-inf, -1]`, which covers its use for first passages to `0` from above.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ensure_finite, Result};

/// A scalar drift coefficient with the calculus the library needs.
pub trait Drift: Sync {
    fn value(&self, x: f64) -> f64;

    /// Derivative where it exists; one-sided limits are fine at kinks.
    fn derivative(&self, x: f64) -> f64;

    /// `Φ(x) = ∫_0^x drift(u) du`.
    fn antiderivative(&self, x: f64) -> f64;

    /// Points where the drift or its derivative changes formula.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Interior stationary points of `H(x) = drift'(x) + drift(x)^2 / sigma^2`
    /// away from the breakpoints, when known in closed form. Between these
    /// points and the breakpoints `H` must be monotone. `None` means unknown,
    /// and callers fall back to a numerical search.
    fn h_critical_points(&self, _sigma: f64) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DriftFamily {
    ExactD,
    MollifiedUEps,
    OneSidedLowerUEps,
    AuxLowerLEps,
    AuxUpperUEps,
}

/// A member of one of the drift families, fully parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub family: DriftFamily,
    /// Mollification width; ignored by `ExactD`.
    pub eps: f64,
    pub kappa: f64,
}

#[inline]
fn pow_kappa(a: f64, kappa: f64) -> f64 {
    if kappa == 1.0 {
        a
    } else {
        a.powf(kappa)
    }
}

impl DriftSpec {
    pub fn exact(kappa: f64) -> Self {
        Self {
            family: DriftFamily::ExactD,
            eps: 0.0,
            kappa,
        }
    }

    pub fn mollified(kappa: f64, eps: f64) -> Self {
        Self {
            family: DriftFamily::MollifiedUEps,
            eps,
            kappa,
        }
    }

    pub fn one_sided_lower(kappa: f64, eps: f64) -> Self {
        Self {
            family: DriftFamily::OneSidedLowerUEps,
            eps,
            kappa,
        }
    }

    pub fn aux_lower(kappa: f64, eps: f64) -> Self {
        Self {
            family: DriftFamily::AuxLowerLEps,
            eps,
            kappa,
        }
    }

    pub fn aux_upper(kappa: f64, eps: f64) -> Self {
        Self {
            family: DriftFamily::AuxUpperUEps,
            eps,
            kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.kappa, "kappa")?;
        ensure(self.kappa > 0.0, || {
            format!("kappa must be positive, got {}", self.kappa)
        })?;
        if self.family != DriftFamily::ExactD {
            ensure_finite(self.eps, "eps")?;
            ensure(self.eps > 0.0, || {
                format!("eps must be positive for {:?}, got {}", self.family, self.eps)
            })?;
        }
        Ok(())
    }

    /// Whether the drift is odd, `g(-x) = -g(x)`.
    pub fn is_odd(&self) -> bool {
        matches!(self.family, DriftFamily::ExactD | DriftFamily::MollifiedUEps)
    }

    /// Global Lipschitz constant, `None` for `ExactD` with `kappa < 1`.
    pub fn lipschitz(&self) -> Option<f64> {
        let k = self.kappa;
        match self.family {
            DriftFamily::ExactD => (k == 1.0).then_some(1.0),
            DriftFamily::MollifiedUEps => Some(self.eps.powf(k - 1.0)),
            DriftFamily::OneSidedLowerUEps | DriftFamily::AuxLowerLEps => {
                Some(k * self.eps.powf(k - 1.0))
            }
            DriftFamily::AuxUpperUEps => Some(self.eps.powf(k - 1.0).max(k + 1.0)),
        }
    }

    /// Largest step keeping `dt * Lip <= 0.1`, capped at `default_dt`.
    pub fn suggested_dt(&self, default_dt: f64) -> f64 {
        match self.lipschitz() {
            Some(l) if l > 0.0 => default_dt.min(0.1 / l),
            _ => default_dt,
        }
    }
}

impl Drift for DriftSpec {
    #[inline]
    fn value(&self, x: f64) -> f64 {
        let k = self.kappa;
        let e = self.eps;
        match self.family {
            DriftFamily::ExactD => {
                let m = pow_kappa(x.abs(), k);
                if x > 0.0 {
                    -m
                } else if x < 0.0 {
                    m
                } else {
                    0.0
                }
            }
            DriftFamily::MollifiedUEps => {
                if x.abs() >= e {
                    let m = pow_kappa(x.abs(), k);
                    if x > 0.0 {
                        -m
                    } else {
                        m
                    }
                } else {
                    -x / pow_kappa(e, 1.0 - k)
                }
            }
            DriftFamily::OneSidedLowerUEps => {
                if x >= e {
                    -pow_kappa(x, k)
                } else {
                    -pow_kappa(e, k)
                }
            }
            DriftFamily::AuxLowerLEps => {
                if x > e {
                    -pow_kappa(x, k)
                } else {
                    -pow_kappa(e, k)
                }
            }
            DriftFamily::AuxUpperUEps => {
                if x > e {
                    pow_kappa(x, k)
                } else if x >= 0.0 {
                    x / pow_kappa(e, 1.0 - k)
                } else if x >= -1.0 {
                    (-x).powf(k + 1.0)
                } else {
                    pow_kappa(-x, k)
                }
            }
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        let k = self.kappa;
        let e = self.eps;
        match self.family {
            DriftFamily::ExactD => {
                if x == 0.0 {
                    if k == 1.0 {
                        -1.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    -k * x.abs().powf(k - 1.0)
                }
            }
            DriftFamily::MollifiedUEps => {
                if x.abs() > e {
                    -k * x.abs().powf(k - 1.0)
                } else {
                    -e.powf(k - 1.0)
                }
            }
            DriftFamily::OneSidedLowerUEps | DriftFamily::AuxLowerLEps => {
                if x > e {
                    -k * x.powf(k - 1.0)
                } else {
                    0.0
                }
            }
            DriftFamily::AuxUpperUEps => {
                if x > e {
                    k * x.powf(k - 1.0)
                } else if x >= 0.0 {
                    e.powf(k - 1.0)
                } else if x >= -1.0 {
                    -(k + 1.0) * (-x).powf(k)
                } else {
                    -k * (-x).powf(k - 1.0)
                }
            }
        }
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let k = self.kappa;
        let e = self.eps;
        let kp1 = k + 1.0;
        match self.family {
            DriftFamily::ExactD => -x.abs().powf(kp1) / kp1,
            DriftFamily::MollifiedUEps => {
                let a = x.abs();
                if a <= e {
                    -x * x / (2.0 * e.powf(1.0 - k))
                } else {
                    -e.powf(kp1) / 2.0 - (a.powf(kp1) - e.powf(kp1)) / kp1
                }
            }
            DriftFamily::OneSidedLowerUEps | DriftFamily::AuxLowerLEps => {
                if x <= e {
                    -e.powf(k) * x
                } else {
                    -e.powf(kp1) - (x.powf(kp1) - e.powf(kp1)) / kp1
                }
            }
            DriftFamily::AuxUpperUEps => {
                if x > e {
                    e.powf(kp1) / 2.0 + (x.powf(kp1) - e.powf(kp1)) / kp1
                } else if x >= 0.0 {
                    x * x / (2.0 * e.powf(1.0 - k))
                } else if x >= -1.0 {
                    -(-x).powf(k + 2.0) / (k + 2.0)
                } else {
                    -1.0 / (k + 2.0) - ((-x).powf(kp1) - 1.0) / kp1
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.family {
            DriftFamily::ExactD => vec![0.0],
            DriftFamily::MollifiedUEps => vec![-self.eps, self.eps],
            DriftFamily::OneSidedLowerUEps | DriftFamily::AuxLowerLEps => vec![self.eps],
            DriftFamily::AuxUpperUEps => vec![-1.0, 0.0, self.eps],
        }
    }

    fn h_critical_points(&self, sigma: f64) -> Option<Vec<f64>> {
        // On every branch of the decreasing families H is monotone in |x|
        // (or minimal at 0 on the linear piece). The upper auxiliary drift
        // has one interior minimum on each of its two power branches.
        let k = self.kappa;
        let s2 = sigma * sigma;
        let mut pts = vec![0.0];
        if self.family == DriftFamily::AuxUpperUEps {
            if k < 1.0 {
                pts.push(((1.0 - k) * s2 / 2.0).powf(1.0 / (k + 1.0)));
            }
            pts.push(-(k * s2 / 2.0).powf(1.0 / (k + 2.0)));
        }
        Some(pts)
    }
}

impl<D: Drift + ?Sized> Drift for &D {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn derivative(&self, x: f64) -> f64 {
        (**self).derivative(x)
    }
    fn antiderivative(&self, x: f64) -> f64 {
        (**self).antiderivative(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn h_critical_points(&self, sigma: f64) -> Option<Vec<f64>> {
        (**self).h_critical_points(sigma)
    }
}

/// Checked evaluation: rejects malformed specs and non-finite `x`.
pub fn drift_eval(spec: &DriftSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    ensure_finite(x, "x")?;
    Ok(spec.value(x))
}

/// A constant drift `c`; handy for closed-form checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDrift(pub f64);

impl Drift for ConstantDrift {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }
    fn antiderivative(&self, x: f64) -> f64 {
        self.0 * x
    }
    fn h_critical_points(&self, _sigma: f64) -> Option<Vec<f64>> {
        Some(Vec::new())
    }
}

/// Linear drift `-a x` (Ornstein-Uhlenbeck).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDrift(pub f64);

impl Drift for LinearDrift {
    fn value(&self, x: f64) -> f64 {
        -self.0 * x
    }
    fn derivative(&self, _x: f64) -> f64 {
        -self.0
    }
    fn antiderivative(&self, x: f64) -> f64 {
        -0.5 * self.0 * x * x
    }
    fn h_critical_points(&self, _sigma: f64) -> Option<Vec<f64>> {
        Some(vec![0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [DriftFamily; 5] = [
        DriftFamily::ExactD,
        DriftFamily::MollifiedUEps,
        DriftFamily::OneSidedLowerUEps,
        DriftFamily::AuxLowerLEps,
        DriftFamily::AuxUpperUEps,
    ];

    fn spec(family: DriftFamily, kappa: f64, eps: f64) -> DriftSpec {
        DriftSpec { family, eps, kappa }
    }

    #[test]
    fn worked_values() {
        let v = drift_eval(&DriftSpec::exact(0.5), 4.0).unwrap();
        assert_eq!(v, -2.0);
        let v = drift_eval(&DriftSpec::mollified(0.5, 1.0), 0.5).unwrap();
        assert_eq!(v, -0.5);
        let v = drift_eval(&DriftSpec::one_sided_lower(0.5, 0.2), -3.0).unwrap();
        assert!((v + 0.2f64.sqrt()).abs() < 1e-15);
        assert!((v + 0.44721).abs() < 1e-5);
        let v = drift_eval(&DriftSpec::aux_upper(0.5, 0.2), -0.5).unwrap();
        assert!((v - 0.5f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_bad_eps() {
        assert!(drift_eval(&DriftSpec::exact(1.0), f64::NAN).is_err());
        assert!(drift_eval(&DriftSpec::exact(1.0), f64::INFINITY).is_err());
        assert!(drift_eval(&DriftSpec::mollified(1.0, 0.0), 0.1).is_err());
        assert!(drift_eval(&DriftSpec::exact(0.0), 0.1).is_err());
    }

    #[test]
    fn antiderivative_matches_numerical_integral() {
        for fam in ALL {
            for &kappa in &[0.3, 0.5, 1.0] {
                let s = spec(fam, kappa, 0.37);
                for &x in &[-2.5, -1.0, -0.6, -0.2, 0.0, 0.1, 0.37, 0.8, 3.0] {
                    let numeric = crate::quadrature::integrate_with_breaks(
                        |u| s.value(u),
                        0.0,
                        x,
                        &[-1.0, -0.37, 0.37],
                        crate::quadrature::QuadOptions::default(),
                    )
                    .unwrap()
                    .value;
                    let exact = s.antiderivative(x);
                    assert!(
                        (numeric - exact).abs() < 1e-9,
                        "{fam:?} kappa={kappa} x={x}: {numeric} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for fam in ALL {
            for &kappa in &[0.4, 1.0] {
                let s = spec(fam, kappa, 0.3);
                for &x in &[-2.0, -0.7, -0.1, 0.1, 0.2, 0.5, 1.7] {
                    let h = 1e-6;
                    let fd = (s.value(x + h) - s.value(x - h)) / (2.0 * h);
                    let d = s.derivative(x);
                    assert!((fd - d).abs() < 1e-5 * (1.0 + d.abs()), "{fam:?} {x}: {fd} vs {d}");
                }
            }
        }
    }

    #[test]
    fn lipschitz_only_fails_for_exact_sublinear() {
        assert_eq!(DriftSpec::exact(0.5).lipschitz(), None);
        assert_eq!(DriftSpec::exact(1.0).lipschitz(), Some(1.0));
        for fam in &ALL[1..] {
            let s = spec(*fam, 0.5, 0.25);
            let l = s.lipschitz().unwrap();
            // empirical slope bound on a grid
            let grid: Vec<f64> = (0..4001).map(|i| -4.0 + i as f64 * 0.002).collect();
            for w in grid.windows(2) {
                let slope = (s.value(w[1]) - s.value(w[0])).abs() / (w[1] - w[0]);
                assert!(slope <= l * (1.0 + 1e-9), "{fam:?}: {slope} > {l}");
            }
        }
    }

    #[test]
    fn suggested_step_respects_stiffness() {
        let s = DriftSpec::mollified(0.5, 0.01);
        let dt = s.suggested_dt(1e-2);
        assert!(dt * s.lipschitz().unwrap() <= 0.1 + 1e-12);
        assert_eq!(DriftSpec::exact(0.5).suggested_dt(1e-3), 1e-3);
    }
}
