//! Euler-Maruyama simulation of the diffusion and of its small-noise rescaling.
//!
//! ```text
//! X_{n+1} = X_n + g(X_n) dt + a sqrt(dt) Z_n,     Z_n ~ N(0, 1)
//! ```
//!
//! with `a = sigma` for the original process and `a = sigma t^(-r/2)` for the
//! rescaled process `X_t(u) = X(u t^beta) / t^(alpha/p)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::drift::{Drift, DriftSpec};
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::params::ModelParams;
use crate::rng::NoiseStream;

/// Identifies a replayable noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct StreamId {
    pub seed: u64,
    pub replica: u64,
}

impl StreamId {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    pub fn noise(&self) -> NoiseStream {
        NoiseStream::new(self.seed, self.replica)
    }
}

/// One simulated trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: StreamId,
    pub dt: f64,
}

impl SamplePath {
    /// Builds a path from raw samples, checking the grid invariants.
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure(times.len() == values.len(), || {
            format!("{} times but {} values", times.len(), values.len())
        })?;
        if times.is_empty() {
            return Err(Error::Empty("sample path".into()));
        }
        ensure(times.windows(2).all(|w| w[1] > w[0]), || {
            "times must be strictly increasing".into()
        })?;
        let dt = if times.len() > 1 {
            (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            times,
            values,
            seed: StreamId::default(),
            dt,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    /// Writes `time,value` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "value"])?;
        for (t, x) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `|x|^p` with fast paths for the exponents used most.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p == 1.0 {
        a
    } else if p == 0.0 {
        1.0
    } else if p.fract() == 0.0 && p > 0.0 && p < 32.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// Incremental Euler-Maruyama stepper over one noise stream.
#[derive(Clone, Debug)]
pub struct EulerStepper<D> {
    drift: D,
    dt: f64,
    noise_scale: f64,
    noise: NoiseStream,
}

impl<D: Drift> EulerStepper<D> {
    pub fn new(drift: D, noise_amp: f64, dt: f64, stream: StreamId) -> Self {
        Self {
            drift,
            dt,
            noise_scale: noise_amp * dt.sqrt(),
            noise: stream.noise(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn drift(&self) -> &D {
        &self.drift
    }

    /// Steps taken so far (equals the noise stream position).
    pub fn steps(&self) -> u64 {
        self.noise.position()
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let z = if self.noise_scale == 0.0 {
            0.0
        } else {
            self.noise.next_normal()
        };
        x + self.drift.value(x) * self.dt + self.noise_scale * z
    }
}

fn check_knobs(x0: f64, horizon: f64, dt: f64) -> Result<()> {
    ensure_finite(x0, "x0")?;
    ensure_finite(horizon, "horizon")?;
    ensure_finite(dt, "dt")?;
    ensure(dt > 0.0, || format!("dt must be positive, got {dt}"))?;
    ensure(horizon > 0.0, || format!("horizon must be positive, got {horizon}"))?;
    Ok(())
}

/// Simulates `dX = g(X) dt + noise_amp dB` on `[0, horizon]`.
///
/// The grid has `n = ceil(horizon / dt)` uniform steps ending exactly at
/// `horizon`.
pub fn simulate_with_amplitude<D: Drift>(
    drift: &D,
    noise_amp: f64,
    x0: f64,
    horizon: f64,
    dt: f64,
    seed: StreamId,
) -> Result<SamplePath> {
    check_knobs(x0, horizon, dt)?;
    ensure(noise_amp >= 0.0 && noise_amp.is_finite(), || {
        format!("noise amplitude must be finite and nonnegative, got {noise_amp}")
    })?;
    let n = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = horizon / n as f64;
    let mut stepper = EulerStepper::new(drift, noise_amp, h, seed);
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0;
    times.push(0.0);
    values.push(x);
    for i in 1..=n {
        x = stepper.step(x);
        times.push(if i == n { horizon } else { i as f64 * h });
        values.push(x);
    }
    Ok(SamplePath {
        times,
        values,
        seed,
        dt: h,
    })
}

/// Simulates the original diffusion with drift `spec` and diffusion `sigma`.
///
/// `sigma = 0` is accepted here and gives the explicit Euler solution of the
/// drift ODE.
pub fn simulate_path(
    params: &ModelParams,
    spec: &DriftSpec,
    x0: f64,
    horizon: f64,
    dt: f64,
    seed: StreamId,
) -> Result<SamplePath> {
    params.validate_with_noise(true)?;
    spec.validate()?;
    simulate_with_amplitude(spec, params.sigma, x0, horizon, dt, seed)
}

/// Simulates the small-noise process `X_t` with amplitude `sigma t^(-r/2)`.
pub fn simulate_scaled(
    params: &ModelParams,
    t: f64,
    spec: &DriftSpec,
    x0: f64,
    horizon: f64,
    dt: f64,
    seed: StreamId,
) -> Result<SamplePath> {
    params.validate()?;
    spec.validate()?;
    ensure_finite(t, "t")?;
    ensure(t > 1.0, || format!("scale parameter t must exceed 1, got {t}"))?;
    let amp = params.scaling()?.scaled_noise(params.sigma, t);
    simulate_with_amplitude(spec, amp, x0, horizon, dt, seed)
}

/// Trapezoid approximation of `∫_0^stop |X(s)|^p ds` (the whole path when
/// `stop` is `None`). A `stop` between grid points is handled by linear
/// interpolation.
pub fn area_functional(path: &SamplePath, p: f64, stop: Option<f64>) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::Empty("sample path".into()));
    }
    let t_end = *path.times.last().unwrap();
    let stop = stop.unwrap_or(t_end);
    ensure_finite(stop, "stop")?;
    ensure(stop <= t_end + 1e-12, || {
        format!("stop = {stop} exceeds the last grid time {t_end}")
    })?;
    let mut acc = 0.0;
    for i in 1..path.len() {
        let (t0, t1) = (path.times[i - 1], path.times[i]);
        if t0 >= stop {
            break;
        }
        let (x0, x1) = (path.values[i - 1], path.values[i]);
        if t1 <= stop {
            acc += 0.5 * (abs_pow(x0, p) + abs_pow(x1, p)) * (t1 - t0);
        } else {
            let w = (stop - t0) / (t1 - t0);
            let xs = x0 + w * (x1 - x0);
            acc += 0.5 * (abs_pow(x0, p) + abs_pow(xs, p)) * (stop - t0);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kappa: f64, sigma: f64) -> ModelParams {
        ModelParams::new(kappa, 4.0, sigma, 0.5).unwrap()
    }

    #[test]
    fn noiseless_linear_decay() {
        let dt = 1e-4;
        let p = ModelParams {
            sigma: 0.0,
            ..params(1.0, 1.0)
        };
        let path = simulate_path(&p, &DriftSpec::exact(1.0), 1.0, 1.0, dt, StreamId::new(1, 0)).unwrap();
        assert!((path.final_value() - (-1.0f64).exp()).abs() < 2.0 * dt);
    }

    #[test]
    fn noiseless_square_root_drift_hits_zero_at_two() {
        let dt = 1e-4;
        let drift = DriftSpec::exact(0.5);
        let path = simulate_with_amplitude(&drift, 0.0, 1.0, 3.0, dt, StreamId::default()).unwrap();
        // x(t) = (1 - t/2)^2 on [0, 2]
        let hit = path
            .times
            .iter()
            .zip(&path.values)
            .find(|(_, x)| **x <= 1e-3)
            .map(|(t, _)| *t)
            .unwrap();
        assert!((hit - 2.0).abs() < 0.07, "hit at {hit}");
        for (t, x) in path.times.iter().zip(&path.values).take_while(|(t, _)| **t < 1.5) {
            let exact = (1.0 - t / 2.0).powi(2);
            assert!((x - exact).abs() < 10.0 * dt, "t={t}: {x} vs {exact}");
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let p = params(0.5, 1.0);
        let s = DriftSpec::exact(0.5);
        let a = simulate_path(&p, &s, 0.0, 5.0, 1e-3, StreamId::new(9, 4)).unwrap();
        let b = simulate_path(&p, &s, 0.0, 5.0, 1e-3, StreamId::new(9, 4)).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&p, &s, 0.0, 5.0, 1e-3, StreamId::new(9, 5)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn grid_invariants() {
        let p = params(1.0, 1.0);
        let path = simulate_path(&p, &DriftSpec::exact(1.0), 0.3, 1.05, 0.1, StreamId::default()).unwrap();
        assert_eq!(path.times.len(), path.values.len());
        assert!(path.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*path.times.last().unwrap(), 1.05);
        assert_eq!(path.values[0], 0.3);
    }

    #[test]
    fn rejects_bad_knobs() {
        let p = params(1.0, 1.0);
        let s = DriftSpec::exact(1.0);
        assert!(simulate_path(&p, &s, 0.0, 1.0, 0.0, StreamId::default()).is_err());
        assert!(simulate_path(&p, &s, 0.0, -1.0, 0.1, StreamId::default()).is_err());
        assert!(simulate_scaled(&p, 1.0, &s, 0.0, 1.0, 0.1, StreamId::default()).is_err());
    }

    #[test]
    fn scaled_noiseless_matches_rescaled_original() {
        // kappa = 0.5, p = 2: X_t(u) = X(u t^beta) / t^(alpha/p) solves the same ODE
        let p = ModelParams::new(0.5, 2.0, 1.0, 0.5).unwrap();
        let s = p.scaling().unwrap();
        let t = 50.0;
        let drift = DriftSpec::exact(0.5);
        let x0 = 2.0;
        let orig = simulate_with_amplitude(&drift, 0.0, x0, 4.0, 1e-4, StreamId::default()).unwrap();
        let space = s.space_scale(p.p, t);
        let time = s.time_scale(t);
        let scaled = simulate_with_amplitude(
            &drift,
            0.0,
            x0 / space,
            4.0 / time,
            1e-4 / time,
            StreamId::default(),
        )
        .unwrap();
        for k in [1000usize, 10_000, 25_000] {
            let a = orig.values[k] / space;
            let b = scaled.values[k];
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn area_examples() {
        let path = SamplePath::from_samples(vec![0.0, 0.5, 1.0, 1.5, 2.0], vec![2.0; 5]).unwrap();
        assert!((area_functional(&path, 3.0, Some(1.5)).unwrap() - 12.0).abs() < 1e-12);
        let zero = SamplePath::from_samples(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(area_functional(&zero, 3.0, None).unwrap(), 0.0);
        let ramp = SamplePath::from_samples(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(area_functional(&ramp, 1.0, None).unwrap(), 0.5);
        // interpolated stop
        let half = area_functional(&ramp, 1.0, Some(0.5)).unwrap();
        assert!((half - 0.125).abs() < 1e-15);
        assert!(area_functional(&ramp, 1.0, Some(1.5)).is_err());
    }

    #[test]
    fn empty_path_rejected() {
        assert!(SamplePath::from_samples(vec![], vec![]).is_err());
        let p = SamplePath {
            times: vec![],
            values: vec![],
            seed: StreamId::default(),
            dt: 0.1,
        };
        assert!(area_functional(&p, 1.0, None).is_err());
    }

    #[test]
    fn csv_export_has_header() {
        let path = SamplePath::from_samples(vec![0.0, 0.5], vec![1.0, -1.0]).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("time,value"));
        assert_eq!(text.lines().count(), 3);
    }
}
