//! Tail asymptotics of additive functionals of sub-linear Langevin diffusions.
//!
//! The model is
//!
//! ```text
//! dX = -sgn(X) |X|^kappa dt + sigma dB,    0 < kappa <= 1,
//! ```
//!
//! and the object of interest is the time average `A(t) = (1/t) ∫_0^t |X_s|^p ds`
//! for `p > 2 kappa`. Its upper tail decays like
//! `exp(-t^r (b - E|X(inf)|^p)^r V*)`, where `V*` is a variational constant.
//!
//! The crate provides:
//!
//! * an Euler–Maruyama simulator with replayable noise ([`sde`], [`rng`]),
//! * the drift families used in the proofs ([`drift`]),
//! * the scaling exponents of the tail ([`params`]),
//! * the stationary law in closed form ([`stationary`]),
//! * regeneration-cycle detection and regenerative estimators ([`cycles`]),
//! * a solver for the variational constant ([`variational`], on top of
//!   [`optim`] and [`quadrature`]),
//! * first-passage density bounds and exit probabilities ([`fpt`]),
//! * a fixed-effort multilevel splitting engine ([`splitting`]),
//! * the tail-curve, big-jump and renewal experiments ([`experiments`]),
//! * small statistical helpers ([`stats`]) and a shared error type
//!   ([`error`]).

pub mod cycles;
pub mod drift;
pub mod error;
pub mod experiments;
pub mod fpt;
pub mod optim;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod splitting;
pub mod stationary;
pub mod stats;
pub mod variational;

pub use drift::{Drift, DriftFamily, DriftSpec};
pub use error::{Error, Result};
pub use params::{ModelParams, ScalingExponents};
pub use sde::{area_functional, simulate_path, SamplePath};
pub use stationary::{density, moment_p, StationaryLaw};
