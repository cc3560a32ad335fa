//! Estimation of polynomial-phase chirp mixtures.
//!
//! The phase coefficients are found by minimizing the variable-projection
//! objective `J(φ) = y* P⊥(φ) y` with Langevin Monte Carlo chains (plain,
//! noise-annealed, and curvature-guided smoothing); amplitudes follow by
//! linear least squares once the phases are fixed.
//!
//! * [`signal`]: mixture synthesis, noise calibration, prefixes.
//! * [`objective`]: basis matrices, `J`, its gradient, smoothing and the
//!   Stein trace estimate.
//! * [`sampler`]: the three chains, multistart priming, run selection.
//! * [`harness`]: experiment specs, statistics and output files.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod sampler;
pub mod signal;

pub use error::{Error, Result};
pub use objective::{Objective, ObjectiveContext};
pub use sampler::{SamplerConfig, Variant};
pub use signal::{ChirpParams, ComplexSignal, MixtureConfig};
