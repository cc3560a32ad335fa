//! Multi-component polynomial-phase chirp signals.
//!
//! A mixture of `N_c` chirps sampled at `f_s` has samples
//!
//! ```text
//! y(n) = Σ_c A_c(t) · exp(j2π Σ_p φ_{c,p} t^p) + w(n),   t = n / f_s
//! A_c(t) = Σ_a ρ_{c,a} t^a
//! ```
//!
//! for `n = 0..N-1`. Phase coefficients are in cycles, so `φ_{c,1}` is the
//! starting frequency in Hz. Noise `w` is circular complex Gaussian whose
//! variance is the total over both quadratures.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge scale used when a config does not pin `γ` explicitly.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-8;

/// Phase and amplitude polynomial coefficients of every chirp in a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    /// `phase[c][p-1]` is `φ_{c,p}` for `p = 1..=P`.
    pub phase: Vec<Vec<f64>>,
    /// `amplitude[c][a]` is `ρ_{c,a}` for `a = 0..=A_c`.
    pub amplitude: Vec<Vec<f64>>,
}

impl ChirpParams {
    pub fn new(phase: Vec<Vec<f64>>, amplitude: Vec<Vec<f64>>) -> Result<Self> {
        let params = Self { phase, amplitude };
        params.validate()?;
        Ok(params)
    }

    pub fn num_chirps(&self) -> usize {
        self.phase.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase.is_empty() {
            return Err(Error::InvalidConfig("no chirps".into()));
        }
        if self.amplitude.len() != self.phase.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phase rows but {} amplitude rows",
                self.phase.len(),
                self.amplitude.len()
            )));
        }
        let order = self.phase[0].len();
        if order == 0 {
            return Err(Error::InvalidConfig("phase order must be at least 1".into()));
        }
        for (c, row) in self.phase.iter().enumerate() {
            if row.len() != order {
                return Err(Error::DimensionMismatch(format!(
                    "chirp {c} has {} phase coefficients, expected {order}",
                    row.len()
                )));
            }
        }
        for (c, row) in self.amplitude.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::DimensionMismatch(format!(
                    "chirp {c} has no amplitude coefficients"
                )));
            }
        }
        let finite = self
            .phase
            .iter()
            .chain(self.amplitude.iter())
            .flatten()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Chirp-major flattening of the phase coefficients:
    /// `(c=0, p=1..P), (c=1, p=1..P), ...`.
    pub fn flat_phase(&self) -> Vec<f64> {
        self.phase.iter().flatten().copied().collect()
    }

    /// Inverse of [`ChirpParams::flat_phase`].
    pub fn unflatten_phase(flat: &[f64], num_chirps: usize) -> Vec<Vec<f64>> {
        let order = flat.len() / num_chirps.max(1);
        flat.chunks(order.max(1)).map(|c| c.to_vec()).collect()
    }

    /// Checks that both coefficient shapes agree with `config`.
    pub fn check_against(&self, config: &MixtureConfig) -> Result<()> {
        self.validate()?;
        if self.num_chirps() != config.num_chirps {
            return Err(Error::DimensionMismatch(format!(
                "params have {} chirps, config has {}",
                self.num_chirps(),
                config.num_chirps
            )));
        }
        if self.phase[0].len() != config.phase_order {
            return Err(Error::DimensionMismatch(format!(
                "params have phase order {}, config has {}",
                self.phase[0].len(),
                config.phase_order
            )));
        }
        for (c, (row, &order)) in self.amplitude.iter().zip(&config.amp_orders).enumerate() {
            if row.len() != order + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "chirp {c} has {} amplitude coefficients, config expects {}",
                    row.len(),
                    order + 1
                )));
            }
        }
        Ok(())
    }
}

/// Sampling grid and model orders of a chirp mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub num_samples: usize,
    pub sample_rate: f64,
    pub num_chirps: usize,
    pub phase_order: usize,
    pub amp_orders: Vec<usize>,
    /// Ridge `γ` on the amplitude subproblem. `None` selects the scaled
    /// default `1e-8 · tr(H*H) / M`, which does not depend on `φ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
}

impl MixtureConfig {
    pub fn new(
        num_samples: usize,
        sample_rate: f64,
        phase_order: usize,
        amp_orders: Vec<usize>,
    ) -> Result<Self> {
        let config = Self {
            num_samples,
            sample_rate,
            num_chirps: amp_orders.len(),
            phase_order,
            amp_orders,
            regularization: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_regularization(mut self, gamma: f64) -> Self {
        self.regularization = Some(gamma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be positive".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        if self.num_chirps == 0 || self.phase_order == 0 {
            return Err(Error::InvalidConfig(
                "num_chirps and phase_order must be positive".into(),
            ));
        }
        if self.amp_orders.len() != self.num_chirps {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitude orders for {} chirps",
                self.amp_orders.len(),
                self.num_chirps
            )));
        }
        if self.num_samples < self.num_basis_columns() {
            return Err(Error::InvalidConfig(format!(
                "num_samples {} below basis size {}",
                self.num_samples,
                self.num_basis_columns()
            )));
        }
        if let Some(gamma) = self.regularization {
            if !(gamma.is_finite() && gamma >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "regularization must be nonnegative, got {gamma}"
                )));
            }
        }
        Ok(())
    }

    /// `M = Σ_c (A_c + 1)`.
    pub fn num_basis_columns(&self) -> usize {
        self.amp_orders.iter().map(|a| a + 1).sum()
    }

    /// Dimension of the flattened phase vector, `N_c · P`.
    pub fn num_phase_params(&self) -> usize {
        self.num_chirps * self.phase_order
    }

    pub fn duration(&self) -> f64 {
        (self.num_samples as f64 - 1.0) / self.sample_rate
    }

    /// Column offset of chirp `c` inside the basis matrix.
    pub fn block_offset(&self, chirp: usize) -> usize {
        self.amp_orders[..chirp].iter().map(|a| a + 1).sum()
    }

    /// Resolved ridge `γ`.
    pub fn gamma(&self) -> f64 {
        self.regularization.unwrap_or_else(|| {
            let trace: f64 = self
                .amp_orders
                .iter()
                .map(|&order| {
                    (0..=order)
                        .map(|a| {
                            (0..self.num_samples)
                                .map(|n| (n as f64 / self.sample_rate).powi(2 * a as i32))
                                .sum::<f64>()
                        })
                        .sum::<f64>()
                })
                .sum();
            DEFAULT_RIDGE_SCALE * trace / self.num_basis_columns() as f64
        })
    }

    /// Same config with a different sample count (used for priming prefixes).
    pub fn with_num_samples(&self, num_samples: usize) -> Self {
        Self {
            num_samples,
            ..self.clone()
        }
    }
}

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|y(n)|²`.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Total phase `Σ_p φ_p t^p` in cycles, by Horner's rule.
pub(crate) fn phase_cycles(phase: &[f64], t: f64) -> f64 {
    phase.iter().rev().fold(0.0, |acc, &c| (acc + c) * t)
}

pub(crate) fn amplitude_at(amp: &[f64], t: f64) -> f64 {
    amp.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Noiseless mixture samples.
pub fn synthesize_mixture(params: &ChirpParams, config: &MixtureConfig) -> Result<ComplexSignal> {
    config.validate()?;
    params.check_against(config)?;
    let tau = std::f64::consts::TAU;
    let samples = (0..config.num_samples)
        .map(|n| {
            let t = n as f64 / config.sample_rate;
            params
                .phase
                .iter()
                .zip(&params.amplitude)
                .map(|(phase, amp)| {
                    Complex64::from_polar(amplitude_at(amp, t), tau * phase_cycles(phase, t))
                })
                .sum()
        })
        .collect();
    Ok(ComplexSignal::new(samples, config.sample_rate))
}

/// Largest `|IF_c(t)|` over every chirp and `t ∈ [0, (N-1)/f_s]`, where
/// `IF_c(t) = Σ_p p φ_{c,p} t^{p-1}` in Hz.
pub fn max_instantaneous_frequency(params: &ChirpParams, config: &MixtureConfig) -> f64 {
    let end = config.duration().max(0.0);
    params
        .phase
        .iter()
        .map(|phase| max_abs_on_interval(&if_coefficients(phase), end))
        .fold(0.0, f64::max)
}

/// Ascending coefficients of the instantaneous-frequency polynomial.
fn if_coefficients(phase: &[f64]) -> Vec<f64> {
    phase
        .iter()
        .enumerate()
        .map(|(k, &c)| (k + 1) as f64 * c)
        .collect()
}

fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Max of `|poly|` on `[0, end]`: endpoints plus stationary points, located
/// by sign changes of the derivative on a fine partition and bisection.
fn max_abs_on_interval(coeffs: &[f64], end: f64) -> f64 {
    const SEGMENTS: usize = 512;
    let mut best = poly_eval(coeffs, 0.0).abs().max(poly_eval(coeffs, end).abs());
    let deriv = poly_derivative(coeffs);
    if deriv.iter().all(|&c| c == 0.0) || end == 0.0 {
        return best;
    }
    let step = end / SEGMENTS as f64;
    let mut lo = 0.0;
    let mut f_lo = poly_eval(&deriv, lo);
    for i in 1..=SEGMENTS {
        let hi = if i == SEGMENTS { end } else { i as f64 * step };
        let f_hi = poly_eval(&deriv, hi);
        if f_lo == 0.0 {
            best = best.max(poly_eval(coeffs, lo).abs());
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = poly_eval(&deriv, mid);
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            best = best.max(poly_eval(coeffs, 0.5 * (a + b)).abs());
        }
        lo = hi;
        f_lo = f_hi;
    }
    best
}

/// Total complex noise variance giving `snr_db` against the signal's
/// empirical mean power.
/// Rejects mixtures whose instantaneous frequency reaches `f_s/2`.
pub fn check_nyquist(params: &ChirpParams, config: &MixtureConfig) -> Result<()> {
    let max_if = max_instantaneous_frequency(params, config);
    let nyquist = config.sample_rate / 2.0;
    if max_if >= nyquist {
        return Err(Error::InvalidConfig(format!(
            "instantaneous frequency reaches {max_if:.3} Hz, must stay below f_s/2 = {nyquist}"
        )));
    }
    Ok(())
}

pub fn snr_to_noise_variance(signal: &ComplexSignal, snr_db: f64) -> Result<f64> {
    let power = signal.mean_power();
    if power <= 0.0 || !power.is_finite() {
        return Err(Error::ZeroPowerSignal);
    }
    Ok(power / 10f64.powf(snr_db / 10.0))
}

/// Adds circular complex Gaussian noise with total variance `variance`
/// (`variance / 2` per quadrature). Deterministic in `seed`.
pub fn add_complex_gaussian_noise(
    signal: &ComplexSignal,
    variance: f64,
    seed: u64,
) -> Result<ComplexSignal> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    if variance == 0.0 {
        return Ok(signal.clone());
    }
    let scale = (variance / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = signal
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(scale * re, scale * im)
        })
        .collect();
    Ok(ComplexSignal::new(samples, signal.sample_rate))
}

/// First `new_length` samples.
pub fn truncate_prefix(signal: &ComplexSignal, new_length: usize) -> Result<ComplexSignal> {
    if new_length == 0 || new_length > signal.len() {
        return Err(Error::PrefixOutOfRange {
            requested: new_length,
            available: signal.len(),
        });
    }
    Ok(ComplexSignal::new(
        signal.samples[..new_length].to_vec(),
        signal.sample_rate,
    ))
}

/// Default priming prefix length `⌈N/4⌉`.
pub fn default_prefix_length(num_samples: usize) -> usize {
    num_samples.div_ceil(4)
}

/// Empirical SNR in dB of `noisy` against the clean reference.
pub fn empirical_snr_db(clean: &ComplexSignal, noisy: &ComplexSignal) -> f64 {
    let noise_power = clean
        .samples
        .iter()
        .zip(&noisy.samples)
        .map(|(c, n)| (n - c).norm_sqr())
        .sum::<f64>()
        / clean.len() as f64;
    10.0 * (clean.mean_power() / noise_power).log10()
}
