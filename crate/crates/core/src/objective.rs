//! Variable-projection objective over the phase coefficients.
//!
//! For a phase vector `φ` the amplitudes enter linearly through the basis
//! `H(φ)` whose column `(c, a)` is `t^a · exp(j2π Σ_p φ_{c,p} t^p)`. The ridge
//! solution `b̂ = G⁻¹ H* y` with `G = H*H + γI` is substituted back, leaving
//!
//! ```text
//! J(φ) = y* P⊥ y,   P⊥ = I − H G⁻¹ H*
//! ∂J/∂φ_{c,p} = −2 Re[ r* (∂H/∂φ_{c,p}) b̂ ],   r = P⊥ y = y − H b̂
//! ```
//!
//! The hot path never forms `H`: every column of chirp `c` shares the
//! phasor `e_c(n)`, so `G` reduces to time moments `Σ t^k` (diagonal blocks)
//! and `Σ t^k conj(e_c) e_c'` (cross blocks). [`build_basis_matrix`] and
//! [`solve_amplitudes`] are the explicit route and are kept for diagnostics
//! and cross-checks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Cholesky};
use crate::signal::{ComplexSignal, MixtureConfig};

const TAU: f64 = std::f64::consts::TAU;

/// A differentiable scalar objective on `R^d`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.value_and_gradient(x).map(|(_, g)| g)
    }
}

/// Measured signal plus everything precomputable about the time grid.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    y: Vec<Complex64>,
    y_energy: f64,
    /// `time_powers[k][n] = (n / f_s)^k`.
    time_powers: Vec<Vec<f64>>,
    /// `Σ_n (n / f_s)^k`.
    moments: Vec<f64>,
    config: MixtureConfig,
    gamma: f64,
}

impl ObjectiveContext {
    pub fn new(signal: &ComplexSignal, config: &MixtureConfig) -> Result<Self> {
        config.validate()?;
        if signal.len() != config.num_samples {
            return Err(Error::DimensionMismatch(format!(
                "signal has {} samples, config expects {}",
                signal.len(),
                config.num_samples
            )));
        }
        if (signal.sample_rate - config.sample_rate).abs() > 1e-9 * config.sample_rate {
            return Err(Error::DimensionMismatch(format!(
                "signal sampled at {} Hz, config at {} Hz",
                signal.sample_rate, config.sample_rate
            )));
        }
        let max_amp = config.amp_orders.iter().copied().max().unwrap_or(0);
        let max_power = config.phase_order.max(2 * max_amp);
        let time: Vec<f64> = (0..config.num_samples)
            .map(|n| n as f64 / config.sample_rate)
            .collect();
        let mut time_powers = Vec::with_capacity(max_power + 1);
        time_powers.push(vec![1.0; time.len()]);
        for k in 1..=max_power {
            let prev: &Vec<f64> = &time_powers[k - 1];
            let next = prev.iter().zip(&time).map(|(p, t)| p * t).collect();
            time_powers.push(next);
        }
        let moments = time_powers.iter().map(|tp| tp.iter().sum()).collect();
        Ok(Self {
            y_energy: signal.energy(),
            y: signal.samples.clone(),
            time_powers,
            moments,
            gamma: config.gamma(),
            config: config.clone(),
        })
    }

    /// Context over the first `len` samples, for priming.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        let signal = ComplexSignal::new(self.y.clone(), self.config.sample_rate);
        let truncated = crate::signal::truncate_prefix(&signal, len)?;
        Self::new(&truncated, &self.config.with_num_samples(len))
    }

    pub fn config(&self) -> &MixtureConfig {
        &self.config
    }

    pub fn signal(&self) -> &[Complex64] {
        &self.y
    }

    pub fn signal_energy(&self) -> f64 {
        self.y_energy
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn time_power(&self, power: usize) -> &[f64] {
        &self.time_powers[power]
    }

    fn check_phi(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.config.num_phase_params() {
            return Err(Error::DimensionMismatch(format!(
                "phase vector has {} entries, expected {}",
                phi.len(),
                self.config.num_phase_params()
            )));
        }
        Ok(())
    }

    /// `exp(j2π Σ_p φ_{c,p} t^p)` for every chirp.
    fn phasors(&self, phi: &[f64]) -> Vec<Vec<Complex64>> {
        let order = self.config.phase_order;
        phi.chunks(order)
            .map(|coeffs| {
                (0..self.config.num_samples)
                    .map(|n| {
                        let cycles: f64 = coeffs
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * self.time_powers[k + 1][n])
                            .sum();
                        Complex64::from_polar(1.0, TAU * (cycles - cycles.round()))
                    })
                    .collect()
            })
            .collect()
    }

    /// Normal matrix `G` and right-hand side `H* y` from time moments.
    fn normal_equations(&self, phasors: &[Vec<Complex64>]) -> (CMatrix, Vec<Complex64>) {
        let cfg = &self.config;
        let m = cfg.num_basis_columns();
        let mut g = CMatrix::zeros(m, m);
        let mut rhs = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); cfg.num_samples];
        for c in 0..cfg.num_chirps {
            let off = cfg.block_offset(c);
            let order = cfg.amp_orders[c];
            for a in 0..=order {
                for b in 0..=order {
                    g.set(off + a, off + b, Complex64::new(self.moments[a + b], 0.0));
                }
                let d = g.get(off + a, off + a);
                g.set(off + a, off + a, d + self.gamma);
            }
            for (s, (e, y)) in scratch.iter_mut().zip(phasors[c].iter().zip(&self.y)) {
                *s = e.conj() * y;
            }
            for a in 0..=order {
                rhs[off + a] = weighted_sum(&scratch, &self.time_powers[a]);
            }
            for c2 in c + 1..cfg.num_chirps {
                let off2 = cfg.block_offset(c2);
                let order2 = cfg.amp_orders[c2];
                for (s, (e1, e2)) in scratch
                    .iter_mut()
                    .zip(phasors[c].iter().zip(&phasors[c2]))
                {
                    *s = e1.conj() * e2;
                }
                let cross: Vec<Complex64> = (0..=order + order2)
                    .map(|k| weighted_sum(&scratch, &self.time_powers[k]))
                    .collect();
                for a in 0..=order {
                    for b in 0..=order2 {
                        let v = cross[a + b];
                        g.set(off + a, off2 + b, v);
                        g.set(off2 + b, off + a, v.conj());
                    }
                }
            }
        }
        (g, rhs)
    }

    fn factor(&self, g: &CMatrix) -> Result<Cholesky> {
        Cholesky::factor(g, self.gamma == 0.0)
    }

    /// Per-chirp model components `s_c(n) = e_c(n) Σ_a b_{c,a} t^a`.
    fn components(&self, phasors: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Vec<Complex64>> {
        let cfg = &self.config;
        (0..cfg.num_chirps)
            .map(|c| {
                let off = cfg.block_offset(c);
                let coeffs = &b[off..=off + cfg.amp_orders[c]];
                phasors[c]
                    .iter()
                    .enumerate()
                    .map(|(n, e)| {
                        let t = self.time_powers.get(1).map_or(0.0, |tp| tp[n]);
                        let amp = coeffs
                            .iter()
                            .rev()
                            .fold(Complex64::new(0.0, 0.0), |acc, &v| acc * t + v);
                        e * amp
                    })
                    .collect()
            })
            .collect()
    }

    fn evaluate(&self, phi: &[f64], with_gradient: bool) -> Result<(f64, Vec<f64>)> {
        self.check_phi(phi)?;
        let phasors = self.phasors(phi);
        let (g, rhs) = self.normal_equations(&phasors);
        let chol = self.factor(&g)?;
        let b = chol.solve(&rhs);
        let components = self.components(&phasors, &b);
        let mut residual = self.y.clone();
        for comp in &components {
            for (r, s) in residual.iter_mut().zip(comp) {
                *r -= s;
            }
        }
        let value = self
            .y
            .iter()
            .zip(&residual)
            .map(|(y, r)| (y.conj() * r).re)
            .sum::<f64>();
        if !with_gradient {
            return Ok((value, Vec::new()));
        }
        let order = self.config.phase_order;
        let mut grad = Vec::with_capacity(self.config.num_phase_params());
        for comp in &components {
            let cross: Vec<Complex64> = residual
                .iter()
                .zip(comp)
                .map(|(r, s)| r.conj() * s)
                .collect();
            for p in 1..=order {
                grad.push(2.0 * TAU * weighted_sum(&cross, &self.time_powers[p]).im);
            }
        }
        Ok((value, grad))
    }
}

#[inline]
fn weighted_sum(values: &[Complex64], weights: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (v, w) in values.iter().zip(weights) {
        re += v.re * w;
        im += v.im * w;
    }
    Complex64::new(re, im)
}

impl Objective for ObjectiveContext {
    fn dim(&self) -> usize {
        self.config.num_phase_params()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x, false).map(|(v, _)| v)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(x, true)
    }
}

/// Explicit `N × M` basis matrix, blocks ordered by chirp then amplitude power.
pub fn build_basis_matrix(phi: &[f64], ctx: &ObjectiveContext) -> Result<CMatrix> {
    ctx.check_phi(phi)?;
    let cfg = ctx.config();
    let phasors = ctx.phasors(phi);
    let mut h = CMatrix::zeros(cfg.num_samples, cfg.num_basis_columns());
    for c in 0..cfg.num_chirps {
        let off = cfg.block_offset(c);
        for a in 0..=cfg.amp_orders[c] {
            let tp = &ctx.time_powers[a];
            for (dst, (e, w)) in h
                .column_mut(off + a)
                .iter_mut()
                .zip(phasors[c].iter().zip(tp))
            {
                *dst = e * w;
            }
        }
    }
    Ok(h)
}

/// `∂H/∂φ_{c,p}` (zero-based chirp, one-based power): zero outside block
/// `chirp`, where it equals `j2π diag(t^p) H_c`.
pub fn build_basis_derivative(
    phi: &[f64],
    chirp: usize,
    power: usize,
    ctx: &ObjectiveContext,
) -> Result<CMatrix> {
    let cfg = ctx.config();
    if chirp >= cfg.num_chirps || power == 0 || power > cfg.phase_order {
        return Err(Error::IndexOutOfRange(format!(
            "(chirp {chirp}, power {power}) outside {} chirps of order {}",
            cfg.num_chirps, cfg.phase_order
        )));
    }
    let h = build_basis_matrix(phi, ctx)?;
    let mut d = CMatrix::zeros(h.rows(), h.cols());
    let off = cfg.block_offset(chirp);
    let tp = &ctx.time_powers[power];
    for col in off..=off + cfg.amp_orders[chirp] {
        for (n, dst) in d.column_mut(col).iter_mut().enumerate() {
            *dst = Complex64::new(0.0, TAU * tp[n]) * h.get(n, col);
        }
    }
    Ok(d)
}

/// Ridge least-squares solution for a given basis.
#[derive(Debug, Clone)]
pub struct BasisFactorization {
    pub basis: CMatrix,
    pub normal_factor: Cholesky,
    pub amplitudes: Vec<Complex64>,
    pub residual: Vec<Complex64>,
}

/// `b̂ = (H*H + γI)⁻¹ H* y` on an explicit basis.
pub fn solve_amplitudes(h: CMatrix, ctx: &ObjectiveContext) -> Result<BasisFactorization> {
    if h.rows() != ctx.y.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, signal has {} samples",
            h.rows(),
            ctx.y.len()
        )));
    }
    let g = h.gram(ctx.gamma);
    let normal_factor = ctx.factor(&g)?;
    let amplitudes = normal_factor.solve(&h.adjoint_mul_vec(&ctx.y));
    let fitted = h.mul_vec(&amplitudes);
    let residual = ctx.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(BasisFactorization {
        basis: h,
        normal_factor,
        amplitudes,
        residual,
    })
}

/// `J(φ) = Re(y* r)` with `r = y − H b̂`.
pub fn objective_value(phi: &[f64], ctx: &ObjectiveContext) -> Result<f64> {
    ctx.value(phi)
}

/// Analytic gradient in chirp-major order.
pub fn objective_gradient(phi: &[f64], ctx: &ObjectiveContext) -> Result<Vec<f64>> {
    ctx.gradient(phi)
}

/// One draw of the Gaussian-smoothed gradient, `∇J(θ + σε)` with its `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedGradientSample {
    pub gradient: Vec<f64>,
    pub perturbation: Vec<f64>,
    pub sigma: f64,
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws `ε ~ N(0, I)` and evaluates the gradient at `θ + σε`.
pub fn smoothed_gradient_sample<O, R>(
    objective: &O,
    theta: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<SmoothedGradientSample>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let eps = standard_normal_vec(rng, objective.dim());
    smoothed_gradient_with(objective, theta, sigma, eps)
}

/// Same as [`smoothed_gradient_sample`] with a caller-supplied perturbation.
pub fn smoothed_gradient_with<O>(
    objective: &O,
    theta: &[f64],
    sigma: f64,
    perturbation: Vec<f64>,
) -> Result<SmoothedGradientSample>
where
    O: Objective + ?Sized,
{
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "smoothing sigma must be nonnegative, got {sigma}"
        )));
    }
    let point = perturbed(theta, sigma, &perturbation);
    let gradient = objective.gradient(&point)?;
    Ok(SmoothedGradientSample {
        gradient,
        perturbation,
        sigma,
    })
}

pub(crate) fn perturbed(theta: &[f64], sigma: f64, eps: &[f64]) -> Vec<f64> {
    theta.iter().zip(eps).map(|(t, e)| t + sigma * e).collect()
}

/// Single-sample Stein estimate `(1/σ) εᵀ ∇J(θ + σε)` of `tr ∇²J_σ(θ)`.
pub fn hessian_trace_estimate(sample: &SmoothedGradientSample) -> Result<f64> {
    stein_trace(&sample.perturbation, &sample.gradient, sample.sigma)
}

pub(crate) fn stein_trace(eps: &[f64], gradient: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::UndefinedEstimator);
    }
    Ok(eps.iter().zip(gradient).map(|(e, g)| e * g).sum::<f64>() / sigma)
}

/// Amplitude estimates at a fixed phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEstimate {
    /// Real polynomial coefficients `ρ̂[c][a]`.
    pub rho: Vec<Vec<f64>>,
    /// Unconstrained complex ridge solution `b̂`.
    pub complex: Vec<Complex64>,
}

/// Recovers `ρ̂` by real-constrained ridge least squares on
/// `[Re H; Im H] ρ ≈ [Re y; Im y]`, whose normal equations are
/// `Re(H*H) + γI` and `Re(H* y)`.
pub fn recover_amplitudes(phi_hat: &[f64], ctx: &ObjectiveContext) -> Result<AmplitudeEstimate> {
    ctx.check_phi(phi_hat)?;
    if phi_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite phase estimate".into()));
    }
    let phasors = ctx.phasors(phi_hat);
    let (g, rhs) = ctx.normal_equations(&phasors);
    let complex = ctx.factor(&g)?.solve(&rhs);

    let m = g.rows();
    let mut g_real = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g_real.set(i, j, Complex64::new(g.get(i, j).re, 0.0));
        }
    }
    let rhs_real: Vec<Complex64> = rhs.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let real = ctx.factor(&g_real)?.solve(&rhs_real);
    let cfg = ctx.config();
    let rho = (0..cfg.num_chirps)
        .map(|c| {
            let off = cfg.block_offset(c);
            real[off..=off + cfg.amp_orders[c]].iter().map(|v| v.re).collect()
        })
        .collect();
    Ok(AmplitudeEstimate { rho, complex })
}
