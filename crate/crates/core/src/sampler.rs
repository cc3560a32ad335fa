//! Langevin Monte Carlo chains over the phase vector.
//!
//! Three variants share one loop:
//!
//! * `LMC`: `φ' = φ − η∇J(φ) + √(2η/β) ξ`.
//! * `NA-LMC`: the drift uses `∇J(φ + σε)` with `σ` from a fixed step schedule.
//! * `CG-LMC`: same smoothed drift; `σ` shrinks by `μ_σ |tr ∇²J|`, clamped at
//!   `σ_min`, where the trace is the Stein estimate built from the same `ε`.
//!
//! The Metropolis-Hastings step targets the unsmoothed `π ∝ exp(−βJ)`. For
//! smoothed variants `ε` is an auxiliary variable drawn fresh each
//! iteration, and the reverse drift is evaluated with that same `ε`, which
//! keeps the accept/reject rule exact for `π`.
//!
//! Every variant consumes random numbers in the same order (`ε`, `ξ`, `u`), so
//! with `σ₀ = μ_σ = 0` CG-LMC reproduces LMC bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{perturbed, standard_normal_vec, stein_trace, Objective, ObjectiveContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "LMC")]
    Lmc,
    #[serde(rename = "NA-LMC")]
    NaLmc,
    #[serde(rename = "CG-LMC")]
    CgLmc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Lmc, Variant::NaLmc, Variant::CgLmc];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lmc => "LMC",
            Variant::NaLmc => "NA-LMC",
            Variant::CgLmc => "CG-LMC",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "LMC" => Ok(Variant::Lmc),
            "NA-LMC" | "NALMC" => Ok(Variant::NaLmc),
            "CG-LMC" | "CGLMC" => Ok(Variant::CgLmc),
            other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// One step of the NA-LMC smoothing schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealLevel {
    pub sigma: f64,
    pub iters: usize,
}

/// Multistart and short-signal priming settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrimingConfig {
    /// Prefix length used for priming; `None` means `⌈N/4⌉`.
    pub prefix_length: Option<usize>,
    pub priming_iters: usize,
    pub num_starts: usize,
    /// Full-length chains launched from the best-ranked primed starts.
    pub num_chains: usize,
    /// Cap on the number of prefix lengths visited, each half the next (see
    /// [`priming_ladder`]); `None` halves down to the shortest usable prefix.
    pub stages: Option<usize>,
    /// Base step size for priming, `η` when unset. On a prefix of length `L`
    /// it is scaled by `(N/L)³`, the ratio of first-order curvatures.
    pub step_size: Option<f64>,
    /// Base smoothing for priming, `σ₀` when unset. Scaled by `N/L` to match
    /// the wider main lobe of a shorter signal.
    pub sigma0: Option<f64>,
}

impl Default for PrimingConfig {
    fn default() -> Self {
        Self {
            prefix_length: None,
            priming_iters: 200,
            num_starts: 64,
            num_chains: 3,
            stages: None,
            step_size: None,
            sigma0: None,
        }
    }
}

/// Chain hyperparameters. Defaults assume a signal normalized to unit mean
/// power, which is what the harness feeds the samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// `η`
    pub step_size: f64,
    /// `β`
    pub inverse_temperature: f64,
    /// Initial smoothing `σ₀` for CG-LMC.
    pub sigma0: f64,
    pub sigma_min: f64,
    /// `μ_σ`
    pub sigma_step: f64,
    pub max_iters: usize,
    /// NA-LMC smoothing levels, strictly decreasing in `sigma`.
    pub anneal_schedule: Vec<AnnealLevel>,
    pub mh_enabled: bool,
    /// Optional exponential moving average decay for the trace estimate.
    pub trace_ema: Option<f64>,
    pub priming: PrimingConfig,
    pub seed: u64,
}

impl Default for SamplerConfig {
    /// Tuned on a 128-sample single sinusoid at 12 dB. Curvature in the
    /// first-order coefficient grows like `N³/f_s²`, so longer signals want
    /// `step_size` scaled down accordingly.
    fn default() -> Self {
        Self {
            step_size: 0.02,
            inverse_temperature: 1e4,
            sigma0: 5.0,
            sigma_min: 1e-3,
            sigma_step: 1e-2,
            max_iters: 1000,
            anneal_schedule: vec![
                AnnealLevel { sigma: 5.0, iters: 250 },
                AnnealLevel { sigma: 1.0, iters: 250 },
                AnnealLevel { sigma: 0.2, iters: 250 },
                AnnealLevel { sigma: 0.0, iters: 250 },
            ],
            mh_enabled: true,
            trace_ema: None,
            priming: PrimingConfig::default(),
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.inverse_temperature > 0.0) {
            return bad(format!(
                "inverse_temperature must be positive, got {}",
                self.inverse_temperature
            ));
        }
        if !(self.sigma_min >= 0.0 && self.sigma0 >= self.sigma_min) {
            return bad(format!(
                "need 0 <= sigma_min <= sigma0, got sigma_min={} sigma0={}",
                self.sigma_min, self.sigma0
            ));
        }
        if !(self.sigma_step >= 0.0) {
            return bad(format!("sigma_step must be nonnegative, got {}", self.sigma_step));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self
            .anneal_schedule
            .windows(2)
            .any(|w| !(w[1].sigma < w[0].sigma))
        {
            return bad("anneal_schedule sigma levels must be strictly decreasing".into());
        }
        if self.anneal_schedule.iter().any(|l| !(l.sigma >= 0.0)) {
            return bad("anneal_schedule sigma levels must be nonnegative".into());
        }
        if let Some(decay) = self.trace_ema {
            if !(0.0..1.0).contains(&decay) {
                return bad(format!("trace_ema decay must be in [0, 1), got {decay}"));
            }
        }
        if self.priming.num_starts == 0 || self.priming.num_chains == 0 {
            return bad("priming needs at least one start and one chain".into());
        }
        // Keeps start, chain and noise seeds of one run disjoint.
        if self.priming.num_starts as u64 > CHAIN_SEED_OFFSET
            || self.priming.num_chains as u64 > NOISE_SEED_SLOT - CHAIN_SEED_OFFSET
        {
            return bad(format!(
                "at most {CHAIN_SEED_OFFSET} starts and {} chains per run",
                NOISE_SEED_SLOT - CHAIN_SEED_OFFSET
            ));
        }
        if let Some(eta) = self.priming.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("priming step_size must be positive, got {eta}"));
            }
        }
        if let Some(sigma) = self.priming.sigma0 {
            if !(sigma >= self.sigma_min && sigma.is_finite()) {
                return bad(format!("priming sigma0 must be at least sigma_min, got {sigma}"));
            }
        }
        Ok(())
    }

    fn noise_scale(&self) -> f64 {
        (2.0 * self.step_size / self.inverse_temperature).sqrt()
    }
}

/// Snapshot of a chain between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub phi: Vec<f64>,
    pub sigma: f64,
    pub iter: usize,
    pub last_value: f64,
    pub last_trace_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iter: usize,
    pub phi: Vec<f64>,
    pub value: f64,
    /// Smoothing level used during this iteration.
    pub sigma: f64,
    /// Stein estimate of `tr ∇²J_σ`; absent when `σ = 0`.
    pub trace_estimate: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub variant: Variant,
    pub records: Vec<ChainRecord>,
    pub final_state: ChainStateSummary,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStateSummary {
    pub phi: Vec<f64>,
    pub value: f64,
    pub sigma: f64,
    pub iters: usize,
}

impl ChainTrace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.accepted).count() as f64 / self.records.len() as f64
    }

    /// `true` when the recorded `σ` never increases and never drops below
    /// `sigma_min`.
    pub fn sigma_is_monotone(&self, sigma_min: f64) -> bool {
        self.records.iter().all(|r| r.sigma >= sigma_min)
            && self.records.windows(2).all(|w| w[1].sigma <= w[0].sigma)
    }
}

/// Unadjusted Langevin proposal `φ − η g + √(2η/β) ξ`.
pub fn lmc_propose<R: Rng + ?Sized>(
    phi: &[f64],
    grad: &[f64],
    config: &SamplerConfig,
    rng: &mut R,
) -> Vec<f64> {
    let xi = standard_normal_vec(rng, phi.len());
    let scale = config.noise_scale();
    phi.iter()
        .zip(grad)
        .zip(&xi)
        .map(|((p, g), x)| p - config.step_size * g + scale * x)
        .collect()
}

/// `log min(1, π(φ')q(φ|φ') / π(φ)q(φ'|φ))` for `π ∝ exp(−βJ)` and the
/// Gaussian Langevin kernel `q(x'|x) = N(x − η g(x), 2η/β I)`.
pub fn mala_log_acceptance(
    phi_old: &[f64],
    phi_new: &[f64],
    grad_old: &[f64],
    grad_new: &[f64],
    value_old: f64,
    value_new: f64,
    config: &SamplerConfig,
) -> f64 {
    let eta = config.step_size;
    let beta = config.inverse_temperature;
    let forward: f64 = phi_new
        .iter()
        .zip(phi_old)
        .zip(grad_old)
        .map(|((n, o), g)| (n - o + eta * g).powi(2))
        .sum();
    let reverse: f64 = phi_old
        .iter()
        .zip(phi_new)
        .zip(grad_new)
        .map(|((o, n), g)| (o - n + eta * g).powi(2))
        .sum();
    let log_ratio = -beta * (value_new - value_old) + beta / (4.0 * eta) * (forward - reverse);
    log_ratio.min(0.0)
}

/// `max(σ_min, σ − μ_σ |trace|)`.
pub fn sigma_update(sigma: f64, trace_estimate: f64, config: &SamplerConfig) -> f64 {
    config
        .sigma_min
        .max(sigma - config.sigma_step * trace_estimate.abs())
}

/// Piecewise-constant NA-LMC smoothing level; the last level is held.
pub fn na_lmc_sigma(iter: usize, config: &SamplerConfig) -> Result<f64> {
    let last = config.anneal_schedule.last().ok_or(Error::EmptySchedule)?;
    let mut start = 0;
    for level in &config.anneal_schedule {
        if iter < start + level.iters {
            return Ok(level.sigma);
        }
        start += level.iters;
    }
    Ok(last.sigma)
}

pub(crate) fn now() -> Option<std::time::Instant> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        Some(std::time::Instant::now())
    }
    #[cfg(target_arch = "wasm32")]
    {
        None
    }
}

/// Runs one chain for `config.max_iters` iterations from `init`.
pub fn run_chain<O: Objective + ?Sized>(
    variant: Variant,
    objective: &O,
    init: &[f64],
    config: &SamplerConfig,
) -> Result<ChainTrace> {
    run_chain_with(variant, objective, init, config, config.max_iters, 0)
}

pub(crate) fn run_chain_with<O: Objective + ?Sized>(
    variant: Variant,
    objective: &O,
    init: &[f64],
    config: &SamplerConfig,
    iters: usize,
    stream: u64,
) -> Result<ChainTrace> {
    config.validate()?;
    if variant == Variant::NaLmc && config.anneal_schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    if init.len() != objective.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} entries, objective has {}",
            init.len(),
            objective.dim()
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("initial point is not finite".into()));
    }
    let started = now();
    let dim = objective.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let mut phi = init.to_vec();
    let (mut value, grad0) = objective.value_and_gradient(&phi)?;
    let mut grad_at_phi = Some(grad0);
    let mut sigma = match variant {
        Variant::CgLmc => config.sigma0,
        _ => 0.0,
    };
    let mut ema: Option<f64> = None;
    let mut records = Vec::with_capacity(iters);

    let abort = |iter: usize, records: Vec<ChainRecord>, phi: Vec<f64>, value: f64, sigma: f64| {
        Error::ChainAborted {
            iter,
            trace: Box::new(ChainTrace {
                variant,
                final_state: ChainStateSummary {
                    phi,
                    value,
                    sigma,
                    iters: records.len(),
                },
                records,
                wall_time_secs: 0.0,
            }),
        }
    };
    if !value.is_finite() {
        return Err(abort(0, records, phi, value, sigma));
    }

    for iter in 0..iters {
        let level = match variant {
            Variant::Lmc => 0.0,
            Variant::NaLmc => na_lmc_sigma(iter, config)?,
            Variant::CgLmc => sigma,
        };
        let eps = standard_normal_vec(&mut rng, dim);
        let grad_old = match (level == 0.0, grad_at_phi.take()) {
            (true, Some(g)) => g,
            _ => objective.gradient(&perturbed(&phi, level, &eps))?,
        };
        let trace_estimate = if level > 0.0 {
            Some(stein_trace(&eps, &grad_old, level)?)
        } else {
            None
        };
        let proposal = lmc_propose(&phi, &grad_old, config, &mut rng);
        let u: f64 = rng.random();

        let (value_new, grad_new) = if level == 0.0 {
            match objective.value_and_gradient(&proposal) {
                Ok(v) => v,
                Err(Error::RankDeficient { .. }) => (f64::NAN, Vec::new()),
                Err(e) => return Err(e),
            }
        } else {
            let v = objective.value(&proposal).unwrap_or(f64::NAN);
            let g = if config.mh_enabled && v.is_finite() {
                objective.gradient(&perturbed(&proposal, level, &eps))?
            } else {
                Vec::new()
            };
            (v, g)
        };
        if !value_new.is_finite() {
            return Err(abort(iter, records, phi, value, level));
        }

        let accepted = if config.mh_enabled {
            let log_alpha = mala_log_acceptance(
                &phi, &proposal, &grad_old, &grad_new, value, value_new, config,
            );
            u.ln() < log_alpha
        } else {
            true
        };
        if accepted {
            phi = proposal;
            value = value_new;
            grad_at_phi = (level == 0.0).then_some(grad_new);
        } else if level == 0.0 {
            grad_at_phi = Some(grad_old);
        }

        records.push(ChainRecord {
            iter,
            phi: phi.clone(),
            value,
            sigma: level,
            trace_estimate,
            accepted,
        });

        if variant == Variant::CgLmc {
            let curvature = match (trace_estimate, config.trace_ema) {
                (Some(est), Some(decay)) => {
                    let smoothed = ema.map_or(est.abs(), |m| decay * m + (1.0 - decay) * est.abs());
                    ema = Some(smoothed);
                    Some(smoothed)
                }
                (est, _) => est,
            };
            sigma = sigma_update(sigma, curvature.unwrap_or(0.0), config);
        }
    }

    let wall_time_secs = started.map_or(0.0, |s| s.elapsed().as_secs_f64());
    Ok(ChainTrace {
        variant,
        final_state: ChainStateSummary {
            phi,
            value,
            sigma,
            iters: records.len(),
        },
        records,
        wall_time_secs,
    })
}

impl ChainTrace {
    pub fn state(&self) -> ChainState {
        let last = self.records.last();
        ChainState {
            phi: self.final_state.phi.clone(),
            sigma: self.final_state.sigma,
            iter: self.final_state.iters,
            last_value: self.final_state.value,
            last_trace_estimate: last.and_then(|r| r.trace_estimate),
        }
    }
}

/// Uniform draw from the initialization box: `φ_{c,1} ∈ [0, f_s/2]` and
/// `φ_{c,p} ∈ [−L_p, L_p]` with `L_p = (f_s/2) / (p T^{p−1})`, the largest
/// magnitude for which the order-`p` term alone stays below Nyquist.
pub fn draw_initial_phase<R: Rng + ?Sized>(ctx: &ObjectiveContext, rng: &mut R) -> Vec<f64> {
    let cfg = ctx.config();
    let nyquist = cfg.sample_rate / 2.0;
    let duration = cfg.duration().max(1.0 / cfg.sample_rate);
    let mut phi = Vec::with_capacity(cfg.num_phase_params());
    for _ in 0..cfg.num_chirps {
        phi.push(rng.random_range(0.0..=nyquist));
        for p in 2..=cfg.phase_order {
            let limit = nyquist / (p as f64 * duration.powi(p as i32 - 1));
            phi.push(rng.random_range(-limit..=limit));
        }
    }
    phi
}

/// Seed for start `start` of run `run`: `base·10⁶ + run·10³ + start`.
pub fn derive_seed(base_seed: u64, run: u64, start: u64) -> u64 {
    base_seed
        .wrapping_mul(1_000_000)
        .wrapping_add(run.wrapping_mul(1_000))
        .wrapping_add(start)
}

/// Offset added to a run seed for the full-length chain launched from the
/// `k`-th ranked start.
pub const CHAIN_SEED_OFFSET: u64 = 500;

/// Start slot whose derived seed drives the measurement noise of a run.
pub const NOISE_SEED_SLOT: u64 = 999;

/// A primed starting point and its full-signal objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimedStart {
    pub phi: Vec<f64>,
    pub value: f64,
}

/// Prefix lengths visited during priming, shortest first: the configured
/// length `L` preceded by `L/2`, `L/4`, … down to twice the number of basis
/// columns, and at most `stages` rungs in total.
pub fn priming_ladder(ctx_full: &ObjectiveContext, config: &SamplerConfig) -> Vec<usize> {
    let cfg = ctx_full.config();
    let top = config
        .priming
        .prefix_length
        .unwrap_or_else(|| crate::signal::default_prefix_length(cfg.num_samples))
        .min(cfg.num_samples);
    let floor = 2 * cfg.num_basis_columns();
    let mut ladder = vec![top];
    let mut len = top;
    while len.div_ceil(2) >= floor
        && len > 1
        && config.priming.stages.is_none_or(|cap| ladder.len() < cap)
    {
        len = len.div_ceil(2);
        ladder.push(len);
    }
    ladder.reverse();
    ladder
}

/// Draws `num_starts` points from the initialization box, primes each with
/// CG-LMC on progressively longer prefixes of the signal, and ranks the
/// endpoints by full-signal `J`.
///
/// Box draws use `config.seed`; the priming chains of start `s` use
/// `config.seed + s`, one RNG stream per ladder rung.
pub fn multistart_primed_init(
    ctx_full: &ObjectiveContext,
    config: &SamplerConfig,
) -> Result<Vec<PrimedStart>> {
    config.validate()?;
    let priming = &config.priming;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draws: Vec<Vec<f64>> = (0..priming.num_starts)
        .map(|_| draw_initial_phase(ctx_full, &mut rng))
        .collect();

    let n = ctx_full.config().num_samples as f64;
    let rungs = if priming.priming_iters > 0 {
        priming_ladder(ctx_full, config)
            .into_iter()
            .map(|len| {
                let ratio = n / len as f64;
                let mut cfg = config.clone();
                cfg.step_size = priming.step_size.unwrap_or(config.step_size) * ratio.powi(3);
                cfg.sigma0 = priming.sigma0.unwrap_or(config.sigma0) * ratio;
                Ok((ctx_full.prefix(len)?, cfg))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let prime = |s: usize, draw: Vec<f64>| -> Result<PrimedStart> {
        let mut phi = draw;
        for (stage, (short, cfg)) in rungs.iter().enumerate() {
            let mut cfg = cfg.clone();
            cfg.seed = config.seed.wrapping_add(s as u64);
            phi = match run_chain_with(
                Variant::CgLmc,
                short,
                &phi,
                &cfg,
                priming.priming_iters,
                stage as u64,
            ) {
                Ok(trace) => trace.final_state.phi,
                Err(Error::ChainAborted { trace, .. }) => trace.final_state.phi,
                Err(e) => return Err(e),
            };
        }
        let value = ctx_full.value(&phi).unwrap_or(f64::INFINITY);
        Ok(PrimedStart { phi, value })
    };
    let mut starts = map_indexed(draws, prime)?;
    // Stable sort keeps draw order among ties.
    starts.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(starts)
}

/// Maps `f` over `items` with their indices, in parallel when enabled; the
/// output order always matches the input order.
pub(crate) fn map_indexed<T, U, F>(items: Vec<T>, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(usize, T) -> Result<U> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Final phase vector with the lowest full-signal `J`; ties go to the
/// lowest index.
pub fn select_best_run(
    traces: &[ChainTrace],
    ctx: &ObjectiveContext,
) -> Result<(Vec<f64>, usize)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, trace) in traces.iter().enumerate() {
        let value = ctx.value(&trace.final_state.phi).unwrap_or(f64::INFINITY);
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((i, value));
        }
    }
    let (index, _) = best.ok_or(Error::EmptyRunSet)?;
    Ok((traces[index].final_state.phi.clone(), index))
}

/// Everything produced by one multistart estimation.
#[derive(Debug, Clone)]
pub struct MultistartOutcome {
    pub phi_hat: Vec<f64>,
    pub value: f64,
    pub best_index: usize,
    pub starts: Vec<PrimedStart>,
    pub traces: Vec<ChainTrace>,
}

/// Primed multistart initialization followed by `num_chains` full-length
/// chains from the best starts and best-run selection.
pub fn estimate_phase(
    variant: Variant,
    ctx: &ObjectiveContext,
    config: &SamplerConfig,
) -> Result<MultistartOutcome> {
    let starts = multistart_primed_init(ctx, config)?;
    let mut traces = Vec::new();
    for (k, start) in starts.iter().take(config.priming.num_chains).enumerate() {
        let mut chain_cfg = config.clone();
        chain_cfg.seed = config
            .seed
            .wrapping_add(CHAIN_SEED_OFFSET)
            .wrapping_add(k as u64);
        match run_chain(variant, ctx, &start.phi, &chain_cfg) {
            Ok(trace) => traces.push(trace),
            Err(Error::ChainAborted { trace, .. }) => traces.push(*trace),
            Err(e) => return Err(e),
        }
    }
    let (phi_hat, best_index) = select_best_run(&traces, ctx)?;
    let value = ctx.value(&phi_hat)?;
    Ok(MultistartOutcome {
        phi_hat,
        value,
        best_index,
        starts,
        traces,
    })
}
