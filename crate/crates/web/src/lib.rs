//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Every export takes and returns JSON text so the page needs no glue
//! beyond `JSON.parse`. The same functions are plain Rust underneath and
//! are tested natively.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use chirpest::objective::objective_value;
use chirpest::sampler::estimate_phase;
use chirpest::signal::{
    add_complex_gaussian_noise, check_nyquist, max_instantaneous_frequency, snr_to_noise_variance, synthesize_mixture,
};
use chirpest::{ChirpParams, ComplexSignal, MixtureConfig, ObjectiveContext, SamplerConfig, Variant};

/// Mixture shared by all three operations.
#[derive(Debug, Clone, Deserialize)]
pub struct MixtureRequest {
    pub num_samples: usize,
    pub sample_rate: f64,
    /// `phase[c][p-1]` in Hz/s^(p-1).
    pub phase: Vec<Vec<f64>>,
    /// `amplitude[c][a]`; its length sets each chirp's amplitude order.
    pub amplitude: Vec<Vec<f64>>,
    /// Noiseless when absent.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl MixtureRequest {
    fn config(&self) -> chirpest::Result<MixtureConfig> {
        let order = self.phase.first().map_or(0, Vec::len);
        let amp_orders = self.amplitude.iter().map(|a| a.len().saturating_sub(1)).collect();
        MixtureConfig::new(self.num_samples, self.sample_rate, order, amp_orders)
    }

    fn truth(&self) -> chirpest::Result<ChirpParams> {
        ChirpParams::new(self.phase.clone(), self.amplitude.clone())
    }

    /// Config, truth and the (possibly noisy) signal scaled to unit power.
    fn observe(&self) -> chirpest::Result<(MixtureConfig, ChirpParams, ComplexSignal)> {
        let config = self.config()?;
        let truth = self.truth()?;
        truth.check_against(&config)?;
        check_nyquist(&truth, &config)?;
        let clean = synthesize_mixture(&truth, &config)?;
        let noisy = match self.snr_db {
            Some(db) => add_complex_gaussian_noise(&clean, snr_to_noise_variance(&clean, db)?, self.seed)?,
            None => clean,
        };
        let power = noisy.mean_power();
        if !(power > 0.0) {
            return Err(chirpest::Error::ZeroPowerSignal);
        }
        Ok((config, truth, noisy.scaled(1.0 / power.sqrt())))
    }
}

#[derive(Debug, Serialize)]
pub struct SynthesisView {
    pub time: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Instantaneous frequency of each chirp, Hz.
    pub inst_freq: Vec<Vec<f64>>,
    pub max_inst_freq: f64,
    pub nyquist: f64,
}

/// Signal samples and per-chirp instantaneous frequency curves.
pub fn synthesize_view(req: &MixtureRequest) -> chirpest::Result<SynthesisView> {
    let (config, truth, signal) = req.observe()?;
    let time: Vec<f64> = (0..config.num_samples).map(|n| n as f64 / config.sample_rate).collect();
    let inst_freq = truth
        .phase
        .iter()
        .map(|coeffs| {
            time.iter()
                .map(|&t| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| (i + 1) as f64 * c * t.powi(i as i32))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(SynthesisView {
        re: signal.samples.iter().map(|z| z.re).collect(),
        im: signal.samples.iter().map(|z| z.im).collect(),
        time,
        inst_freq,
        max_inst_freq: max_instantaneous_frequency(&truth, &config),
        nyquist: config.sample_rate / 2.0,
    })
}

#[derive(Debug, Serialize)]
pub struct SliceView {
    pub x: Vec<f64>,
    pub value: Vec<f64>,
    pub truth: f64,
}

/// `J` along one phase coefficient with the others held at the truth.
pub fn slice_view(
    req: &MixtureRequest,
    chirp: usize,
    power: usize,
    lo: f64,
    hi: f64,
    points: usize,
) -> chirpest::Result<SliceView> {
    let (config, truth, signal) = req.observe()?;
    if chirp >= config.num_chirps || power == 0 || power > config.phase_order {
        return Err(chirpest::Error::IndexOutOfRange(format!(
            "(chirp {chirp}, power {power}) outside {} chirps of order {}",
            config.num_chirps, config.phase_order
        )));
    }
    if points < 2 || !(hi > lo) {
        return Err(chirpest::Error::InvalidConfig("slice needs lo < hi and at least 2 points".into()));
    }
    let ctx = ObjectiveContext::new(&signal, &config)?;
    let mut phi = truth.flat_phase();
    let k = chirp * config.phase_order + power - 1;
    let center = phi[k];
    let x: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let value = x
        .iter()
        .map(|&v| {
            phi[k] = v;
            objective_value(&phi, &ctx)
        })
        .collect::<chirpest::Result<_>>()?;
    Ok(SliceView { x, value, truth: center })
}

#[derive(Debug, Serialize)]
pub struct ChainView {
    pub algorithm: Variant,
    pub phi_hat: Vec<Vec<f64>>,
    pub truth: Vec<Vec<f64>>,
    pub value: f64,
    /// Selected chain, one entry per iteration.
    pub iter_value: Vec<f64>,
    pub sigma: Vec<f64>,
    pub trace_hess: Vec<Option<f64>>,
}

/// Runs one multistart estimation with shipped defaults, the step size
/// scaled by `(128 / N)³` and the iteration budget overridden.
pub fn chain_view(req: &MixtureRequest, algorithm: Variant, iters: usize) -> chirpest::Result<ChainView> {
    let (config, truth, signal) = req.observe()?;
    let ctx = ObjectiveContext::new(&signal, &config)?;
    let mut sampler = SamplerConfig::default();
    sampler.step_size *= (128.0 / config.num_samples as f64).powi(3).min(1.0);
    sampler.max_iters = iters.max(1);
    let quarter = sampler.max_iters.div_ceil(4);
    for level in &mut sampler.anneal_schedule {
        level.iters = quarter;
    }
    sampler.seed = req.seed;
    let out = estimate_phase(algorithm, &ctx, &sampler)?;
    let best = &out.traces[out.best_index];
    Ok(ChainView {
        algorithm,
        phi_hat: ChirpParams::unflatten_phase(&out.phi_hat, config.num_chirps),
        truth: truth.phase,
        value: out.value,
        iter_value: best.records.iter().map(|r| r.value).collect(),
        sigma: best.records.iter().map(|r| r.sigma).collect(),
        trace_hess: best.records.iter().map(|r| r.trace_estimate).collect(),
    })
}

fn parse(request: &str) -> Result<MixtureRequest, JsValue> {
    serde_json::from_str(request).map_err(|e| JsValue::from_str(&format!("bad request: {e}")))
}

fn reply<T: Serialize>(result: chirpest::Result<T>) -> Result<String, JsValue> {
    let value = result.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn synthesize(request: &str) -> Result<String, JsValue> {
    reply(synthesize_view(&parse(request)?))
}

#[wasm_bindgen]
pub fn objective_slice(
    request: &str,
    chirp: usize,
    power: usize,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<String, JsValue> {
    reply(slice_view(&parse(request)?, chirp, power, lo, hi, points))
}

#[wasm_bindgen]
pub fn run_sampler(request: &str, algorithm: &str, iters: usize) -> Result<String, JsValue> {
    let variant: Variant = algorithm
        .parse()
        .map_err(|e: chirpest::Error| JsValue::from_str(&e.to_string()))?;
    reply(chain_view(&parse(request)?, variant, iters))
}
