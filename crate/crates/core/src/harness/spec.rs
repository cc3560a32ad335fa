//! Experiment definition files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::signal_file::read_signal;
use crate::sampler::{SamplerConfig, Variant};
use crate::signal::{check_nyquist, ChirpParams, ComplexSignal, MixtureConfig};

pub const SPEC_SCHEMA: &str = "chirpest.experiment/1";

/// Model orders plus either a ground truth to synthesize from or a signal
/// file to analyze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub num_samples: usize,
    pub sample_rate: f64,
    pub phase_order: usize,
    /// One amplitude polynomial order per chirp.
    pub amp_orders: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<ChirpParams>,
    /// Signal file, relative to the spec file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<PathBuf>,
}

impl MixtureSpec {
    pub fn config(&self) -> MixtureConfig {
        MixtureConfig {
            num_samples: self.num_samples,
            sample_rate: self.sample_rate,
            num_chirps: self.amp_orders.len(),
            phase_order: self.phase_order,
            amp_orders: self.amp_orders.clone(),
            regularization: self.regularization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub mixture: MixtureSpec,
    /// Target SNRs. Ignored (and left empty) for ingested signals.
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default = "all_variants")]
    pub algorithms: Vec<Variant>,
    #[serde(default = "default_runs")]
    pub runs_per_cell: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Scale each noisy signal to unit mean power before sampling, so that
    /// one set of hyperparameters fits signals of any level.
    #[serde(default = "yes")]
    pub normalize_power: bool,
    /// Per-algorithm sampler settings; missing algorithms use the defaults.
    #[serde(default)]
    pub sampler: BTreeMap<Variant, SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

fn default_runs() -> usize {
    5
}

fn yes() -> bool {
    true
}

impl ExperimentSpec {
    pub fn config(&self) -> MixtureConfig {
        self.mixture.config()
    }

    pub fn sampler_for(&self, variant: Variant) -> SamplerConfig {
        self.sampler.get(&variant).cloned().unwrap_or_default()
    }

    pub fn truth(&self) -> Option<&ChirpParams> {
        self.mixture.truth.as_ref()
    }

    pub fn signal_path(&self) -> Option<PathBuf> {
        self.mixture.signal.as_ref().map(|p| self.base_dir.join(p))
    }

    /// Output directory, defaulting to `results/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        match &self.output_dir {
            Some(dir) => self.base_dir.join(dir),
            None => {
                let name = if self.name.is_empty() { "experiment" } else { &self.name };
                Path::new("results").join(name)
            }
        }
    }

    /// Loads the ingested signal, checking it against the declared grid.
    pub fn load_signal(&self) -> Result<Option<ComplexSignal>> {
        let Some(path) = self.signal_path() else {
            return Ok(None);
        };
        let (header, signal) = read_signal(&path)?;
        if header.num_samples != self.mixture.num_samples
            || header.sample_rate != self.mixture.sample_rate
        {
            return Err(Error::InvalidConfig(format!(
                "{}: signal has N={} fs={}, spec declares N={} fs={}",
                path.display(),
                header.num_samples,
                header.sample_rate,
                self.mixture.num_samples,
                self.mixture.sample_rate
            )));
        }
        Ok(Some(signal))
    }

    /// Semantic checks and default filling. After this, the serialized spec
    /// pins every setting the run depends on.
    pub fn validate_and_fill(&mut self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.schema != SPEC_SCHEMA {
            return invalid(format!(
                "unsupported schema '{}', expected '{SPEC_SCHEMA}'",
                self.schema
            ));
        }
        let mut config = self.config();
        config.validate()?;
        match (&self.mixture.truth, &self.mixture.signal) {
            (Some(truth), None) => {
                truth.check_against(&config)?;
                check_nyquist(truth, &config)?;
                if self.snr_db.is_empty() {
                    return invalid("snr_db must list at least one SNR".into());
                }
                if let Some(bad) = self.snr_db.iter().find(|s| !s.is_finite()) {
                    return invalid(format!("snr_db entries must be finite, got {bad}"));
                }
            }
            (None, Some(_)) => {
                if !self.snr_db.is_empty() {
                    return invalid("snr_db does not apply to an ingested signal".into());
                }
            }
            _ => return invalid("mixture needs exactly one of 'truth' or 'signal'".into()),
        }
        if self.runs_per_cell == 0 {
            return invalid("runs_per_cell must be at least 1".into());
        }
        if self.runs_per_cell > 999 {
            return invalid("runs_per_cell must be below 1000 to keep seeds distinct".into());
        }
        if self.algorithms.is_empty() {
            return invalid("algorithms must not be empty".into());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return invalid("algorithms must not repeat".into());
        }
        if let Some(extra) = self.sampler.keys().find(|v| !self.algorithms.contains(v)) {
            return invalid(format!("sampler settings given for unused algorithm {extra}"));
        }
        for &variant in &self.algorithms {
            let cfg = self.sampler.entry(variant).or_default();
            cfg.validate()
                .map_err(|e| Error::InvalidConfig(format!("sampler.{variant}: {e}")))?;
        }
        config.regularization = Some(config.gamma());
        self.mixture.regularization = config.regularization;
        Ok(())
    }
}

/// Parses a spec from JSON text without semantic validation.
pub fn parse_experiment(text: &str, path: &Path) -> Result<ExperimentSpec> {
    let mut spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(spec)
}

/// Reads, validates and fills in a spec file.
pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut spec = parse_experiment(&text, path)?;
    spec.validate_and_fill().map_err(|e| match e {
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if spec.mixture.signal.is_some() {
        spec.load_signal()?;
    }
    Ok(spec)
}
