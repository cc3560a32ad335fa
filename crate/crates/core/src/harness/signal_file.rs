//! Plain-text signal files.
//!
//! The first line is a JSON header; the rest is a CSV body with columns
//! `re,im`, one sample per row:
//!
//! ```text
//! {"format":"chirpest.signal/1","num_samples":3,"sample_rate":1000.0,...}
//! re,im
//! 1,0
//! 0.5403023058681398,0.8414709848078965
//! ...
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChirpParams, ComplexSignal, MixtureConfig};

pub const SIGNAL_FORMAT: &str = "chirpest.signal/1";

/// Where a signal came from. Everything is optional so that externally
/// produced recordings can be described with as much as is known.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Provenance {
    /// Free-form origin, e.g. `"simulate"`.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    /// Model the signal was synthesized from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<ChirpParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub format: String,
    pub num_samples: usize,
    pub sample_rate: f64,
    /// Noise seed, when the signal was synthesized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl SignalHeader {
    pub fn new(signal: &ComplexSignal, seed: Option<u64>, provenance: Provenance) -> Self {
        Self {
            format: SIGNAL_FORMAT.into(),
            num_samples: signal.len(),
            sample_rate: signal.sample_rate,
            seed,
            provenance,
        }
    }
}

pub fn write_signal(path: &Path, signal: &ComplexSignal, header: &SignalHeader) -> Result<()> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["re", "im"])?;
    for s in &signal.samples {
        writer.write_record([s.re.to_string(), s.im.to_string()])?;
    }
    let body = writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    out.push_str(&String::from_utf8_lossy(&body));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_signal(path: &Path) -> Result<(SignalHeader, ComplexSignal)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_signal(text: &str) -> std::result::Result<(SignalHeader, ComplexSignal), String> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let header: SignalHeader =
        serde_json::from_str(first).map_err(|e| format!("header (line 1): {e}"))?;
    if header.format != SIGNAL_FORMAT {
        return Err(format!(
            "unsupported format '{}', expected '{SIGNAL_FORMAT}'",
            header.format
        ));
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let columns = reader.headers().map_err(|e| e.to_string())?.clone();
    if columns.iter().collect::<Vec<_>>() != ["re", "im"] {
        return Err(format!("line 2: expected columns 're,im', found '{}'", columns.iter().collect::<Vec<_>>().join(",")));
    }
    let mut samples = Vec::with_capacity(header.num_samples);
    for (i, row) in reader.deserialize::<(f64, f64)>().enumerate() {
        let (re, im) = row.map_err(|e| format!("line {}: {e}", i + 3))?;
        samples.push(Complex64::new(re, im));
    }
    if samples.len() != header.num_samples {
        return Err(format!(
            "header declares {} samples, body has {}",
            header.num_samples,
            samples.len()
        ));
    }
    Ok((header.clone(), ComplexSignal::new(samples, header.sample_rate)))
}
