//! Trace CSVs, the summary JSON and plot-ready series.
//!
//! Layout under the output directory:
//!
//! ```text
//! spec.json                      echoed spec with every default filled in
//! summary.json                   statistics and per-run results
//! timing.json                    wall-clock times (kept apart so summary.json
//!                                is byte-identical across reruns)
//! traces/<cell>.csv              selected chain of the run:
//!                                iter,J,sigma,trace_hess,accepted,phi_1_1,...
//! chains/<cell>_chain<k>.csv     every full-length chain, same columns
//! plots/J/<cell>_chain<k>.csv    iter,J
//! plots/sigma/<cell>_chain<k>.csv
//! plots/trace/<cell>_chain<k>.csv
//! ```
//!
//! where `<cell>` is e.g. `cg-lmc_snr12_run0`. `J` is on the signal the
//! chains saw, i.e. after power normalization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::run::{Cell, ExperimentOutcome, SummaryRecord};
use crate::harness::spec::ExperimentSpec;
use crate::harness::stats::parameter_name;
use crate::sampler::{ChainTrace, Variant};

pub const SUMMARY_SCHEMA: &str = "chirpest.summary/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Variant,
    pub snr_db: Option<f64>,
    pub run: usize,
    pub noise_seed: Option<u64>,
    pub sampler_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_chain: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi_hat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho_hat: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub spec: ExperimentSpec,
    pub records: Vec<SummaryRecord>,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub algorithm: Variant,
    pub snr_db: Option<f64>,
    pub run: usize,
    pub wall_time_secs: f64,
    pub chain_wall_time_secs: Vec<f64>,
}

impl Summary {
    pub fn from_outcome(outcome: &ExperimentOutcome) -> Self {
        let mut spec = outcome.spec.clone();
        spec.output_dir = None;
        spec.base_dir = PathBuf::new();
        let runs = outcome
            .runs
            .iter()
            .map(|r| {
                let mut s = RunSummary {
                    algorithm: r.cell.algorithm,
                    snr_db: r.cell.snr_db,
                    run: r.cell.run,
                    noise_seed: r.noise_seed,
                    sampler_seed: r.sampler_seed,
                    error: None,
                    final_value: None,
                    iterations: None,
                    best_chain: None,
                    phi_hat: Vec::new(),
                    rho_hat: Vec::new(),
                };
                match &r.outcome {
                    Ok(est) => {
                        s.final_value = Some(est.final_value);
                        s.iterations = Some(est.iterations());
                        s.best_chain = Some(est.best_chain);
                        s.phi_hat = est.phi_hat.clone();
                        s.rho_hat = est.rho_hat.clone();
                    }
                    Err(e) => s.error = Some(e.clone()),
                }
                s
            })
            .collect();
        Self {
            schema: SUMMARY_SCHEMA.into(),
            spec,
            records: outcome.records.clone(),
            runs,
        }
    }
}

pub fn cell_label(cell: &Cell) -> String {
    let snr = match cell.snr_db {
        Some(snr) => format!("snr{snr}"),
        None => "signal".into(),
    };
    format!("{}_{snr}_run{}", cell.algorithm.name().to_ascii_lowercase(), cell.run)
}

/// CSV text of one chain trace.
pub fn trace_csv(trace: &ChainTrace, num_chirps: usize, phase_order: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["iter", "J", "sigma", "trace_hess", "accepted"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in 0..num_chirps {
        for p in 0..phase_order {
            header.push(parameter_name(c, p));
        }
    }
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.iter.to_string(),
            r.value.to_string(),
            r.sigma.to_string(),
            r.trace_estimate.map(|t| t.to_string()).unwrap_or_default(),
            u8::from(r.accepted).to_string(),
        ];
        row.extend(r.phi.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

fn series_csv(trace: &ChainTrace, column: &str, f: impl Fn(usize) -> String) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iter", column])?;
    for (i, r) in trace.records.iter().enumerate() {
        w.write_record([r.iter.to_string(), f(i)])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn json(value: &impl Serialize) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes every artifact of `outcome` under `dir` and returns the paths
/// written, summary first.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let config = outcome.spec.config();
    let mut written = Vec::new();
    let mut put = |rel: PathBuf, text: String| -> Result<()> {
        let path = dir.join(rel);
        write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };

    put("summary.json".into(), json(&Summary::from_outcome(outcome))?)?;
    put("spec.json".into(), json(&outcome.spec)?)?;

    let mut timings = Vec::new();
    for run in &outcome.runs {
        let Ok(est) = &run.outcome else { continue };
        let label = cell_label(&run.cell);
        put(
            Path::new("traces").join(format!("{label}.csv")),
            trace_csv(&est.traces[est.best_chain], config.num_chirps, config.phase_order)?,
        )?;
        for (k, trace) in est.traces.iter().enumerate() {
            let name = format!("{label}_chain{k}.csv");
            put(
                Path::new("chains").join(&name),
                trace_csv(trace, config.num_chirps, config.phase_order)?,
            )?;
            put(
                Path::new("plots/J").join(&name),
                series_csv(trace, "J", |i| trace.records[i].value.to_string())?,
            )?;
            put(
                Path::new("plots/sigma").join(&name),
                series_csv(trace, "sigma", |i| trace.records[i].sigma.to_string())?,
            )?;
            put(
                Path::new("plots/trace").join(&name),
                series_csv(trace, "trace_hess", |i| {
                    trace.records[i]
                        .trace_estimate
                        .map(|t| t.to_string())
                        .unwrap_or_default()
                })?,
            )?;
        }
        timings.push(RunTiming {
            algorithm: run.cell.algorithm,
            snr_db: run.cell.snr_db,
            run: run.cell.run,
            wall_time_secs: est.wall_time_secs,
            chain_wall_time_secs: est.traces.iter().map(|t| t.wall_time_secs).collect(),
        });
    }
    put("timing.json".into(), json(&timings)?)?;
    Ok(written)
}

/// Reads a summary written by [`write_outputs`].
pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
