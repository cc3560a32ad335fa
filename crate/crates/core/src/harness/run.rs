//! Seeded multi-run experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::spec::ExperimentSpec;
use crate::harness::stats::{align_to_truth, compute_statistics, permute_blocks, ParameterStats};
use crate::objective::{recover_amplitudes, ObjectiveContext};
use crate::sampler::{derive_seed, estimate_phase, map_indexed, ChainTrace, Variant, NOISE_SEED_SLOT};
use crate::signal::{add_complex_gaussian_noise, snr_to_noise_variance, synthesize_mixture, ComplexSignal};

/// Environment variable capping the number of cells run concurrently.
pub const THREADS_ENV: &str = "CHIRPEST_THREADS";

/// One (algorithm, SNR, run) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub algorithm: Variant,
    /// `None` for an ingested signal.
    pub snr_db: Option<f64>,
    pub run: usize,
}

/// Estimates from one successful run, with chirps reordered to match the
/// truth when it is known.
#[derive(Debug, Clone)]
pub struct RunEstimate {
    pub phi_hat: Vec<f64>,
    pub rho_hat: Vec<Vec<f64>>,
    /// `J(φ̂)` on the signal as analyzed (before power normalization).
    pub final_value: f64,
    pub best_chain: usize,
    /// `perm[c]` is the estimated chirp reported as chirp `c`.
    pub permutation: Vec<usize>,
    pub traces: Vec<ChainTrace>,
    pub wall_time_secs: f64,
}

impl RunEstimate {
    /// Iterations of the selected full-length chain.
    pub fn iterations(&self) -> usize {
        self.traces[self.best_chain].final_state.iters
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub cell: Cell,
    pub noise_seed: Option<u64>,
    pub sampler_seed: u64,
    pub outcome: std::result::Result<RunEstimate, String>,
}

/// Statistics of one (algorithm, SNR, parameter) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub algorithm: Variant,
    pub snr_db: Option<f64>,
    #[serde(flatten)]
    pub stats: ParameterStats,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub runs: Vec<RunResult>,
    pub records: Vec<SummaryRecord>,
}

impl ExperimentOutcome {
    /// (algorithm, SNR) pairs for which every run failed.
    pub fn failed_cells(&self) -> Vec<(Variant, Option<f64>)> {
        let mut failed = Vec::new();
        for chunk in self.runs.chunks(self.spec.runs_per_cell) {
            if chunk.iter().all(|r| r.outcome.is_err()) {
                failed.push((chunk[0].cell.algorithm, chunk[0].cell.snr_db));
            }
        }
        failed
    }

    pub fn records_for(&self, algorithm: Variant, snr_db: Option<f64>) -> Vec<&SummaryRecord> {
        self.records
            .iter()
            .filter(|r| r.algorithm == algorithm && r.snr_db == snr_db)
            .collect()
    }
}

/// Cells in output order: algorithm, then SNR, then run.
pub fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let snrs: Vec<Option<f64>> = if spec.mixture.signal.is_some() {
        vec![None]
    } else {
        spec.snr_db.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for &algorithm in &spec.algorithms {
        for &snr_db in &snrs {
            for run in 0..spec.runs_per_cell {
                out.push(Cell { algorithm, snr_db, run });
            }
        }
    }
    out
}

/// Runs every cell of a validated spec. Noise for run `r` is seeded with
/// `derive_seed(base, r, 999)` and shared across algorithms and SNRs; the
/// samplers of run `r` use `derive_seed(base, r, 0)` as their base seed.
///
/// A failing run is recorded and does not stop the experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let config = spec.config();
    let ingested = spec.load_signal()?;
    let clean = match (&ingested, spec.truth()) {
        (None, Some(truth)) => Some(synthesize_mixture(truth, &config)?),
        _ => None,
    };

    let work = cells(spec);
    let run_cell = |_: usize, cell: Cell| -> Result<RunResult> {
        let sampler_seed = derive_seed(spec.base_seed, cell.run as u64, 0);
        let noise_seed = cell
            .snr_db
            .map(|_| derive_seed(spec.base_seed, cell.run as u64, NOISE_SEED_SLOT));
        let signal = match (&ingested, &clean, cell.snr_db, noise_seed) {
            (Some(signal), ..) => Ok(signal.clone()),
            (None, Some(clean), Some(snr), Some(seed)) => snr_to_noise_variance(clean, snr)
                .and_then(|var| add_complex_gaussian_noise(clean, var, seed)),
            _ => unreachable!("validated spec has a truth or a signal"),
        };
        let outcome = signal
            .and_then(|s| estimate_run(spec, cell.algorithm, &s, sampler_seed))
            .map_err(|e| e.to_string());
        Ok(RunResult {
            cell,
            noise_seed,
            sampler_seed,
            outcome,
        })
    };
    let runs = with_thread_cap(|| map_indexed(work, run_cell))?;

    let truth = spec.truth().map(|t| t.flat_phase());
    let mut records = Vec::new();
    for chunk in runs.chunks(spec.runs_per_cell) {
        let estimates: Vec<Vec<f64>> = chunk
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|e| e.phi_hat.clone()))
            .collect();
        if estimates.is_empty() {
            continue;
        }
        let stats = compute_statistics(&estimates, truth.as_deref(), config.phase_order)?;
        records.extend(stats.into_iter().map(|stats| SummaryRecord {
            algorithm: chunk[0].cell.algorithm,
            snr_db: chunk[0].cell.snr_db,
            stats,
        }));
    }
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        runs,
        records,
    })
}

fn estimate_run(
    spec: &ExperimentSpec,
    algorithm: Variant,
    signal: &ComplexSignal,
    seed: u64,
) -> Result<RunEstimate> {
    let started = crate::sampler::now();
    let config = spec.config();
    let ctx = ObjectiveContext::new(signal, &config)?;
    let power = signal.mean_power();
    if spec.normalize_power && !(power > 0.0) {
        return Err(Error::ZeroPowerSignal);
    }
    let scaled;
    let sampling_ctx = if spec.normalize_power {
        scaled = ObjectiveContext::new(&signal.scaled(1.0 / power.sqrt()), &config)?;
        &scaled
    } else {
        &ctx
    };
    let mut sampler = spec.sampler_for(algorithm);
    sampler.seed = seed;
    let outcome = estimate_phase(algorithm, sampling_ctx, &sampler)?;

    let amplitudes = recover_amplitudes(&outcome.phi_hat, &ctx)?;
    let final_value = crate::objective::objective_value(&outcome.phi_hat, &ctx)?;
    let order = config.phase_order;
    let permutation = match spec.truth() {
        Some(truth) => align_to_truth(&outcome.phi_hat, &truth.flat_phase(), order),
        None => (0..config.num_chirps).collect(),
    };
    let phi_hat = permute_blocks(&outcome.phi_hat, &permutation, order);
    let rho_hat = permutation.iter().map(|&c| amplitudes.rho[c].clone()).collect();
    Ok(RunEstimate {
        phi_hat,
        rho_hat,
        final_value,
        best_chain: outcome.best_index,
        permutation,
        traces: outcome.traces,
        wall_time_secs: started.map_or(0.0, |s| s.elapsed().as_secs_f64()),
    })
}

/// Runs `f` on a pool limited by `CHIRPEST_THREADS` when that is set.
fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        let cap = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        if let Some(threads) = cap {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(f);
            }
        }
    }
    f()
}
