use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use chirpest::harness::audit::{audit_points, gradient_audit};
use chirpest::harness::output::cell_label;
use chirpest::harness::{
    load_experiment, read_signal, run_experiment, write_outputs, write_signal, ExperimentSpec,
    Provenance, SignalHeader,
};
use chirpest::objective::{objective_value, recover_amplitudes, ObjectiveContext};
use chirpest::sampler::{derive_seed, estimate_phase, NOISE_SEED_SLOT};
use chirpest::signal::{
    add_complex_gaussian_noise, snr_to_noise_variance, synthesize_mixture, ComplexSignal,
};
use chirpest::{ChirpParams, Error, MixtureConfig, SamplerConfig, Variant};

#[derive(Parser)]
#[command(name = "chirpest", version, about = "Chirp mixture estimation with Langevin samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the mixture of an experiment spec and write a signal file.
    Simulate {
        /// Experiment spec providing the grid and ground truth.
        #[arg(long)]
        config: PathBuf,
        /// Add noise at this SNR (dB); noiseless when omitted.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
        /// Noise seed; defaults to the spec's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate phase and amplitude coefficients from a signal file.
    Estimate {
        signal: PathBuf,
        /// Sampler settings (JSON); unset fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "CG-LMC")]
        algo: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of chirps, when the signal file does not record its model.
        #[arg(long)]
        chirps: Option<usize>,
        #[arg(long)]
        phase_order: Option<usize>,
        /// Amplitude polynomial order used for every chirp.
        #[arg(long)]
        amp_order: Option<usize>,
        /// Write the estimate as JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full multi-run study described by an experiment spec.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the spec's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the spec's SNR list (comma separated).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr: Option<Vec<f64>>,
        /// Restricts the algorithms (comma separated).
        #[arg(long, value_delimiter = ',')]
        algo: Option<Vec<Variant>>,
        /// Output directory; defaults to the spec's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic gradient against central finite differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// SNR of the audited signal; defaults to the spec's first.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, snr, seed, out } => simulate(&config, snr, seed, &out),
        Command::Estimate {
            signal,
            config,
            algo,
            seed,
            chirps,
            phase_order,
            amp_order,
            out,
        } => estimate(
            &signal,
            config.as_deref(),
            algo,
            seed,
            (chirps, phase_order, amp_order),
            out.as_deref(),
        ),
        Command::Benchmark { config, seed, snr, algo, out } => {
            benchmark(&config, seed, snr, algo, out)
        }
        Command::Gradcheck {
            config,
            seed,
            snr,
            points,
            delta,
            tolerance,
        } => gradcheck(&config, seed, snr, points, delta, tolerance),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn simulate(config: &Path, snr: Option<f64>, seed: Option<u64>, out: &Path) -> Result<ExitCode, Error> {
    let spec = load_experiment(config)?;
    let truth = spec
        .truth()
        .ok_or_else(|| Error::InvalidConfig("simulate needs a spec with a ground truth".into()))?;
    let mixture = spec.config();
    let clean = synthesize_mixture(truth, &mixture)?;
    let seed = seed.unwrap_or(spec.base_seed);
    let (signal, variance) = match snr {
        Some(db) => {
            let var = snr_to_noise_variance(&clean, db)?;
            (add_complex_gaussian_noise(&clean, var, seed)?, Some(var))
        }
        None => (clean, None),
    };
    let header = SignalHeader::new(
        &signal,
        snr.map(|_| seed),
        Provenance {
            source: "simulate".into(),
            snr_db: snr,
            noise_variance: variance,
            mixture: Some(mixture),
            truth: Some(truth.clone()),
        },
    );
    write_signal(out, &signal, &header)?;
    println!("wrote {} samples to {}", signal.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EstimateReport {
    algorithm: Variant,
    seed: u64,
    phase: Vec<Vec<f64>>,
    amplitude: Vec<Vec<f64>>,
    objective: f64,
}

fn estimate(
    path: &Path,
    config: Option<&Path>,
    algo: Variant,
    seed: u64,
    model: (Option<usize>, Option<usize>, Option<usize>),
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let (header, signal) = read_signal(path)?;
    let mixture = resolve_model(&header, &signal, model)?;
    let mut sampler: SamplerConfig = match config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.to_path_buf(),
                message: e.to_string(),
            })?
        }
        None => SamplerConfig::default(),
    };
    sampler.seed = seed;
    sampler.validate()?;

    let ctx = ObjectiveContext::new(&signal, &mixture)?;
    let power = signal.mean_power();
    if !(power > 0.0) {
        return Err(Error::ZeroPowerSignal);
    }
    let scaled = ObjectiveContext::new(&signal.scaled(1.0 / power.sqrt()), &mixture)?;
    let outcome = estimate_phase(algo, &scaled, &sampler)?;
    let amplitudes = recover_amplitudes(&outcome.phi_hat, &ctx)?;
    let report = EstimateReport {
        algorithm: algo,
        seed,
        phase: ChirpParams::unflatten_phase(&outcome.phi_hat, mixture.num_chirps),
        amplitude: amplitudes.rho,
        objective: objective_value(&outcome.phi_hat, &ctx)?,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    print!("{text}");
    if let Some(out) = out {
        fs::write(out, &text).map_err(|e| Error::Io {
            path: out.to_path_buf(),
            source: e,
        })?;
    }
    Ok(ExitCode::SUCCESS)
}

fn resolve_model(
    header: &SignalHeader,
    signal: &ComplexSignal,
    (chirps, phase_order, amp_order): (Option<usize>, Option<usize>, Option<usize>),
) -> Result<MixtureConfig, Error> {
    let recorded = header.provenance.mixture.clone();
    let mut config = match (recorded, chirps, phase_order, amp_order) {
        (Some(m), None, None, None) => m,
        (recorded, chirps, order, amp) => {
            let chirps = chirps.or(recorded.as_ref().map(|m| m.num_chirps));
            let order = order.or(recorded.as_ref().map(|m| m.phase_order));
            let amp = amp.or(recorded.as_ref().and_then(|m| m.amp_orders.first().copied()));
            match (chirps, order, amp) {
                (Some(c), Some(p), Some(a)) => {
                    MixtureConfig::new(signal.len(), signal.sample_rate, p, vec![a; c])?
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "signal file has no model; pass --chirps, --phase-order and --amp-order"
                            .into(),
                    ))
                }
            }
        }
    };
    config.num_samples = signal.len();
    config.sample_rate = signal.sample_rate;
    config.validate()?;
    Ok(config)
}

fn benchmark(
    config: &Path,
    seed: Option<u64>,
    snr: Option<Vec<f64>>,
    algo: Option<Vec<Variant>>,
    out: Option<PathBuf>,
) -> Result<ExitCode, Error> {
    let mut spec: ExperimentSpec = load_experiment(config)?;
    if let Some(seed) = seed {
        spec.base_seed = seed;
    }
    if let Some(snr) = snr {
        spec.snr_db = snr;
    }
    if let Some(algos) = algo {
        spec.sampler.retain(|v, _| algos.contains(v));
        spec.algorithms = algos;
    }
    spec.validate_and_fill()?;
    let dir = match out {
        Some(dir) => dir,
        None => spec.output_dir(),
    };

    let outcome = run_experiment(&spec)?;
    let written = write_outputs(&outcome, &dir)?;

    println!("{:<8} {:>7} {:<9} {:>10} {:>10} {:>10} {:>10}", "algo", "snr", "param", "truth", "mean", "sd", "mae");
    for r in &outcome.records {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<8} {:>7} {:<9} {:>10} {:>10.3} {:>10.3} {:>10}",
            r.algorithm.name(),
            fmt(r.snr_db),
            r.stats.parameter,
            fmt(r.stats.truth),
            r.stats.mean,
            r.stats.sd,
            fmt(r.stats.mae)
        );
    }
    for run in &outcome.runs {
        if let Err(e) = &run.outcome {
            eprintln!("run {} failed: {e}", cell_label(&run.cell));
        }
    }
    println!("wrote {} files to {}", written.len(), dir.display());
    let failed = outcome.failed_cells();
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (algo, snr) in failed {
            eprintln!("every run failed for {algo} at snr {snr:?}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn gradcheck(
    config: &Path,
    seed: u64,
    snr: Option<f64>,
    points: usize,
    delta: f64,
    tolerance: f64,
) -> Result<ExitCode, Error> {
    let spec = load_experiment(config)?;
    let mixture = spec.config();
    let signal = match (spec.load_signal()?, spec.truth()) {
        (Some(signal), _) => signal,
        (None, Some(truth)) => {
            let clean = synthesize_mixture(truth, &mixture)?;
            match snr.or(spec.snr_db.first().copied()) {
                Some(db) => {
                    let var = snr_to_noise_variance(&clean, db)?;
                    add_complex_gaussian_noise(&clean, var, derive_seed(seed, 0, NOISE_SEED_SLOT))?
                }
                None => clean,
            }
        }
        (None, None) => unreachable!("validated spec has a truth or a signal"),
    };
    let ctx = ObjectiveContext::new(&signal, &mixture)?;
    let audit = gradient_audit(&ctx, &audit_points(&ctx, points, seed), delta)?;
    println!(
        "max relative error {:.3e} over {} points x {} coordinates (worst: point {}, coordinate {})",
        audit.max_relative_error,
        audit.points,
        mixture.num_phase_params(),
        audit.worst_point,
        audit.worst_coordinate
    );
    if audit.max_relative_error <= tolerance {
        println!("ok (tolerance {tolerance:e})");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAILED (tolerance {tolerance:e})");
        Ok(ExitCode::FAILURE)
    }
}
