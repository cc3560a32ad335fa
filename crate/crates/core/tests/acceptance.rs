//! End-to-end acceptance suite. Runs every criterion, prints one PASS/FAIL
//! line per criterion and exits nonzero if any failed.
//!
//! Run alone with `cargo test --test acceptance`.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chirpest::harness::read_summary;
use chirpest::objective::{hessian_trace_estimate, objective_gradient, objective_value, smoothed_gradient_sample};
use chirpest::sampler::{draw_initial_phase, estimate_phase, run_chain, ChainTrace};
use chirpest::signal::{add_complex_gaussian_noise, snr_to_noise_variance, synthesize_mixture};
use chirpest::{
    ChirpParams, ComplexSignal, MixtureConfig, Objective, ObjectiveContext, Result, SamplerConfig, Variant,
};

use common::{central_difference, grid_oracle_single_chirp, linspace, oracle_objective, rel_err};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// CG-LMC traces collected by criteria 4 and 5 for criterion 6.
#[derive(Default)]
struct Shared {
    cg_traces: Vec<(String, Vec<f64>)>,
    sigma_min: Vec<f64>,
    table1_out: Option<PathBuf>,
}

fn noisy_table1(snr_db: f64, seed: u64) -> (ComplexSignal, ComplexSignal, MixtureConfig) {
    let spec = common::table1();
    let cfg = spec.config();
    let clean = synthesize_mixture(spec.truth().unwrap(), &cfg).unwrap();
    let var = snr_to_noise_variance(&clean, snr_db).unwrap();
    let noisy = add_complex_gaussian_noise(&clean, var, seed).unwrap();
    (clean, noisy, cfg)
}

fn gradient_audit() -> Verdict {
    let (_, noisy, cfg) = noisy_table1(12.0, 0);
    let ctx = ObjectiveContext::new(&noisy, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let phi = draw_initial_phase(&ctx, &mut rng);
        let grad = objective_gradient(&phi, &ctx).unwrap();
        for k in 0..phi.len() {
            let fd = central_difference(|x| objective_value(x, &ctx).unwrap(), &phi, k, 1e-5);
            worst = worst.max(rel_err(grad[k], fd, 1e-6));
        }
    }
    Verdict::new(worst <= 1e-4, format!("max relative error {worst:.2e} over 20 points x 8 coordinates (limit 1e-4)"))
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let chirps = rng.random_range(1..=2);
        let amp_orders: Vec<usize> = (0..chirps).map(|_| rng.random_range(0..=2)).collect();
        let m: usize = amp_orders.iter().map(|a| a + 1).sum();
        let n = rng.random_range((2 * m).max(4)..=32);
        let cfg = MixtureConfig::new(n, rng.random_range(20.0..200.0), rng.random_range(1..=4), amp_orders).unwrap();
        let y: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let ctx = ObjectiveContext::new(&ComplexSignal::new(y.clone(), cfg.sample_rate), &cfg).unwrap();
        let phi = draw_initial_phase(&ctx, &mut rng);
        let fast = objective_value(&phi, &ctx).unwrap();
        let explicit = oracle_objective(&y, &phi, &cfg, ctx.gamma());
        worst = worst.max(rel_err(fast, explicit, 1e-300));
    }
    Verdict::new(worst <= 1e-8, format!("max relative gap {worst:.2e} over 50 instances with N <= 32 (limit 1e-8)"))
}

/// `J(x) = xᵀ A x`.
struct Quadratic {
    a: Vec<Vec<f64>>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.a.iter().zip(x).map(|(row, xi)| xi * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).sum())
    }
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let g = self.a.iter().map(|row| 2.0 * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).collect();
        Ok((self.value(x)?, g))
    }
}

fn stein_calibration() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dim = 8;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let b: Vec<Vec<f64>> = (0..dim).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        // A = BᵀB / dim + I/2 is symmetric positive definite.
        let a: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        (0..dim).map(|k| b[k][i] * b[k][j]).sum::<f64>() / dim as f64 + if i == j { 0.5 } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let exact = 2.0 * (0..dim).map(|i| a[i][i]).sum::<f64>();
        let theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let obj = Quadratic { a };
        let sigma = rng.random_range(0.5..2.0);
        let mean = (0..10_000)
            .map(|_| hessian_trace_estimate(&smoothed_gradient_sample(&obj, &theta, sigma, &mut rng).unwrap()).unwrap())
            .sum::<f64>()
            / 10_000.0;
        worst = worst.max((mean - exact).abs() / exact);
    }
    Verdict::new(worst <= 0.05, format!("worst relative bias {:.2}% over 5 SPD matrices, dim 8, 1e4 samples (limit 5%)", 100.0 * worst))
}

fn small_instance_recovery(shared: &mut Shared) -> Verdict {
    let fs = 1000.0;
    let cfg = MixtureConfig::new(256, fs, 2, vec![0]).unwrap();
    let limit2 = (fs / 2.0) / (2.0 * cfg.duration());
    let axes = [linspace(0.0, fs / 2.0, 100), linspace(-limit2, limit2, 100)];
    let cells = [axes[0][1] - axes[0][0], axes[1][1] - axes[1][0]];
    let sampler = SamplerConfig::default();
    let mut hits = 0;
    let mut notes = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let phase = vec![rng.random_range(50.0..450.0), rng.random_range(-300.0..300.0)];
        let truth = ChirpParams::new(vec![phase], vec![vec![1.0]]).unwrap();
        let clean = synthesize_mixture(&truth, &cfg).unwrap();
        let noisy = add_complex_gaussian_noise(&clean, snr_to_noise_variance(&clean, 12.0).unwrap(), seed).unwrap();
        let noisy = noisy.scaled(1.0 / noisy.mean_power().sqrt());
        let ctx = ObjectiveContext::new(&noisy, &cfg).unwrap();
        let oracle = grid_oracle_single_chirp(&noisy.samples, fs, &axes, ctx.gamma());
        let est = estimate_phase(Variant::CgLmc, &ctx, &SamplerConfig { seed, ..sampler.clone() }).unwrap();
        let within = (0..2).all(|p| (est.phi_hat[p] - oracle[p]).abs() <= 2.0 * cells[p]);
        hits += usize::from(within);
        notes.push(format!(
            "{}{}",
            if within { "+" } else { "-" },
            (0..2).map(|p| format!("{:.1}", (est.phi_hat[p] - oracle[p]).abs() / cells[p])).collect::<Vec<_>>().join("/")
        ));
        for (k, t) in est.traces.iter().enumerate() {
            shared.cg_traces.push((format!("recovery seed {seed} chain {k}"), sigmas(t)));
            shared.sigma_min.push(sampler.sigma_min);
        }
    }
    Verdict::new(
        hits >= 4,
        format!("{hits}/5 seeds within 2 grid cells of the 100x100 grid minimizer (need 4); offsets in cells [{}]", notes.join(" ")),
    )
}

fn sigmas(trace: &ChainTrace) -> Vec<f64> {
    trace.records.iter().map(|r| r.sigma).collect()
}

fn run_benchmark(out: &Path) -> std::io::Result<bool> {
    let status = Command::new(env!("CARGO_BIN_EXE_chirpest"))
        .args(["benchmark", "--config"])
        .arg(common::bundled_spec("table1"))
        .args(["--snr", "12", "--algo", "CG-LMC,NA-LMC", "--out"])
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()?;
    Ok(status.success())
}

fn table1_trend(shared: &mut Shared, scratch: &Path) -> Verdict {
    let out = scratch.join("table1-a");
    match run_benchmark(&out) {
        Ok(true) => {}
        other => return Verdict::new(false, format!("benchmark did not complete: {other:?}")),
    }
    shared.table1_out = Some(out.clone());
    let summary = read_summary(&out.join("summary.json")).unwrap();

    let mae = |algo: Variant| -> Vec<(String, f64)> {
        summary
            .records
            .iter()
            .filter(|r| r.algorithm == algo)
            .map(|r| (r.stats.parameter.clone(), r.stats.mae.unwrap()))
            .collect()
    };
    let cg = mae(Variant::CgLmc);
    let na = mae(Variant::NaLmc);
    let dominated = cg.iter().zip(&na).filter(|((_, c), (_, n))| c <= n).count();
    let mean_of = |name: &str| {
        summary
            .records
            .iter()
            .find(|r| r.algorithm == Variant::CgLmc && r.stats.parameter == name)
            .map(|r| r.stats.mean)
            .unwrap()
    };
    let m11 = mean_of("phi_1_1");
    let m21 = mean_of("phi_2_1");
    let first_order = (8.5..=11.5).contains(&m11) && (48.5..=51.5).contains(&m21);

    let sampler = summary.spec.sampler_for(Variant::CgLmc);
    for name in files(&out.join("chains")) {
        if name.starts_with("cg-lmc") {
            let text = fs::read_to_string(out.join("chains").join(&name)).unwrap();
            let col: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
            shared.cg_traces.push((format!("table1 {name}"), col));
            shared.sigma_min.push(sampler.sigma_min);
        }
    }

    Verdict::new(
        dominated >= 6 && first_order,
        format!(
            "(a) CG-LMC MAE <= NA-LMC MAE on {dominated}/8 parameters (need 6); \
             (b) CG-LMC means phi_1_1 = {m11:.2} (need [8.5, 11.5]), phi_2_1 = {m21:.2} (need [48.5, 51.5]); \
             MAE CG [{}] vs NA [{}]",
            cg.iter().map(|(_, v)| format!("{v:.1}")).collect::<Vec<_>>().join(", "),
            na.iter().map(|(_, v)| format!("{v:.1}")).collect::<Vec<_>>().join(", "),
        ),
    )
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|it| it.map(|e| e.unwrap().file_name().into_string().unwrap()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

fn sigma_invariant(shared: &Shared) -> Verdict {
    let bad: Vec<&str> = shared
        .cg_traces
        .iter()
        .zip(&shared.sigma_min)
        .filter(|((_, s), &floor)| !(s.iter().all(|&v| v >= floor) && s.windows(2).all(|w| w[1] <= w[0])))
        .map(|((name, _), _)| name.as_str())
        .collect();
    let from_table1 = shared.cg_traces.iter().filter(|(n, _)| n.starts_with("table1")).count();
    Verdict::new(
        bad.is_empty() && !shared.cg_traces.is_empty() && from_table1 > 0,
        format!(
            "{} CG-LMC traces checked ({from_table1} from the table1.json study), {} violations{}",
            shared.cg_traces.len(),
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(": {bad:?}") }
        ),
    )
}

fn degeneracy() -> Verdict {
    let (_, noisy, cfg) = noisy_table1(12.0, 4);
    let ctx = ObjectiveContext::new(&noisy.scaled(1.0 / noisy.mean_power().sqrt()), &cfg).unwrap();
    let mut config = common::table1().sampler_for(Variant::Lmc);
    config.sigma0 = 0.0;
    config.sigma_step = 0.0;
    config.sigma_min = 0.0;
    config.max_iters = 500;
    let mut mismatches = 0;
    let mut compared = 0;
    for seed in 0..3 {
        config.seed = seed;
        let init = draw_initial_phase(&ctx, &mut ChaCha8Rng::seed_from_u64(seed));
        let lmc = run_chain(Variant::Lmc, &ctx, &init, &config).unwrap();
        let cg = run_chain(Variant::CgLmc, &ctx, &init, &config).unwrap();
        let bits = |t: &ChainTrace| -> Vec<(Vec<u64>, u64, u64, bool)> {
            t.records
                .iter()
                .map(|r| (r.phi.iter().map(|v| v.to_bits()).collect(), r.value.to_bits(), r.sigma.to_bits(), r.accepted))
                .collect()
        };
        compared += lmc.records.len();
        if bits(&lmc) != bits(&cg) || lmc.records.len() != cg.records.len() {
            mismatches += 1;
        }
    }
    Verdict::new(mismatches == 0, format!("{compared} iterations over 3 seeds compared bitwise, {mismatches} differing traces"))
}

fn noise_calibration() -> Verdict {
    let mut worst = 0.0f64;
    for target in [3.0, 12.0] {
        for seed in 0..20 {
            let (clean, noisy, _) = noisy_table1(target, seed);
            let signal = clean.samples.iter().map(|c| c.norm_sqr()).sum::<f64>();
            let noise = clean.samples.iter().zip(&noisy.samples).map(|(c, n)| (n - c).norm_sqr()).sum::<f64>();
            let measured = 10.0 * (signal / noise).log10();
            worst = worst.max((measured - target).abs());
        }
    }
    Verdict::new(worst <= 0.5, format!("max |empirical - target| = {worst:.3} dB over 20 seeds at 3 and 12 dB, N = 1000 (limit 0.5)"))
}

fn reproducibility(shared: &Shared, scratch: &Path) -> Verdict {
    let Some(first) = &shared.table1_out else {
        return Verdict::new(false, "no first benchmark run to compare against");
    };
    let second = scratch.join("table1-b");
    match run_benchmark(&second) {
        Ok(true) => {}
        other => return Verdict::new(false, format!("rerun did not complete: {other:?}")),
    }
    let a = fs::read(first.join("summary.json")).unwrap();
    let b = fs::read(second.join("summary.json")).unwrap();
    Verdict::new(a == b, format!("summary.json reruns: {} vs {} bytes, identical = {}", a.len(), b.len(), a == b))
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut shared = Shared::default();
    let mut failures = 0;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Verdict| {
        let started = Instant::now();
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{tag}] {name}: {} ({:.1} s)", v.detail, started.elapsed().as_secs_f64());
        failures += usize::from(!v.pass);
    };
    report(1, "gradient audit", &mut gradient_audit);
    report(2, "oracle equivalence", &mut oracle_equivalence);
    report(3, "Stein trace calibration", &mut stein_calibration);
    report(4, "small-instance recovery", &mut || small_instance_recovery(&mut shared));
    report(5, "table1.json trend", &mut || table1_trend(&mut shared, scratch.path()));
    report(6, "CG-LMC sigma invariant", &mut || sigma_invariant(&shared));
    report(7, "degeneracy equivalence", &mut degeneracy);
    report(8, "noise calibration", &mut noise_calibration);
    report(9, "reproducibility", &mut || reproducibility(&shared, scratch.path()));
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
