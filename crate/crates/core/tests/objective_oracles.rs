mod common;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chirpest::objective::{
    build_basis_matrix, hessian_trace_estimate, objective_gradient, objective_value,
    smoothed_gradient_sample, solve_amplitudes,
};
use chirpest::sampler::draw_initial_phase;
use chirpest::signal::{add_complex_gaussian_noise, snr_to_noise_variance, synthesize_mixture};
use chirpest::{ChirpParams, ComplexSignal, MixtureConfig, Objective, ObjectiveContext, Result};

use common::{central_difference, linspace, oracle_objective, rel_err};

fn random_signal(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> ComplexSignal {
    let samples = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexSignal::new(samples, fs)
}

fn random_config(rng: &mut ChaCha8Rng, max_samples: usize) -> MixtureConfig {
    let chirps = rng.random_range(1..=3);
    let amp_orders: Vec<usize> = (0..chirps).map(|_| rng.random_range(0..=2)).collect();
    let columns: usize = amp_orders.iter().map(|a| a + 1).sum();
    let n = rng.random_range((2 * columns).max(8)..=max_samples);
    let fs = rng.random_range(50.0..500.0);
    let order = rng.random_range(1..=4);
    MixtureConfig::new(n, fs, order, amp_orders).unwrap()
}

#[test]
fn gradient_agrees_with_central_differences_on_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let cfg = random_config(&mut rng, 64);
        let ctx = ObjectiveContext::new(&random_signal(&mut rng, cfg.num_samples, cfg.sample_rate), &cfg)
            .unwrap();
        for _ in 0..20 {
            let phi = draw_initial_phase(&ctx, &mut rng);
            let grad = objective_gradient(&phi, &ctx).unwrap();
            for k in 0..phi.len() {
                let fd = central_difference(|x| objective_value(x, &ctx).unwrap(), &phi, k, 1e-5);
                worst = worst.max(rel_err(grad[k], fd, 1e-3));
            }
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst:e}");
}

#[test]
fn residual_form_matches_explicit_projection_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let cfg = MixtureConfig::new(8, 100.0, rng.random_range(1..=3), vec![rng.random_range(0..=1)]).unwrap();
        let signal = random_signal(&mut rng, 8, 100.0);
        let ctx = ObjectiveContext::new(&signal, &cfg).unwrap();
        let phi = draw_initial_phase(&ctx, &mut rng);
        let fast = objective_value(&phi, &ctx).unwrap();
        let explicit = oracle_objective(&signal.samples, &phi, &cfg, ctx.gamma());
        assert!(rel_err(fast, explicit, 1e-12) <= 1e-10, "{fast} vs {explicit}");
    }
}

#[test]
fn implicit_projection_is_idempotent_without_ridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = MixtureConfig::new(48, 200.0, 2, vec![1, 0]).unwrap().with_regularization(0.0);
    for _ in 0..10 {
        let y = random_signal(&mut rng, 48, 200.0);
        let ctx = ObjectiveContext::new(&y, &cfg).unwrap();
        let phi = draw_initial_phase(&ctx, &mut rng);
        let once = solve_amplitudes(build_basis_matrix(&phi, &ctx).unwrap(), &ctx).unwrap().residual;
        let ctx2 = ObjectiveContext::new(&ComplexSignal::new(once.clone(), 200.0), &cfg).unwrap();
        let twice = solve_amplitudes(build_basis_matrix(&phi, &ctx2).unwrap(), &ctx2).unwrap().residual;
        let gap: f64 = once.iter().zip(&twice).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = once.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(gap <= 1e-8 * norm, "gap {gap:e} on norm {norm}");
    }
}

#[test]
fn objective_scales_quadratically_with_the_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for gamma in [Some(0.0), None] {
        let mut cfg = MixtureConfig::new(40, 100.0, 3, vec![1, 1]).unwrap();
        if let Some(g) = gamma {
            cfg = cfg.with_regularization(g);
        }
        let y = random_signal(&mut rng, 40, 100.0);
        let ctx = ObjectiveContext::new(&y, &cfg).unwrap();
        for alpha in [-3.0, 0.25, 7.5] {
            let scaled = ObjectiveContext::new(&y.scaled(alpha), &cfg).unwrap();
            let phi = draw_initial_phase(&ctx, &mut rng);
            let base = objective_value(&phi, &ctx).unwrap();
            let big = objective_value(&phi, &scaled).unwrap();
            assert!(rel_err(big, alpha * alpha * base, 1e-12) <= 1e-9);
        }
    }
}

#[test]
fn dense_grid_argmin_lands_in_the_true_cell() {
    let fs = 1000.0;
    let grid = linspace(0.0, fs / 2.0, 101);
    let cfg = MixtureConfig::new(64, fs, 1, vec![0]).unwrap();
    for (seed, cell) in [(0u64, 17usize), (1, 42), (2, 73)] {
        let truth = ChirpParams::new(vec![vec![grid[cell]]], vec![vec![1.0]]).unwrap();
        let clean = synthesize_mixture(&truth, &cfg).unwrap();
        let noisy =
            add_complex_gaussian_noise(&clean, snr_to_noise_variance(&clean, 20.0).unwrap(), seed).unwrap();
        let ctx = ObjectiveContext::new(&noisy, &cfg).unwrap();
        let argmin = (0..grid.len())
            .min_by(|&a, &b| {
                let va = objective_value(&[grid[a]], &ctx).unwrap();
                let vb = objective_value(&[grid[b]], &ctx).unwrap();
                va.total_cmp(&vb)
            })
            .unwrap();
        assert_eq!(argmin, cell, "seed {seed}");
    }
}

#[test]
fn gradient_vanishes_at_the_truth_of_a_noiseless_chirp() {
    let cfg = MixtureConfig::new(200, 400.0, 3, vec![2]).unwrap().with_regularization(1e-10);
    let truth = ChirpParams::new(vec![vec![35.0, 20.0, -15.0]], vec![vec![1.0, 0.4, -0.3]]).unwrap();
    let y = synthesize_mixture(&truth, &cfg).unwrap();
    let ctx = ObjectiveContext::new(&y, &cfg).unwrap();
    let grad = objective_gradient(&truth.flat_phase(), &ctx).unwrap();
    let worst = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    assert!(worst <= 1e-4 * y.energy(), "{worst:e}");
}

/// `J(x) = aᵀx`.
struct Linear(Vec<f64>);

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.0.iter().zip(x).map(|(a, b)| a * b).sum())
    }
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, self.0.clone()))
    }
}

/// `J(x) = ‖x‖²`.
struct Sphere(usize);

impl Objective for Sphere {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, x.iter().map(|v| 2.0 * v).collect()))
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn trace_estimate_is_unbiased_on_a_linear_objective() {
    let obj = Linear(vec![1.5, -2.0, 0.5, 3.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| {
            let s = smoothed_gradient_sample(&obj, &[0.3, 0.1, -0.2, 1.0], 0.5, &mut rng).unwrap();
            hessian_trace_estimate(&s).unwrap()
        })
        .collect();
    let (mean, se) = mean_and_se(&draws);
    assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn smoothed_gradient_of_a_symmetric_bowl_averages_to_zero() {
    let obj = Sphere(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples: Vec<Vec<f64>> = (0..10_000)
        .map(|_| smoothed_gradient_sample(&obj, &[0.0; 3], 0.7, &mut rng).unwrap().gradient)
        .collect();
    for k in 0..3 {
        let coord: Vec<f64> = samples.iter().map(|g| g[k]).collect();
        let (mean, se) = mean_and_se(&coord);
        assert!(mean.abs() <= 3.0 * se, "coordinate {k}: mean {mean} se {se}");
    }
}

#[test]
fn same_seed_gives_the_same_smoothed_sample() {
    let obj = Sphere(5);
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        smoothed_gradient_sample(&obj, &[1.0; 5], 0.3, &mut rng).unwrap()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9).perturbation, draw(10).perturbation);
}
