//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's objective code; the basis, projection and finite
//! differences are rebuilt from their definitions.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;

use chirpest::harness::{load_experiment, ExperimentSpec};
use chirpest::MixtureConfig;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn bundled_spec(name: &str) -> PathBuf {
    workspace_root().join("specs").join(format!("{name}.json"))
}

pub fn table1() -> ExperimentSpec {
    load_experiment(&bundled_spec("table1")).expect("bundled table1 spec loads")
}

/// Basis matrix from its definition: column `(c, a)` holds
/// `t^a exp(j2π Σ_p φ_{c,p} t^p)` with `t = n / f_s`.
pub fn oracle_basis(phi: &[f64], cfg: &MixtureConfig) -> DMatrix<Complex64> {
    let n = cfg.num_samples;
    let m: usize = cfg.amp_orders.iter().map(|a| a + 1).sum();
    let mut h = DMatrix::<Complex64>::zeros(n, m);
    let mut col = 0;
    for (c, &order) in cfg.amp_orders.iter().enumerate() {
        let coeffs = &phi[c * cfg.phase_order..(c + 1) * cfg.phase_order];
        for a in 0..=order {
            for row in 0..n {
                let t = row as f64 / cfg.sample_rate;
                let mut cycles = 0.0;
                for (p, coef) in coeffs.iter().enumerate() {
                    cycles += coef * t.powi(p as i32 + 1);
                }
                let angle = 2.0 * std::f64::consts::PI * cycles;
                h[(row, col)] = Complex64::from_polar(t.powi(a as i32), angle);
            }
            col += 1;
        }
    }
    h
}

/// `y* (I − H (H*H + γI)⁻¹ H*) y` with the projection built explicitly.
pub fn oracle_objective(y: &[Complex64], phi: &[f64], cfg: &MixtureConfig, gamma: f64) -> f64 {
    let h = oracle_basis(phi, cfg);
    let n = h.nrows();
    let hh = h.adjoint();
    let g = &hh * &h + DMatrix::<Complex64>::identity(h.ncols(), h.ncols()) * Complex64::from(gamma);
    let g_inv = g.try_inverse().expect("regularized Gram matrix is invertible");
    let proj = DMatrix::<Complex64>::identity(n, n) - &h * g_inv * hh;
    let yv = DMatrix::from_column_slice(n, 1, y);
    (yv.adjoint() * proj * yv)[(0, 0)].re
}

/// Central difference of `f` along coordinate `k`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, delta: f64) -> f64 {
    let mut probe = x.to_vec();
    probe[k] = x[k] + delta;
    let plus = f(&probe);
    probe[k] = x[k] - delta;
    let minus = f(&probe);
    (plus - minus) / (2.0 * delta)
}

/// Relative gap, falling back to the absolute gap for values below `floor`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < floor {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Dense grid minimizer of a single constant-amplitude chirp's `J`, using
/// the closed form `‖y‖² − |h*y|² / (h*h + γ)` for a one-column basis.
pub fn grid_oracle_single_chirp(
    y: &[Complex64],
    sample_rate: f64,
    axes: &[Vec<f64>],
    gamma: f64,
) -> Vec<f64> {
    let energy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    let value = |phi: &[f64]| -> f64 {
        let mut corr = Complex64::new(0.0, 0.0);
        for (n, v) in y.iter().enumerate() {
            let t = n as f64 / sample_rate;
            let cycles: f64 = phi
                .iter()
                .enumerate()
                .map(|(p, c)| c * t.powi(p as i32 + 1))
                .sum();
            corr += Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * cycles) * v;
        }
        energy - corr.norm_sqr() / (y.len() as f64 + gamma)
    };
    let mut best = (f64::INFINITY, Vec::new());
    let mut idx = vec![0usize; axes.len()];
    loop {
        let phi: Vec<f64> = idx.iter().zip(axes).map(|(&i, ax)| ax[i]).collect();
        let v = value(&phi);
        if v < best.0 {
            best = (v, phi);
        }
        let mut d = 0;
        loop {
            if d == axes.len() {
                return best.1;
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// `count` evenly spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}
