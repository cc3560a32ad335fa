//! Per-parameter summary statistics over repeated runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column name of `φ_{c,p}` with 1-based indices, e.g. `phi_2_3`.
pub fn parameter_name(chirp: usize, power: usize) -> String {
    format!("phi_{}_{}", chirp + 1, power + 1)
}

/// Mean, spread and error of one phase coefficient across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterStats {
    pub parameter: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truth: Option<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n − 1`); zero for a single run.
    pub sd: f64,
    /// Mean absolute error against `truth`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mae: Option<f64>,
    pub count: usize,
}

/// Statistics for every coordinate of the chirp-major phase vectors in
/// `estimates`.
pub fn compute_statistics(
    estimates: &[Vec<f64>],
    truth: Option<&[f64]>,
    phase_order: usize,
) -> Result<Vec<ParameterStats>> {
    let first = estimates
        .first()
        .ok_or_else(|| Error::InvalidConfig("no estimates to summarize".into()))?;
    let dim = first.len();
    if phase_order == 0 || dim % phase_order != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{dim} parameters do not split into order-{phase_order} chirps"
        )));
    }
    if let Some(e) = estimates.iter().find(|e| e.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} parameters, expected {dim}",
            e.len()
        )));
    }
    if let Some(t) = truth.filter(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} parameters, expected {dim}",
            t.len()
        )));
    }
    let n = estimates.len() as f64;
    Ok((0..dim)
        .map(|k| {
            let mean = estimates.iter().map(|e| e[k]).sum::<f64>() / n;
            let sd = if estimates.len() > 1 {
                (estimates.iter().map(|e| (e[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let truth_k = truth.map(|t| t[k]);
            let mae = truth_k.map(|t| estimates.iter().map(|e| (e[k] - t).abs()).sum::<f64>() / n);
            ParameterStats {
                parameter: parameter_name(k / phase_order, k % phase_order),
                truth: truth_k,
                mean,
                sd,
                mae,
                count: estimates.len(),
            }
        })
        .collect())
}

/// Chirp labels are arbitrary, so estimates are matched to the truth
/// before averaging. Returns `perm` with estimated chirp `perm[c]` assigned
/// to true chirp `c`, minimizing the total first-order error (ties go to
/// the lexicographically first permutation).
pub fn align_to_truth(phi_hat: &[f64], truth: &[f64], phase_order: usize) -> Vec<usize> {
    let chirps = truth.len() / phase_order.max(1);
    let mut perm: Vec<usize> = (0..chirps).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let cost: f64 = perm
            .iter()
            .enumerate()
            .map(|(c, &e)| (phi_hat[e * phase_order] - truth[c * phase_order]).abs())
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            return best;
        }
    }
}

/// Reorders chirp blocks of size `block` so that block `c` comes from `perm[c]`.
pub fn permute_blocks<T: Clone>(values: &[T], perm: &[usize], block: usize) -> Vec<T> {
    perm.iter()
        .flat_map(|&src| values[src * block..(src + 1) * block].iter().cloned())
        .collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
