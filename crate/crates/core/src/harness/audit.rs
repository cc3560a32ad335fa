//! Finite-difference audit of the analytic gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::objective::{Objective, ObjectiveContext};
use crate::sampler::draw_initial_phase;

/// Worst disagreement found by [`gradient_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAudit {
    pub max_relative_error: f64,
    pub worst_point: usize,
    pub worst_coordinate: usize,
    pub points: usize,
}

/// `|a − b| / max(|a|, |b|)`, or the absolute gap when both are below
/// `floor`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let gap = (analytic - numeric).abs();
    if scale < floor {
        gap
    } else {
        gap / scale
    }
}

/// Compares the analytic gradient with central differences of step `delta`
/// at each point.
pub fn gradient_audit<O: Objective + ?Sized>(
    objective: &O,
    points: &[Vec<f64>],
    delta: f64,
) -> Result<GradientAudit> {
    let mut audit = GradientAudit {
        max_relative_error: 0.0,
        worst_point: 0,
        worst_coordinate: 0,
        points: points.len(),
    };
    for (i, point) in points.iter().enumerate() {
        let grad = objective.gradient(point)?;
        let mut probe = point.clone();
        for k in 0..point.len() {
            probe[k] = point[k] + delta;
            let plus = objective.value(&probe)?;
            probe[k] = point[k] - delta;
            let minus = objective.value(&probe)?;
            probe[k] = point[k];
            let numeric = (plus - minus) / (2.0 * delta);
            let err = relative_error(grad[k], numeric, 1e-8);
            if err > audit.max_relative_error || err.is_nan() {
                audit.max_relative_error = err;
                audit.worst_point = i;
                audit.worst_coordinate = k;
            }
        }
    }
    Ok(audit)
}

/// `count` points drawn from the sampler's initialization box.
pub fn audit_points(ctx: &ObjectiveContext, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| draw_initial_phase(ctx, &mut rng)).collect()
}
