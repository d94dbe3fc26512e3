//! Finite-difference check of the objective gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::{objective, objective_and_gradient, Problem, SynthesisConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub dimension: usize,
    pub objective: f64,
    /// Largest per-coordinate relative error.
    pub max_rel_error: f64,
    pub worst_index: usize,
    /// Ties and zero critical values met while recording the gradient; at
    /// such points the reported derivative is one-sided.
    pub nonsmooth_points: usize,
}

impl GradcheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// A uniformly random plan inside the control boxes.
pub fn random_plan(problem: &Problem<f64>, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    problem
        .bounds()
        .into_iter()
        .map(|(lo, hi)| rng.random_range(lo..=hi))
        .collect()
}

/// Compares the reverse-mode gradient at `x` with central differences of
/// step `h`.
///
/// Per coordinate the error is `|g_ad - g_fd|` divided by
/// `max(|g_ad|, |g_fd|, 1e-3·‖g_fd‖∞, 1e-12)`; the norm floor keeps
/// coordinates with a negligible share of the gradient from dominating
/// through finite-difference roundoff.
pub fn gradcheck(problem: &Problem<f64>, config: &SynthesisConfig, x: &[f64], h: f64) -> Result<GradcheckReport> {
    let monitor = config.monitor();
    let (value, ad) = objective_and_gradient(problem, &monitor, config.gamma, &config.cost, x)?;
    let nonsmooth_points = monitor.nonsmooth_count();

    let plain = config.monitor();
    let mut fd = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let up = objective(problem, &plain, config.gamma, &config.cost, &y)?;
        y[i] = x[i] - h;
        let down = objective(problem, &plain, config.gamma, &config.cost, &y)?;
        y[i] = x[i];
        fd.push((up - down) / (2.0 * h));
    }

    let scale = fd.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut max_rel_error = 0.0;
    let mut worst_index = 0;
    for (i, (a, f)) in ad.iter().zip(&fd).enumerate() {
        let denom = a.abs().max(f.abs()).max(1e-3 * scale).max(1e-12);
        let err = (a - f).abs() / denom;
        if err > max_rel_error || err.is_nan() {
            max_rel_error = if err.is_nan() { f64::INFINITY } else { err };
            worst_index = i;
        }
    }
    Ok(GradcheckReport {
        dimension: x.len(),
        objective: value,
        max_rel_error,
        worst_index,
        nonsmooth_points,
    })
}
