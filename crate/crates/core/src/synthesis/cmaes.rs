//! (μ/μ_w, λ) CMA-ES maximizer over a box.
//!
//! Candidates are sampled unconstrained and clipped onto the box only for
//! evaluation; the distribution mean is kept inside the box. A generation
//! is evaluated in parallel and collected in candidate order, so a run is
//! reproducible from its seed.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaesConfig {
    /// λ, candidates per generation.
    pub population: usize,
    pub generations: usize,
    /// Initial step size as a fraction of each coordinate's half-width.
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        CmaesConfig {
            population: 50,
            generations: 200,
            initial_step: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CmaesOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub generations: usize,
    pub evaluations: usize,
    /// Best-so-far value after each generation.
    pub history: Vec<f64>,
    /// Wall time of each generation in seconds.
    pub generation_seconds: Vec<f64>,
}

fn clip(x: &DVector<f64>, bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect()
}

fn fitness(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximizes `eval` over `bounds` starting from `start` (clipped into the
/// box). Returns the best candidate ever evaluated.
pub fn cmaes_maximize<E>(eval: E, bounds: &[(f64, f64)], start: &[f64], config: &CmaesConfig) -> CmaesOutcome
where
    E: Fn(&[f64]) -> f64 + Sync,
{
    let n = bounds.len();
    let lambda = config.population.max(2);
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / wsum).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let nf = n as f64;
    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
    let eigen_every = ((1.0 / (10.0 * nf * (c_1 + c_mu))).floor() as usize).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = DVector::from_iterator(n, start.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)));
    let mut mean = start.clone();
    let mut sigma = config.initial_step;
    let half: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let h = 0.5 * (hi - lo);
            if h > 0.0 && h.is_finite() {
                h
            } else {
                1.0
            }
        })
        .collect();
    let mut cov = DMatrix::from_diagonal(&DVector::from_iterator(n, half.iter().map(|h| h * h)));
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut scales = DVector::from_iterator(n, half.iter().copied());
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);

    let first = clip(&start, bounds);
    let mut best_value = fitness(eval(&first));
    let mut best = first;
    let mut evaluations = 1;
    let mut history = Vec::with_capacity(config.generations);
    let mut generation_seconds = Vec::with_capacity(config.generations);
    let mut generations = 0;

    for g in 0..config.generations {
        let t0 = Instant::now();
        if g > 0 && g % eigen_every == 0 {
            cov = (&cov + cov.transpose()) * 0.5;
            let eig = SymmetricEigen::new(cov.clone());
            basis = eig.eigenvectors;
            scales = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        }

        let steps: Vec<DVector<f64>> = (0..lambda)
            .map(|_| {
                let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
                &basis * z.component_mul(&scales)
            })
            .collect();
        let candidates: Vec<DVector<f64>> = steps.iter().map(|y| &mean + y * sigma).collect();
        let values: Vec<f64> = candidates
            .par_iter()
            .map(|x| fitness(eval(&clip(x, bounds))))
            .collect();
        evaluations += lambda;

        // Clipping makes the objective flat outside the box; among equal
        // values prefer candidates closer to it.
        let outside: Vec<f64> = candidates
            .iter()
            .map(|x| {
                x.iter()
                    .zip(bounds)
                    .map(|(&v, &(lo, hi))| (v - v.clamp(lo, hi)).powi(2))
                    .sum()
            })
            .collect();
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&i, &j| {
            values[j]
                .partial_cmp(&values[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(outside[i].total_cmp(&outside[j]))
        });
        if values[order[0]] > best_value {
            best_value = values[order[0]];
            best = clip(&candidates[order[0]], bounds);
        }

        let mut y_w = DVector::<f64>::zeros(n);
        for (k, &i) in order.iter().take(mu).enumerate() {
            y_w.axpy(weights[k], &steps[i], 1.0);
        }
        let mut next = &mean + &y_w * sigma;
        for (m, &(lo, hi)) in next.iter_mut().zip(bounds) {
            *m = m.clamp(lo, hi);
        }
        // The paths follow the realized (clamped) move of the mean.
        let y_w = (&next - &mean) / sigma;
        mean = next;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let inv_sqrt_y = &basis * (basis.transpose() * &y_w).component_div(&scales);
        p_sigma = &p_sigma * (1.0 - c_sigma) + inv_sqrt_y * (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        let norm_ps = p_sigma.norm();
        let h_sigma = norm_ps / (1.0 - (1.0 - c_sigma).powi(2 * (g as i32 + 1))).sqrt()
            < (1.4 + 2.0 / (nf + 1.0)) * chi_n;
        let hs = if h_sigma { 1.0 } else { 0.0 };
        p_c = &p_c * (1.0 - c_c) + &y_w * (hs * (c_c * (2.0 - c_c) * mu_eff).sqrt());

        let mut sel = DMatrix::<f64>::zeros(n, mu);
        for (k, &i) in order.iter().take(mu).enumerate() {
            sel.set_column(k, &(&steps[i] * weights[k].sqrt()));
        }
        let decay = 1.0 - c_1 - c_mu + (1.0 - hs) * c_1 * c_c * (2.0 - c_c);
        cov *= decay;
        cov.ger(c_1, &p_c, &p_c, 1.0);
        cov.gemm(c_mu, &sel, &sel.transpose(), 1.0);

        sigma *= ((c_sigma / d_sigma) * (norm_ps / chi_n - 1.0)).exp();

        history.push(best_value);
        generation_seconds.push(t0.elapsed().as_secs_f64());
        generations = g + 1;
        if sigma * scales.max() < 1e-12 {
            break;
        }
    }

    CmaesOutcome {
        best,
        value: best_value,
        generations,
        evaluations,
        history,
        generation_seconds,
    }
}
