//! Box-constrained limited-memory quasi-Newton refinement.
//!
//! Variables at a bound whose gradient pushes outward are held fixed; the
//! L-BFGS direction is computed on the remaining free variables and the step
//! is projected back onto the box. An Armijo backtracking search on the
//! projected path makes every accepted step an improvement.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMethod {
    #[default]
    ProjectedLbfgs,
    /// Skip the local phase.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    pub method: LocalMethod,
    pub max_iterations: usize,
    /// Stop once the infinity norm of the projected gradient drops below this.
    pub tolerance: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig {
            method: LocalMethod::ProjectedLbfgs,
            max_iterations: 200,
            tolerance: 1e-6,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Projected gradient of the minimization problem; zero components mean the
/// coordinate is stationary or pinned at a bound.
fn projected_gradient(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| xi - (xi - gi).clamp(lo, hi))
        .collect()
}

fn two_loop(g: &[f64], free: &[bool], pairs: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(&x, &f)| if f { x } else { 0.0 }).collect() };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let (s, y) = (mask(s), mask(y));
        let sy = dot(&s, &y);
        if sy <= 1e-300 {
            alphas.push(0.0);
            continue;
        }
        let a = dot(&s, &q) / sy;
        for (qi, yi) in q.iter_mut().zip(&y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y)) = pairs.back() {
        let (s, y) = (mask(s), mask(y));
        let yy = dot(&y, &y);
        let sy = dot(&s, &y);
        if yy > 0.0 && sy > 0.0 {
            let k = sy / yy;
            q.iter_mut().for_each(|v| *v *= k);
        }
    }
    for ((s, y), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let (s, y) = (mask(s), mask(y));
        let sy = dot(&s, &y);
        if sy <= 1e-300 {
            continue;
        }
        let b = dot(&y, &q) / sy;
        for (qi, si) in q.iter_mut().zip(&s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Maximizes a function given as value and gradient over `bounds`.
///
/// Errors if the objective or the gradient is not finite at `start`.
pub fn local_maximize<E>(mut eval: E, bounds: &[(f64, f64)], start: &[f64], config: &LocalConfig) -> Result<LocalOutcome>
where
    E: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = start.to_vec();
    project(&mut x, bounds);
    // Work on the minimization of -f.
    let neg = |(v, g): (f64, Vec<f64>)| (-v, g.into_iter().map(|d| -d).collect::<Vec<_>>());
    let (mut f, mut g) = neg(eval(&x));
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFiniteStart);
    }
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(config.memory);
    let mut converged = false;
    let mut iterations = 0;

    if config.method == LocalMethod::None {
        return Ok(LocalOutcome {
            best: x,
            value: -f,
            iterations,
            evaluations,
            converged,
        });
    }

    while iterations < config.max_iterations {
        let pg = projected_gradient(&x, &g, bounds);
        if pg.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < config.tolerance {
            converged = true;
            break;
        }
        let free: Vec<bool> = x
            .iter()
            .zip(&g)
            .zip(bounds)
            .map(|((&xi, &gi), &(lo, hi))| !((xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0)))
            .collect();
        let mut d = two_loop(&g, &free, &pairs);
        if dot(&d, &g) >= 0.0 {
            d = g.iter().zip(&free).map(|(&gi, &fr)| if fr { -gi } else { 0.0 }).collect();
            pairs.clear();
        }
        let mut step = if pairs.is_empty() {
            let gn = dot(&d, &d).sqrt();
            if gn > 0.0 {
                (1.0 / gn).min(1.0)
            } else {
                1.0
            }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            project(&mut xn, bounds);
            let dx: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &dx);
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            let (fn_, gn) = neg(eval(&xn));
            evaluations += 1;
            if fn_.is_finite() && fn_ <= f + 1e-4 * decrease && gn.iter().all(|v| v.is_finite()) {
                accepted = Some((xn, fn_, gn, dx));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((xn, fn_, gn, s)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == config.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y));
        }
        x = xn;
        f = fn_;
        g = gn;
    }

    Ok(LocalOutcome {
        best: x,
        value: -f,
        iterations,
        evaluations,
        converged,
    })
}
