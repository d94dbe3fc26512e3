//! Two-phase control synthesis: CMA-ES over the whole box, then projected
//! L-BFGS refinement from the best global candidate.

pub mod cmaes;
pub mod gradcheck;
pub mod local;
pub mod objective;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ast::{validate, OuterFormula};
use crate::dynamics::{rollout_traced, AgentModel, ControlPlan, Rollout};
use crate::error::{Error, Result};
use crate::robustness::{Metric, Monitor, RobustnessParams};
use crate::scalar::Real;

pub use cmaes::{cmaes_maximize, CmaesConfig, CmaesOutcome};
pub use gradcheck::{gradcheck, random_plan, GradcheckReport};
pub use local::{local_maximize, LocalConfig, LocalMethod, LocalOutcome};
pub use objective::{evaluate, objective, objective_and_gradient, sup_cost_bound, CostKind, Evaluation};

/// A team, a specification and a planning horizon.
#[derive(Clone, Debug)]
pub struct Problem<F: Real = f64> {
    pub agents: Vec<AgentModel<F>>,
    pub formula: OuterFormula,
    pub horizon: usize,
}

impl<F: Real> Problem<F> {
    pub fn new(agents: Vec<AgentModel<F>>, formula: OuterFormula, horizon: usize) -> Result<Self> {
        for a in &agents {
            a.validate()?;
        }
        let diags = validate(&formula, agents.iter().map(|a| &a.capabilities));
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        let needed = formula.horizon();
        if horizon < needed {
            return Err(Error::HorizonMismatch {
                expected: needed,
                found: horizon,
            });
        }
        Ok(Problem {
            agents,
            formula,
            horizon,
        })
    }

    /// Length of the flattened decision vector.
    pub fn dimension(&self) -> usize {
        ControlPlan::dimension(&self.agents, self.horizon)
    }

    /// Per-coordinate bounds of the flattened decision vector.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.dimension());
        for a in &self.agents {
            for _ in 0..self.horizon {
                out.extend(
                    a.control_box
                        .iter()
                        .map(|&(lo, hi)| (lo.to_f64().unwrap_or(f64::NAN), hi.to_f64().unwrap_or(f64::NAN))),
                );
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub gamma: f64,
    pub cost: CostKind,
    pub metric: Metric,
    pub params: RobustnessParams,
    pub cmaes: CmaesConfig,
    pub local: LocalConfig,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            gamma: 1000.0,
            cost: CostKind::L2Norm,
            metric: Metric::Exponential,
            params: RobustnessParams::default(),
            cmaes: CmaesConfig::default(),
            local: LocalConfig::default(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate<F: Real>(&self, problem: &Problem<F>) -> Result<()> {
        self.params.validate()?;
        if self.cmaes.population < 4 {
            return Err(Error::Config(format!("population must be at least 4, got {}", self.cmaes.population)));
        }
        if self.cmaes.generations == 0 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(self.cmaes.initial_step > 0.0) {
            return Err(Error::Config("initial step must be positive".into()));
        }
        if !(self.local.tolerance >= 0.0) {
            return Err(Error::Config("local tolerance must be non-negative".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        let bound = sup_cost_bound(&problem.agents, problem.horizon, &self.cost)?;
        if self.gamma < bound {
            return Err(Error::GammaTooSmall {
                gamma: self.gamma,
                bound,
            });
        }
        Ok(())
    }

    pub fn monitor(&self) -> Monitor {
        Monitor::new(self.metric, self.params)
    }
}

/// Metrics of one optimization phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub iterations: usize,
    pub evaluations: usize,
    pub seconds: f64,
    /// Best objective found by the phase.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub plan: ControlPlan<f64>,
    pub rollouts: Vec<Rollout<f64>>,
    pub objective: f64,
    pub robustness: f64,
    pub cost: f64,
    /// Robustness is positive, so the specification holds.
    pub satisfied: bool,
    pub global: PhaseStats,
    pub local: PhaseStats,
    /// CMA-ES best-so-far objective per generation.
    pub history: Vec<f64>,
}

/// Runs both phases and returns the better plan; equal objectives are
/// resolved by lower control cost.
pub fn synthesize(problem: &Problem<f64>, config: &SynthesisConfig) -> Result<SynthesisResult> {
    config.validate(problem)?;
    let bounds = problem.bounds();
    let dim = bounds.len();
    let eval = |x: &[f64]| {
        let m = config.monitor();
        objective(problem, &m, config.gamma, &config.cost, x).unwrap_or(f64::NEG_INFINITY)
    };

    let t0 = Instant::now();
    let start: Vec<f64> = bounds.iter().map(|&(lo, hi)| 0.0_f64.clamp(lo, hi)).collect();
    let global = cmaes_maximize(eval, &bounds, &start, &config.cmaes);
    let global_stats = PhaseStats {
        iterations: global.generations,
        evaluations: global.evaluations,
        seconds: t0.elapsed().as_secs_f64(),
        value: global.value,
    };

    let t1 = Instant::now();
    let monitor = config.monitor();
    let refined = local_maximize(
        |x: &[f64]| {
            objective_and_gradient(problem, &monitor, config.gamma, &config.cost, x)
                .unwrap_or((f64::NEG_INFINITY, vec![0.0; dim]))
        },
        &bounds,
        &global.best,
        &config.local,
    );
    let (local_best, local_stats) = match refined {
        Ok(out) => (
            Some((out.best, out.value)),
            PhaseStats {
                iterations: out.iterations,
                evaluations: out.evaluations,
                seconds: t1.elapsed().as_secs_f64(),
                value: out.value,
            },
        ),
        Err(Error::NonFiniteStart) => (None, PhaseStats::default()),
        Err(e) => return Err(e),
    };

    let monitor = config.monitor();
    let score = |x: &[f64]| evaluate(problem, &monitor, config.gamma, &config.cost, x);
    let mut chosen = global.best.clone();
    let mut chosen_eval = score(&chosen)?;
    if let Some((x, _)) = local_best {
        let e = score(&x)?;
        if e.objective > chosen_eval.objective
            || (e.objective == chosen_eval.objective && e.cost < chosen_eval.cost)
        {
            chosen = x;
            chosen_eval = e;
        }
    }

    let plan = ControlPlan::from_flat(&problem.agents, problem.horizon, &chosen)?;
    let rollouts = problem
        .agents
        .iter()
        .zip(&plan.controls)
        .map(|(a, u)| rollout_traced(a, u))
        .collect();
    Ok(SynthesisResult {
        plan,
        rollouts,
        objective: chosen_eval.objective,
        robustness: chosen_eval.robustness,
        cost: chosen_eval.cost,
        satisfied: chosen_eval.robustness > 0.0,
        global: global_stats,
        local: local_stats,
        history: global.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{rectangle, Task};

    fn unicycles(n: usize) -> Vec<AgentModel> {
        (0..n)
            .map(|j| AgentModel::unicycle([0.0, j as f64, 0.0], [(-1.0, 1.0); 2], ["g"]).unwrap())
            .collect()
    }

    fn small_config() -> SynthesisConfig {
        SynthesisConfig {
            cmaes: CmaesConfig {
                population: 16,
                generations: 40,
                seed: 3,
                ..Default::default()
            },
            local: LocalConfig {
                max_iterations: 50,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn gamma_below_cost_bound_is_rejected() {
        let p = Problem::new(unicycles(6), OuterFormula::True, 25).unwrap();
        let cfg = SynthesisConfig {
            gamma: 10.0,
            ..Default::default()
        };
        let e = cfg.validate(&p).unwrap_err();
        assert!(matches!(e, Error::GammaTooSmall { .. }));
        assert!(e.to_string().contains("gamma"));
        assert!(SynthesisConfig::default().validate(&p).is_ok());
    }

    #[test]
    fn population_and_generations_are_checked() {
        let p = Problem::new(unicycles(1), OuterFormula::True, 2).unwrap();
        let mut cfg = small_config();
        cfg.cmaes.population = 3;
        assert!(cfg.validate(&p).is_err());
        cfg.cmaes.population = 4;
        cfg.cmaes.generations = 0;
        assert!(cfg.validate(&p).is_err());
    }

    #[test]
    fn short_horizon_is_rejected() {
        let f = OuterFormula::eventually(OuterFormula::atom(Task::new(rectangle([0.0, 0.0], [1.0, 1.0]), "g", 1)), 0, 5);
        assert!(matches!(
            Problem::new(unicycles(1), f, 4),
            Err(Error::HorizonMismatch { expected: 5, found: 4 })
        ));
    }

    #[test]
    fn reach_task_is_satisfied() {
        let task = Task::new(rectangle([2.5, -0.5], [3.5, 1.5]), "g", 2);
        let f = OuterFormula::eventually(OuterFormula::atom(task), 0, 5);
        let p = Problem::new(unicycles(2), f, 5).unwrap();
        let r = synthesize(&p, &small_config()).unwrap();
        assert!(r.satisfied, "objective {}", r.objective);
        assert!(r.objective > 0.0);
        assert!(r.objective >= r.global.value);
        assert_eq!(r.rollouts.len(), 2);
        assert_eq!(r.rollouts[0].workspace.len(), 6);
        r.plan.validate(&p.agents).unwrap();
    }

    #[test]
    fn true_formula_prefers_zero_cost() {
        let p = Problem::new(unicycles(1), OuterFormula::True, 3).unwrap();
        let r = synthesize(&p, &small_config()).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn contradiction_is_reported_unsatisfied() {
        let t = OuterFormula::atom(Task::new(rectangle([-1.0, -1.0], [1.0, 1.0]), "g", 1));
        let f = OuterFormula::and(vec![t.clone(), OuterFormula::not(t)]);
        let p = Problem::new(unicycles(1), f, 1).unwrap();
        let r = synthesize(&p, &small_config()).unwrap();
        assert!(r.objective < 0.0);
        assert!(!r.satisfied);
    }
}
