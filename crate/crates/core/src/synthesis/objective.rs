//! The synthesis objective `η − [η]₊/γ · Σ_j C(u_j)` and the control cost.

use serde::{Deserialize, Serialize};

use crate::ad::Tape;
use crate::dynamics::{team_trajectory, unflatten, AgentModel};
use crate::error::{Error, Result};
use crate::robustness::Monitor;
use crate::scalar::{Real, Scalar};

use super::Problem;

/// Per-agent control cost `C(u_j)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CostKind {
    /// Euclidean norm of the agent's whole control sequence.
    #[default]
    L2Norm,
    Zero,
    /// `w_j · ‖u_j‖₂` with one weight per agent.
    WeightedL2 { weights: Vec<f64> },
}

impl CostKind {
    fn weight(&self, agent: usize) -> f64 {
        match self {
            CostKind::L2Norm => 1.0,
            CostKind::Zero => 0.0,
            CostKind::WeightedL2 { weights } => weights.get(agent).copied().unwrap_or(1.0),
        }
    }

    /// Total cost `Σ_j C(u_j)` of per-agent control sequences.
    pub fn total<S: Scalar>(&self, controls: &[Vec<Vec<S>>]) -> S {
        let mut total = S::lit(0.0);
        for (j, u) in controls.iter().enumerate() {
            let w = self.weight(j);
            if w == 0.0 {
                continue;
            }
            let mut sq = S::lit(0.0);
            for x in u.iter().flatten() {
                sq = sq + *x * *x;
            }
            total = total + sq.sqrt().scale(S::Prim::lit(w));
        }
        total
    }
}

/// `sup Σ_j C(u_j)` over the control boxes for a horizon of `horizon` steps.
pub fn sup_cost_bound<F: Real>(agents: &[AgentModel<F>], horizon: usize, cost: &CostKind) -> Result<f64> {
    let mut total = 0.0;
    for (j, a) in agents.iter().enumerate() {
        let w = cost.weight(j);
        if w == 0.0 {
            continue;
        }
        let mut per_step = 0.0;
        for &(lo, hi) in &a.control_box {
            let (lo, hi) = (lo.to_f64().unwrap_or(f64::NAN), hi.to_f64().unwrap_or(f64::NAN));
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::UnboundedBox(j));
            }
            per_step += lo.abs().max(hi.abs()).powi(2);
        }
        total += w * (per_step * horizon as f64).sqrt();
    }
    Ok(total)
}

/// Parts of one objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation<S> {
    pub objective: S,
    pub robustness: S,
    pub cost: S,
}

/// Evaluates the objective at a flattened decision vector. An infinite
/// robustness (a formula that holds or fails on every trace) has no
/// meaningful margin and yields objective 0 or `-∞` respectively.
pub fn evaluate<F: Real, S: Scalar<Prim = F>>(
    problem: &Problem<F>,
    monitor: &Monitor,
    gamma: f64,
    cost: &CostKind,
    flat: &[S],
) -> Result<Evaluation<S>> {
    let controls = unflatten(&problem.agents, problem.horizon, flat)?;
    let team = team_trajectory(&problem.agents, &controls)?;
    let eta = monitor.robustness(&team, &problem.formula, 0)?;
    let c = cost.total(&controls);
    let zero = S::lit(0.0);
    let objective = if eta.value().is_infinite() {
        if eta.value() > F::zero() {
            zero
        } else {
            eta
        }
    } else if eta.value() > F::zero() {
        eta - eta * c.scale(S::Prim::lit(1.0 / gamma))
    } else {
        eta
    };
    Ok(Evaluation {
        objective,
        robustness: eta,
        cost: c,
    })
}

/// Objective value only.
pub fn objective<F: Real, S: Scalar<Prim = F>>(
    problem: &Problem<F>,
    monitor: &Monitor,
    gamma: f64,
    cost: &CostKind,
    flat: &[S],
) -> Result<S> {
    Ok(evaluate(problem, monitor, gamma, cost, flat)?.objective)
}

/// Objective value and its gradient with respect to the decision vector.
pub fn objective_and_gradient<F: Real>(
    problem: &Problem<F>,
    monitor: &Monitor,
    gamma: f64,
    cost: &CostKind,
    flat: &[F],
) -> Result<(F, Vec<F>)> {
    let tape = Tape::with_capacity(1 << 16);
    let xs = tape.vars(flat);
    let v = objective(problem, monitor, gamma, cost, &xs)?;
    let g = tape.backward(v);
    Ok((v.value(), g.wrt_all(&xs)))
}
