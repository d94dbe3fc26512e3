//! Qualitative and quantitative semantics over team trajectories.

pub mod ops;

use std::cell::Cell;
use std::collections::BTreeSet;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ast::{Formula, InnerFormula, OuterFormula, Predicate, Task};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub use ops::{conj_effective, conj_exp, disj_exp, kth_largest, task_effective, task_exp, EXP_CLAMP};

/// One agent's workspace trajectory with its capability set.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentTrace<S> {
    pub points: Vec<[S; 2]>,
    pub capabilities: BTreeSet<String>,
}

impl<S> AgentTrace<S> {
    pub fn new(points: Vec<[S; 2]>, capabilities: impl IntoIterator<Item = impl Into<String>>) -> Self {
        AgentTrace {
            points,
            capabilities: capabilities.into_iter().map(Into::into).collect(),
        }
    }

    pub fn has(&self, capability: &str) -> bool {
        self.capabilities.contains(capability)
    }
}

/// The set of (individual trajectory, capabilities) pairs a formula is
/// evaluated on. All trajectories have the same number of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TeamTrajectory<S> {
    agents: Vec<AgentTrace<S>>,
}

impl<S> TeamTrajectory<S> {
    pub fn new(agents: Vec<AgentTrace<S>>) -> Result<Self> {
        if let Some(first) = agents.first() {
            if first.points.is_empty() || agents.iter().any(|a| a.points.len() != first.points.len()) {
                return Err(Error::RaggedTrajectory);
            }
        }
        Ok(TeamTrajectory { agents })
    }

    pub fn agents(&self) -> &[AgentTrace<S>] {
        &self.agents
    }

    /// Number of samples per trajectory, `H + 1`.
    pub fn len(&self) -> usize {
        self.agents.first().map_or(0, |a| a.points.len())
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Index of the last sample, `H`.
    pub fn horizon(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn capability_sets(&self) -> impl Iterator<Item = &BTreeSet<String>> {
        self.agents.iter().map(|a| &a.capabilities)
    }

    fn check_horizon(&self, needed: usize) -> Result<()> {
        if !self.agents.is_empty() && needed > self.horizon() {
            return Err(Error::HorizonExceedsTrace {
                needed,
                last: self.horizon(),
            });
        }
        Ok(())
    }
}

/// Parameters of the exponential semantics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessParams {
    /// Task sharpness, `α > 0`.
    pub alpha: f64,
    /// Conjunction blend between the minimum and the mean, `β ∈ [0, 1]`.
    pub beta: f64,
}

impl Default for RobustnessParams {
    fn default() -> Self {
        RobustnessParams { alpha: 1.0, beta: 0.0 }
    }
}

impl RobustnessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Traditional,
    #[default]
    Exponential,
}

/// Evaluates formulas under one metric and counts the non-smooth points
/// (ties in min/max/m-th largest, zero critical values) it passes through.
///
/// The counter uses interior mutability, so a monitor is meant to be owned
/// by one evaluation thread; create one per concurrent evaluation.
#[derive(Debug)]
pub struct Monitor {
    metric: Metric,
    params: RobustnessParams,
    nonsmooth: Cell<usize>,
}

impl Monitor {
    pub fn new(metric: Metric, params: RobustnessParams) -> Self {
        Monitor {
            metric,
            params,
            nonsmooth: Cell::new(0),
        }
    }

    pub fn traditional() -> Self {
        Monitor::new(Metric::Traditional, RobustnessParams::default())
    }

    pub fn exponential(params: RobustnessParams) -> Self {
        Monitor::new(Metric::Exponential, params)
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn params(&self) -> RobustnessParams {
        self.params
    }

    /// Non-smooth points met since construction or the last reset.
    pub fn nonsmooth_count(&self) -> usize {
        self.nonsmooth.get()
    }

    pub fn reset(&self) {
        self.nonsmooth.set(0);
    }

    fn flag(&self, nonsmooth: bool) {
        if nonsmooth {
            self.nonsmooth.set(self.nonsmooth.get() + 1);
        }
    }

    fn conj<S: Scalar>(&self, xs: &[S]) -> S {
        if xs.len() == 1 {
            return xs[0];
        }
        match self.metric {
            Metric::Traditional => {
                let (i, tie) = ops::argmin(xs);
                self.flag(tie);
                xs[i]
            }
            Metric::Exponential => {
                let (v, flag) = ops::conj_exp_flagged(xs, S::Prim::lit(self.params.beta));
                self.flag(flag);
                v
            }
        }
    }

    fn disj<S: Scalar>(&self, xs: &[S]) -> S {
        if xs.len() == 1 {
            return xs[0];
        }
        match self.metric {
            Metric::Traditional => {
                let (i, tie) = ops::argmax(xs);
                self.flag(tie);
                xs[i]
            }
            Metric::Exponential => {
                let (v, flag) = ops::disj_exp_flagged(xs, S::Prim::lit(self.params.beta));
                self.flag(flag);
                v
            }
        }
    }

    fn task<S: Scalar>(&self, xs: &[S], m: usize) -> Result<S> {
        let (v, flag) = match self.metric {
            Metric::Traditional => ops::kth_largest_flagged(xs, m)?,
            Metric::Exponential => ops::task_exp_flagged(xs, m, S::Prim::lit(self.params.alpha))?,
        };
        self.flag(flag);
        Ok(v)
    }

    fn eval<L, S: Scalar>(
        &self,
        f: &Formula<L>,
        t: usize,
        atom: &impl Fn(&L, usize) -> Result<S>,
    ) -> Result<S> {
        Ok(match f {
            Formula::True => S::constant(S::Prim::infinity()),
            Formula::Atom(l) => atom(l, t)?,
            Formula::Not(g) => -self.eval(g, t, atom)?,
            Formula::And(gs) => {
                let xs = gs.iter().map(|g| self.eval(g, t, atom)).collect::<Result<Vec<_>>>()?;
                self.conj(&xs)
            }
            Formula::Or(gs) => {
                let xs = gs.iter().map(|g| self.eval(g, t, atom)).collect::<Result<Vec<_>>>()?;
                self.disj(&xs)
            }
            Formula::Eventually(g, i) => {
                let xs = (t + i.a..=t + i.b).map(|k| self.eval(g, k, atom)).collect::<Result<Vec<_>>>()?;
                self.disj(&xs)
            }
            Formula::Always(g, i) => {
                let xs = (t + i.a..=t + i.b).map(|k| self.eval(g, k, atom)).collect::<Result<Vec<_>>>()?;
                self.conj(&xs)
            }
            Formula::Until { left, right, interval } => {
                // ∨_{t'} ( right(t') ∧ ∧_{t ≤ t'' < t'} left(t'') )
                let lefts = (t..t + interval.b).map(|k| self.eval(left, k, atom)).collect::<Result<Vec<_>>>()?;
                let mut branches = Vec::with_capacity(interval.b - interval.a + 1);
                for tp in t + interval.a..=t + interval.b {
                    let mut operands = Vec::with_capacity(tp - t + 1);
                    operands.push(self.eval(right, tp, atom)?);
                    operands.extend_from_slice(&lefts[..tp - t]);
                    branches.push(self.conj(&operands));
                }
                self.disj(&branches)
            }
        })
    }

    /// Robustness of an inner formula over one trajectory at time `t`.
    pub fn inner<S: Scalar>(&self, points: &[[S; 2]], f: &InnerFormula, t: usize) -> Result<S> {
        let needed = t + f.horizon();
        if needed >= points.len() {
            return Err(Error::HorizonExceedsTrace {
                needed,
                last: points.len().saturating_sub(1),
            });
        }
        self.eval(f, t, &|p: &Predicate, k| Ok(p.eval(points[k])))
    }

    /// Robustness of an outer formula over the team at time `t`.
    pub fn robustness<S: Scalar>(&self, team: &TeamTrajectory<S>, f: &OuterFormula, t: usize) -> Result<S> {
        team.check_horizon(t + f.horizon())?;
        self.eval(f, t, &|task: &Task, k| {
            let per_agent = team
                .agents
                .iter()
                .filter(|a| a.has(&task.capability))
                .map(|a| self.eval(&task.inner, k, &|p: &Predicate, k2| Ok(p.eval(a.points[k2]))))
                .collect::<Result<Vec<S>>>()?;
            self.task(&per_agent, task.count)
        })
    }
}

/// Traditional (min/max/m-th largest) robustness at time `t`.
pub fn rho_traditional<S: Scalar>(team: &TeamTrajectory<S>, f: &OuterFormula, t: usize) -> Result<S> {
    Monitor::traditional().robustness(team, f, t)
}

/// Exponential robustness at time `t`.
pub fn eta_exponential<S: Scalar>(
    team: &TeamTrajectory<S>,
    f: &OuterFormula,
    t: usize,
    params: &RobustnessParams,
) -> Result<S> {
    Monitor::exponential(*params).robustness(team, f, t)
}

fn holds<L>(f: &Formula<L>, t: usize, atom: &impl Fn(&L, usize) -> bool) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(l) => atom(l, t),
        Formula::Not(g) => !holds(g, t, atom),
        Formula::And(gs) => gs.iter().all(|g| holds(g, t, atom)),
        Formula::Or(gs) => gs.iter().any(|g| holds(g, t, atom)),
        Formula::Eventually(g, i) => (t + i.a..=t + i.b).any(|k| holds(g, k, atom)),
        Formula::Always(g, i) => (t + i.a..=t + i.b).all(|k| holds(g, k, atom)),
        Formula::Until { left, right, interval } => (t + interval.a..=t + interval.b)
            .any(|tp| holds(right, tp, atom) && (t..tp).all(|k| holds(left, k, atom))),
    }
}

/// Whether one trajectory satisfies an inner formula at `t`.
pub fn eval_inner_bool<F: Real>(points: &[[F; 2]], f: &InnerFormula, t: usize) -> Result<bool> {
    let needed = t + f.horizon();
    if needed >= points.len() {
        return Err(Error::HorizonExceedsTrace {
            needed,
            last: points.len().saturating_sub(1),
        });
    }
    Ok(holds(f, t, &|p: &Predicate, k| p.eval(points[k]) >= F::zero()))
}

fn count_unchecked<F: Real>(team: &TeamTrajectory<F>, c: &str, phi: &InnerFormula, t: usize) -> usize {
    team.agents
        .iter()
        .filter(|a| a.has(c))
        .filter(|a| holds(phi, t, &|p: &Predicate, k| p.eval(a.points[k]) >= F::zero()))
        .count()
}

/// Number of agents with capability `c` whose trajectory satisfies `phi` at `t`.
pub fn count<F: Real>(team: &TeamTrajectory<F>, c: &str, phi: &InnerFormula, t: usize) -> Result<usize> {
    team.check_horizon(t + phi.horizon())?;
    Ok(count_unchecked(team, c, phi, t))
}

/// Boolean satisfaction `(S, t) ⊨ f`.
pub fn eval_bool<F: Real>(team: &TeamTrajectory<F>, f: &OuterFormula, t: usize) -> Result<bool> {
    team.check_horizon(t + f.horizon())?;
    Ok(holds(f, t, &|task: &Task, k| {
        count_unchecked(team, &task.capability, &task.inner, k) >= task.count
    }))
}
