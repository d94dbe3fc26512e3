//! Discrete-time agent models and trajectory rollout.
//!
//! Rollout is generic over [`Scalar`], so the same code produces plain
//! trajectories and tape-recorded trajectories whose gradients flow back to
//! the controls. The time step is one unit.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ad::Var;
use crate::error::{Error, Result};
use crate::robustness::{AgentTrace, TeamTrajectory};
use crate::scalar::{Real, Scalar};

/// User supplied differentiable dynamics. Both the plain and the traced
/// methods must implement the same function; writing one generic helper
/// over [`Scalar`] and calling it from both is the usual pattern.
pub trait CustomDynamics<F: Real>: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, x: &[F], u: &[F]) -> Vec<F>;
    fn step_traced<'t>(&self, x: &[Var<'t, F>], u: &[Var<'t, F>]) -> Vec<Var<'t, F>>;
    fn workspace(&self, x: &[F]) -> [F; 2];
    fn workspace_traced<'t>(&self, x: &[Var<'t, F>]) -> [Var<'t, F>; 2];
}

#[derive(Clone)]
pub enum Kinematics<F: Real = f64> {
    /// State `[p_x, p_y, θ]`, control `[v, ω]`.
    Unicycle,
    /// State `[p_x, p_y]`, control `[v_x, v_y]`.
    Integrator,
    Custom(Arc<dyn CustomDynamics<F>>),
}

impl<F: Real> fmt::Debug for Kinematics<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kinematics::Unicycle => f.write_str("Unicycle"),
            Kinematics::Integrator => f.write_str("Integrator"),
            Kinematics::Custom(m) => write!(f, "Custom(nx={}, nu={})", m.state_dim(), m.control_dim()),
        }
    }
}

impl<F: Real> Kinematics<F> {
    pub fn state_dim(&self) -> usize {
        match self {
            Kinematics::Unicycle => 3,
            Kinematics::Integrator => 2,
            Kinematics::Custom(m) => m.state_dim(),
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            Kinematics::Unicycle | Kinematics::Integrator => 2,
            Kinematics::Custom(m) => m.control_dim(),
        }
    }
}

/// An agent: dynamics, workspace map, initial state, control box and
/// capabilities.
#[derive(Clone, Debug)]
pub struct AgentModel<F: Real = f64> {
    pub kind: Kinematics<F>,
    pub initial_state: Vec<F>,
    /// Per control coordinate `[lo, hi]`.
    pub control_box: Vec<(F, F)>,
    pub capabilities: BTreeSet<String>,
}

impl<F: Real> AgentModel<F> {
    pub fn new(
        kind: Kinematics<F>,
        initial_state: Vec<F>,
        control_box: Vec<(F, F)>,
        capabilities: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let agent = AgentModel {
            kind,
            initial_state,
            control_box,
            capabilities: capabilities.into_iter().map(Into::into).collect(),
        };
        agent.validate()?;
        Ok(agent)
    }

    pub fn unicycle(
        initial_state: [F; 3],
        control_box: [(F, F); 2],
        capabilities: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        Self::new(Kinematics::Unicycle, initial_state.to_vec(), control_box.to_vec(), capabilities)
    }

    pub fn integrator(
        initial_state: [F; 2],
        control_box: [(F, F); 2],
        capabilities: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        Self::new(Kinematics::Integrator, initial_state.to_vec(), control_box.to_vec(), capabilities)
    }

    pub fn state_dim(&self) -> usize {
        self.kind.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.kind.control_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_state.len() != self.state_dim() {
            return Err(Error::Config(format!(
                "initial state has {} entries, the model needs {}",
                self.initial_state.len(),
                self.state_dim()
            )));
        }
        if self.control_box.len() != self.control_dim() {
            return Err(Error::Config(format!(
                "control box has {} coordinates, the model needs {}",
                self.control_box.len(),
                self.control_dim()
            )));
        }
        if self.control_box.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Config("control box is empty".into()));
        }
        if self.capabilities.is_empty() {
            return Err(Error::Config("agent has no capabilities".into()));
        }
        Ok(())
    }

    /// One step of the discrete dynamics.
    pub fn step<S: Scalar<Prim = F>>(&self, x: &[S], u: &[S]) -> Vec<S> {
        match &self.kind {
            Kinematics::Unicycle => {
                let (v, w) = (u[0], u[1]);
                let th = x[2];
                vec![x[0] + v * th.cos(), x[1] + v * th.sin(), th + w]
            }
            Kinematics::Integrator => vec![x[0] + u[0], x[1] + u[1]],
            Kinematics::Custom(m) => S::custom_step(m.as_ref(), x, u),
        }
    }

    /// Map from state to workspace point.
    pub fn workspace<S: Scalar<Prim = F>>(&self, x: &[S]) -> [S; 2] {
        match &self.kind {
            Kinematics::Unicycle | Kinematics::Integrator => [x[0], x[1]],
            Kinematics::Custom(m) => S::custom_workspace(m.as_ref(), x),
        }
    }

    fn check_controls(&self, agent: usize, controls: &[Vec<F>]) -> Result<()> {
        for (t, u) in controls.iter().enumerate() {
            if u.len() != self.control_dim() {
                return Err(Error::DimensionMismatch {
                    agent,
                    expected: self.control_dim(),
                    found: u.len(),
                });
            }
            for (coord, (&value, &(lo, hi))) in u.iter().zip(&self.control_box).enumerate() {
                if !(lo <= value && value <= hi) {
                    return Err(Error::ControlOutOfBox {
                        agent,
                        t,
                        coord,
                        value: value.to_f64().unwrap_or(f64::NAN),
                        lo: lo.to_f64().unwrap_or(f64::NAN),
                        hi: hi.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(())
    }
}

/// States `x(0..=H)` and workspace points `s(0..=H)` of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout<S> {
    pub states: Vec<Vec<S>>,
    pub workspace: Vec<[S; 2]>,
}

/// Propagates the dynamics without checking the control box; used on the
/// optimization path where the optimizer keeps controls feasible.
pub fn rollout_traced<F: Real, S: Scalar<Prim = F>>(agent: &AgentModel<F>, controls: &[Vec<S>]) -> Rollout<S> {
    let mut x: Vec<S> = agent.initial_state.iter().map(|&v| S::constant(v)).collect();
    let mut states = Vec::with_capacity(controls.len() + 1);
    let mut workspace = Vec::with_capacity(controls.len() + 1);
    workspace.push(agent.workspace(&x));
    states.push(x.clone());
    for u in controls {
        x = agent.step(&x, u);
        workspace.push(agent.workspace(&x));
        states.push(x.clone());
    }
    Rollout { states, workspace }
}

/// Plain rollout; rejects controls outside the agent's box.
pub fn rollout<F: Real>(agent: &AgentModel<F>, controls: &[Vec<F>]) -> Result<Rollout<F>> {
    agent.check_controls(0, controls)?;
    Ok(rollout_traced(agent, controls))
}

/// Per-agent control sequences `u_j(0..H-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPlan<F = f64> {
    pub controls: Vec<Vec<Vec<F>>>,
}

impl<F: Real> ControlPlan<F> {
    pub fn zeros(agents: &[AgentModel<F>], horizon: usize) -> Self {
        ControlPlan {
            controls: agents
                .iter()
                .map(|a| vec![vec![F::zero(); a.control_dim()]; horizon])
                .collect(),
        }
    }

    /// Number of decision variables, `Σ_j n_u,j · H`.
    pub fn dimension(agents: &[AgentModel<F>], horizon: usize) -> usize {
        agents.iter().map(|a| a.control_dim() * horizon).sum()
    }

    pub fn horizon(&self) -> usize {
        self.controls.first().map_or(0, Vec::len)
    }

    /// Concatenates all agents' controls, agent-major then time-major.
    pub fn flatten(&self) -> Vec<F> {
        self.controls.iter().flatten().flatten().copied().collect()
    }

    pub fn from_flat(agents: &[AgentModel<F>], horizon: usize, flat: &[F]) -> Result<Self> {
        Ok(ControlPlan {
            controls: unflatten(agents, horizon, flat)?,
        })
    }

    /// Checks shapes and control boxes.
    pub fn validate(&self, agents: &[AgentModel<F>]) -> Result<()> {
        if self.controls.len() != agents.len() {
            return Err(Error::Config(format!(
                "plan has {} agents, team has {}",
                self.controls.len(),
                agents.len()
            )));
        }
        let h = self.horizon();
        for (j, (a, u)) in agents.iter().zip(&self.controls).enumerate() {
            if u.len() != h {
                return Err(Error::HorizonMismatch { expected: h, found: u.len() });
            }
            a.check_controls(j, u).map_err(|e| match e {
                Error::ControlOutOfBox { t, coord, value, lo, hi, .. } => Error::ControlOutOfBox {
                    agent: j,
                    t,
                    coord,
                    value,
                    lo,
                    hi,
                },
                e => e,
            })?;
        }
        Ok(())
    }
}

pub(crate) fn unflatten<F: Real, S: Copy>(agents: &[AgentModel<F>], horizon: usize, flat: &[S]) -> Result<Vec<Vec<Vec<S>>>> {
    let dim = ControlPlan::dimension(agents, horizon);
    if flat.len() != dim {
        return Err(Error::DimensionMismatch {
            agent: 0,
            expected: dim,
            found: flat.len(),
        });
    }
    let mut it = flat.iter().copied();
    Ok(agents
        .iter()
        .map(|a| {
            (0..horizon)
                .map(|_| it.by_ref().take(a.control_dim()).collect())
                .collect()
        })
        .collect())
}

/// Rolls out every agent and pairs the workspace trajectories with the
/// agents' capabilities.
pub fn team_trajectory<F: Real, S: Scalar<Prim = F>>(
    agents: &[AgentModel<F>],
    controls: &[Vec<Vec<S>>],
) -> Result<TeamTrajectory<S>> {
    TeamTrajectory::new(
        agents
            .iter()
            .zip(controls)
            .map(|(a, u)| AgentTrace {
                points: rollout_traced(a, u).workspace,
                capabilities: a.capabilities.clone(),
            })
            .collect(),
    )
}

/// Axis-aligned rectangle `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }
}

/// Uniform initial positions inside `region`; with `heading` set, a uniform
/// orientation in that range is appended as the third state coordinate.
pub fn sample_initial_states(region: &Rect, count: usize, heading: Option<(f64, f64)>, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x = vec![
                rng.random_range(region.min[0]..=region.max[0]),
                rng.random_range(region.min[1]..=region.max[1]),
            ];
            if let Some((lo, hi)) = heading {
                x.push(rng.random_range(lo..=hi));
            }
            x
        })
        .collect()
}
