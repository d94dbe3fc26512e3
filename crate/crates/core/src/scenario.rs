//! JSON scenario files: named regions, agent groups, the specification text
//! and synthesis settings.
//!
//! Formula text may contain `{Capability}` placeholders. They are replaced by
//! the number of agents holding that capability, so a scenario can require
//! "all delivery agents" and still scale with the team.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ast::{disk, rectangle, Formula, InnerFormula, OuterFormula};
use crate::dynamics::{sample_initial_states, AgentModel, Kinematics, Rect};
use crate::error::{Error, Result};
use crate::parser::parse_formula;
use crate::synthesis::{Problem, SynthesisConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Rect { min: [f64; 2], max: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
    Union { parts: Vec<Region> },
}

impl Region {
    pub fn to_inner(&self) -> InnerFormula {
        match self {
            Region::Rect { min, max } => rectangle(*min, *max),
            Region::Circle { center, radius } => disk(*center, *radius),
            Region::Union { parts } => Formula::or(parts.iter().map(Region::to_inner).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Unicycle,
    Integrator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentGroup {
    pub name: String,
    pub count: usize,
    pub model: ModelKind,
    /// Name of a rectangular region to sample initial positions from.
    pub init_region: String,
    /// Heading range for unicycles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<[f64; 2]>,
    pub control_box: Vec<[f64; 2]>,
    pub capabilities: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub workspace: Rect,
    pub regions: BTreeMap<String, Region>,
    pub groups: Vec<AgentGroup>,
    pub formula: String,
    pub horizon: usize,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub seed: u64,
}

/// A scenario resolved into agents and a parsed specification.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub region_map: BTreeMap<String, InnerFormula>,
    /// Agents in group order; `group_of[j]` names agent `j`'s group.
    pub group_of: Vec<String>,
    pub problem: Problem<f64>,
}

const EARTHQUAKE: &str = include_str!("../scenarios/earthquake.json");
const TOY: &str = include_str!("../scenarios/toy.json");
const INTEGRATORS: &str = include_str!("../scenarios/integrators.json");

/// Scenario files shipped with the crate.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "earthquake" => Some(EARTHQUAKE),
        "toy" => Some(TOY),
        "integrators" => Some(INTEGRATORS),
        _ => None,
    }
}

pub const BUNDLED: [&str; 3] = ["earthquake", "toy", "integrators"];

/// Replaces `{Capability}` with the number of agents holding it.
pub fn substitute_counts(text: &str, counts: &BTreeMap<String, usize>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::Config("unclosed `{` in formula".into()))?
            + open;
        let key = rest[open + 1..close].trim();
        let n = counts
            .get(key)
            .ok_or_else(|| Error::Config(format!("placeholder `{{{key}}}` names no capability of the team")))?;
        out.push_str(&n.to_string());
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn bundled(name: &str) -> Result<Self> {
        Self::from_json(bundled(name).ok_or_else(|| Error::Config(format!("no bundled scenario `{name}`")))?)
    }

    pub fn agent_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// Number of agents holding each capability.
    pub fn capability_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.groups {
            for c in g.capabilities.iter().collect::<BTreeSet<_>>() {
                *counts.entry(c.clone()).or_insert(0) += g.count;
            }
        }
        counts
    }

    /// Multiplies every group's size by `factor`, rounding to the nearest
    /// integer (at least one agent per group).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for g in &mut out.groups {
            g.count = ((g.count as f64 * factor).round() as usize).max(1);
        }
        out
    }

    pub fn region_map(&self) -> BTreeMap<String, InnerFormula> {
        self.regions.iter().map(|(k, r)| (k.clone(), r.to_inner())).collect()
    }

    /// Formula text after placeholder substitution.
    pub fn formula_text(&self) -> Result<String> {
        substitute_counts(&self.formula, &self.capability_counts())
    }

    pub fn parse_formula(&self) -> Result<OuterFormula> {
        Ok(parse_formula(&self.formula_text()?, &self.region_map())?)
    }

    /// Agents with initial states sampled from `seed`.
    pub fn agents(&self, seed: u64) -> Result<Vec<AgentModel>> {
        let mut agents = Vec::with_capacity(self.agent_count());
        for (gi, g) in self.groups.iter().enumerate() {
            let rect = match self.regions.get(&g.init_region) {
                Some(Region::Rect { min, max }) => Rect { min: *min, max: *max },
                Some(_) => {
                    return Err(Error::Config(format!(
                        "initial region `{}` of group `{}` must be a rectangle",
                        g.init_region, g.name
                    )))
                }
                None => return Err(Error::UnknownRegion(g.init_region.clone())),
            };
            if !(rect.min[0] <= rect.max[0] && rect.min[1] <= rect.max[1]) {
                return Err(Error::Config(format!("initial region `{}` is empty", g.init_region)));
            }
            let (kind, heading) = match g.model {
                ModelKind::Unicycle => {
                    let [lo, hi] = g.heading.unwrap_or([0.0, 0.0]);
                    (Kinematics::Unicycle, Some((lo, hi)))
                }
                ModelKind::Integrator => (Kinematics::Integrator, None),
            };
            let group_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(gi as u64);
            for x0 in sample_initial_states(&rect, g.count, heading, group_seed) {
                agents.push(AgentModel::new(
                    kind.clone(),
                    x0,
                    g.control_box.iter().map(|b| (b[0], b[1])).collect(),
                    g.capabilities.iter().cloned(),
                )?);
            }
        }
        Ok(agents)
    }

    /// Resolves the configuration with its own seed.
    pub fn build(&self) -> Result<Scenario> {
        self.build_with_seed(self.seed)
    }

    /// Resolves the configuration; `seed` drives both initial states and the
    /// CMA-ES sampler.
    pub fn build_with_seed(&self, seed: u64) -> Result<Scenario> {
        let mut config = self.clone();
        config.seed = seed;
        config.synthesis.cmaes.seed = seed;
        let formula = config.parse_formula()?;
        let agents = config.agents(seed)?;
        let group_of = config
            .groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.name.clone(), g.count))
            .collect();
        let problem = Problem::new(agents, formula, config.horizon)?;
        config.synthesis.validate(&problem)?;
        Ok(Scenario {
            region_map: config.region_map(),
            config,
            group_of,
            problem,
        })
    }
}
