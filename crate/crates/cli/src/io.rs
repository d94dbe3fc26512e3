//! CSV trajectory and control files.

use std::collections::BTreeMap;
use std::path::Path;

use catlplus::dynamics::Rollout;
use catlplus::robustness::{AgentTrace, TeamTrajectory};
use catlplus::{Agent, Plan};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    t: usize,
    agent: usize,
    x: f64,
    y: f64,
    theta: Option<f64>,
}

/// Writes states as rows `t, agent, x, y, theta`; `theta` is empty for
/// agents without a heading.
pub fn write_trajectories(path: &Path, rollouts: &[Rollout<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for (j, r) in rollouts.iter().enumerate() {
        for (t, (x, s)) in r.states.iter().zip(&r.workspace).enumerate() {
            w.serialize(TrajectoryRow {
                t,
                agent: j,
                x: s[0],
                y: s[1],
                theta: x.get(2).copied(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes controls as rows `t, agent, u0, u1, ...`.
pub fn write_controls(path: &Path, plan: &Plan) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let width = plan.controls.iter().flatten().map(Vec::len).max().unwrap_or(0);
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((0..width).map(|i| format!("u{i}")));
    w.write_record(&header)?;
    for (j, u) in plan.controls.iter().enumerate() {
        for (t, ut) in u.iter().enumerate() {
            let mut rec = vec![t.to_string(), j.to_string()];
            rec.extend(ut.iter().map(f64::to_string));
            rec.resize(width + 2, String::new());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory file and pairs each agent's points with the
/// capabilities of the matching scenario agent.
pub fn read_team(path: &Path, agents: &[Agent]) -> Result<TeamTrajectory<f64>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut by_agent: BTreeMap<usize, BTreeMap<usize, [f64; 2]>> = BTreeMap::new();
    for (line, row) in r.deserialize::<TrajectoryRow>().enumerate() {
        let row = row?;
        if by_agent.entry(row.agent).or_default().insert(row.t, [row.x, row.y]).is_some() {
            return Err(CliError::Input(format!(
                "{}: row {}: duplicate sample for agent {} at t = {}",
                path.display(),
                line + 2,
                row.agent,
                row.t
            )));
        }
    }
    if by_agent.len() != agents.len() || by_agent.keys().copied().ne(0..agents.len()) {
        return Err(CliError::Input(format!(
            "{}: expected agents 0..{} to match the scenario, found {:?}",
            path.display(),
            agents.len(),
            by_agent.keys().collect::<Vec<_>>()
        )));
    }
    let mut traces = Vec::with_capacity(agents.len());
    for (j, (samples, a)) in by_agent.into_values().zip(agents).enumerate() {
        if samples.keys().copied().ne(0..samples.len()) {
            return Err(CliError::Input(format!(
                "{}: samples of agent {j} are not consecutive from t = 0",
                path.display()
            )));
        }
        traces.push(AgentTrace {
            points: samples.into_values().collect(),
            capabilities: a.capabilities.clone(),
        });
    }
    Ok(TeamTrajectory::new(traces)?)
}
