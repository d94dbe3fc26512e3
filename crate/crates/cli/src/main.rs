//! `catlplus` command-line tool.
//!
//! Exit codes: 0 success / specification satisfied, 1 unsatisfied or check
//! failed, 2 error.

mod io;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use catlplus::dynamics::team_trajectory;
use catlplus::robustness::{eta_exponential, rho_traditional};
use catlplus::scenario::{ScenarioConfig, BUNDLED};
use catlplus::synthesis::{gradcheck, random_plan, synthesize, SynthesisResult};
use catlplus::{eval_bool, Formula, Metric, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] catlplus::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Input(String),
}

#[derive(Parser, Debug)]
#[command(name = "catlplus", version, about = "Capability temporal logic monitoring and control synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a recorded team trajectory against a scenario's specification.
    Check {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
        /// CSV with columns t, agent, x, y[, theta].
        trajectory: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Synthesize controls and write trajectories, controls, a summary and a plot.
    Synth {
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Compare the objective gradient with central finite differences.
    Gradcheck {
        scenario: String,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Repeat synthesis on scaled teams and tabulate robustness and timings.
    Scale {
        scenario: String,
        /// Group-size multipliers, e.g. `1,2,3.5`.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3.5")]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Iteration cap of the local phase.
    #[arg(long)]
    local_iterations: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricArg {
    Exponential,
    Traditional,
}

impl Overrides {
    fn apply(&self, c: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            c.seed = s;
        }
        let syn = &mut c.synthesis;
        if let Some(a) = self.alpha {
            syn.params.alpha = a;
        }
        if let Some(b) = self.beta {
            syn.params.beta = b;
        }
        if let Some(g) = self.generations {
            syn.cmaes.generations = g;
        }
        if let Some(p) = self.pop {
            syn.cmaes.population = p;
        }
        if let Some(m) = self.metric {
            syn.metric = match m {
                MetricArg::Exponential => Metric::Exponential,
                MetricArg::Traditional => Metric::Traditional,
            };
        }
        if let Some(k) = self.local_iterations {
            syn.local.max_iterations = k;
        }
        if let Some(g) = self.gamma {
            syn.gamma = g;
        }
    }
}

fn load_scenario(arg: &str, opts: &Overrides) -> Result<ScenarioConfig, CliError> {
    let path = Path::new(arg);
    let mut c = if path.exists() {
        ScenarioConfig::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
    } else if BUNDLED.contains(&arg) {
        ScenarioConfig::bundled(arg)?
    } else {
        return Err(CliError::Input(format!(
            "no scenario file `{arg}` (bundled scenarios: {})",
            BUNDLED.join(", ")
        )));
    };
    opts.apply(&mut c);
    Ok(c)
}

fn build(c: &ScenarioConfig) -> Result<Scenario, CliError> {
    c.build().map_err(|e| match e {
        catlplus::Error::Parse(p) => CliError::Input(format!("formula {p}")),
        e => e.into(),
    })
}

fn cmd_check(scenario: &str, trajectory: &Path, opts: &Overrides) -> Result<bool, CliError> {
    let c = load_scenario(scenario, opts)?;
    let s = build(&c)?;
    let team = io::read_team(trajectory, &s.problem.agents)?;
    let f = &s.problem.formula;
    let sat = eval_bool(&team, f, 0)?;
    let rho = rho_traditional(&team, f, 0)?;
    let eta = eta_exponential(&team, f, 0, &c.synthesis.params)?;
    println!("satisfied: {sat}");
    println!("traditional robustness: {rho}");
    println!("exponential robustness: {eta}");
    Ok(sat)
}

#[derive(Serialize)]
struct PhaseSummary {
    iterations: usize,
    evaluations: usize,
    seconds: f64,
    best_objective: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    agents: usize,
    horizon: usize,
    decision_variables: usize,
    metric: Metric,
    alpha: f64,
    beta: f64,
    gamma: f64,
    objective: f64,
    robustness: f64,
    cost: f64,
    satisfied: bool,
    /// Boolean value of each top-level conjunct.
    conjuncts: Vec<bool>,
    global: PhaseSummary,
    local: PhaseSummary,
}

fn conjuncts(s: &Scenario, r: &SynthesisResult) -> Result<Vec<bool>, CliError> {
    let team = team_trajectory(&s.problem.agents, &r.plan.controls)?;
    let parts: Vec<&catlplus::OuterFormula> = match &s.problem.formula {
        Formula::And(fs) => fs.iter().collect(),
        f => vec![f],
    };
    Ok(parts
        .into_iter()
        .map(|f| eval_bool(&team, f, 0))
        .collect::<Result<_, _>>()?)
}

fn cmd_synth(scenario: &str, out: &Path, opts: &Overrides) -> Result<bool, CliError> {
    let c = load_scenario(scenario, opts)?;
    let s = build(&c)?;
    let r = synthesize(&s.problem, &s.config.synthesis)?;
    std::fs::create_dir_all(out)?;
    io::write_trajectories(&out.join("trajectories.csv"), &r.rollouts)?;
    io::write_controls(&out.join("controls.csv"), &r.plan)?;
    std::fs::write(out.join("plot.svg"), plot::render(&s.config, &s.group_of, &r.rollouts))?;
    let syn = &s.config.synthesis;
    let summary = Summary {
        scenario: &s.config.name,
        seed: s.config.seed,
        agents: s.problem.agents.len(),
        horizon: s.problem.horizon,
        decision_variables: s.problem.dimension(),
        metric: syn.metric,
        alpha: syn.params.alpha,
        beta: syn.params.beta,
        gamma: syn.gamma,
        objective: r.objective,
        robustness: r.robustness,
        cost: r.cost,
        satisfied: r.satisfied,
        conjuncts: conjuncts(&s, &r)?,
        global: PhaseSummary {
            iterations: r.global.iterations,
            evaluations: r.global.evaluations,
            seconds: r.global.seconds,
            best_objective: r.global.value,
        },
        local: PhaseSummary {
            iterations: r.local.iterations,
            evaluations: r.local.evaluations,
            seconds: r.local.seconds,
            best_objective: r.local.value,
        },
    };
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(out.join("summary.json"), format!("{text}\n"))?;
    println!("{text}");
    Ok(r.satisfied)
}

fn cmd_gradcheck(scenario: &str, step: f64, tolerance: f64, opts: &Overrides) -> Result<bool, CliError> {
    let c = load_scenario(scenario, opts)?;
    let s = build(&c)?;
    let x = random_plan(&s.problem, s.config.seed);
    let r = gradcheck(&s.problem, &s.config.synthesis, &x, step)?;
    println!("decision variables: {}", r.dimension);
    println!("objective: {}", r.objective);
    println!("max relative error: {:e} (coordinate {})", r.max_rel_error, r.worst_index);
    if r.nonsmooth_points > 0 {
        println!(
            "nonsmooth points: {} (ties or zero critical values; one-sided derivatives used)",
            r.nonsmooth_points
        );
    }
    let ok = r.passes(tolerance);
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

fn cmd_scale(scenario: &str, factors: &[f64], reps: usize, out: Option<&Path>, opts: &Overrides) -> Result<bool, CliError> {
    let base = load_scenario(scenario, opts)?;
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "agents",
        "decision_variables",
        "runs",
        "satisfied",
        "mean_robustness",
        "std_robustness",
        "mean_global_seconds",
        "std_global_seconds",
        "mean_local_seconds",
        "std_local_seconds",
        "mean_generation_seconds",
    ])?;
    for &factor in factors {
        let c = base.scaled(factor);
        let n = c.agent_count();
        let (mut rob, mut tg, mut tl, mut per_gen) = (vec![], vec![], vec![], vec![]);
        let mut satisfied = 0;
        let mut dim = 0;
        for rep in 0..reps {
            let seed = base.seed.wrapping_mul(1_000_003).wrapping_add((n * 1000 + rep) as u64);
            let s = c.build_with_seed(seed)?;
            dim = s.problem.dimension();
            let r = synthesize(&s.problem, &s.config.synthesis)?;
            satisfied += usize::from(r.satisfied);
            rob.push(r.robustness);
            tg.push(r.global.seconds);
            tl.push(r.local.seconds);
            per_gen.push(r.global.seconds / r.global.iterations.max(1) as f64);
        }
        let (mr, sr) = mean_std(&rob);
        let (mg, sg) = mean_std(&tg);
        let (ml, sl) = mean_std(&tl);
        let (mp, _) = mean_std(&per_gen);
        w.write_record([
            n.to_string(),
            dim.to_string(),
            reps.to_string(),
            satisfied.to_string(),
            mr.to_string(),
            sr.to_string(),
            mg.to_string(),
            sg.to_string(),
            ml.to_string(),
            sl.to_string(),
            mp.to_string(),
        ])?;
    }
    let table = String::from_utf8(w.into_inner().map_err(|e| CliError::Input(e.to_string()))?)
        .map_err(|e| CliError::Input(e.to_string()))?;
    print!("{table}");
    if let Some(p) = out {
        std::fs::write(p, &table)?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            scenario,
            trajectory,
            opts,
        } => cmd_check(scenario, trajectory, opts),
        Command::Synth { scenario, out, opts } => cmd_synth(scenario, out, opts),
        Command::Gradcheck {
            scenario,
            step,
            tolerance,
            opts,
        } => cmd_gradcheck(scenario, *step, *tolerance, opts),
        Command::Scale {
            scenario,
            factors,
            reps,
            out,
            opts,
        } => cmd_scale(scenario, factors, *reps, out.as_deref(), opts),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
