//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use catlplus::ast::{import_catl_task, rectangle, CatlTask};
use catlplus::dynamics::team_trajectory;
use catlplus::robustness::{conj_exp, eta_exponential, rho_traditional, task_exp, AgentTrace, Monitor, TeamTrajectory};
use catlplus::scenario::ScenarioConfig;
use catlplus::synthesis::{gradcheck, random_plan, synthesize};
use catlplus::{eval_bool, Formula, InnerFormula, Metric, OuterFormula, Predicate, RobustnessParams};
use common::{oracle, random_instance, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn soundness() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(0x50_0d);
    let (mut failures, mut decided, mut oracle_mismatch) = (0, 0, 0);
    let instances = 1000;
    for _ in 0..instances {
        let inst = random_instance(&mut r, &Shape::SMALL);
        let params = RobustnessParams {
            alpha: r.random_range(0.2..3.0),
            beta: r.random_range(0.0..=1.0),
        };
        let truth = oracle(&inst.team, &inst.formula, 0);
        if eval_bool(&inst.team, &inst.formula, 0).unwrap() != truth {
            oracle_mismatch += 1;
        }
        let rho: f64 = rho_traditional(&inst.team, &inst.formula, 0).unwrap();
        let eta: f64 = eta_exponential(&inst.team, &inst.formula, 0, &params).unwrap();
        for v in [rho, eta] {
            if v.abs() > 1e-9 {
                decided += 1;
                if (v > 0.0) != truth {
                    failures += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        failures == 0 && oracle_mismatch == 0 && secs < 60.0,
        format!(
            "{instances} instances, {decided} decided values, {failures} sign disagreements, {oracle_mismatch} boolean mismatches, {secs:.2} s"
        ),
    )
}

fn unit_beta() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let n = r.random_range(1..=12);
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-100.0..100.0)).collect();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max((conj_exp(&v, 1.0) - min).abs());
    }
    outcome(worst <= 1e-12, format!("10000 vectors, max |conj_exp - min| = {worst:e}"))
}

fn masking_example() -> Outcome {
    let f: InnerFormula = Formula::Eventually(
        Box::new(Formula::Atom(Predicate::half_plane([1.0, 0.0], -3.0))),
        catlplus::Interval::new(0, 4),
    );
    let line = |xs: [f64; 5]| xs.map(|x| [x, 0.0]).to_vec();
    let (flat, ramp) = (line([1.0, 1.0, 1.0, 1.0, 5.0]), line([1.0, 2.0, 3.0, 4.0, 5.0]));
    let trad = Monitor::traditional();
    let exp = Monitor::exponential(RobustnessParams::default());
    let (rf, rr): (f64, f64) = (trad.inner(&flat, &f, 0).unwrap(), trad.inner(&ramp, &f, 0).unwrap());
    let (ef, er): (f64, f64) = (exp.inner(&flat, &f, 0).unwrap(), exp.inner(&ramp, &f, 0).unwrap());
    outcome(
        rf == 2.0 && rr == 2.0 && er > ef,
        format!("traditional {rf} / {rr}, exponential {ef:.6} < {er:.6}"),
    )
}

fn partials(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Distinct values at least `gap` apart, with the critical one (rank `m`
/// from the top) at least `min_abs` away from zero.
fn spread_point(r: &mut ChaCha8Rng, n: usize, m: usize, gap: f64, min_abs: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let mut s = v.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        if s.windows(2).all(|w| w[0] - w[1] >= gap) && s[m - 1].abs() >= min_abs {
            return v;
        }
    }
}

/// Checks positivity, the critical-partial bound and decay with distance
/// for one operator at one point. Returns a description of the first
/// violation.
fn check_partials(p: &[f64], x: &[f64], crit: usize) -> Option<String> {
    if let Some(i) = p.iter().position(|&d| !(d > 0.0)) {
        return Some(format!("partial {i} = {:e} at {x:?}", p[i]));
    }
    let tol = 1e-7;
    for i in (0..x.len()).filter(|&i| i != crit) {
        if p[crit] < p[i] - tol {
            return Some(format!("critical partial {} < {} at {x:?}", p[crit], p[i]));
        }
        for j in (0..x.len()).filter(|&j| j != crit) {
            let (di, dj) = ((x[i] - x[crit]).abs(), (x[j] - x[crit]).abs());
            if di < dj && p[i] < p[j] - tol {
                return Some(format!("partial does not decay with distance at {x:?}: {p:?}"));
            }
        }
    }
    None
}

fn mask_eliminating() -> Outcome {
    let mut r = rng(4);
    let mut problems = vec![];
    for _ in 0..100 {
        let n = r.random_range(2..=6);
        let beta: f64 = r.random_range(0.0..0.9);
        let x = spread_point(&mut r, n, n, 1e-3, 0.5);
        let p = partials(&|v| conj_exp(v, beta), &x);
        let crit = (0..n).min_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        problems.extend(check_partials(&p, &x, crit).map(|e| format!("conj: {e}")));

        let m = r.random_range(1..=n);
        let alpha: f64 = r.random_range(0.5..2.0);
        let x = spread_point(&mut r, n, m, 1e-3, 0.5);
        let p = partials(&|v| task_exp(v, m, alpha).unwrap(), &x);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
        problems.extend(check_partials(&p, &x, order[m - 1]).map(|e| format!("task m={m} alpha={alpha:.3}: {e}")));
    }
    match problems.first() {
        None => outcome(true, "100 points each for conj_exp and task_exp: all partials positive, ordering holds"),
        Some(e) => outcome(false, format!("{} violations, first: {e}", problems.len())),
    }
}

fn boundary_continuity() -> Outcome {
    let mut r = rng(5);
    let mut worst_ratio = 0.0_f64;
    let mut worst_at_1e6 = 0.0_f64;
    for &eps in &[1e-3, 1e-6] {
        for sign in [1.0, -1.0] {
            for _ in 0..100 {
                let c = sign * eps;
                let n = r.random_range(2..=6);
                let beta: f64 = r.random_range(0.0..=1.0);
                let mut v: Vec<f64> = (0..n - 1).map(|_| r.random_range(c + 1e-3..2.0)).collect();
                v.push(c);
                let a = conj_exp(&v, beta).abs();

                let m = r.random_range(1..=n);
                let alpha: f64 = r.random_range(0.5..2.0);
                let mut w: Vec<f64> = (0..m - 1).map(|_| r.random_range(c + 1e-3..2.0)).collect();
                w.extend((m..n).map(|_| r.random_range(-2.0..c - 1e-3)));
                w.push(c);
                let b = task_exp(&w, m, alpha).unwrap().abs();
                worst_ratio = worst_ratio.max(a.max(b) / eps);
                if eps == 1e-6 {
                    worst_at_1e6 = worst_at_1e6.max(a.max(b));
                }
            }
        }
    }
    outcome(
        worst_at_1e6 < 1e-4,
        format!("max |value| at critical ±1e-6: {worst_at_1e6:e}; max |value|/eps over both eps: {worst_ratio:.3}"),
    )
}

fn gradient_correctness() -> Outcome {
    let s = ScenarioConfig::bundled("toy").unwrap().build().unwrap();
    let mut worst = 0.0_f64;
    for seed in 0..5 {
        let x = random_plan(&s.problem, seed);
        let rep = gradcheck(&s.problem, &s.config.synthesis, &x, 1e-6).unwrap();
        worst = worst.max(rep.max_rel_error);
    }
    outcome(
        worst < 1e-4,
        format!(
            "{} agents, H={}, 5 random plans, max relative error {worst:e}",
            s.problem.agents.len(),
            s.problem.horizon
        ),
    )
}

fn closed_forms() -> Outcome {
    let e = std::f64::consts::E;
    let task = task_exp(&[1.0], 1, 1.0).unwrap();
    let conj = conj_exp(&[-1.0, 1.0], 0.0);
    let exact_conj = -(1.0 + (-2.0_f64).exp()) / 2.0;
    let pass = (task - (e - 1.0)).abs() <= 1e-12 && (conj - exact_conj).abs() <= 1e-12 && (conj + 0.567667).abs() <= 1e-6;
    outcome(pass, format!("task_exp([1]) = {task:.15}, conj_exp([-1, 1]) = {conj:.15}"))
}

struct Run {
    satisfied: bool,
    conjuncts: Vec<bool>,
    robustness: f64,
    seconds: f64,
}

fn leaves(f: &OuterFormula) -> Vec<&OuterFormula> {
    match f {
        Formula::And(fs) => fs.iter().flat_map(leaves).collect(),
        f => vec![f],
    }
}

fn earthquake_runs(metric: Metric) -> Vec<Run> {
    let mut base = ScenarioConfig::bundled("earthquake").unwrap();
    base.synthesis.metric = metric;
    (0..10)
        .map(|seed| {
            let s = base.build_with_seed(seed).unwrap();
            let t0 = Instant::now();
            let res = synthesize(&s.problem, &s.config.synthesis).unwrap();
            let seconds = t0.elapsed().as_secs_f64();
            let team = team_trajectory(&s.problem.agents, &res.plan.controls).unwrap();
            let conjuncts = leaves(&s.problem.formula)
                .into_iter()
                .map(|f| eval_bool(&team, f, 0).unwrap())
                .collect();
            Run {
                satisfied: res.objective > 0.0,
                conjuncts,
                robustness: res.robustness,
                seconds,
            }
        })
        .collect()
}

fn earthquake(runs: &[Run]) -> Outcome {
    let good = runs
        .iter()
        .filter(|r| r.satisfied && r.conjuncts.iter().all(|&c| c) && r.seconds <= 600.0)
        .count();
    let slowest = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let rob: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.robustness)).collect();
    outcome(
        good >= 8,
        format!("{good}/10 runs satisfied with every conjunct true; slowest {slowest:.1} s; robustness [{}]", rob.join(", ")),
    )
}

fn comparison(exp: &[Run], trad: &[Run]) -> Outcome {
    let e = exp.iter().filter(|r| r.satisfied).count();
    let t = trad.iter().filter(|r| r.satisfied).count();
    outcome(e >= t, format!("exponential {e}/10, traditional {t}/10"))
}

fn scalability() -> Outcome {
    let mut base = ScenarioConfig::bundled("earthquake").unwrap();
    base.synthesis.cmaes.generations = 15;
    base.synthesis.local.max_iterations = 20;
    let mut rows = vec![];
    let mut ok = true;
    for factor in [1.0, 2.0, 3.5] {
        let s = base.scaled(factor).build_with_seed(7).unwrap();
        let res = synthesize(&s.problem, &s.config.synthesis).unwrap();
        let agents = s.problem.agents.len();
        let dim = s.problem.dimension();
        let per_gen = res.global.seconds / res.global.iterations.max(1) as f64;
        ok &= dim == agents * 2 * s.problem.horizon && !res.objective.is_nan();
        rows.push((agents, dim, per_gen, res.local.seconds, res.robustness));
    }
    let sizes: Vec<usize> = rows.iter().map(|r| r.0).collect();
    ok &= sizes == [6, 12, 21];
    let dims_linear = rows.iter().all(|r| r.1 == rows[0].1 / rows[0].0 * r.0);
    let desc: Vec<String> = rows
        .iter()
        .map(|(n, d, g, l, rob)| format!("{n} agents: {d} vars, {:.1} ms/generation, local {l:.2} s, robustness {rob:.3}", g * 1e3))
        .collect();
    outcome(ok && dims_linear, desc.join("; "))
}

/// Brute force over every membership pattern of up to 3 agents on traces of
/// up to 6 samples.
fn catl_import() -> Outcome {
    let region = rectangle([0.0, 0.0], [1.0, 1.0]);
    let regions = BTreeMap::from([("A".to_string(), region)]);
    let caps: [&[&str]; 3] = [&["c1", "c2"], &["c1"], &["c2"]];
    let requirement_sets: [&[(&str, usize)]; 5] = [
        &[("c1", 1)],
        &[("c1", 2)],
        &[("c2", 1)],
        &[("c1", 1), ("c2", 1)],
        &[("c1", 2), ("c2", 2)],
    ];
    let (mut checked, mut mismatches) = (0usize, 0usize);
    for n in 1..=3 {
        for len in 1..=6 {
            for d in 0..=3.min(len - 1) {
                for reqs in requirement_sets {
                    let holders = |c: &str| (0..n).filter(|&j| caps[j].contains(&c)).count();
                    if reqs.iter().any(|&(c, m)| m > holders(c)) {
                        continue;
                    }
                    let task = CatlTask {
                        duration: d,
                        region: "A".into(),
                        requirements: reqs.iter().map(|&(c, m)| (c.to_string(), m)).collect(),
                    };
                    let f = import_catl_task(&task, &regions).unwrap();
                    for pattern in 0u32..(1 << (n * len)) {
                        let inside = |j: usize, t: usize| pattern >> (j * len + t) & 1 == 1;
                        let team = TeamTrajectory::new(
                            (0..n)
                                .map(|j| {
                                    let pts = (0..len).map(|t| if inside(j, t) { [0.5, 0.5] } else { [2.0, 0.5] }).collect();
                                    AgentTrace::new(pts, caps[j].iter().copied())
                                })
                                .collect(),
                        )
                        .unwrap();
                        for t in 0..len - d {
                            let expected = (t..=t + d).all(|k| {
                                reqs.iter().all(|&(c, m)| {
                                    (0..n).filter(|&j| caps[j].contains(&c) && inside(j, k)).count() >= m
                                })
                            });
                            checked += 1;
                            if eval_bool(&team, &f, t).unwrap() != expected {
                                mismatches += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} (pattern, task, time) cases, {mismatches} mismatches"))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![];
    let mut record = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        println!(
            "criterion {id:>2} [{}] {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        results.push((id, name, o));
    };
    record(1, "soundness", &soundness);
    record(2, "unit beta reduces to min", &unit_beta);
    record(3, "masking example", &masking_example);
    record(4, "mask-eliminating partials", &mask_eliminating);
    record(5, "boundary continuity", &boundary_continuity);
    record(6, "gradient vs finite differences", &gradient_correctness);
    record(7, "closed-form values", &closed_forms);

    let t0 = Instant::now();
    let exp_runs = earthquake_runs(Metric::Exponential);
    let t1 = Instant::now();
    let trad_runs = earthquake_runs(Metric::Traditional);
    println!(
        "earthquake runs: 10 exponential in {:.1} s, 10 traditional in {:.1} s",
        (t1 - t0).as_secs_f64(),
        t1.elapsed().as_secs_f64()
    );
    record(8, "earthquake synthesis", &|| earthquake(&exp_runs));
    record(9, "exponential vs traditional", &|| comparison(&exp_runs, &trad_runs));
    record(10, "scalability smoke", &scalability);
    record(11, "CaTL import", &catl_import);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
