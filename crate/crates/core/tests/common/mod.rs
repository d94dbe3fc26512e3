//! Random instance generation and a brute-force boolean oracle shared by the
//! integration tests.

#![allow(dead_code)]

use catlplus::robustness::{AgentTrace, TeamTrajectory};
use catlplus::{Formula, InnerFormula, Interval, OuterFormula, Predicate, Task};
use rand::Rng;

pub const CAPS: [&str; 2] = ["a", "b"];

/// Size limits of generated formulas.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub outer_depth: usize,
    pub inner_depth: usize,
    /// Largest interval end in the outer layer.
    pub outer_b: usize,
    /// Largest interval end in the inner layer.
    pub inner_b: usize,
    /// Allow negation.
    pub negation: bool,
    /// Only predicates whose value increases with x.
    pub increasing_in_x: bool,
}

impl Shape {
    /// Depth ≤ 3 outer formulas whose horizon never exceeds 8.
    pub const SMALL: Shape = Shape {
        outer_depth: 3,
        inner_depth: 2,
        outer_b: 2,
        inner_b: 1,
        negation: true,
        increasing_in_x: false,
    };
}

fn interval(rng: &mut impl Rng, max_b: usize) -> Interval {
    let b = rng.random_range(0..=max_b);
    let a = rng.random_range(0..=b);
    Interval::new(a, b)
}

pub fn random_predicate(rng: &mut impl Rng, increasing_in_x: bool) -> Predicate {
    if increasing_in_x {
        return Predicate::half_plane([rng.random_range(0.5..2.0), 0.0], rng.random_range(-1.0..1.0));
    }
    if rng.random_bool(0.7) {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Predicate::half_plane([angle.cos(), angle.sin()], rng.random_range(-1.0..1.0))
    } else {
        Predicate::circle(
            [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            rng.random_range(0.5..1.5),
            rng.random_bool(0.5),
        )
    }
}

fn random_tree<L>(
    rng: &mut impl Rng,
    depth: usize,
    max_b: usize,
    negation: bool,
    leaf: &mut impl FnMut(&mut dyn rand::RngCore) -> Formula<L>,
) -> Formula<L> {
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.05) { Formula::True } else { leaf(rng as &mut dyn rand::RngCore) };
    }
    let d = depth - 1;
    let kinds = if negation { 7 } else { 6 };
    match rng.random_range(0..kinds) {
        0 | 1 => {
            let n = rng.random_range(2..=3);
            let cs = (0..n).map(|_| random_tree(rng, d, max_b, negation, leaf)).collect();
            if rng.random_bool(0.5) {
                Formula::And(cs)
            } else {
                Formula::Or(cs)
            }
        }
        2 => Formula::Eventually(Box::new(random_tree(rng, d, max_b, negation, leaf)), interval(rng, max_b)),
        3 => Formula::Always(Box::new(random_tree(rng, d, max_b, negation, leaf)), interval(rng, max_b)),
        4 | 5 => Formula::Until {
            left: Box::new(random_tree(rng, d, max_b, negation, leaf)),
            right: Box::new(random_tree(rng, d, max_b, negation, leaf)),
            interval: interval(rng, max_b),
        },
        _ => Formula::Not(Box::new(random_tree(rng, d, max_b, negation, leaf))),
    }
}

pub fn random_inner(rng: &mut impl Rng, shape: &Shape) -> InnerFormula {
    let inc = shape.increasing_in_x;
    random_tree(rng, shape.inner_depth, shape.inner_b, shape.negation, &mut |r| {
        Formula::Atom(random_predicate(&mut { r }, inc))
    })
}

/// Outer formula whose tasks only ask for capabilities present in
/// `holders` (agent count per entry of [`CAPS`]) and never for more agents
/// than hold them.
pub fn random_outer(rng: &mut impl Rng, shape: &Shape, holders: [usize; 2]) -> OuterFormula {
    random_tree(rng, shape.outer_depth, shape.outer_b, shape.negation, &mut |r| {
        let mut r = r;
        let options: Vec<usize> = (0..2).filter(|&i| holders[i] > 0).collect();
        let c = options[r.random_range(0..options.len())];
        let m = r.random_range(1..=holders[c]);
        Formula::Atom(Task::new(random_inner(&mut r, shape), CAPS[c], m))
    })
}

pub struct Instance {
    pub team: TeamTrajectory<f64>,
    pub formula: OuterFormula,
}

/// Team of 1–4 agents with random capability subsets and positions in
/// `[-2, 2]²`, with `len` samples each.
pub fn random_team(rng: &mut impl Rng, len: usize) -> TeamTrajectory<f64> {
    let n = rng.random_range(1..=4);
    let agents = (0..n)
        .map(|_| {
            let caps: Vec<&str> = match rng.random_range(0..3) {
                0 => vec![CAPS[0]],
                1 => vec![CAPS[1]],
                _ => vec![CAPS[0], CAPS[1]],
            };
            let points = (0..len)
                .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            AgentTrace::new(points, caps)
        })
        .collect();
    TeamTrajectory::new(agents).unwrap()
}

pub fn holders(team: &TeamTrajectory<f64>) -> [usize; 2] {
    let mut h = [0; 2];
    for a in team.agents() {
        for (i, c) in CAPS.iter().enumerate() {
            h[i] += usize::from(a.has(c));
        }
    }
    h
}

/// Team and formula with horizon at most 8.
pub fn random_instance(rng: &mut impl Rng, shape: &Shape) -> Instance {
    let mut team = random_team(rng, 1);
    let formula = random_outer(rng, shape, holders(&team));
    let len = (formula.horizon() + 1 + rng.random_range(0..=1)).min(9).max(formula.horizon() + 1);
    // Regenerate positions at the required length, keeping capabilities.
    let agents = team
        .agents()
        .iter()
        .map(|a| {
            let points = (0..len)
                .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            AgentTrace {
                points,
                capabilities: a.capabilities.clone(),
            }
        })
        .collect();
    team = TeamTrajectory::new(agents).unwrap();
    Instance { team, formula }
}

fn predicate_holds(p: &Predicate, s: [f64; 2]) -> bool {
    match *p {
        Predicate::HalfPlane { normal, offset } => normal[0] * s[0] + normal[1] * s[1] + offset >= 0.0,
        Predicate::Circle { center, radius, inside } => {
            let d2 = (s[0] - center[0]).powi(2) + (s[1] - center[1]).powi(2);
            if inside {
                d2 <= radius * radius
            } else {
                d2 >= radius * radius
            }
        }
    }
}

fn sat<L>(f: &Formula<L>, t: usize, atom: &dyn Fn(&L, usize) -> bool) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(l) => atom(l, t),
        Formula::Not(g) => !sat(g, t, atom),
        Formula::And(gs) => gs.iter().all(|g| sat(g, t, atom)),
        Formula::Or(gs) => gs.iter().any(|g| sat(g, t, atom)),
        Formula::Eventually(g, i) => (i.a..=i.b).any(|k| sat(g, t + k, atom)),
        Formula::Always(g, i) => (i.a..=i.b).all(|k| sat(g, t + k, atom)),
        Formula::Until { left, right, interval } => {
            let mut left_so_far = true;
            for k in t..=t + interval.b {
                if k >= t + interval.a && left_so_far && sat(right, k, atom) {
                    return true;
                }
                left_so_far = left_so_far && sat(left, k, atom);
            }
            false
        }
    }
}

/// Boolean semantics of an inner formula, evaluated directly.
pub fn oracle_inner(points: &[[f64; 2]], f: &InnerFormula, t: usize) -> bool {
    sat(f, t, &|p, k| predicate_holds(p, points[k]))
}

/// Boolean semantics of an outer formula, evaluated directly.
pub fn oracle(team: &TeamTrajectory<f64>, f: &OuterFormula, t: usize) -> bool {
    sat(f, t, &|task: &Task, k| {
        let n = team
            .agents()
            .iter()
            .filter(|a| a.has(&task.capability) && oracle_inner(&a.points, &task.inner, k))
            .count();
        n >= task.count
    })
}
