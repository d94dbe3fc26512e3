//! Formula trees for both layers of the logic.
//!
//! The inner layer is STL over one agent's workspace trajectory; its atoms
//! are [`Predicate`]s. The outer layer is built from the same connectives
//! but its atoms are [`Task`]s, each counting how many agents with a given
//! capability satisfy an inner formula. Both layers share [`Formula`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Discrete time window `[a, b]` relative to the evaluation time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub a: usize,
    pub b: usize,
}

impl Interval {
    pub fn new(a: usize, b: usize) -> Self {
        debug_assert!(a <= b, "empty interval [{a}, {b}]");
        Interval { a, b }
    }

    pub fn is_empty(&self) -> bool {
        self.a > self.b
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

/// Atomic proposition `h(s) >= 0` over a 2-D workspace point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// `h(s) = normal · s + offset`.
    HalfPlane { normal: [f64; 2], offset: f64 },
    /// `h(s) = r² - |s - c|²` when `inside`, its negation otherwise.
    Circle {
        center: [f64; 2],
        radius: f64,
        inside: bool,
    },
}

impl Predicate {
    pub fn half_plane(normal: [f64; 2], offset: f64) -> Self {
        Predicate::HalfPlane { normal, offset }
    }

    pub fn circle(center: [f64; 2], radius: f64, inside: bool) -> Self {
        Predicate::Circle {
            center,
            radius,
            inside,
        }
    }

    #[inline]
    pub fn eval<S: Scalar>(&self, s: [S; 2]) -> S {
        match *self {
            Predicate::HalfPlane { normal, offset } => {
                let mut h = S::lit(offset);
                if normal[0] != 0.0 {
                    h = s[0].scale(S::Prim::lit(normal[0])) + h;
                }
                if normal[1] != 0.0 {
                    h = s[1].scale(S::Prim::lit(normal[1])) + h;
                }
                h
            }
            Predicate::Circle {
                center,
                radius,
                inside,
            } => {
                let dx = s[0] - S::lit(center[0]);
                let dy = s[1] - S::lit(center[1]);
                let h = S::lit(radius * radius) - (dx * dx + dy * dy);
                if inside {
                    h
                } else {
                    -h
                }
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        match *self {
            Predicate::HalfPlane { normal, offset } => {
                normal == [0.0, 0.0] || !normal.iter().chain([&offset]).all(|v| v.is_finite())
            }
            Predicate::Circle { center, radius, .. } => {
                !(radius > 0.0 && radius.is_finite() && center.iter().all(|v| v.is_finite()))
            }
        }
    }
}

/// Outer-layer atom: at least `count` agents holding `capability` satisfy
/// `inner`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub inner: InnerFormula,
    pub capability: String,
    pub count: usize,
}

impl Task {
    pub fn new(inner: InnerFormula, capability: impl Into<String>, count: usize) -> Self {
        Task {
            inner,
            capability: capability.into(),
            count,
        }
    }
}

/// Temporal formula over atoms of type `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula<L> {
    True,
    Atom(L),
    Not(Box<Formula<L>>),
    And(Vec<Formula<L>>),
    Or(Vec<Formula<L>>),
    Until {
        left: Box<Formula<L>>,
        right: Box<Formula<L>>,
        interval: Interval,
    },
    Eventually(Box<Formula<L>>, Interval),
    Always(Box<Formula<L>>, Interval),
}

pub type InnerFormula = Formula<Predicate>;
pub type OuterFormula = Formula<Task>;

/// Atoms that contribute their own look-ahead to the horizon.
pub trait Atom {
    fn horizon(&self) -> usize;
}

impl Atom for Predicate {
    fn horizon(&self) -> usize {
        0
    }
}

impl Atom for Task {
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }
}

impl<L> Formula<L> {
    pub fn atom(l: L) -> Self {
        Formula::Atom(l)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Conjunction; a single operand is returned as is.
    pub fn and(mut fs: Vec<Self>) -> Self {
        if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            Formula::And(fs)
        }
    }

    pub fn or(mut fs: Vec<Self>) -> Self {
        if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            Formula::Or(fs)
        }
    }

    pub fn until(left: Self, right: Self, a: usize, b: usize) -> Self {
        Formula::Until {
            left: Box::new(left),
            right: Box::new(right),
            interval: Interval::new(a, b),
        }
    }

    pub fn eventually(f: Self, a: usize, b: usize) -> Self {
        Formula::Eventually(Box::new(f), Interval::new(a, b))
    }

    pub fn always(f: Self, a: usize, b: usize) -> Self {
        Formula::Always(Box::new(f), Interval::new(a, b))
    }

    /// Direct children, in order.
    pub fn children(&self) -> Vec<&Formula<L>> {
        match self {
            Formula::True | Formula::Atom(_) => vec![],
            Formula::Not(f) | Formula::Eventually(f, _) | Formula::Always(f, _) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Until { left, right, .. } => vec![left, right],
        }
    }

    /// Nesting depth; atoms and `True` have depth 0.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// Visits every atom in left-to-right order.
    pub fn for_each_atom<'a>(&'a self, visit: &mut impl FnMut(&'a L)) {
        match self {
            Formula::True => {}
            Formula::Atom(l) => visit(l),
            _ => self.children().into_iter().for_each(|c| c.for_each_atom(visit)),
        }
    }

    fn for_each_interval(&self, visit: &mut impl FnMut(Interval)) {
        match self {
            Formula::Until { interval, .. }
            | Formula::Eventually(_, interval)
            | Formula::Always(_, interval) => visit(*interval),
            _ => {}
        }
        self.children().into_iter().for_each(|c| c.for_each_interval(visit));
    }
}

impl<L: Atom> Formula<L> {
    /// Furthest future sample, relative to the evaluation time, that the
    /// formula's truth value depends on.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True => 0,
            Formula::Atom(l) => l.horizon(),
            Formula::Not(f) => f.horizon(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(|f| f.horizon()).max().unwrap_or(0),
            Formula::Until {
                left,
                right,
                interval,
            } => interval.b + left.horizon().max(right.horizon()),
            Formula::Eventually(f, i) | Formula::Always(f, i) => i.b + f.horizon(),
        }
    }
}

/// One violated structural or team-level requirement.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    UnknownCapability(String),
    CountExceedsTeam {
        capability: String,
        count: usize,
        available: usize,
    },
    ZeroCount(String),
    EmptyInterval(Interval),
    TooFewOperands(&'static str),
    DegeneratePredicate(Predicate),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownCapability(c) => write!(f, "no agent has capability `{c}`"),
            Diagnostic::CountExceedsTeam {
                capability,
                count,
                available,
            } => write!(
                f,
                "task count m = {count} exceeds |J_c| = {available} agents with capability `{capability}`"
            ),
            Diagnostic::ZeroCount(c) => write!(f, "task on `{c}` has count 0"),
            Diagnostic::EmptyInterval(i) => write!(f, "empty interval [{}, {}]", i.a, i.b),
            Diagnostic::TooFewOperands(op) => write!(f, "`{op}` needs at least two operands"),
            Diagnostic::DegeneratePredicate(p) => write!(f, "degenerate predicate {p:?}"),
        }
    }
}

fn structural<L>(f: &Formula<L>, out: &mut Vec<Diagnostic>) {
    f.for_each_interval(&mut |i| {
        if i.is_empty() {
            out.push(Diagnostic::EmptyInterval(i));
        }
    });
    fn operands<L>(f: &Formula<L>, out: &mut Vec<Diagnostic>) {
        match f {
            Formula::And(fs) if fs.len() < 2 => out.push(Diagnostic::TooFewOperands("&&")),
            Formula::Or(fs) if fs.len() < 2 => out.push(Diagnostic::TooFewOperands("||")),
            _ => {}
        }
        f.children().into_iter().for_each(|c| operands(c, out));
    }
    operands(f, out);
}

/// Checks a formula against a team described by the agents' capability
/// sets. An empty result means the formula is well formed for this team.
pub fn validate<'a>(
    f: &OuterFormula,
    team: impl IntoIterator<Item = &'a BTreeSet<String>>,
) -> Vec<Diagnostic> {
    let mut holders: BTreeMap<&str, usize> = BTreeMap::new();
    for caps in team {
        for c in caps {
            *holders.entry(c.as_str()).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    structural(f, &mut out);
    f.for_each_atom(&mut |task: &Task| {
        structural(&task.inner, &mut out);
        task.inner.for_each_atom(&mut |p: &Predicate| {
            if p.is_degenerate() {
                out.push(Diagnostic::DegeneratePredicate(p.clone()));
            }
        });
        match holders.get(task.capability.as_str()) {
            None => out.push(Diagnostic::UnknownCapability(task.capability.clone())),
            Some(&n) if task.count > n => out.push(Diagnostic::CountExceedsTeam {
                capability: task.capability.clone(),
                count: task.count,
                available: n,
            }),
            _ => {}
        }
        if task.count == 0 {
            out.push(Diagnostic::ZeroCount(task.capability.clone()));
        }
    });
    out.dedup();
    out
}

/// Task of the older capability logic: for `duration` steps, region
/// `region` must hold at least `m_i` agents of capability `c_i` for every
/// requirement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatlTask {
    pub duration: usize,
    pub region: String,
    pub requirements: Vec<(String, usize)>,
}

/// Translates a [`CatlTask`] into an equivalent outer formula: one
/// `G[0,d] <φ_π, c_i, m_i>` per requirement, conjoined.
pub fn import_catl_task(
    t: &CatlTask,
    region_map: &BTreeMap<String, InnerFormula>,
) -> Result<OuterFormula> {
    let phi = region_map
        .get(&t.region)
        .ok_or_else(|| Error::UnknownRegion(t.region.clone()))?;
    if t.requirements.is_empty() || t.requirements.iter().any(|(_, m)| *m == 0) {
        return Err(Error::Config(format!(
            "task on region `{}` needs a nonempty list of positive counts",
            t.region
        )));
    }
    let parts = t
        .requirements
        .iter()
        .map(|(c, m)| Formula::always(Formula::Atom(Task::new(phi.clone(), c.clone(), *m)), 0, t.duration))
        .collect();
    Ok(Formula::and(parts))
}

/// Axis-aligned rectangle as the conjunction of its four half-planes.
pub fn rectangle(min: [f64; 2], max: [f64; 2]) -> InnerFormula {
    Formula::And(vec![
        Formula::Atom(Predicate::half_plane([1.0, 0.0], -min[0])),
        Formula::Atom(Predicate::half_plane([-1.0, 0.0], max[0])),
        Formula::Atom(Predicate::half_plane([0.0, 1.0], -min[1])),
        Formula::Atom(Predicate::half_plane([0.0, -1.0], max[1])),
    ])
}

/// Disk membership as a single differentiable predicate.
pub fn disk(center: [f64; 2], radius: f64) -> InnerFormula {
    Formula::Atom(Predicate::circle(center, radius, true))
}
