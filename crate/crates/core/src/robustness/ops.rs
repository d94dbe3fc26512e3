//! Aggregation operators of the two quantitative semantics.
//!
//! Traditional robustness aggregates with `min`, `max` and the m-th largest
//! element. Exponential robustness replaces the conjunction by a blend of
//! the minimum and the mean of sign-coherent effective values, and the task
//! aggregate by the mean of logistic-weighted effective values, so that every
//! operand has a strictly positive influence on the result.
//!
//! Exponent arguments are clamped to `[-EXP_CLAMP, EXP_CLAMP]`. Clamping
//! keeps the sign of every effective value and prevents overflow when
//! margins are large.

use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};

pub const EXP_CLAMP: f64 = 50.0;

fn clamped_exp<S: Scalar>(x: S) -> S {
    let c = S::Prim::lit(EXP_CLAMP);
    x.clamp_to(-c, c).exp()
}

/// Index of the first minimal element and whether the minimum is attained
/// more than once.
pub(crate) fn argmin<S: Scalar>(xs: &[S]) -> (usize, bool) {
    let mut best = 0;
    let mut tie = false;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if x.value() < xs[best].value() {
            best = i;
            tie = false;
        } else if x.value() == xs[best].value() {
            tie = true;
        }
    }
    (best, tie)
}

pub(crate) fn argmax<S: Scalar>(xs: &[S]) -> (usize, bool) {
    let mut best = 0;
    let mut tie = false;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if x.value() > xs[best].value() {
            best = i;
            tie = false;
        } else if x.value() == xs[best].value() {
            tie = true;
        }
    }
    (best, tie)
}

/// Indices sorted by decreasing value; equal values keep index order.
fn descending_order<S: Scalar>(xs: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| {
        xs[j]
            .value()
            .partial_cmp(&xs[i].value())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

fn check_count(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        Err(Error::CountOutOfRange { m, n })
    } else {
        Ok(())
    }
}

/// The m-th largest element (1-based, duplicates counted with multiplicity).
pub fn kth_largest<S: Scalar>(v: &[S], m: usize) -> Result<S> {
    Ok(kth_largest_flagged(v, m)?.0)
}

pub(crate) fn kth_largest_flagged<S: Scalar>(v: &[S], m: usize) -> Result<(S, bool)> {
    check_count(m, v.len())?;
    let order = descending_order(v);
    let pick = v[order[m - 1]];
    let tie = (m >= 2 && v[order[m - 2]].value() == pick.value())
        || (m < v.len() && v[order[m]].value() == pick.value());
    Ok((pick, tie))
}

/// Effective values of the exponential conjunction; each one shares the
/// sign of the minimum. Operands must be finite.
pub fn conj_effective<S: Scalar>(etas: &[S]) -> Vec<S> {
    let (imin, _) = argmin(etas);
    let m = etas[imin];
    let zero = S::Prim::zero();
    let two = S::lit(2.0);
    etas.iter()
        .enumerate()
        .map(|(i, &x)| {
            if m.value() < zero {
                m * clamped_exp((x - m) / m)
            } else if m.value() > zero {
                m * (two - clamped_exp((m - x) / m))
            } else if i == imin {
                // η_min = 0: keep the node so the left derivative flows to it.
                m
            } else {
                S::constant(zero)
            }
        })
        .collect()
}

/// Exponential conjunction `β·η_min + (1-β)·mean(η_i^conj)`.
///
/// `+∞` operands (the constant `true`) are dropped; any `-∞` operand makes
/// the result `-∞`. An empty slice yields `+∞`.
pub fn conj_exp<S: Scalar>(etas: &[S], beta: S::Prim) -> S {
    conj_exp_flagged(etas, beta).0
}

pub(crate) fn conj_exp_flagged<S: Scalar>(etas: &[S], beta: S::Prim) -> (S, bool) {
    if let Some(&neg_inf) = etas
        .iter()
        .find(|x| x.value().is_infinite() && x.value() < S::Prim::zero())
    {
        return (neg_inf, false);
    }
    let finite: Vec<S> = etas.iter().copied().filter(|x| x.value().is_finite()).collect();
    match finite.len() {
        0 => return (S::constant(S::Prim::infinity()), false),
        1 => return (finite[0], false),
        _ => {}
    }
    let (imin, tie) = argmin(&finite);
    let m = finite[imin];
    let nonsmooth = tie || m.is_zero();
    if beta == S::Prim::one() {
        return (m, nonsmooth);
    }
    let avg = mean(&conj_effective(&finite));
    let out = if beta == S::Prim::zero() {
        avg
    } else {
        m.scale(beta) + avg.scale(S::Prim::one() - beta)
    };
    (out, nonsmooth)
}

/// Exponential disjunction through De Morgan: `-conj_exp(-η)`.
pub fn disj_exp<S: Scalar>(etas: &[S], beta: S::Prim) -> S {
    disj_exp_flagged(etas, beta).0
}

pub(crate) fn disj_exp_flagged<S: Scalar>(etas: &[S], beta: S::Prim) -> (S, bool) {
    let neg: Vec<S> = etas.iter().map(|&x| -x).collect();
    let (v, flag) = conj_exp_flagged(&neg, beta);
    (-v, flag)
}

/// Effective values of the exponential task aggregate, in input order.
/// Each shares the sign of the critical m-th largest value.
pub fn task_effective<S: Scalar>(etas: &[S], m: usize, alpha: S::Prim) -> Result<Vec<S>> {
    Ok(task_effective_flagged(etas, m, alpha)?.0)
}

fn task_effective_flagged<S: Scalar>(etas: &[S], m: usize, alpha: S::Prim) -> Result<(Vec<S>, bool)> {
    let (c, tie) = kth_largest_flagged(etas, m)?;
    if c.value().is_infinite() {
        return Ok((vec![c; etas.len()], tie));
    }
    let one = S::constant(S::Prim::one());
    let two_alpha = S::Prim::lit(2.0) * alpha;
    let positive = c.value() > S::Prim::zero();
    let coef = if positive {
        (clamped_exp(c) - one).scale(two_alpha)
    } else {
        (clamped_exp(-c) - one).scale(-two_alpha)
    };
    let eff = etas
        .iter()
        .map(|&x| {
            let d = (x - c).scale(alpha);
            let denom = one + clamped_exp(if positive { -d } else { d });
            coef / denom
        })
        .collect();
    Ok((eff, tie || c.is_zero()))
}

/// Exponential task robustness: mean of the effective values over all agents
/// holding the capability.
pub fn task_exp<S: Scalar>(etas: &[S], m: usize, alpha: S::Prim) -> Result<S> {
    Ok(task_exp_flagged(etas, m, alpha)?.0)
}

pub(crate) fn task_exp_flagged<S: Scalar>(etas: &[S], m: usize, alpha: S::Prim) -> Result<(S, bool)> {
    let (eff, flag) = task_effective_flagged(etas, m, alpha)?;
    if eff[0].value().is_infinite() {
        return Ok((eff[0], flag));
    }
    Ok((mean(&eff), flag))
}
