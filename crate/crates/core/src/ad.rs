//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every operation applied to [`Var`]s during a forward
//! evaluation. Each node stores at most two parents together with the local
//! partial derivatives, so the tape is a DAG whose topological order is the
//! insertion order. [`Tape::backward`] sweeps it in reverse and accumulates
//! adjoints.
//!
//! ```
//! use catlplus::ad::Tape;
//!
//! let tape = Tape::<f64>::new();
//! let x = tape.var(3.0);
//! let y = x * x + x;
//! let grads = tape.backward(y);
//! assert_eq!(y.value(), 12.0);
//! assert_eq!(grads.wrt(x), 7.0);
//! ```
//!
//! `Var` is `Copy`. Constants (values created without a tape) carry no node
//! and contribute nothing to the backward pass.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
struct Node<F> {
    parents: [u32; 2],
    partials: [F; 2],
    arity: u8,
}

/// Operation log for one evaluation.
///
/// The tape is single-threaded by construction; concurrent evaluations each
/// own a private tape.
#[derive(Default)]
pub struct Tape<F> {
    nodes: RefCell<Vec<Node<F>>>,
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers an independent variable.
    pub fn var(&self, value: F) -> Var<'_, F> {
        let idx = self.push(Node {
            parents: [0, 0],
            partials: [F::zero(), F::zero()],
            arity: 0,
        });
        Var {
            val: value,
            node: Some((self, idx)),
        }
    }

    pub fn vars(&self, values: &[F]) -> Vec<Var<'_, F>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    fn push(&self, node: Node<F>) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = u32::try_from(nodes.len()).expect("tape exceeds u32 nodes");
        nodes.push(node);
        idx
    }

    /// Reverse sweep from `root`. The returned adjoints hold ∂root/∂node for
    /// every node recorded before `root`.
    pub fn backward(&self, root: Var<'_, F>) -> Gradients<F> {
        let nodes = self.nodes.borrow();
        let mut adjoint = vec![F::zero(); nodes.len()];
        let Some((tape, root_idx)) = root.node else {
            return Gradients { adjoint };
        };
        assert!(std::ptr::eq(tape, self), "root belongs to a different tape");
        adjoint[root_idx as usize] = F::one();
        for i in (0..=root_idx as usize).rev() {
            let a = adjoint[i];
            if a == F::zero() {
                continue;
            }
            let node = &nodes[i];
            for k in 0..node.arity as usize {
                let p = node.parents[k] as usize;
                adjoint[p] = adjoint[p] + a * node.partials[k];
            }
        }
        Gradients { adjoint }
    }
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Clone, Debug)]
pub struct Gradients<F> {
    adjoint: Vec<F>,
}

impl<F: Real> Gradients<F> {
    /// ∂root/∂v; zero for constants and for nodes the root does not depend on.
    pub fn wrt(&self, v: Var<'_, F>) -> F {
        match v.node {
            Some((_, idx)) => self.adjoint.get(idx as usize).copied().unwrap_or_else(F::zero),
            None => F::zero(),
        }
    }

    pub fn wrt_all(&self, vs: &[Var<'_, F>]) -> Vec<F> {
        vs.iter().map(|&v| self.wrt(v)).collect()
    }

    /// Raw adjoint by node id.
    pub fn by_node(&self) -> &[F] {
        &self.adjoint
    }
}

/// A scalar value optionally attached to a tape node.
#[derive(Clone, Copy)]
pub struct Var<'t, F> {
    val: F,
    node: Option<(&'t Tape<F>, u32)>,
}

impl<F: fmt::Debug> fmt::Debug for Var<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some((_, idx)) => write!(f, "Var({:?} @{})", self.val, idx),
            None => write!(f, "Var({:?})", self.val),
        }
    }
}

impl<'t, F: Real> Var<'t, F> {
    pub fn constant(val: F) -> Self {
        Var { val, node: None }
    }

    pub fn value(&self) -> F {
        self.val
    }

    /// Tape node id, or `None` for constants.
    pub fn id(&self) -> Option<usize> {
        self.node.map(|(_, i)| i as usize)
    }

    fn unary(self, val: F, d: F) -> Self {
        match self.node {
            None => Var::constant(val),
            Some((tape, idx)) => {
                let n = tape.push(Node {
                    parents: [idx, 0],
                    partials: [d, F::zero()],
                    arity: 1,
                });
                Var {
                    val,
                    node: Some((tape, n)),
                }
            }
        }
    }

    fn binary(self, rhs: Self, val: F, da: F, db: F) -> Self {
        match (self.node, rhs.node) {
            (None, None) => Var::constant(val),
            (Some(_), None) => self.unary(val, da),
            (None, Some(_)) => rhs.unary(val, db),
            (Some((tape, ia)), Some((_, ib))) => {
                let n = tape.push(Node {
                    parents: [ia, ib],
                    partials: [da, db],
                    arity: 2,
                });
                Var {
                    val,
                    node: Some((tape, n)),
                }
            }
        }
    }

    pub fn exp(self) -> Self {
        let e = Float::exp(self.val);
        self.unary(e, e)
    }

    pub fn sin(self) -> Self {
        self.unary(Float::sin(self.val), Float::cos(self.val))
    }

    pub fn cos(self) -> Self {
        self.unary(Float::cos(self.val), -Float::sin(self.val))
    }

    /// Square root; the derivative at exactly zero is taken as zero.
    pub fn sqrt(self) -> Self {
        let r = Float::sqrt(self.val);
        let d = if r > F::zero() {
            F::one() / (r + r)
        } else {
            F::zero()
        };
        self.unary(r, d)
    }
}

impl<'t, F: Real> Add for Var<'t, F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.val + rhs.val, F::one(), F::one())
    }
}

impl<'t, F: Real> Sub for Var<'t, F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.val - rhs.val, F::one(), -F::one())
    }
}

impl<'t, F: Real> Mul for Var<'t, F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t, F: Real> Div for Var<'t, F> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        self.binary(rhs, q, F::one() / rhs.val, -q / rhs.val)
    }
}

impl<'t, F: Real> Neg for Var<'t, F> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.val, -F::one())
    }
}
