//! Multi-agent signal temporal logic with capability-aware task counting,
//! two quantitative semantics (traditional min/max and a smooth exponential
//! variant), and gradient-based control synthesis.
//!
//! The numeric core is generic over the scalar type; `f64` aliases are
//! provided at the crate root for the common case.
//!
//! ```
//! use catlplus::ad::Tape;
//!
//! let tape = Tape::<f64>::new();
//! let x = tape.var(2.0);
//! let y = x * x + x.sin();
//! let g = tape.backward(y);
//! assert!((g.wrt(x) - (4.0 + 2.0_f64.cos())).abs() < 1e-12);
//! ```

pub mod ad;
pub mod ast;
pub mod dynamics;
pub mod error;
pub mod parser;
pub mod robustness;
pub mod scenario;
pub mod scalar;
pub mod synthesis;

pub use ast::{Formula, InnerFormula, Interval, OuterFormula, Predicate, Task};
pub use error::{Error, Result};
pub use parser::{parse_formula, parse_inner, print_formula, print_inner, ParseError};
pub use robustness::{eval_bool, Metric, Monitor, RobustnessParams};
pub use scalar::{Real, Scalar};

pub type Agent = dynamics::AgentModel<f64>;
pub type Team = robustness::TeamTrajectory<f64>;
pub type Plan = dynamics::ControlPlan<f64>;
pub type Problem = synthesis::Problem<f64>;
pub type Scenario = scenario::Scenario;
