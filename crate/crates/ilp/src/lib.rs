//! Exact solver for small binary integer linear programs.
//!
//! Instances are minimized. Rows may be `<=`, `>=`, or strict `<`; strict rows
//! are closed with a relative epsilon before solving, and every integer point
//! the search accepts is re-checked against the original rows.

mod bb;
mod error;
mod lpfmt;
mod model;
mod relax;
mod simplex;

pub use bb::solve_bb;
pub use error::IlpError;
pub use lpfmt::to_lp_format;
pub use model::{Constraint, IlpInstance, IlpSolution, Sense, Status, FEAS_TOL, STRICT_REL_EPS};
pub use relax::{lp_relax, null_variables, LpRelaxation};
