//! Planning toolkit for millimeter-wave base-station deployment in box-shaped
//! urban scenarios.
//!
//! The pipeline runs [`linkmodel::build_link_table`] over every site/grid
//! pair, derives the per-site load ceiling with [`linkmodel::solve_phi`],
//! sizes each site's coverage with [`coverage::max_coverage`], and picks the
//! cheapest site subset meeting every grid's outage tolerance with
//! [`deploy::solve_deployment`]. [`benchmarks`] holds three comparison
//! planners and [`evalmc`] checks a plan by simulation.

pub mod benchmarks;
pub mod coverage;
pub mod deploy;
pub mod error;
pub mod evalmc;
pub mod gen;
pub mod geometry;
pub mod linkmodel;
pub mod matrix;
pub mod scenario;

pub use error::{CoreError, Result};
pub use matrix::BoolMatrix;
pub use scenario::{Overrides, Scenario, ScenarioDoc};
