//! Swap local search, brute-force oracles and stability tooling for
//! k-means and k-median, with and without penalties.
//!
//! All distances and costs are exact: coordinates are rationals (or square
//! roots of rationals), distances are [`Surd`]s and costs are [`RadicalSum`]s
//! compared with an exact sign test.

pub mod assignment;
pub mod cost;
pub mod error;
pub mod exact;
pub mod instance;
pub mod io;
pub mod local_search;
pub mod metric;
pub mod oracle;
pub mod reductions;
pub mod stability;
pub mod subsets;

pub use error::{Error, Result};
pub use exact::{RadicalSum, Rational, Surd};
pub use instance::{AugmentedInstance, ClusteringProblem, Instance, InstanceBuilder, Objective, Solution};
pub use metric::{Coord, Metric, Point, Role, Site};
