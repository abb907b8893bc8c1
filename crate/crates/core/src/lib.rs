//! Networked evolution strategies.
//!
//! A population of agents, each holding its own parameter vector, runs
//! mirrored-sampling ES where every agent aggregates only the perturbed
//! parameters and rewards of its graph neighbors. With a fixed probability
//! per iteration the best candidate is broadcast to all agents instead.
//!
//! Modules:
//! - [`topology`]: graph families, connectivity, degree statistics, edge lists
//! - [`metrics`]: reachability and homogeneity, with ER approximations
//! - [`optimizer`]: perturbation, fitness shaping, networked update, broadcast
//! - [`objectives`]: synthetic test functions and a point-mass control task
//! - [`diagnostics`]: update-diversity variance and its topology bound
//! - [`harness`]: configs, evaluation protocol, aggregation, CSV/SVG output

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod objectives;
pub mod optimizer;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use objectives::{Objective, ObjectiveKind};
pub use optimizer::{Hyperparams, Perturbations, Population};
pub use topology::{Family, Graph, TopologySpec};
