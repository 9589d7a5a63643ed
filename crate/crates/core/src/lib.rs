//! Core library for budgeted environmental hotspot identification.
//!
//! A robot with a travel/sampling budget explores a scalar field (algal bloom
//! intensity, chlorophyll concentration, ...) and must report the location of
//! the field maximum when the budget runs out. The pipeline combines:
//!
//! * Gaussian-process regression with a squared-exponential ARD kernel
//!   ([`gp`]), including marginal-likelihood hyperparameter optimization;
//! * receding-horizon informative path planning via Monte Carlo tree search
//!   over motion primitives, scored with a GP-UCB acquisition ([`planner`]);
//! * three hyperparameter strategies (known, scheduled, re-optimized) wrapped
//!   into full mission rollouts ([`strategy`]);
//! * a boustrophedon coverage baseline ([`baseline`]);
//! * decentralized multi-robot coordination through Voronoi partitioning of
//!   the workspace ([`multirobot`]);
//! * evaluation metrics normalized for cross-field comparability ([`metrics`]).
//!
//! The crate is `no_std`-compatible (requires `alloc`). Anything that touches
//! the filesystem, wall clocks, or threads lives in the companion CLI crate;
//! the one exception is the [`clock::Clock`] trait, which abstracts monotonic
//! time so GP cost accounting works identically on hosted and bare targets.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod baseline;
pub mod clock;
pub mod field;
pub mod geom;
pub mod gp;
pub mod grid;
pub mod metrics;
pub mod multirobot;
pub mod planner;
pub mod strategy;

mod fmath;
mod linalg;

pub use clock::{Clock, NullClock};
pub use field::{FieldStats, GriddedField, Sensor, SpatialField, SyntheticField};
pub use geom::{Point2, Pose, Region};
pub use gp::{GpModel, Hyperparameters};
pub use grid::EvalGrid;
pub use planner::PlannerConfig;
pub use strategy::{run_mission, MissionConfig, MissionLog, StrategyKind};
