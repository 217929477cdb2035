//! Time-stepped distributed simulation with adaptive entity migration.

pub mod config;
pub mod directory;
pub mod driver;
pub mod geom;
pub mod heuristics;
pub mod ids;
pub mod ini;
pub mod manet;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sync;
pub mod transport;

pub use ids::{LpId, SeId, Timestep};
