//! Stationary twin-city processes on the flat torus and shortest-path TSP
//! functionals.

pub mod acceptance;
pub mod error;
pub mod experiments;
pub mod process;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod torus;
pub mod tsp;

pub use error::{Error, Result};
pub use process::{ProcessSpec, Stage};
pub use torus::{Metric, TorusPoint};
pub use tsp::{Method, PathSolution, SolverConfig};
