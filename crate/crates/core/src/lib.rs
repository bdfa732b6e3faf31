//! Waypoint route planning over the symmetric travelling salesman problem.
//!
//! The crate is organised by solver family: [`construct`] builds first tours,
//! [`localsearch`] improves them, [`rl`] learns tours with tabular Q-learning,
//! and [`exact`] provides the Held-Karp oracle used to check all of them.
//! [`landscape`] holds the grid-walk experiments on analytic surfaces,
//! [`data`] reads and writes waypoint files, and [`bench`] runs method
//! comparisons.

pub mod bench;
pub mod budget;
pub mod construct;
pub mod data;
pub mod error;
pub mod exact;
pub mod geo;
pub mod landscape;
pub mod localsearch;
pub mod rl;
pub mod solve;
pub mod tour;

pub use budget::Budget;
pub use error::{Error, Result};
pub use exact::held_karp;
pub use geo::{Coord, CoordKind, DistanceMatrix, MetricKind, Waypoint, WaypointSet};
pub use tour::{gap_to_best, tour_length, SolveTrace, Tour};
