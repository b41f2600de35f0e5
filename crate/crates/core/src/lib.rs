//! Multiplicative (bilinear) steering of the heat equation on the unit square
//! or interval: finite-difference integrator, control synthesis, mollified
//! exponents, Bernstein time approximation and the steering pipelines.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod control;
pub mod error;
pub mod grid;
pub mod io;
mod linalg;
pub mod pde;
pub mod presets;
pub mod steer;

pub use error::{Error, Result};
pub use grid::{Field, SpatialGrid, SupportMask};
pub use linalg::ShiftedLaplacianSolver;
pub use pde::{ControlPiece, ControlSchedule, NonlinearitySpec, Trajectory};
pub use steer::{Outcome, SteeringProblem, SteeringReport};
