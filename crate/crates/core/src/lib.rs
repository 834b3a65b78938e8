//! Solver suite for a Navier–Stokes / sixth-order Cahn–Hilliard
//! membrane–fluid model with adjoint-based optimal control.

pub mod adjoint;
pub mod constitutive;
pub mod control;
pub mod error;
pub mod grid;
pub mod io;
pub mod linearized;
pub mod presets;
pub mod state;

pub use error::{Error, Result};
pub use grid::{FaceField, GridSpec, ScalarField, SpectralCoeffs};
pub use constitutive::{CostSpec, Mobility, PhysParams, Potential};
pub use state::{Diagnostics, State, TimeSpec, Trajectory};
pub use linearized::{LinearizedState, LinearizedTrajectory};
pub use adjoint::{AdjointState, AdjointTrajectory};
pub use control::{ControlBounds, ControlField, CostBreakdown, Problem, ProblemSpec};
