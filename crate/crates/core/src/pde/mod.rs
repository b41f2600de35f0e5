//! Time integration of `y_t = Δy + v(x,t) 1_O y + f(t, y)` with zero Dirichlet
//! data, the discrete heat semigroup and resolvent, and residual checks of
//! the associated variation-of-constants identities.

mod nonlinearity;
mod residual;
mod schedule;
mod simulate;

pub use nonlinearity::NonlinearitySpec;
pub use residual::{steering_identity_residual, vcf_residual};
pub use schedule::{
    Cancellation, CancellationDescription, ControlPiece, ControlSchedule, PieceDescription,
    ScheduleDescription,
};
pub use simulate::{
    applied_forcing, resolvent_smooth, simulate, simulate_segment, step_heat, HeatStepper,
    Trajectory,
};

pub(crate) use simulate::midpoint_states;
