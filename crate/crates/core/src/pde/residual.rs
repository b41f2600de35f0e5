//! Discrete checks of the variation-of-constants identities satisfied by
//! controlled trajectories. All time integrals are left-endpoint Riemann sums
//! over the solver steps, so the residuals are first order in `dt`.

use crate::error::Result;
use crate::grid::Field;

use super::nonlinearity::NonlinearitySpec;
use super::schedule::ControlSchedule;
use super::simulate::{HeatStepper, Trajectory};

/// `‖y(T) − [S_h(T) y₀ + Σ_k dt · S_h(T − t_k)(v(t_k) y_k + f(t_k, y_k))]‖`,
/// with `S_h` realized by Crank–Nicolson steps of the trajectory's own `dt`.
pub fn vcf_residual(
    trajectory: &Trajectory,
    control: &ControlSchedule,
    nonlinearity: &NonlinearitySpec,
) -> Result<f64> {
    let grid = *trajectory.grid();
    grid.ensure_same(control.grid())?;
    let dt = trajectory.dt();
    let heat = HeatStepper::new(grid, dt)?;
    let mut acc = trajectory.initial().clone();
    for (k, (y, &t)) in trajectory.states()[..trajectory.steps()]
        .iter()
        .zip(trajectory.times())
        .enumerate()
    {
        let v = control
            .field_at(t)
            .ok_or_else(|| crate::Error::Schedule(format!("no control piece covers t = {t}")))?;
        let mut source = v.mul(y)?;
        if !nonlinearity.is_zero() {
            source.axpy(1.0, &nonlinearity.evaluate(t, y))?;
        }
        if let Some(c) = control.cancellation() {
            source.axpy(1.0, &c.term(k).mul(y)?)?;
        }
        acc.axpy(dt, &source)?;
        acc = heat.step(&acc)?;
    }
    trajectory.final_state().distance(&acc)
}

/// `‖(y(T) − target) − Σ_k dt · e^{((T − t_k)/T) a} (Δ_h y_k + f(t_k, y_k))‖` for a
/// trajectory driven by the static control `a/T`, `T` the trajectory duration.
pub fn steering_identity_residual(
    trajectory: &Trajectory,
    exponent: &Field,
    nonlinearity: &NonlinearitySpec,
    target: &Field,
) -> Result<f64> {
    let grid = *trajectory.grid();
    grid.ensure_same(exponent.grid())?;
    grid.ensure_same(target.grid())?;
    let dt = trajectory.dt();
    let t0 = trajectory.start_time();
    let horizon = trajectory.duration();
    let mut integral = Field::zeros(grid);
    for (y, &t) in trajectory.states()[..trajectory.steps()]
        .iter()
        .zip(trajectory.times())
    {
        let mut integrand = grid.laplacian(y)?;
        if !nonlinearity.is_zero() {
            integrand.axpy(1.0, &nonlinearity.evaluate(t, y))?;
        }
        let remaining = (horizon - (t - t0)) / horizon;
        let kernel = exponent.map(|a| (remaining * a).exp());
        integral.axpy(dt, &kernel.mul(&integrand)?)?;
    }
    let lhs = trajectory.final_state().sub(target)?;
    lhs.distance(&integral)
}
