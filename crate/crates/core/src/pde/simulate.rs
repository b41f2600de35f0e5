use crate::error::{Error, Result};
use crate::grid::{laplacian_values, Field, SpatialGrid};
use crate::linalg::ShiftedLaplacianSolver;

use super::nonlinearity::NonlinearitySpec;
use super::schedule::ControlSchedule;

/// Crank–Nicolson propagator of `y_t = Δ_h y` for a fixed step, factored once.
#[derive(Debug, Clone)]
pub struct HeatStepper {
    solver: ShiftedLaplacianSolver,
    dt: f64,
}

impl HeatStepper {
    pub fn new(grid: SpatialGrid, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!(
                "time step must be positive, got {dt}"
            )));
        }
        Ok(Self {
            solver: ShiftedLaplacianSolver::new(grid, 0.5 * dt)?,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.solver.grid()
    }

    /// Solves `(I − dt/2 Δ_h) u⁺ = (I + dt/2 Δ_h) u`.
    pub fn step(&self, u: &Field) -> Result<Field> {
        let grid = *self.grid();
        grid.ensure_same(u.grid())?;
        let half = 0.5 * self.dt;
        let lap = laplacian_values(&grid, u.values());
        let mut rhs: Vec<f64> = u
            .values()
            .iter()
            .zip(lap)
            .map(|(v, l)| v + half * l)
            .collect();
        self.solver.solve_in_place(&mut rhs);
        Ok(Field::from_raw(grid, rhs))
    }

    /// `S_h(k·dt) u`
    pub fn step_n(&self, u: &Field, k: usize) -> Result<Field> {
        let mut out = u.clone();
        for _ in 0..k {
            out = self.step(&out)?;
        }
        Ok(out)
    }
}

/// One Crank–Nicolson step of the uncontrolled heat equation.
pub fn step_heat(u: &Field, dt: f64) -> Result<Field> {
    HeatStepper::new(*u.grid(), dt)?.step(u)
}

/// `λ R(λ; Δ_h) u`, i.e. the solution of `(λ I − Δ_h) z = λ u`.
pub fn resolvent_smooth(u: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "resolvent parameter must be positive, got {lambda}"
        )));
    }
    let solver = ShiftedLaplacianSolver::new(*u.grid(), 1.0 / lambda)?;
    Ok(Field::from_raw(*u.grid(), solver.solve(u.values())))
}

/// States at every solver step of a run, `t_k = start + k·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dt: f64,
    times: Vec<f64>,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    /// Number of solver steps (one less than the number of stored states).
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.states[0].grid()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn initial(&self) -> &Field {
        &self.states[0]
    }

    pub fn final_state(&self) -> &Field {
        &self.states[self.states.len() - 1]
    }

    pub fn max_l2_norm(&self) -> f64 {
        self.states.iter().map(Field::l2_norm).fold(0.0, f64::max)
    }
}

/// Strang splitting of `y_t = Δy + v y + f(t, y)` over one step:
/// exact pointwise half-step `e^{dt/2 · v}`, Crank–Nicolson diffusion with the
/// reaction evaluated explicitly at the midpoint state, second exact half-step.
pub(crate) struct SplitStepper<'a> {
    heat: HeatStepper,
    control: &'a ControlSchedule,
    half_factors: Vec<Field>,
    dt: f64,
}

impl<'a> SplitStepper<'a> {
    pub(crate) fn new(control: &'a ControlSchedule, dt: f64) -> Result<Self> {
        let heat = HeatStepper::new(*control.grid(), dt)?;
        let half_factors = control
            .pieces()
            .iter()
            .map(|p| p.field.map(|v| (0.5 * dt * v).exp()))
            .collect();
        Ok(Self {
            heat,
            control,
            half_factors,
            dt,
        })
    }

    fn factor(&self, t: f64) -> Result<&Field> {
        self.control
            .piece_index_at(t)
            .map(|i| &self.half_factors[i])
            .ok_or_else(|| Error::Schedule(format!("no control piece covers t = {t}")))
    }

    /// State handed to the reaction term during the step starting at `t`.
    pub(crate) fn midpoint(&self, t: f64, y: &Field) -> Result<Field> {
        y.mul(self.factor(t + 0.25 * self.dt)?)
    }

    pub(crate) fn step(
        &self,
        k: usize,
        t: f64,
        y: &Field,
        nonlinearity: &NonlinearitySpec,
    ) -> Result<Field> {
        let mid = self.midpoint(t, y)?;
        let mut next = self.heat.step(&mid)?;
        let tm = t + 0.5 * self.dt;
        let mut forcing = (!nonlinearity.is_zero()).then(|| nonlinearity.evaluate(tm, &mid));
        if let Some(c) = self.control.cancellation() {
            let cancel = c.term(k).mul(&mid)?;
            forcing = Some(match forcing {
                Some(f) => f.add(&cancel)?,
                None => cancel,
            });
        }
        if let Some(f) = forcing {
            next.axpy(self.dt, &f)?;
        }
        next.mul(self.factor(t + 0.75 * self.dt)?)
    }
}

/// Integrates the controlled equation from `t = 0` to `horizon`.
pub fn simulate(
    grid: &SpatialGrid,
    y0: &Field,
    control: &ControlSchedule,
    nonlinearity: &NonlinearitySpec,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    simulate_segment(grid, y0, 0.0, control, nonlinearity, horizon, dt)
}

/// Integrates from `start` to `end` with a uniform step as close to `dt` as the
/// interval allows (`end − start` is split into `round((end − start)/dt)` steps).
pub fn simulate_segment(
    grid: &SpatialGrid,
    y_start: &Field,
    start: f64,
    control: &ControlSchedule,
    nonlinearity: &NonlinearitySpec,
    end: f64,
    dt: f64,
) -> Result<Trajectory> {
    grid.ensure_same(y_start.grid())?;
    grid.ensure_same(control.grid())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let span = end - start;
    if !(span >= dt * (1.0 - 1e-12)) {
        return Err(Error::Schedule(format!(
            "interval [{start}, {end}] is shorter than one step dt = {dt}"
        )));
    }
    if start < 0.0 || control.piece_index_at(start).is_none() {
        return Err(Error::Schedule(format!(
            "no control piece covers t = {start}"
        )));
    }
    if control.horizon() < end * (1.0 - 1e-12) {
        return Err(Error::Schedule(format!(
            "control ends at {} before the run horizon {end}",
            control.horizon()
        )));
    }
    let steps = ((span / dt).round() as usize).max(1);
    let dt = span / steps as f64;
    if let Some(c) = control.cancellation() {
        let same_grid = (c.start - start).abs() <= 1e-12 * end.max(1.0)
            && (c.dt - dt).abs() <= 1e-12 * dt
            && c.steps() == steps;
        if !same_grid {
            return Err(Error::Schedule(format!(
                "cancellation term sampled on {} steps of {} from {}, run uses {steps} steps of {dt} from {start}",
                c.steps(),
                c.dt,
                c.start
            )));
        }
    }

    let stepper = SplitStepper::new(control, dt)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(start);
    states.push(y_start.clone());
    for k in 0..steps {
        let t = start + k as f64 * dt;
        let next = stepper.step(k, t, &states[k], nonlinearity)?;
        if next.first_non_finite().is_some() {
            return Err(Error::BlowUp {
                step: k + 1,
                time: t + dt,
            });
        }
        states.push(next);
        times.push(start + (k + 1) as f64 * dt);
    }
    Ok(Trajectory { dt, times, states })
}

/// Reaction values the integrator applied at each step, `f(t_k + dt/2, y_mid,k)`,
/// together with their times.
pub fn applied_forcing(
    trajectory: &Trajectory,
    control: &ControlSchedule,
    nonlinearity: &NonlinearitySpec,
) -> Result<Vec<(f64, Field)>> {
    let stepper = SplitStepper::new(control, trajectory.dt())?;
    trajectory.states()[..trajectory.steps()]
        .iter()
        .zip(trajectory.times())
        .map(|(y, &t)| {
            let mid = stepper.midpoint(t, y)?;
            let tm = t + 0.5 * trajectory.dt();
            Ok((tm, nonlinearity.evaluate(tm, &mid)))
        })
        .collect()
}

/// Midpoint states of a run, as seen by the reaction term.
pub(crate) fn midpoint_states(
    trajectory: &Trajectory,
    control: &ControlSchedule,
) -> Result<Vec<Field>> {
    let stepper = SplitStepper::new(control, trajectory.dt())?;
    trajectory.states()[..trajectory.steps()]
        .iter()
        .zip(trajectory.times())
        .map(|(y, &t)| stepper.midpoint(t, y))
        .collect()
}
