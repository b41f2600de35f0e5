use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::approx::{convolve_bump, MollifierParams};
use crate::control::{
    cancellation_control, check_admissibility, hold_control, log_ratio, two_phase_control,
};
use crate::error::{Error, Result};
use crate::grid::{Field, SupportMask};
use crate::pde::{simulate_segment, NonlinearitySpec, Trajectory};

use super::{sample_trajectory, Attempt, Outcome, SteeringProblem, SteeringReport};

/// How the target is turned into an equilibrium of the controlled heat flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldCase {
    /// Hold the target itself (requires a small hold residual).
    Equilibrium,
    /// Hold a smooth positive surrogate of a nonnegative target.
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedTimeOptions {
    pub case: HoldCase,
    /// Accepted `‖Δ_h y + g y‖ / ‖Δ_h y‖` for the held state.
    pub hold_tolerance: f64,
    /// Accepted `‖g‖_∞`; `None` means `0.25 / h²`.
    pub max_hold_coefficient: Option<f64>,
    /// Hold-phase steps satisfy `dt · ‖g‖_∞ ≤ hold_step_factor`.
    pub hold_step_factor: f64,
    /// Smoothing radius for [`HoldCase::Smoothed`]; `None` searches `0.2, 0.1, …`.
    pub smoothing_radius: Option<f64>,
}

impl Default for FixedTimeOptions {
    fn default() -> Self {
        Self {
            case: HoldCase::Equilibrium,
            hold_tolerance: 1e-6,
            max_hold_coefficient: None,
            hold_step_factor: 0.1,
            smoothing_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub radius: f64,
    /// `‖y^d − y_ε‖`
    pub gap: f64,
    pub radii: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedTimeSummary {
    pub prescribed_time: f64,
    pub case: HoldCase,
    pub growth_constant: f64,
    pub smoothing: Option<SmoothingSummary>,
    pub hold_support_residual: f64,
    pub hold_full_residual: f64,
    pub hold_relative_residual: f64,
    pub hold_coefficient_linf: f64,
    pub hold_coefficient_limit: f64,
    /// `budget · e^{−T ‖g‖_∞}`
    pub gronwall_bar: f64,
    /// Error budget for the held state (`ε`, or `ε − ‖y^d − y_ε‖` when smoothed).
    pub budget: f64,
    pub switch_time: Option<f64>,
    /// `gronwall` or `measured`
    pub phase1_criterion: Option<String>,
    pub hold_dt: Option<f64>,
    /// `‖φ(T) − y^d‖` for the reaction-free reference run.
    pub reference_error: Option<f64>,
    /// `max_k ‖y_k − φ_k‖ / max(1, ‖φ_k‖)`
    pub max_stepwise_gap: Option<f64>,
    pub cancellation_max: Option<f64>,
}

/// Stepwise agreement required between the semilinear run and its reference.
pub const STEPWISE_TOLERANCE: f64 = 1e-9;

const FIRST_RADIUS: f64 = 0.2;
const MAX_HALVINGS: usize = 20;

fn principal_mode(problem: &SteeringProblem) -> Field {
    Field::from_fn(problem.grid, |x| {
        let s = (PI * x[0]).sin();
        if problem.grid.dim() == 2 {
            s * (PI * x[1]).sin()
        } else {
            s
        }
    })
}

/// `y_ε = φ_r * y^d + r ψ` with `ψ` the principal Dirichlet mode (peak 1).
fn smooth_target(
    problem: &SteeringProblem,
    options: &FixedTimeOptions,
) -> Result<(Field, SmoothingSummary)> {
    let yd = &problem.yd;
    if let Some(i) = yd
        .values()
        .iter()
        .position(|&v| v < -problem.zero_threshold)
    {
        return Err(Error::Hypothesis(format!(
            "smoothed hold needs a nonnegative target; y^d = {} at node {i}",
            yd.values()[i]
        )));
    }
    let psi = principal_mode(problem);
    let bar = 0.5 * problem.epsilon;
    let mut radii = Vec::new();
    let mut radius = options.smoothing_radius.unwrap_or(FIRST_RADIUS);
    loop {
        let params = MollifierParams::new(problem.grid.dim(), radius)?
            .with_negative_tolerance(problem.zero_threshold)?;
        let mut smoothed = convolve_bump(yd, &params)?;
        smoothed.axpy(radius, &psi)?;
        let gap = smoothed.distance(yd)?;
        radii.push((radius, gap));
        if gap < bar {
            return Ok((smoothed, SmoothingSummary { radius, gap, radii }));
        }
        if options.smoothing_radius.is_some() || radii.len() > MAX_HALVINGS {
            return Err(Error::Domain(format!(
                "smoothed target stays {gap} away from y^d (needs < {bar}) at r = {radius}"
            )));
        }
        radius *= 0.5;
    }
}

fn stepwise_gap(run: &Trajectory, reference: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (y, phi) in run.states().iter().zip(reference.states()) {
        worst = worst.max(y.distance(phi)? / phi.l2_norm().max(1.0));
    }
    Ok(worst)
}

/// Steering at a prescribed time `T`: reach the target early under the
/// reaction-free log-ratio control, hold it with `g = −Δ_h y^d / y^d`, and
/// cancel the reaction term along the reaction-free reference run.
pub fn steer_fixed_time(
    problem: &SteeringProblem,
    time: f64,
    options: &FixedTimeOptions,
) -> Result<SteeringReport> {
    problem.validate()?;
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::Domain(format!(
            "prescribed time must be positive, got {time}"
        )));
    }
    if !problem.support.is_full() {
        return Err(Error::Contract(
            "fixed-time steering requires the control region to be the whole domain".into(),
        ));
    }
    let growth = problem.nonlinearity.growth().ok_or_else(|| {
        Error::Contract(format!(
            "nonlinearity '{}' declares no linear-growth constant",
            problem.nonlinearity.name()
        ))
    })?;
    if !(options.hold_tolerance > 0.0 && options.hold_step_factor > 0.0) {
        return Err(Error::Domain(
            "hold tolerance and step factor must be positive".into(),
        ));
    }

    let (target, smoothing) = match options.case {
        HoldCase::Equilibrium => (problem.yd.clone(), None),
        HoldCase::Smoothed => {
            let (t, s) = smooth_target(problem, options)?;
            (t, Some(s))
        }
    };
    let budget = problem.epsilon - smoothing.as_ref().map_or(0.0, |s| s.gap);

    let hold = hold_control(&target, problem.zero_threshold)?;
    let lap_norm = problem.grid.laplacian(&target)?.l2_norm();
    let relative = if lap_norm > 0.0 {
        hold.full_residual / lap_norm
    } else {
        0.0
    };
    let h = problem.grid.spacing();
    let limit = options.max_hold_coefficient.unwrap_or(0.25 / (h * h));
    let g_norm = hold.g.linf_norm();
    let bar = budget * (-time * g_norm).exp();

    let mut summary = FixedTimeSummary {
        prescribed_time: time,
        case: options.case,
        growth_constant: growth,
        smoothing,
        hold_support_residual: hold.support_residual,
        hold_full_residual: hold.full_residual,
        hold_relative_residual: relative,
        hold_coefficient_linf: g_norm,
        hold_coefficient_limit: limit,
        gronwall_bar: bar,
        budget,
        switch_time: None,
        phase1_criterion: None,
        hold_dt: None,
        reference_error: None,
        max_stepwise_gap: None,
        cancellation_max: None,
    };
    let mut report = SteeringReport::new("fixed-time", problem.epsilon, budget);

    if relative > options.hold_tolerance || g_norm > limit {
        report.outcome = Outcome::HoldViolation;
        if relative > options.hold_tolerance {
            report.diagnostics.push(format!(
                "hold residual {relative:e} (relative) exceeds tolerance {:e}",
                options.hold_tolerance
            ));
        }
        if g_norm > limit {
            report.diagnostics.push(format!(
                "hold coefficient reaches {g_norm:e}, above the limit {limit:e}; the target is not a resolvable equilibrium"
            ));
        }
        report.fixed_time = Some(summary);
        return Ok(report);
    }

    let full = SupportMask::full(problem.grid);
    let admissibility = check_admissibility(
        &problem.y0,
        &target,
        &full,
        problem.zero_threshold,
        problem.exponent_bound,
    )?;
    let passed = admissibility.passed;
    report.admissibility = Some(admissibility);
    if !passed {
        report.outcome = Outcome::Inadmissible;
        report.fixed_time = Some(summary);
        return Ok(report);
    }
    let exponent = log_ratio(
        &problem.y0,
        &target,
        &full,
        problem.zero_threshold,
        problem.exponent_bound,
    )?;

    // phase 1: reaction-free steering to an early switch time
    let zero = NonlinearitySpec::zero();
    let steps = problem.steps_per_horizon as f64;
    let mut accepted = None;
    let mut t1 = time * problem.shrink;
    while t1 >= problem.min_horizon {
        let schedule = two_phase_control(&exponent.scaled(1.0 / t1), &hold.g, t1, time)?;
        let dt1 = t1 / steps;
        let dt2 = {
            let uniform = (time - t1) / steps;
            if g_norm > 0.0 {
                uniform.min(options.hold_step_factor / g_norm)
            } else {
                uniform
            }
        };
        let phi1 = simulate_segment(&problem.grid, &problem.y0, 0.0, &schedule, &zero, t1, dt1)?;
        let error = phi1.final_state().distance(&target)?;
        let phi2 = simulate_segment(
            &problem.grid,
            phi1.final_state(),
            t1,
            &schedule,
            &zero,
            time,
            dt2,
        )?;
        let hold_error = phi2.final_state().distance(&target)?;
        let criterion = if error < bar {
            Some("gronwall")
        } else if hold_error < budget {
            Some("measured")
        } else {
            None
        };
        report.attempts.push(Attempt {
            horizon: t1,
            dt: phi1.dt(),
            error,
            hold_error: Some(hold_error),
            accepted: criterion.is_some(),
        });
        if let Some(c) = criterion {
            summary.phase1_criterion = Some(c.into());
            accepted = Some((t1, dt1, dt2, schedule, phi1, phi2));
            break;
        }
        t1 *= problem.shrink;
    }
    let Some((t1, dt1, dt2, schedule, phi1, phi2)) = accepted else {
        report.outcome = Outcome::ExhaustedT;
        report.final_error = report.attempts.last().and_then(|a| a.hold_error);
        report.diagnostics.push(format!(
            "no switch time down to T_min = {} brought the reaction-free run within {budget}",
            problem.min_horizon
        ));
        report.fixed_time = Some(summary);
        return Ok(report);
    };
    summary.switch_time = Some(t1);
    summary.hold_dt = Some(phi2.dt());
    summary.reference_error = Some(phi2.final_state().distance(&problem.yd)?);

    // phase 2: cancel the reaction along the reference run
    let f = &problem.nonlinearity;
    let delta = problem.cancellation_threshold;
    let c1 = cancellation_control(&schedule, &phi1, f, delta)?;
    let c2 = cancellation_control(&schedule, &phi2, f, delta)?;
    summary.cancellation_max = Some(
        [&c1, &c2]
            .iter()
            .filter_map(|c| c.cancellation().map(|c| c.max_magnitude()))
            .fold(0.0, f64::max),
    );
    let y1 = simulate_segment(&problem.grid, &problem.y0, 0.0, &c1, f, t1, dt1)?;
    let y2 = simulate_segment(&problem.grid, y1.final_state(), t1, &c2, f, time, dt2)?;
    let gap = stepwise_gap(&y1, &phi1)?.max(stepwise_gap(&y2, &phi2)?);
    summary.max_stepwise_gap = Some(gap);

    let final_error = y2.final_state().distance(&problem.yd)?;
    report.final_error = Some(final_error);
    report.chosen_time = Some(time);
    report.control = Some(schedule.describe());
    report.samples = sample_trajectory(&[&y1, &y2], &problem.yd)?;
    report.outcome = if final_error < problem.epsilon && gap <= STEPWISE_TOLERANCE {
        Outcome::Success
    } else {
        Outcome::ExhaustedT
    };
    if gap > STEPWISE_TOLERANCE {
        report.diagnostics.push(format!(
            "semilinear run departs from the reference by {gap:e} (relative), above {STEPWISE_TOLERANCE:e}"
        ));
    }
    if final_error >= problem.epsilon {
        report.diagnostics.push(format!(
            "final error {final_error} is not below epsilon {}",
            problem.epsilon
        ));
    }
    report.fixed_time = Some(summary);
    report
        .artifacts
        .fields
        .push(("hold_coefficient".into(), hold.g));
    report.artifacts.fields.push(("held_state".into(), target));
    report
        .artifacts
        .trajectories
        .push(("phase1".into(), y1, Some(c1)));
    report
        .artifacts
        .trajectories
        .push(("phase2".into(), y2, Some(c2)));
    Ok(report)
}
