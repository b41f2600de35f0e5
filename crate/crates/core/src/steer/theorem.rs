use serde::{Deserialize, Serialize};

use crate::approx::{smooth_exponent, MollifierParams};
use crate::control::{log_ratio, static_control};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::pde::{simulate, ControlSchedule, Trajectory};

use super::{fit_log_log, sample_trajectory, Attempt, Outcome, SteeringProblem, SteeringReport};

pub(super) struct Found {
    pub horizon: f64,
    pub trajectory: Trajectory,
    pub schedule: ControlSchedule,
}

/// Geometric search over `T` under the static control `exponent / T`, stopping
/// at the first `T` with `‖y(T) − target‖ < bar`.
pub(super) fn time_search(
    problem: &SteeringProblem,
    exponent: &Field,
    target: &Field,
    bar: f64,
    report: &mut SteeringReport,
) -> Result<Option<Found>> {
    for horizon in problem.horizon_sequence() {
        let schedule = static_control(exponent, horizon)?;
        let dt = horizon / problem.steps_per_horizon as f64;
        let trajectory = simulate(
            &problem.grid,
            &problem.y0,
            &schedule,
            &problem.nonlinearity,
            horizon,
            dt,
        )?;
        let error = trajectory.final_state().distance(target)?;
        let accepted = error < bar;
        report.attempts.push(Attempt {
            horizon,
            dt: trajectory.dt(),
            error,
            hold_error: None,
            accepted,
        });
        if accepted {
            return Ok(Some(Found {
                horizon,
                trajectory,
                schedule,
            }));
        }
    }
    Ok(None)
}

fn fit_attempts(report: &mut SteeringReport) {
    let pts: Vec<(f64, f64)> = report
        .attempts
        .iter()
        .map(|a| (a.horizon, a.error))
        .collect();
    report.rate = fit_log_log(&pts);
}

/// Static log-ratio control `ln(y^d/y0) / T` with a geometric search over `T`.
pub fn steer_theorem1(problem: &SteeringProblem) -> Result<SteeringReport> {
    problem.validate()?;
    let mut report = SteeringReport::new("theorem1", problem.epsilon, problem.epsilon);
    let admissibility = problem.admissibility()?;
    let passed = admissibility.passed;
    report.admissibility = Some(admissibility);
    if !passed {
        report.outcome = Outcome::Inadmissible;
        return Ok(report);
    }
    let exponent = log_ratio(
        &problem.y0,
        &problem.yd,
        &problem.support,
        problem.zero_threshold,
        problem.exponent_bound,
    )?;
    if exponent.linf_norm() == 0.0 {
        report
            .diagnostics
            .push("exponent vanishes; using the null control".into());
    }
    let found = time_search(
        problem,
        &exponent,
        &problem.yd,
        problem.epsilon,
        &mut report,
    )?;
    fit_attempts(&mut report);
    finish(problem, found, &mut report, &problem.yd)?;
    report.artifacts.fields.push(("exponent".into(), exponent));
    Ok(report)
}

fn finish(
    problem: &SteeringProblem,
    found: Option<Found>,
    report: &mut SteeringReport,
    target: &Field,
) -> Result<()> {
    match found {
        Some(found) => {
            let error = found.trajectory.final_state().distance(&problem.yd)?;
            report.final_error = Some(error);
            report.chosen_time = Some(found.horizon);
            report.control = Some(found.schedule.describe());
            report.samples = sample_trajectory(&[&found.trajectory], target)?;
            if error < problem.epsilon {
                report.outcome = Outcome::Success;
            } else {
                report.outcome = Outcome::ExhaustedT;
                report.diagnostics.push(format!(
                    "search bar met at T = {} but final error {error} is not below epsilon",
                    found.horizon
                ));
            }
            report.artifacts.trajectories.push((
                "trajectory".into(),
                found.trajectory,
                Some(found.schedule),
            ));
        }
        None => {
            report.outcome = Outcome::ExhaustedT;
            report.final_error = report.attempts.last().map(|a| a.error);
            report.diagnostics.push(format!(
                "no attempted horizon down to T_min = {} met the bar {}",
                problem.min_horizon, report.search_bar
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifierSummary {
    pub radius: f64,
    /// `‖h_r − h‖`
    pub gap: f64,
    /// `‖(h_r − h) y0‖`, the quantity held below `ε/2`.
    pub weighted_gap: f64,
    /// `‖y0‖_∞ · ‖h_r − h‖`
    pub crude_gap: f64,
    /// `(r, ‖(h_r − h) y0‖)` for every radius tried.
    pub radii: Vec<(f64, f64)>,
}

const FIRST_RADIUS: f64 = 0.2;
const MAX_HALVINGS: usize = 20;

/// Mollified log-ratio: `a_r = ln(φ_r * h + r)` with `h = (y^d/y0) 1_{|y0| ≥ δ}`,
/// followed by the time search against `e^{a_r} y0` with bar `ε/2`.
pub fn steer_corollary1(problem: &SteeringProblem) -> Result<SteeringReport> {
    problem.validate()?;
    if !problem.support.is_full() {
        return Err(Error::Contract(
            "the mollified pipeline requires the control region to be the whole domain".into(),
        ));
    }
    let half = 0.5 * problem.epsilon;
    let mut report = SteeringReport::new("corollary1", problem.epsilon, half);
    let admissibility = problem.admissibility()?;
    let passed = admissibility.passed;
    report.admissibility = Some(admissibility);
    if !passed {
        report.outcome = Outcome::Inadmissible;
        return Ok(report);
    }
    let delta = problem.zero_threshold;
    let ratio = problem.y0.zip_with(
        &problem.yd,
        |u, w| if u.abs() >= delta { w / u } else { 0.0 },
    )?;

    let mut radii = Vec::new();
    let mut radius = FIRST_RADIUS;
    let (gap, weighted_gap, exponent) = loop {
        let params = MollifierParams::new(problem.grid.dim(), radius)?;
        let exponent = smooth_exponent(&ratio, &params)?;
        let diff = exponent.map(f64::exp).sub(&ratio)?;
        let weighted = diff.mul(&problem.y0)?.l2_norm();
        radii.push((radius, weighted));
        if weighted < half || radii.len() > MAX_HALVINGS {
            break (diff.l2_norm(), weighted, exponent);
        }
        radius *= 0.5;
    };
    report.mollifier = Some(MollifierSummary {
        radius,
        gap,
        weighted_gap,
        crude_gap: problem.y0.linf_norm() * gap,
        radii,
    });
    if weighted_gap >= half {
        report.outcome = Outcome::ExhaustedT;
        report.diagnostics.push(format!(
            "mollified ratio did not reach the tolerance {half} within {MAX_HALVINGS} halvings"
        ));
        return Ok(report);
    }

    let target = exponent.map(f64::exp).mul(&problem.y0)?;
    let found = time_search(problem, &exponent, &target, half, &mut report)?;
    fit_attempts(&mut report);
    finish(problem, found, &mut report, &problem.yd)?;
    report.artifacts.fields.push(("exponent".into(), exponent));
    Ok(report)
}
