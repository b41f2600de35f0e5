use std::fs;
use std::path::PathBuf;

use bilinear_core::approx::{convolve_bump, mollify, smooth_exponent, MollifierParams};
use bilinear_core::control::{cancellation_control, hold_control};
use bilinear_core::io::{write_field_csv, write_json, write_schedule, write_trajectory};
use bilinear_core::pde::simulate;
use bilinear_core::steer::{
    bernstein_pipeline_demo, convergence_study, resolvent_prefilter, steer_corollary1,
    steer_fixed_time, steer_theorem1, ConvergenceTable, FixedTimeOptions, HoldCase,
    PrefilterReport,
};
use bilinear_core::{ControlSchedule, NonlinearitySpec, Outcome, SteeringReport};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{
    positive, HoldCaseConfig, Loaded, MollifyOutput, ResolvedConfig, ResolvedProblem, SteerMode,
    SCHEMA,
};
use crate::error::CliError;

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_REJECTED: u8 = 3;
pub const EXIT_EXHAUSTED: u8 = 4;

/// Common wrapper of every JSON report the CLI writes.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub command: String,
    pub config_digest: String,
    pub config: ResolvedConfig,
    pub result: T,
}

pub struct Context {
    pub loaded: Loaded,
    pub out: PathBuf,
    pub emit_trajectory: bool,
    pub quiet: bool,
}

impl Context {
    fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }

    fn emit<T: Serialize>(
        &self,
        command: &str,
        problem: ResolvedProblem,
        parameters: serde_json::Value,
        result: T,
    ) -> Result<Envelope<T>, CliError> {
        let config = ResolvedConfig {
            schema: SCHEMA.into(),
            command: command.into(),
            problem,
            parameters,
        };
        let envelope = Envelope {
            schema: SCHEMA.into(),
            command: command.into(),
            config_digest: self.loaded.digest(&config)?,
            config,
            result,
        };
        fs::create_dir_all(&self.out)?;
        write_json(self.out.join(format!("{command}.json")), &envelope)?;
        Ok(envelope)
    }
}

fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Success => EXIT_SUCCESS,
        Outcome::Inadmissible | Outcome::HoldViolation => EXIT_REJECTED,
        Outcome::ExhaustedT => EXIT_EXHAUSTED,
    }
}

pub fn check(ctx: &Context) -> Result<u8, CliError> {
    let (problem, resolved) = ctx.loaded.problem()?;
    let report = problem.admissibility()?;
    let passed = report.passed;
    let envelope = ctx.emit("check", resolved, json!({}), report)?;
    if !ctx.quiet {
        println!(
            "{}",
            serde_json::to_string_pretty(&envelope).map_err(bilinear_core::Error::from)?
        );
    }
    Ok(if passed { EXIT_SUCCESS } else { EXIT_REJECTED })
}

#[derive(Debug, Serialize)]
struct ResolvedSteer {
    mode: SteerMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_time: Option<ResolvedFixedTime>,
}

#[derive(Debug, Serialize)]
struct ResolvedFixedTime {
    time: f64,
    case: HoldCaseConfig,
    hold_tolerance: f64,
    max_hold_coefficient: Option<f64>,
    hold_step_factor: f64,
    smoothing_radius: Option<f64>,
}

pub fn steer(ctx: &Context) -> Result<u8, CliError> {
    let cfg = ctx.loaded.config.steer.clone().unwrap_or_default();
    let (problem, resolved) = ctx.loaded.problem()?;
    let mut parameters = ResolvedSteer {
        mode: cfg.mode,
        fixed_time: None,
    };
    let report: SteeringReport = match cfg.mode {
        SteerMode::Theorem1 => steer_theorem1(&problem)?,
        SteerMode::Corollary1 => steer_corollary1(&problem)?,
        SteerMode::FixedTime => {
            let time = cfg.time.ok_or_else(|| {
                CliError::Config("steer.time is required in fixed-time mode".into())
            })?;
            let time = positive("steer.time", time)?;
            let defaults = FixedTimeOptions::default();
            let case = cfg.case.unwrap_or_default();
            let options = FixedTimeOptions {
                case: match case {
                    HoldCaseConfig::Equilibrium => HoldCase::Equilibrium,
                    HoldCaseConfig::Smoothed => HoldCase::Smoothed,
                },
                hold_tolerance: cfg.hold_tolerance.unwrap_or(defaults.hold_tolerance),
                max_hold_coefficient: cfg.max_hold_coefficient,
                hold_step_factor: cfg.hold_step_factor.unwrap_or(defaults.hold_step_factor),
                smoothing_radius: cfg.smoothing_radius,
            };
            parameters.fixed_time = Some(ResolvedFixedTime {
                time,
                case,
                hold_tolerance: options.hold_tolerance,
                max_hold_coefficient: options.max_hold_coefficient,
                hold_step_factor: options.hold_step_factor,
                smoothing_radius: options.smoothing_radius,
            });
            steer_fixed_time(&problem, time, &options)?
        }
    };

    fs::create_dir_all(&ctx.out)?;
    for (name, field) in &report.artifacts.fields {
        write_field_csv(ctx.out.join(format!("{name}.csv")), field)?;
    }
    for (name, trajectory, schedule) in &report.artifacts.trajectories {
        if let Some(schedule) = schedule {
            write_schedule(&ctx.out, &format!("{name}_control"), schedule)?;
        }
        if ctx.emit_trajectory {
            write_trajectory(
                &ctx.out,
                name,
                trajectory,
                schedule.as_ref(),
                problem.nonlinearity.name(),
            )?;
        }
    }
    let code = outcome_code(report.outcome);
    let line = format!(
        "steer ({}): {:?}, T = {}, error = {}",
        report.pipeline,
        report.outcome,
        report.chosen_time.map_or("-".into(), |t| t.to_string()),
        report.final_error.map_or("-".into(), |e| e.to_string()),
    );
    let parameters = serde_json::to_value(&parameters).map_err(bilinear_core::Error::from)?;
    ctx.emit("steer", resolved, parameters, report)?;
    ctx.say(&line);
    Ok(code)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub convergence: ConvergenceTable,
    pub prefilter: Option<PrefilterReport>,
}

pub fn sweep(ctx: &Context) -> Result<u8, CliError> {
    let cfg = ctx
        .loaded
        .config
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("the sweep command needs a [sweep] section".into()))?;
    let (problem, resolved) = ctx.loaded.problem()?;
    let table = convergence_study(&problem, &cfg.times)?;
    let prefilter_time = match &cfg.lambdas {
        Some(_) => Some(positive(
            "sweep.prefilter_time",
            cfg.prefilter_time.unwrap_or(cfg.times[0]),
        )?),
        None => None,
    };
    let prefilter = match (&cfg.lambdas, prefilter_time) {
        (Some(lambdas), Some(t)) => Some(resolvent_prefilter(&problem, t, lambdas)?),
        _ => None,
    };
    fs::create_dir_all(&ctx.out)?;
    fs::write(ctx.out.join("convergence.csv"), table.to_csv())?;
    let line = format!(
        "sweep: {} horizons, fitted slope {}",
        table.rows.len(),
        table.slope
    );
    let parameters = json!({
        "times": cfg.times,
        "lambdas": cfg.lambdas,
        "prefilter_time": prefilter_time,
    });
    ctx.emit(
        "sweep",
        resolved,
        parameters,
        SweepResult {
            convergence: table,
            prefilter,
        },
    )?;
    ctx.say(&line);
    Ok(EXIT_SUCCESS)
}

pub fn bernstein(ctx: &Context) -> Result<u8, CliError> {
    let cfg = ctx.loaded.config.bernstein.clone().unwrap_or_default();
    let (problem, resolved) = ctx.loaded.problem()?;
    let time = positive("bernstein.time", cfg.time.unwrap_or(0.1))?;
    let report = bernstein_pipeline_demo(&problem, time, cfg.degree)?;
    let line = format!(
        "bernstein: degree {}, trajectory gap {}, bound {} ({})",
        report.degree,
        report.trajectory_gap,
        report.gronwall_bound,
        if report.bound_holds {
            "holds"
        } else {
            "violated"
        }
    );
    let parameters = json!({ "time": time, "degree": report.degree });
    ctx.emit("bernstein", resolved, parameters, report)?;
    ctx.say(&line);
    Ok(EXIT_SUCCESS)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MollifyResult {
    pub radius: f64,
    pub output: MollifyOutput,
    pub min: f64,
    pub max: f64,
    pub input_linf: f64,
    /// `‖h_r − h‖` (for `exponent`, `‖e^{a_r} − h‖`).
    pub gap: f64,
    /// `r ≤ h_r ≤ ‖h‖_∞ + r` at every node; always true for `convolve`.
    pub within_bounds: bool,
    pub data: String,
}

pub fn mollify_cmd(ctx: &Context) -> Result<u8, CliError> {
    let cfg =
        ctx.loaded.config.mollify.clone().ok_or_else(|| {
            CliError::Config("the mollify command needs a [mollify] section".into())
        })?;
    let (problem, resolved) = ctx.loaded.problem()?;
    let field_spec = cfg.field.clone().unwrap_or_else(|| resolved.yd.clone());
    let h = ctx.loaded.build_state(&field_spec, problem.grid)?;
    let radius = positive("mollify.radius", cfg.radius)?;
    let mut params = MollifierParams::new(problem.grid.dim(), radius)?;
    if let Some(cells) = cfg.cells_per_radius {
        params = params.with_cells_per_radius(cells)?;
    }
    let smoothed = match cfg.output {
        MollifyOutput::Mollify => mollify(&h, &params)?,
        MollifyOutput::Convolve => convolve_bump(&h, &params)?,
        MollifyOutput::Exponent => smooth_exponent(&h, &params)?,
    };
    let values = smoothed.values();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let input_linf = h.linf_norm();
    let gap = match cfg.output {
        MollifyOutput::Exponent => smoothed.map(f64::exp).distance(&h)?,
        _ => smoothed.distance(&h)?,
    };
    let within_bounds = match cfg.output {
        MollifyOutput::Mollify => min >= radius && max <= (input_linf + radius) * (1.0 + 1e-14),
        MollifyOutput::Exponent => min >= radius.ln() && max <= (input_linf + radius).ln() + 1e-14,
        MollifyOutput::Convolve => true,
    };
    fs::create_dir_all(&ctx.out)?;
    let data = "mollified.csv".to_string();
    write_field_csv(ctx.out.join(&data), &smoothed)?;
    let result = MollifyResult {
        radius,
        output: cfg.output,
        min,
        max,
        input_linf,
        gap,
        within_bounds,
        data,
    };
    let line = format!("mollify: r = {radius}, range [{min}, {max}], gap {gap}");
    let parameters = json!({
        "field": field_spec,
        "radius": radius,
        "output": cfg.output,
        "cells_per_radius": params.cells_per_radius(),
    });
    ctx.emit("mollify", resolved, parameters, result)?;
    ctx.say(&line);
    Ok(EXIT_SUCCESS)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HoldResult {
    pub time: f64,
    pub dt: Option<f64>,
    pub coefficient_linf: f64,
    pub coefficient_limit: f64,
    pub support_residual: f64,
    pub full_residual: f64,
    /// `max_t ‖y(t) − y^d‖ / ‖y^d‖`
    pub max_relative_drift: Option<f64>,
    pub final_relative_drift: Option<f64>,
    pub cancellation_max: Option<f64>,
    pub outcome: Outcome,
}

pub fn hold(ctx: &Context) -> Result<u8, CliError> {
    let cfg = ctx.loaded.config.hold.clone().unwrap_or_default();
    let (problem, resolved) = ctx.loaded.problem()?;
    let time = positive("hold.time", cfg.time.unwrap_or(0.5))?;
    let steps = cfg.steps.unwrap_or(problem.steps_per_horizon);
    if steps == 0 {
        return Err(CliError::Config("hold.steps must be at least 1".into()));
    }
    let factor = positive("hold.step_factor", cfg.step_factor.unwrap_or(0.1))?;
    let h = problem.grid.spacing();
    let limit = positive(
        "hold.max_hold_coefficient",
        cfg.max_hold_coefficient.unwrap_or(0.25 / (h * h)),
    )?;
    let target = &problem.yd;
    let hc = hold_control(target, problem.zero_threshold)?;
    let g_linf = hc.g.linf_norm();
    let mut result = HoldResult {
        time,
        dt: None,
        coefficient_linf: g_linf,
        coefficient_limit: limit,
        support_residual: hc.support_residual,
        full_residual: hc.full_residual,
        max_relative_drift: None,
        final_relative_drift: None,
        cancellation_max: None,
        outcome: Outcome::HoldViolation,
    };
    fs::create_dir_all(&ctx.out)?;
    write_field_csv(ctx.out.join("hold_coefficient.csv"), &hc.g)?;
    let parameters = json!({
        "time": time,
        "steps": steps,
        "step_factor": factor,
        "max_hold_coefficient": limit,
    });
    if g_linf > limit {
        ctx.emit("hold", resolved, parameters, result)?;
        ctx.say(&format!(
            "hold: coefficient bound {g_linf} exceeds limit {limit}"
        ));
        return Ok(EXIT_REJECTED);
    }

    let mut dt = time / steps as f64;
    if g_linf > 0.0 {
        dt = dt.min(factor / g_linf);
    }
    let grid = problem.grid;
    let q = ControlSchedule::constant(hc.g.clone(), time)?;
    let zero = NonlinearitySpec::zero();
    let (trajectory, schedule) = if problem.nonlinearity.is_zero() {
        (simulate(&grid, target, &q, &zero, time, dt)?, q)
    } else {
        let reference = simulate(&grid, target, &q, &zero, time, dt)?;
        let qc = cancellation_control(
            &q,
            &reference,
            &problem.nonlinearity,
            problem.cancellation_threshold,
        )?;
        result.cancellation_max = qc.cancellation().map(|c| c.max_magnitude());
        (
            simulate(&grid, target, &qc, &problem.nonlinearity, time, dt)?,
            qc,
        )
    };
    let scale = target.l2_norm();
    let drifts = trajectory
        .states()
        .iter()
        .map(|y| y.distance(target).map(|e| e / scale))
        .collect::<Result<Vec<_>, _>>()?;
    result.dt = Some(trajectory.dt());
    result.max_relative_drift = Some(drifts.iter().copied().fold(0.0, f64::max));
    result.final_relative_drift = drifts.last().copied();
    result.outcome = Outcome::Success;
    if ctx.emit_trajectory {
        write_trajectory(
            &ctx.out,
            "hold",
            &trajectory,
            Some(&schedule),
            problem.nonlinearity.name(),
        )?;
    }
    let line = format!(
        "hold: max relative drift {} over [0, {time}]",
        result.max_relative_drift.unwrap_or(f64::NAN)
    );
    ctx.emit("hold", resolved, parameters, result)?;
    ctx.say(&line);
    Ok(EXIT_SUCCESS)
}
