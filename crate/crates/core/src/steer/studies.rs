use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::BernsteinOperator;
use crate::control::{log_ratio, static_control};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::pde::{
    applied_forcing, resolvent_smooth, simulate, steering_identity_residual, NonlinearitySpec,
};

use super::{fit_log_log, SteeringProblem};

fn exponent_of(problem: &SteeringProblem) -> Result<Field> {
    log_ratio(
        &problem.y0,
        &problem.yd,
        &problem.support,
        problem.zero_threshold,
        problem.exponent_bound,
    )
}

/// `ceil(4/T² · ln(1/ε))`, clamped to `[1, 10⁴]`.
pub fn default_bernstein_degree(time: f64, epsilon: f64) -> usize {
    let n = (4.0 / (time * time) * (1.0 / epsilon).ln()).ceil();
    if n.is_finite() {
        n.clamp(1.0, 1e4) as usize
    } else {
        10_000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub time: f64,
    pub degree: usize,
    pub dt: f64,
    pub exponent_linf: f64,
    /// `max_k ‖y_k − y_{n,k}‖`
    pub trajectory_gap: f64,
    /// `max_k ‖F_n(t_k + dt/2) − F(t_k + dt/2)‖`, `F` the reaction the solver applied.
    pub forcing_gap: f64,
    /// `e^{‖a‖_∞} · T · forcing_gap`
    pub gronwall_bound: f64,
    pub bound_holds: bool,
    /// Residual of the exponential variation-of-constants identity for `y_n`.
    pub identity_residual: f64,
    pub final_error: f64,
    pub auxiliary_final_error: f64,
}

/// Replaces the reaction along the controlled run by the Bernstein polynomial
/// of its samples at `kT/n` and compares the two trajectories.
pub fn bernstein_pipeline_demo(
    problem: &SteeringProblem,
    time: f64,
    degree: Option<usize>,
) -> Result<BernsteinReport> {
    problem.validate()?;
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {time}")));
    }
    let n = degree.unwrap_or_else(|| default_bernstein_degree(time, problem.epsilon));
    if n == 0 {
        return Err(Error::Domain("Bernstein degree must be at least 1".into()));
    }
    let exponent = exponent_of(problem)?;
    let control = static_control(&exponent, time)?;
    let dt = time / problem.steps_per_horizon as f64;
    let reference = simulate(
        &problem.grid,
        &problem.y0,
        &control,
        &problem.nonlinearity,
        time,
        dt,
    )?;
    let applied = applied_forcing(&reference, &control, &problem.nonlinearity)?;

    // F between the applied midpoints is linear, constant beyond the first and last
    let forcing_at = |t: f64| -> Field {
        let first = &applied[0];
        let last = &applied[applied.len() - 1];
        if t <= first.0 {
            return first.1.clone();
        }
        if t >= last.0 {
            return last.1.clone();
        }
        let k = applied.partition_point(|(s, _)| *s <= t) - 1;
        let (t0, f0) = &applied[k];
        let (t1, f1) = &applied[k + 1];
        let w = (t - t0) / (t1 - t0);
        f0.zip_with(f1, |a, b| (1.0 - w) * a + w * b)
            .expect("same grid")
    };
    let op = Arc::new(BernsteinOperator::from_fn(n, |s| forcing_at(s * time))?);
    let op_eval = Arc::clone(&op);
    let auxiliary = NonlinearitySpec::field_map(format!("bernstein({n})"), 0.0, move |t, _| {
        op_eval
            .eval((t / time).clamp(0.0, 1.0))
            .expect("argument clamped to [0, 1]")
    });
    let approx = simulate(&problem.grid, &problem.y0, &control, &auxiliary, time, dt)?;

    let mut trajectory_gap: f64 = 0.0;
    for (y, yn) in reference.states().iter().zip(approx.states()) {
        trajectory_gap = trajectory_gap.max(y.distance(yn)?);
    }
    let mut forcing_gap: f64 = 0.0;
    for (t, g) in &applied {
        let fnt = op.eval((t / time).clamp(0.0, 1.0))?;
        forcing_gap = forcing_gap.max(fnt.distance(g)?);
    }
    let exponent_linf = exponent.linf_norm();
    let gronwall_bound = exponent_linf.exp() * time * forcing_gap;
    let free = exponent.map(f64::exp).mul(&problem.y0)?;
    let identity_residual = steering_identity_residual(&approx, &exponent, &auxiliary, &free)?;
    Ok(BernsteinReport {
        time,
        degree: n,
        dt: reference.dt(),
        exponent_linf,
        trajectory_gap,
        forcing_gap,
        gronwall_bound,
        bound_holds: trajectory_gap <= gronwall_bound + 1e-6,
        identity_residual,
        final_error: reference.final_state().distance(&problem.yd)?,
        auxiliary_final_error: approx.final_state().distance(&problem.yd)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "T")]
    pub time: f64,
    pub dt: f64,
    pub error: f64,
    /// Slope of `ln e` against `ln T` between this row and the previous one.
    pub slope_running: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
    /// `ln M₄` of the fit `e ≈ M₄ T^slope`.
    pub intercept: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,dt,error,slope_running\n");
        for r in &self.rows {
            let running = r
                .slope_running
                .map(crate::io::format_float)
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{running}\n",
                crate::io::format_float(r.time),
                crate::io::format_float(r.dt),
                crate::io::format_float(r.error)
            ));
        }
        out
    }
}

/// Final steering error under `a/T` for each `T`, with a log-log fit.
pub fn convergence_study(problem: &SteeringProblem, times: &[f64]) -> Result<ConvergenceTable> {
    problem.validate()?;
    if times.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 horizons, got {}",
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain("horizons must be strictly decreasing".into()));
    }
    if let Some(t) = times
        .iter()
        .find(|&&t| !(t >= problem.min_horizon && t.is_finite()))
    {
        return Err(Error::Domain(format!(
            "horizon {t} is below T_min = {}",
            problem.min_horizon
        )));
    }
    let exponent = exponent_of(problem)?;
    let results: Vec<(f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let control = static_control(&exponent, t)?;
            let dt = t / problem.steps_per_horizon as f64;
            let tr = simulate(
                &problem.grid,
                &problem.y0,
                &control,
                &problem.nonlinearity,
                t,
                dt,
            )?;
            Ok((t, tr.dt(), tr.final_state().distance(&problem.yd)?))
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(results.len());
    for (i, &(time, dt, error)) in results.iter().enumerate() {
        let slope_running = (i > 0).then(|| {
            let (tp, _, ep) = results[i - 1];
            (ep / error).ln() / (tp / time).ln()
        });
        rows.push(ConvergenceRow {
            time,
            dt,
            error,
            slope_running,
        });
    }
    let fit = fit_log_log(&results.iter().map(|r| (r.0, r.2)).collect::<Vec<_>>())
        .ok_or_else(|| Error::InsufficientData("errors must be positive to fit a rate".into()))?;
    Ok(ConvergenceTable {
        rows,
        slope: fit.slope,
        intercept: fit.intercept,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefilterRow {
    pub lambda: f64,
    /// `‖λR(λ)y0 − y0‖`
    pub initial_gap: f64,
    /// `‖ỹ_λ(T) − y(T)‖` under the same control
    pub trajectory_gap: f64,
    /// `e^{‖a‖_∞ + L T}`
    pub stability_constant: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefilterReport {
    pub time: f64,
    pub rows: Vec<PrefilterRow>,
}

/// Propagates resolvent-smoothed initial states under the static steering
/// control and compares with the unsmoothed run.
pub fn resolvent_prefilter(
    problem: &SteeringProblem,
    time: f64,
    lambdas: &[f64],
) -> Result<PrefilterReport> {
    problem.validate()?;
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {time}")));
    }
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Domain(format!(
            "resolvent parameters must be positive, got {l}"
        )));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "resolvent parameters must be strictly increasing".into(),
        ));
    }
    let exponent = exponent_of(problem)?;
    let control = static_control(&exponent, time)?;
    let dt = time / problem.steps_per_horizon as f64;
    let f = &problem.nonlinearity;
    let base = simulate(&problem.grid, &problem.y0, &control, f, time, dt)?;
    let constant = (exponent.linf_norm() + f.lipschitz() * time).exp();
    let rows = lambdas
        .par_iter()
        .map(|&lambda| {
            let smoothed = resolvent_smooth(&problem.y0, lambda)?;
            let initial_gap = smoothed.distance(&problem.y0)?;
            let tr = simulate(&problem.grid, &smoothed, &control, f, time, dt)?;
            let trajectory_gap = tr.final_state().distance(base.final_state())?;
            Ok(PrefilterRow {
                lambda,
                initial_gap,
                trajectory_gap,
                stability_constant: constant,
                bound_holds: trajectory_gap <= constant * initial_gap * (1.0 + 1e-12),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PrefilterReport { time, rows })
}
