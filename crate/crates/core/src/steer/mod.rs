//! End-to-end steering pipelines and the numerical studies built on them.

mod fixed_time;
mod studies;
mod theorem;

use serde::{Deserialize, Serialize};

use crate::control::{default_zero_threshold, AdmissibilityReport, DEFAULT_EXPONENT_BOUND};
use crate::error::{Error, Result};
use crate::grid::{Field, SpatialGrid, SupportMask};
use crate::pde::{ControlSchedule, NonlinearitySpec, ScheduleDescription, Trajectory};

pub use fixed_time::{
    steer_fixed_time, FixedTimeOptions, FixedTimeSummary, HoldCase, SmoothingSummary,
};
pub use studies::{
    bernstein_pipeline_demo, convergence_study, default_bernstein_degree, resolvent_prefilter,
    BernsteinReport, ConvergenceRow, ConvergenceTable, PrefilterReport, PrefilterRow,
};
pub use theorem::{steer_corollary1, steer_theorem1, MollifierSummary};

/// Steering task: drive `y0` to within `epsilon` of `yd`.
#[derive(Debug, Clone)]
pub struct SteeringProblem {
    pub grid: SpatialGrid,
    pub y0: Field,
    pub yd: Field,
    pub support: SupportMask,
    pub nonlinearity: NonlinearitySpec,
    pub epsilon: f64,
    /// Initial time horizon `T0`; the search tries `T0·ρ, T0·ρ², …`.
    pub horizon: f64,
    /// Solver steps per attempted horizon.
    pub steps_per_horizon: usize,
    pub zero_threshold: f64,
    pub exponent_bound: f64,
    pub cancellation_threshold: f64,
    pub shrink: f64,
    pub min_horizon: f64,
}

pub const DEFAULT_STEPS_PER_HORIZON: usize = 500;
pub const DEFAULT_SHRINK: f64 = 0.5;
pub const DEFAULT_MIN_HORIZON: f64 = 1e-6;

impl SteeringProblem {
    /// Problem with default search settings: `T0 = 1`, 500 steps per horizon,
    /// `ρ = 0.5`, `T_min = 1e-6`, zero thresholds `1e-8·‖y0‖_∞`, `a_max = 50`.
    pub fn new(
        y0: Field,
        yd: Field,
        support: SupportMask,
        nonlinearity: NonlinearitySpec,
        epsilon: f64,
    ) -> Result<Self> {
        let grid = *y0.grid();
        let threshold = default_zero_threshold(&y0);
        let problem = Self {
            grid,
            y0,
            yd,
            support,
            nonlinearity,
            epsilon,
            horizon: 1.0,
            steps_per_horizon: DEFAULT_STEPS_PER_HORIZON,
            zero_threshold: threshold,
            exponent_bound: DEFAULT_EXPONENT_BOUND,
            cancellation_threshold: threshold,
            shrink: DEFAULT_SHRINK,
            min_horizon: DEFAULT_MIN_HORIZON,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.ensure_same(self.y0.grid())?;
        self.grid.ensure_same(self.yd.grid())?;
        self.grid.ensure_same(self.support.grid())?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("horizon", self.horizon)?;
        positive("zero threshold", self.zero_threshold)?;
        positive("exponent bound", self.exponent_bound)?;
        positive("minimum horizon", self.min_horizon)?;
        if !(self.cancellation_threshold >= 0.0) {
            return Err(Error::Domain(format!(
                "cancellation threshold must be >= 0, got {}",
                self.cancellation_threshold
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Domain(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if self.steps_per_horizon < 100 {
            return Err(Error::Domain(format!(
                "need at least 100 steps per horizon, got {}",
                self.steps_per_horizon
            )));
        }
        Ok(())
    }

    /// Attempted horizons `T0·ρ^k`, `k ≥ 1`, down to the floor.
    pub fn horizon_sequence(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = self.horizon * self.shrink;
        while t >= self.min_horizon {
            out.push(t);
            t *= self.shrink;
        }
        out
    }

    pub fn admissibility(&self) -> Result<AdmissibilityReport> {
        crate::control::check_admissibility(
            &self.y0,
            &self.yd,
            &self.support,
            self.zero_threshold,
            self.exponent_bound,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    ExhaustedT,
    Inadmissible,
    HoldViolation,
}

/// One attempted horizon of a time search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub horizon: f64,
    pub dt: f64,
    /// Error the search compares against its bar.
    pub error: f64,
    /// Error after the hold phase, when one was simulated.
    pub hold_error: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub norm: f64,
    pub distance_to_target: f64,
}

/// Trajectories, schedules and fields produced by a run, for optional export.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub trajectories: Vec<(String, Trajectory, Option<ControlSchedule>)>,
    pub fields: Vec<(String, Field)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteeringReport {
    pub pipeline: String,
    pub outcome: Outcome,
    pub epsilon: f64,
    /// Bar the time search had to beat.
    pub search_bar: f64,
    pub chosen_time: Option<f64>,
    /// `‖y(T) − y^d‖` for the returned control.
    pub final_error: Option<f64>,
    pub attempts: Vec<Attempt>,
    pub control: Option<ScheduleDescription>,
    pub admissibility: Option<AdmissibilityReport>,
    /// Least-squares fit of `ln error` against `ln T` over the attempts.
    pub rate: Option<RateFit>,
    pub samples: Vec<TrajectorySample>,
    pub mollifier: Option<MollifierSummary>,
    pub fixed_time: Option<FixedTimeSummary>,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl SteeringReport {
    fn new(pipeline: &str, epsilon: f64, search_bar: f64) -> Self {
        Self {
            pipeline: pipeline.into(),
            outcome: Outcome::ExhaustedT,
            epsilon,
            search_bar,
            chosen_time: None,
            final_error: None,
            attempts: Vec::new(),
            control: None,
            admissibility: None,
            rate: None,
            samples: Vec::new(),
            mollifier: None,
            fixed_time: None,
            diagnostics: Vec::new(),
            artifacts: Artifacts::default(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

/// Least-squares line through `(ln x, ln y)`; needs two distinct positive points.
pub fn fit_log_log(points: &[(f64, f64)]) -> Option<RateFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(RateFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Up to eleven evenly spaced samples over the concatenated segments.
fn sample_trajectory(segments: &[&Trajectory], target: &Field) -> Result<Vec<TrajectorySample>> {
    let mut points: Vec<(f64, &Field)> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let skip = usize::from(i > 0);
        points.extend(seg.times().iter().copied().zip(seg.states()).skip(skip));
    }
    let last = points.len() - 1;
    let mut idx: Vec<usize> = (0..=10).map(|j| (j * last + 5) / 10).collect();
    idx.dedup();
    idx.into_iter()
        .map(|i| {
            let (t, y) = points[i];
            Ok(TrajectorySample {
                t,
                norm: y.l2_norm(),
                distance_to_target: y.distance(target)?,
            })
        })
        .collect()
}
