//! Run configuration: a single TOML file, versioned by its `schema` key.

use std::fs;
use std::path::{Path, PathBuf};

use bilinear_core::{Field, SpatialGrid, SteeringProblem};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::presets;
use crate::spec::{MaskSpec, NonlinearityConfig, StateSpec};

pub const SCHEMA: &str = "bilinear-lab/v1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub problem: ProblemConfig,
    pub steer: Option<SteerConfig>,
    pub sweep: Option<SweepConfig>,
    pub bernstein: Option<BernsteinConfig>,
    pub mollify: Option<MollifyConfig>,
    pub hold: Option<HoldConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Problem description; keys given here override the preset's.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub d: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub y0: Option<StateSpec>,
    pub yd: Option<StateSpec>,
    pub mask: Option<MaskSpec>,
    pub nonlinearity: Option<NonlinearityConfig>,
    pub epsilon: Option<f64>,
    /// First horizon `T0` of the time search.
    pub horizon: Option<f64>,
    pub steps_per_horizon: Option<usize>,
    pub zero_threshold: Option<f64>,
    pub exponent_bound: Option<f64>,
    pub cancellation_threshold: Option<f64>,
    pub shrink: Option<f64>,
    pub min_horizon: Option<f64>,
}

impl ProblemConfig {
    fn or(self, base: ProblemConfig) -> ProblemConfig {
        ProblemConfig {
            d: self.d.or(base.d),
            n: self.n.or(base.n),
            y0: self.y0.or(base.y0),
            yd: self.yd.or(base.yd),
            mask: self.mask.or(base.mask),
            nonlinearity: self.nonlinearity.or(base.nonlinearity),
            epsilon: self.epsilon.or(base.epsilon),
            horizon: self.horizon.or(base.horizon),
            steps_per_horizon: self.steps_per_horizon.or(base.steps_per_horizon),
            zero_threshold: self.zero_threshold.or(base.zero_threshold),
            exponent_bound: self.exponent_bound.or(base.exponent_bound),
            cancellation_threshold: self.cancellation_threshold.or(base.cancellation_threshold),
            shrink: self.shrink.or(base.shrink),
            min_horizon: self.min_horizon.or(base.min_horizon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteerMode {
    #[default]
    Theorem1,
    Corollary1,
    FixedTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldCaseConfig {
    #[default]
    Equilibrium,
    Smoothed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerConfig {
    #[serde(default)]
    pub mode: SteerMode,
    /// Prescribed time, fixed-time mode only.
    pub time: Option<f64>,
    pub case: Option<HoldCaseConfig>,
    pub hold_tolerance: Option<f64>,
    pub max_hold_coefficient: Option<f64>,
    pub hold_step_factor: Option<f64>,
    pub smoothing_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub times: Vec<f64>,
    /// Optional resolvent prefilter study at `prefilter_time`.
    pub lambdas: Option<Vec<f64>>,
    pub prefilter_time: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinConfig {
    pub time: Option<f64>,
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MollifyOutput {
    /// `φ_r * h + r`
    #[default]
    Mollify,
    /// `φ_r * h`
    Convolve,
    /// `ln(φ_r * h + r)`
    Exponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifyConfig {
    /// Field to smooth; defaults to the target.
    pub field: Option<StateSpec>,
    pub radius: f64,
    #[serde(default)]
    pub output: MollifyOutput,
    pub cells_per_radius: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldConfig {
    pub time: Option<f64>,
    pub steps: Option<usize>,
    pub max_hold_coefficient: Option<f64>,
    pub step_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub emit_trajectory: Option<bool>,
}

/// Fully resolved problem: preset merged, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedProblem {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub y0: StateSpec,
    pub yd: StateSpec,
    pub mask: MaskSpec,
    pub nonlinearity: NonlinearityConfig,
    pub epsilon: f64,
    pub horizon: f64,
    pub steps_per_horizon: usize,
    pub zero_threshold: f64,
    pub exponent_bound: f64,
    pub cancellation_threshold: f64,
    pub shrink: f64,
    pub min_horizon: f64,
}

/// A loaded config together with the directory its relative paths resolve against.
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if config.schema != SCHEMA {
        return Err(CliError::Config(format!(
            "unknown schema '{}', expected '{SCHEMA}'",
            config.schema
        )));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl Loaded {
    /// Builds the steering problem and records every value it ended up with.
    pub fn problem(&self) -> Result<(SteeringProblem, ResolvedProblem), CliError> {
        let merged = match &self.config.preset {
            Some(name) => {
                let base = presets::lookup(name).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown preset '{name}', expected one of: {}",
                        presets::NAMES.join(", ")
                    ))
                })?;
                self.config.problem.clone().or(base)
            }
            None => self.config.problem.clone(),
        };
        let missing = |key: &str| CliError::Config(format!("problem.{key} is required"));
        let d = merged.d.ok_or_else(|| missing("d"))?;
        let n = merged.n.ok_or_else(|| missing("N"))?;
        let grid = SpatialGrid::new(d, n)?;
        let y0_spec = merged.y0.ok_or_else(|| missing("y0"))?;
        let yd_spec = merged.yd.ok_or_else(|| missing("yd"))?;
        let mask_spec = merged.mask.unwrap_or(MaskSpec::Full);
        let f_spec = merged.nonlinearity.ok_or_else(|| missing("nonlinearity"))?;
        let epsilon = merged.epsilon.ok_or_else(|| missing("epsilon"))?;

        let mut p = SteeringProblem::new(
            y0_spec.build(grid, &self.base)?,
            yd_spec.build(grid, &self.base)?,
            mask_spec.build(grid)?,
            f_spec.build()?,
            epsilon,
        )?;
        if let Some(v) = merged.horizon {
            p.horizon = v;
        }
        if let Some(v) = merged.steps_per_horizon {
            p.steps_per_horizon = v;
        }
        if let Some(v) = merged.zero_threshold {
            p.zero_threshold = v;
        }
        if let Some(v) = merged.exponent_bound {
            p.exponent_bound = v;
        }
        if let Some(v) = merged.cancellation_threshold {
            p.cancellation_threshold = v;
        }
        if let Some(v) = merged.shrink {
            p.shrink = v;
        }
        if let Some(v) = merged.min_horizon {
            p.min_horizon = v;
        }
        p.validate()?;
        let resolved = ResolvedProblem {
            d,
            n,
            y0: y0_spec,
            yd: yd_spec,
            mask: mask_spec,
            nonlinearity: f_spec,
            epsilon: p.epsilon,
            horizon: p.horizon,
            steps_per_horizon: p.steps_per_horizon,
            zero_threshold: p.zero_threshold,
            exponent_bound: p.exponent_bound,
            cancellation_threshold: p.cancellation_threshold,
            shrink: p.shrink,
            min_horizon: p.min_horizon,
        };
        Ok((p, resolved))
    }

    pub fn build_state(&self, spec: &StateSpec, grid: SpatialGrid) -> Result<Field, CliError> {
        spec.build(grid, &self.base)
    }

    /// SHA-256 over the resolved command input and the bytes of every CSV it reads.
    pub fn digest(&self, resolved: &ResolvedConfig) -> Result<String, CliError> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(resolved).map_err(bilinear_core::Error::from)?);
        let mut paths = Vec::new();
        resolved.problem.y0.csv_paths(&mut paths);
        resolved.problem.yd.csv_paths(&mut paths);
        if let Some(spec) = resolved.parameters.get("field") {
            if let Ok(spec) = serde_json::from_value::<StateSpec>(spec.clone()) {
                spec.csv_paths(&mut paths);
            }
        }
        for path in paths {
            let bytes = fs::read(self.base.join(&path))?;
            hasher.update(path.as_bytes());
            hasher.update(Sha256::digest(&bytes));
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

/// Everything that determines a command's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub schema: String,
    pub command: String,
    pub problem: ResolvedProblem,
    pub parameters: serde_json::Value,
}

pub fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}
