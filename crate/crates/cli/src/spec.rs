//! Declarative descriptions of states, masks and reaction terms.

use std::f64::consts::PI;
use std::path::Path;

use bilinear_core::io::read_field_csv;
use bilinear_core::{Field, NonlinearitySpec, SpatialGrid, SupportMask};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A field on the configured grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// `sin(kπx)` in 1D, `sin(kπx₁) sin(kπx₂)` in 2D.
    Eigenfunction {
        k: u32,
    },
    /// `sin(k₁πx₁) sin(k₂πx₂)`, 2D only.
    ProductEigenfunction {
        k1: u32,
        k2: u32,
    },
    /// `x₁ − x₂`, 2D only.
    LinearDifference,
    /// Tent of the given height centred at `center` along every axis.
    Hat {
        #[serde(default = "half")]
        center: f64,
        #[serde(default = "quarter")]
        half_width: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `value · 1_{lower < x₁ < upper}`.
    Step {
        lower: f64,
        upper: f64,
        #[serde(default = "one")]
        value: f64,
    },
    Scaled {
        factor: f64,
        inner: Box<StateSpec>,
    },
    PointwiseProduct {
        inner: Box<StateSpec>,
        multiplier: Multiplier,
    },
    /// One value per line in node order; relative paths resolve against the config file.
    CsvFile {
        path: String,
    },
    /// `inner · 1_mask`.
    Masked {
        inner: Box<StateSpec>,
        mask: MaskSpec,
    },
}

fn half() -> f64 {
    0.5
}

fn quarter() -> f64 {
    0.25
}

fn one() -> f64 {
    1.0
}

/// Closed set of multiplier expressions `k(x)` for `y^d = k(x) y0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Multiplier {
    Constant {
        value: f64,
    },
    /// `c0 + c1 x₁ + c2 x₂`
    Affine {
        c0: f64,
        #[serde(default)]
        c1: f64,
        #[serde(default)]
        c2: f64,
    },
    /// `c0 + c12 x₁ x₂`
    Bilinear {
        c0: f64,
        c12: f64,
    },
    /// `exp(amplitude · sin(2πk x₁))`
    ExpSine {
        amplitude: f64,
        k: u32,
    },
    /// `left` for `x₁ < split`, `right` otherwise.
    Piecewise {
        split: f64,
        left: f64,
        right: f64,
    },
}

impl Multiplier {
    fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            Multiplier::Constant { value } => value,
            Multiplier::Affine { c0, c1, c2 } => c0 + c1 * x[0] + c2 * x[1],
            Multiplier::Bilinear { c0, c12 } => c0 + c12 * x[0] * x[1],
            Multiplier::ExpSine { amplitude, k } => {
                (amplitude * (2.0 * PI * k as f64 * x[0]).sin()).exp()
            }
            Multiplier::Piecewise { split, left, right } => {
                if x[0] < split {
                    left
                } else {
                    right
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MaskSpec {
    Full,
    /// Open box `∏ (lower_i, upper_i)`, one bound per dimension.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl MaskSpec {
    pub fn build(&self, grid: SpatialGrid) -> Result<SupportMask, CliError> {
        match self {
            MaskSpec::Full => Ok(SupportMask::full(grid)),
            MaskSpec::Box { lower, upper } => {
                let d = grid.dim();
                if lower.len() != d || upper.len() != d {
                    return Err(CliError::Config(format!(
                        "box mask needs {d} lower and upper bounds"
                    )));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(CliError::Config(
                        "box mask needs lower < upper on every axis".into(),
                    ));
                }
                let mask = SupportMask::from_fn(grid, |x| {
                    (0..d).all(|i| x[i] > lower[i] && x[i] < upper[i])
                });
                if mask.is_empty() {
                    return Err(CliError::Config("box mask contains no grid node".into()));
                }
                Ok(mask)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Zero,
    /// `c · y`
    Linear {
        c: f64,
    },
    /// `amplitude · sin y`
    Sine {
        amplitude: f64,
    },
    /// `slope · y + offset`
    Affine {
        slope: f64,
        offset: f64,
    },
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<NonlinearitySpec, CliError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Config(format!(
                    "nonlinearity parameter '{name}' must be finite"
                )))
            }
        };
        Ok(match *self {
            NonlinearityConfig::Zero => NonlinearitySpec::zero(),
            NonlinearityConfig::Linear { c } => NonlinearitySpec::linear(finite("c", c)?),
            NonlinearityConfig::Sine { amplitude } => {
                NonlinearitySpec::sine(finite("amplitude", amplitude)?)
            }
            NonlinearityConfig::Affine { slope, offset } => {
                NonlinearitySpec::affine(finite("slope", slope)?, finite("offset", offset)?)
            }
        })
    }
}

impl StateSpec {
    pub fn build(&self, grid: SpatialGrid, base: &Path) -> Result<Field, CliError> {
        let d = grid.dim();
        let field = match self {
            StateSpec::Eigenfunction { k } => {
                let k = positive_mode(*k)?;
                Field::from_fn(grid, |x| (0..d).map(|i| (k * PI * x[i]).sin()).product())
            }
            StateSpec::ProductEigenfunction { k1, k2 } => {
                need_2d(d, "product-eigenfunction")?;
                let (k1, k2) = (positive_mode(*k1)?, positive_mode(*k2)?);
                Field::from_fn(grid, |x| (k1 * PI * x[0]).sin() * (k2 * PI * x[1]).sin())
            }
            StateSpec::LinearDifference => {
                need_2d(d, "linear-difference")?;
                Field::from_fn(grid, |x| x[0] - x[1])
            }
            StateSpec::Hat {
                center,
                half_width,
                height,
            } => {
                if !(*half_width > 0.0) {
                    return Err(CliError::Config("hat half_width must be positive".into()));
                }
                Field::from_fn(grid, |x| {
                    height
                        * (0..d)
                            .map(|i| (1.0 - (x[i] - center).abs() / half_width).max(0.0))
                            .product::<f64>()
                })
            }
            StateSpec::Step {
                lower,
                upper,
                value,
            } => {
                if !(lower < upper) {
                    return Err(CliError::Config("step needs lower < upper".into()));
                }
                Field::from_fn(grid, |x| {
                    if x[0] > *lower && x[0] < *upper {
                        *value
                    } else {
                        0.0
                    }
                })
            }
            StateSpec::Scaled { factor, inner } => inner.build(grid, base)?.scaled(*factor),
            StateSpec::PointwiseProduct { inner, multiplier } => inner
                .build(grid, base)?
                .mul(&Field::from_fn(grid, |x| multiplier.eval(x)))?,
            StateSpec::CsvFile { path } => read_field_csv(base.join(path), grid)?,
            StateSpec::Masked { inner, mask } => {
                mask.build(grid)?.restrict(&inner.build(grid, base)?)?
            }
        };
        if let Some(i) = field.first_non_finite() {
            return Err(CliError::Config(format!(
                "state evaluates to a non-finite value at node {i}"
            )));
        }
        Ok(field)
    }

    /// Paths of every CSV file the spec reads, in evaluation order.
    pub fn csv_paths(&self, out: &mut Vec<String>) {
        match self {
            StateSpec::CsvFile { path } => out.push(path.clone()),
            StateSpec::Scaled { inner, .. }
            | StateSpec::PointwiseProduct { inner, .. }
            | StateSpec::Masked { inner, .. } => inner.csv_paths(out),
            _ => {}
        }
    }
}

fn positive_mode(k: u32) -> Result<f64, CliError> {
    if k == 0 {
        Err(CliError::Config(
            "eigenfunction index must be at least 1".into(),
        ))
    } else {
        Ok(k as f64)
    }
}

fn need_2d(d: usize, kind: &str) -> Result<(), CliError> {
    if d == 2 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "state '{kind}' is only defined for d = 2"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_evaluate_on_grid() {
        let g = SpatialGrid::new(2, 9).unwrap();
        let base = Path::new(".");
        let diff = StateSpec::LinearDifference.build(g, base).unwrap();
        assert_eq!(diff.values()[g.len() - 1], 0.0);
        let masked = StateSpec::Masked {
            inner: Box::new(StateSpec::LinearDifference),
            mask: MaskSpec::Box {
                lower: vec![0.25, 0.25],
                upper: vec![0.75, 0.75],
            },
        }
        .build(g, base)
        .unwrap();
        assert_eq!(masked.values()[0], 0.0);
        let g1 = SpatialGrid::new(1, 9).unwrap();
        assert!(StateSpec::LinearDifference.build(g1, base).is_err());
        assert!(StateSpec::Eigenfunction { k: 0 }.build(g1, base).is_err());
        let hat = StateSpec::Hat {
            center: 0.5,
            half_width: 0.25,
            height: 2.0,
        }
        .build(g1, base)
        .unwrap();
        assert_eq!(hat.values()[4], 2.0);
    }

    #[test]
    fn multipliers() {
        assert_eq!(
            Multiplier::Bilinear { c0: 1.0, c12: 0.5 }.eval([0.5, 0.5]),
            1.125
        );
        assert_eq!(
            Multiplier::Piecewise {
                split: 0.5,
                left: 2.0,
                right: 1.0
            }
            .eval([0.2, 0.0]),
            2.0
        );
    }
}
