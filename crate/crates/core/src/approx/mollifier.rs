use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Quadrature points per axis used for the cached normalizers.
pub const DEFAULT_NORMALIZER_RESOLUTION: usize = 2000;

/// Default number of quadrature cells per bump radius.
pub const DEFAULT_CELLS_PER_RADIUS: usize = 20;

/// Unnormalized bump `e^{1/(|x|²−1)}` for `|x|² < 1`.
fn bump(norm_sq: f64) -> f64 {
    if norm_sq < 1.0 {
        (1.0 / (norm_sq - 1.0)).exp()
    } else {
        0.0
    }
}

/// `c = 1 / ∫_{|x|<1} e^{1/(|x|²−1)} dx` by the midpoint rule with
/// `resolution` cells per axis on `[−1, 1]^d`.
///
/// The integrand is smooth with all derivatives vanishing on the unit sphere,
/// so the rule converges faster than any power of the cell size.
pub fn bump_normalizer(dim: usize, resolution: usize) -> Result<f64> {
    if resolution < 1000 {
        return Err(Error::Domain(format!(
            "normalizer needs at least 1000 cells per axis, got {resolution}"
        )));
    }
    let q = 2.0 / resolution as f64;
    let coord = |j: usize| -1.0 + (j as f64 + 0.5) * q;
    let integral = match dim {
        1 => (0..resolution).map(|j| bump(coord(j).powi(2))).sum::<f64>() * q,
        2 => {
            (0..resolution)
                .into_par_iter()
                .map(|i| {
                    let x2 = coord(i).powi(2);
                    (0..resolution)
                        .map(|j| bump(x2 + coord(j).powi(2)))
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
                .iter()
                .sum::<f64>()
                * q
                * q
        }
        _ => {
            return Err(Error::Domain(format!(
                "dimension must be 1 or 2, got {dim}"
            )))
        }
    };
    Ok(1.0 / integral)
}

fn cached_normalizer(dim: usize) -> Result<f64> {
    static CACHE: [OnceLock<f64>; 2] = [OnceLock::new(), OnceLock::new()];
    if dim != 1 && dim != 2 {
        return Err(Error::Domain(format!(
            "dimension must be 1 or 2, got {dim}"
        )));
    }
    if let Some(c) = CACHE[dim - 1].get() {
        return Ok(*c);
    }
    let c = bump_normalizer(dim, DEFAULT_NORMALIZER_RESOLUTION)?;
    Ok(*CACHE[dim - 1].get_or_init(|| c))
}

/// Bump radius, quadrature density and normalization of `φ_r = r^{−d} c φ(x/r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierParams {
    radius: f64,
    cells_per_radius: usize,
    normalizer: f64,
    negative_tolerance: f64,
}

impl MollifierParams {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!(
                "mollifier radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            radius,
            cells_per_radius: DEFAULT_CELLS_PER_RADIUS,
            normalizer: cached_normalizer(dim)?,
            negative_tolerance: 0.0,
        })
    }

    /// Quadrature cells per radius; the convolution lattice spacing is
    /// `min(h, r / cells)`.
    pub fn with_cells_per_radius(mut self, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 cells per radius, got {cells}"
            )));
        }
        self.cells_per_radius = cells;
        Ok(self)
    }

    /// Negative input values down to `−tolerance` are treated as zero.
    pub fn with_negative_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be >= 0, got {tolerance}"
            )));
        }
        self.negative_tolerance = tolerance;
        Ok(self)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells_per_radius(&self) -> usize {
        self.cells_per_radius
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn negative_tolerance(&self) -> f64 {
        self.negative_tolerance
    }
}

/// Midpoint lattice over `B(0, r)` with the scaled bump as weights.
///
/// The weights are `c r^{−d} φ(s/r) q^d`, rescaled so their sum is exactly one;
/// this keeps `min h ≤ φ_r * h ≤ max h` at the level of rounding.
fn kernel(dim: usize, spacing: f64, params: &MollifierParams) -> Vec<([f64; 2], f64)> {
    let r = params.radius;
    let cells =
        ((2.0 * r / spacing.min(r / params.cells_per_radius as f64)).ceil() as usize).max(2);
    let q = 2.0 * r / cells as f64;
    let coord = |j: usize| -r + (j as f64 + 0.5) * q;
    let scale = params.normalizer * (q / r).powi(dim as i32);
    let mut taps = Vec::new();
    match dim {
        1 => {
            for j in 0..cells {
                let s = coord(j);
                let w = scale * bump((s / r).powi(2));
                if w > 0.0 {
                    taps.push(([s, 0.0], w));
                }
            }
        }
        _ => {
            for i in 0..cells {
                for j in 0..cells {
                    let s = [coord(i), coord(j)];
                    let w = scale * bump((s[0] * s[0] + s[1] * s[1]) / (r * r));
                    if w > 0.0 {
                        taps.push((s, w));
                    }
                }
            }
        }
    }
    let mass: f64 = taps.iter().map(|t| t.1).sum();
    for t in &mut taps {
        t.1 /= mass;
    }
    taps
}

fn nonnegative_values(h: &Field, tolerance: f64) -> Result<Vec<f64>> {
    h.values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 {
                Ok(v)
            } else if v >= -tolerance {
                Ok(0.0)
            } else {
                Err(Error::Hypothesis(format!(
                    "mollifier input is negative ({v}) at node {i}"
                )))
            }
        })
        .collect()
}

/// `k_r = φ_r * h` at the grid nodes, `h` extended by zero outside the domain.
pub fn convolve_bump(h: &Field, params: &MollifierParams) -> Result<Field> {
    let grid = *h.grid();
    let values = nonnegative_values(h, params.negative_tolerance)?;
    let taps = kernel(grid.dim(), grid.spacing(), params);
    let out = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.coords(i);
            taps.iter()
                .map(|(s, w)| w * grid.interpolate(&values, [x[0] - s[0], x[1] - s[1]]))
                .sum()
        })
        .collect();
    Ok(Field::from_raw(grid, out))
}

/// `h_r = φ_r * h + r`; satisfies `r ≤ h_r ≤ ‖h‖_∞ + r`.
pub fn mollify(h: &Field, params: &MollifierParams) -> Result<Field> {
    let r = params.radius;
    Ok(convolve_bump(h, params)?.map(|v| v + r))
}

/// `a_r = ln(h_r)`, finite because `h_r ≥ r`.
pub fn smooth_exponent(h: &Field, params: &MollifierParams) -> Result<Field> {
    Ok(mollify(h, params)?.map(f64::ln))
}
