//! Uniform Cartesian discretization of the unit interval / unit square with
//! homogeneous Dirichlet closure.
//!
//! Only interior nodes are stored. Node `i` on an axis sits at `(i + 1) h`
//! with `h = 1 / (N + 1)`; boundary values are identically zero and never
//! materialized. In 2D the nodes are ordered lexicographically with the first
//! coordinate varying slowest: `index = i1 * N + i2`. The same order is used
//! by every file format in [`crate::io`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior grid of `(0,1)^d`, `d` in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    dim: usize,
    n: usize,
}

impl SpatialGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 interior nodes per axis, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Total number of interior nodes, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of a single node, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis integer indices of a node.
    pub fn multi_index(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index / self.n, index % self.n],
        }
    }

    /// Coordinates of a node; the second entry is zero in 1D.
    pub fn coords(&self, index: usize) -> [f64; 2] {
        let h = self.spacing();
        let [i, j] = self.multi_index(index);
        match self.dim {
            1 => [(i + 1) as f64 * h, 0.0],
            _ => [(i + 1) as f64 * h, (j + 1) as f64 * h],
        }
    }

    pub fn ensure_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_dim: self.dim,
                expected_n: self.n,
                found_dim: other.dim,
                found_n: other.n,
            })
        }
    }

    /// Second-order Laplacian (3-point in 1D, 5-point in 2D), zero Dirichlet closure.
    pub fn laplacian(&self, u: &Field) -> Result<Field> {
        self.ensure_same(u.grid())?;
        Ok(Field::from_raw(*self, laplacian_values(self, u.values())))
    }

    /// Centered differences along each axis, zero Dirichlet closure.
    pub fn gradient(&self, u: &Field) -> Result<Vec<Field>> {
        self.ensure_same(u.grid())?;
        let n = self.n;
        let inv2h = 0.5 / self.spacing();
        let v = u.values();
        let out = match self.dim {
            1 => {
                let g = (0..n)
                    .map(|i| {
                        let left = if i > 0 { v[i - 1] } else { 0.0 };
                        let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                        (right - left) * inv2h
                    })
                    .collect();
                vec![Field::from_raw(*self, g)]
            }
            _ => {
                let mut g1 = vec![0.0; v.len()];
                let mut g2 = vec![0.0; v.len()];
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        let west = if i > 0 { v[k - n] } else { 0.0 };
                        let east = if i + 1 < n { v[k + n] } else { 0.0 };
                        let south = if j > 0 { v[k - 1] } else { 0.0 };
                        let north = if j + 1 < n { v[k + 1] } else { 0.0 };
                        g1[k] = (east - west) * inv2h;
                        g2[k] = (north - south) * inv2h;
                    }
                }
                vec![Field::from_raw(*self, g1), Field::from_raw(*self, g2)]
            }
        };
        Ok(out)
    }

    /// Multilinear interpolation of nodal values at an arbitrary point, with
    /// the boundary held at zero and the field extended by zero outside the domain.
    pub fn interpolate(&self, values: &[f64], point: [f64; 2]) -> f64 {
        let h = self.spacing();
        let n = self.n as isize;
        // node index m sits at (m + 1) h; boundary indices -1 and n hold zero
        let locate = |x: f64| -> Option<(isize, f64)> {
            if !(0.0..=1.0).contains(&x) {
                return None;
            }
            let s = x / h - 1.0;
            let m = (s.floor() as isize).clamp(-1, n - 1);
            Some((m, s - m as f64))
        };
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || i >= n || j < 0 || j >= n {
                0.0
            } else {
                values[(i * n + j) as usize]
            }
        };
        match self.dim {
            1 => {
                let Some((m, w)) = locate(point[0]) else {
                    return 0.0;
                };
                let left = if m >= 0 { values[m as usize] } else { 0.0 };
                let right = if m + 1 < n {
                    values[(m + 1) as usize]
                } else {
                    0.0
                };
                left * (1.0 - w) + right * w
            }
            _ => {
                let (Some((m1, w1)), Some((m2, w2))) = (locate(point[0]), locate(point[1])) else {
                    return 0.0;
                };
                at(m1, m2) * (1.0 - w1) * (1.0 - w2)
                    + at(m1 + 1, m2) * w1 * (1.0 - w2)
                    + at(m1, m2 + 1) * (1.0 - w1) * w2
                    + at(m1 + 1, m2 + 1) * w1 * w2
            }
        }
    }
}

pub(crate) fn laplacian_values(grid: &SpatialGrid, v: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    match grid.dim() {
        1 => (0..n)
            .map(|i| {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                (left - 2.0 * v[i] + right) * inv_h2
            })
            .collect(),
        _ => {
            let mut out = vec![0.0; v.len()];
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    let west = if i > 0 { v[k - n] } else { 0.0 };
                    let east = if i + 1 < n { v[k + n] } else { 0.0 };
                    let south = if j > 0 { v[k - 1] } else { 0.0 };
                    let north = if j + 1 < n { v[k + 1] } else { 0.0 };
                    out[k] = (west + east + south + north - 4.0 * v[k]) * inv_h2;
                }
            }
            out
        }
    }
}

/// Real-valued state on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl Field {
    /// Validated constructor: length must match and every value must be finite.
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: SpatialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: SpatialGrid, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Samples `f` at every interior node. `f` receives `[x1, x2]` (x2 = 0 in 1D).
    pub fn from_fn(grid: SpatialGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete L² norm `(h^d Σ v_i²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L² inner product `h^d Σ u_i w_i`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|v| v * factor)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self += factor * other`
    pub fn axpy(&mut self, factor: f64, other: &Field) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    /// `‖self − other‖₂`
    pub fn distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }
}

/// Characteristic function of the control region, one flag per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask {
    grid: SpatialGrid,
    inside: Vec<bool>,
}

impl SupportMask {
    pub fn new(grid: SpatialGrid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: inside.len(),
            });
        }
        Ok(Self { grid, inside })
    }

    /// The whole domain.
    pub fn full(grid: SpatialGrid) -> Self {
        Self {
            grid,
            inside: vec![true; grid.len()],
        }
    }

    pub fn from_fn(grid: SpatialGrid, pred: impl Fn([f64; 2]) -> bool) -> Self {
        Self {
            grid,
            inside: (0..grid.len()).map(|i| pred(grid.coords(i))).collect(),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn contains(&self, index: usize) -> bool {
        self.inside[index]
    }

    pub fn flags(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn is_full(&self) -> bool {
        self.inside.iter().all(|&b| b)
    }

    /// `1_O · u`
    pub fn restrict(&self, u: &Field) -> Result<Field> {
        self.grid.ensure_same(u.grid())?;
        Ok(Field::from_raw(
            self.grid,
            u.values()
                .iter()
                .zip(&self.inside)
                .map(|(&v, &m)| if m { v } else { 0.0 })
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn build_grid_examples() {
        let g = SpatialGrid::new(1, 3).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.len(), 3);
        let g = SpatialGrid::new(2, 9).unwrap();
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert_eq!(g.len(), 81);
        assert!(matches!(SpatialGrid::new(1, 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            SpatialGrid::new(3, 10),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = SpatialGrid::new(1, 3).unwrap();
        assert!(matches!(
            Field::new(g, vec![1.0, 2.0]),
            Err(Error::LengthMismatch {
                expected: 3,
                found: 2
            })
        ));
        assert!(matches!(
            Field::new(g, vec![1.0, f64::NAN, 2.0]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn laplacian_direct_stencil() {
        let g = SpatialGrid::new(1, 3).unwrap();
        let u = Field::new(g, vec![1.0, 0.0, 0.0]).unwrap();
        let lap = g.laplacian(&u).unwrap();
        let inv_h2 = 16.0;
        assert_eq!(lap.values(), &[-2.0 * inv_h2, inv_h2, 0.0]);
        let z = g.laplacian(&Field::zeros(g)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_mismatch() {
        let g1 = SpatialGrid::new(1, 3).unwrap();
        let g2 = SpatialGrid::new(1, 4).unwrap();
        assert!(matches!(
            g1.laplacian(&Field::zeros(g2)),
            Err(Error::GridMismatch { .. })
        ));
        assert!(g1.gradient(&Field::zeros(g2)).is_err());
        assert!(Field::zeros(g1).inner(&Field::zeros(g2)).is_err());
    }

    #[test]
    fn laplacian_sine_eigenvalue() {
        let g = SpatialGrid::new(1, 199).unwrap();
        let h = g.spacing();
        let u = Field::from_fn(g, |x| (PI * x[0]).sin());
        let lap = g.laplacian(&u).unwrap();
        // discrete eigenvalue is exact on the sampled sine
        let mu_h = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        let discrete = lap.add(&u.scaled(mu_h)).unwrap().l2_norm() / u.l2_norm();
        assert!(discrete < 1e-10, "{discrete}");
        let rel = lap.add(&u.scaled(PI * PI)).unwrap().l2_norm() / (PI * PI * u.l2_norm());
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn laplacian_order_two() {
        let err = |n: usize| {
            let g = SpatialGrid::new(1, n).unwrap();
            let u = Field::from_fn(g, |x| (PI * x[0]).sin());
            let lap = g.laplacian(&u).unwrap();
            lap.add(&u.scaled(PI * PI)).unwrap().l2_norm()
        };
        let ratio = err(49) / err(99);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn gradient_analytic_1d() {
        let errs: Vec<f64> = [49, 99]
            .iter()
            .map(|&n| {
                let g = SpatialGrid::new(1, n).unwrap();
                let u = Field::from_fn(g, |x| x[0] * (1.0 - x[0]));
                let du = &g.gradient(&u).unwrap()[0];
                let exact = Field::from_fn(g, |x| 1.0 - 2.0 * x[0]);
                // the quadratic is differentiated exactly by centered differences
                du.distance(&exact).unwrap()
            })
            .collect();
        assert!(errs.iter().all(|&e| e < 1e-10), "{errs:?}");
    }

    #[test]
    fn gradient_analytic_2d_order_two() {
        let err = |n: usize| {
            let g = SpatialGrid::new(2, n).unwrap();
            let u = Field::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let du = g.gradient(&u).unwrap();
            let exact = Field::from_fn(g, |x| PI * (PI * x[0]).cos() * (PI * x[1]).sin());
            du[0].distance(&exact).unwrap()
        };
        let (e1, e2) = (err(19), err(39));
        assert!(e2 < 0.01);
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn sine_l2_norm() {
        let g = SpatialGrid::new(1, 199).unwrap();
        let u = Field::from_fn(g, |x| (PI * x[0]).sin());
        assert!((u.l2_norm() - 0.5_f64.sqrt()).abs() < 1e-3);
        assert!((u.inner(&u).unwrap() - u.l2_norm().powi(2)).abs() < 1e-14);
        let z = Field::zeros(g);
        assert_eq!(z.l2_norm(), 0.0);
        assert_eq!(z.linf_norm(), 0.0);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_vanishes_outside() {
        let g = SpatialGrid::new(2, 5).unwrap();
        let u = Field::from_fn(g, |x| x[0] + 2.0 * x[1]);
        for i in 0..g.len() {
            let p = g.coords(i);
            assert!((g.interpolate(u.values(), p) - u.values()[i]).abs() < 1e-14);
        }
        assert_eq!(g.interpolate(u.values(), [-0.1, 0.5]), 0.0);
        assert_eq!(g.interpolate(u.values(), [0.0, 0.5]), 0.0);
        let g1 = SpatialGrid::new(1, 3).unwrap();
        let v = Field::constant(g1, 1.0);
        assert!((g1.interpolate(v.values(), [0.125, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mask_restrict() {
        let g = SpatialGrid::new(1, 4).unwrap();
        let m = SupportMask::from_fn(g, |x| x[0] < 0.5);
        assert_eq!(m.count(), 2);
        let u = Field::constant(g, 3.0);
        assert_eq!(m.restrict(&u).unwrap().values(), &[3.0, 3.0, 0.0, 0.0]);
        assert!(SupportMask::full(g).is_full());
    }
}
