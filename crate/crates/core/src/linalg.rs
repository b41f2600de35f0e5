//! Direct solvers for `(I − s Δ_h) z = b`, `s > 0`.
//!
//! In 1D the matrix is tridiagonal and solved by forward elimination / back
//! substitution with precomputed pivots. In 2D it is SPD with bandwidth `N`
//! and factored once by banded Cholesky; each solve is then two triangular
//! sweeps.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

#[derive(Debug, Clone)]
pub struct ShiftedLaplacianSolver {
    grid: SpatialGrid,
    shift: f64,
    kind: Factorization,
}

#[derive(Debug, Clone)]
enum Factorization {
    Tridiagonal(TridiagonalFactor),
    Banded(BandedCholesky),
}

impl ShiftedLaplacianSolver {
    pub fn new(grid: SpatialGrid, shift: f64) -> Result<Self> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(Error::Domain(format!(
                "shift must be positive, got {shift}"
            )));
        }
        let h = grid.spacing();
        let off = -shift / (h * h);
        let kind = match grid.dim() {
            1 => {
                Factorization::Tridiagonal(TridiagonalFactor::new(grid.n(), 1.0 - 2.0 * off, off)?)
            }
            _ => Factorization::Banded(BandedCholesky::shifted_laplacian_2d(
                grid.n(),
                1.0 - 4.0 * off,
                off,
            )?),
        };
        Ok(Self { grid, shift, kind })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        match &self.kind {
            Factorization::Tridiagonal(f) => f.solve_in_place(x),
            Factorization::Banded(f) => f.solve_in_place(x),
        }
    }
}

/// Constant-coefficient symmetric tridiagonal matrix, eliminated once.
#[derive(Debug, Clone)]
struct TridiagonalFactor {
    off: f64,
    // modified super-diagonal c'_i and reciprocal pivots
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalFactor {
    fn new(n: usize, diag: f64, off: f64) -> Result<Self> {
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_upper = 0.0;
        for i in 0..n {
            let pivot = diag - if i > 0 { off * prev_upper } else { 0.0 };
            if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
                return Err(Error::Solver(format!("zero pivot at row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = off * inv_pivot[i];
            prev_upper = upper[i];
        }
        Ok(Self {
            off,
            upper,
            inv_pivot,
        })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.off * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }
}

/// Lower-triangular Cholesky factor stored by bands: `band[k * (p + 1) + b] = L[k][k − b]`.
#[derive(Debug, Clone)]
struct BandedCholesky {
    size: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    /// Factor `diag·I + off·(adjacency of the 5-point stencil)` on an `n × n` grid.
    fn shifted_laplacian_2d(n: usize, diag: f64, off: f64) -> Result<Self> {
        let size = n * n;
        let p = n;
        let entry = |row: usize, col: usize| -> f64 {
            // col <= row, row - col <= p
            let d = row - col;
            if d == 0 {
                diag
            } else if (d == 1 && !row.is_multiple_of(n)) || d == n {
                off
            } else {
                0.0
            }
        };
        let w = p + 1;
        let mut band = vec![0.0; size * w];
        for k in 0..size {
            let lo = k.saturating_sub(p);
            for j in lo..=k {
                let mut sum = entry(k, j);
                let mlo = lo.max(j.saturating_sub(p));
                for m in mlo..j {
                    sum -= band[k * w + (k - m)] * band[j * w + (j - m)];
                }
                if j == k {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::Solver(format!(
                            "matrix not positive definite at row {k}"
                        )));
                    }
                    band[k * w] = sum.sqrt();
                } else {
                    band[k * w + (k - j)] = sum / band[j * w];
                }
            }
        }
        Ok(Self {
            size,
            bandwidth: p,
            band,
        })
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_in_place(&self, x: &mut [f64]) {
        let p = self.bandwidth;
        let w = p + 1;
        // L y = b
        for k in 0..self.size {
            let lo = k.saturating_sub(p);
            let mut s = x[k];
            for m in lo..k {
                s -= self.band[k * w + (k - m)] * x[m];
            }
            x[k] = s / self.band[k * w];
        }
        // Lᵀ z = y
        for k in (0..self.size).rev() {
            let hi = (k + p).min(self.size - 1);
            let mut s = x[k];
            for m in k + 1..=hi {
                s -= self.band[m * w + (m - k)] * x[m];
            }
            x[k] = s / self.band[k * w];
        }
    }
}
