//! Named problem configurations used by the tests, benches and CLI.

use std::f64::consts::PI;

use crate::error::Result;
use crate::grid::{Field, SpatialGrid, SupportMask};
use crate::pde::NonlinearitySpec;
use crate::steer::SteeringProblem;

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Control region of the 2D example, `(0.25, 0.75)²`.
pub fn example_region(grid: SpatialGrid) -> SupportMask {
    let inside = |s: f64| s > 0.25 && s < 0.75;
    SupportMask::from_fn(grid, |x| inside(x[0]) && inside(x[1]))
}

pub fn sine_mode(grid: SpatialGrid) -> Field {
    Field::from_fn(grid, |x| {
        let s = (PI * x[0]).sin();
        if grid.dim() == 2 {
            s * (PI * x[1]).sin()
        } else {
            s
        }
    })
}

/// `y0 = sin πx → y^d = 2 sin πx`, no reaction.
pub fn eigen_doubling(n: usize) -> Result<SteeringProblem> {
    let grid = SpatialGrid::new(1, n)?;
    let y0 = sine_mode(grid);
    SteeringProblem::new(
        y0.clone(),
        y0.scaled(2.0),
        SupportMask::full(grid),
        NonlinearitySpec::zero(),
        DEFAULT_EPSILON,
    )
}

/// Same states with `f(t, y) = 0.5 sin y`.
pub fn semilinear(n: usize) -> Result<SteeringProblem> {
    let mut p = eigen_doubling(n)?;
    p.nonlinearity = NonlinearitySpec::sine(0.5);
    Ok(p)
}

/// 2D example: `y0 = (x1 − x2) 1_O`, `y^d = 1.5 y0`, `O = (0.25, 0.75)²`,
/// `f = 0.5 sin y`. The search shrinks `T` by 4 per attempt from `T0 = 1`.
pub fn example_2d(n: usize) -> Result<SteeringProblem> {
    let grid = SpatialGrid::new(2, n)?;
    let region = example_region(grid);
    let y0 = region.restrict(&Field::from_fn(grid, |x| x[0] - x[1]))?;
    let yd = y0.scaled(1.5);
    let mut p = SteeringProblem::new(y0, yd, region, NonlinearitySpec::sine(0.5), DEFAULT_EPSILON)?;
    p.shrink = 0.25;
    Ok(p)
}

/// Hold problem: `y0 = 0.5 sin πx`, `y^d = sin πx`, `f = 0.3 y`.
pub fn eigen_hold(n: usize) -> Result<SteeringProblem> {
    let grid = SpatialGrid::new(1, n)?;
    let yd = sine_mode(grid);
    SteeringProblem::new(
        yd.scaled(0.5),
        yd,
        SupportMask::full(grid),
        NonlinearitySpec::linear(0.3),
        DEFAULT_EPSILON,
    )
}
