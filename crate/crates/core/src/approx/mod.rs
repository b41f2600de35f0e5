//! Bernstein polynomial approximation of (field-valued) functions of time and
//! mollifier smoothing of nonnegative data.

mod bernstein;
mod mollifier;

pub use bernstein::{bernstein_basis, bernstein_tail_bound, BernsteinOperator, BernsteinSample};
pub use mollifier::{
    bump_normalizer, convolve_bump, mollify, smooth_exponent, MollifierParams,
    DEFAULT_CELLS_PER_RADIUS, DEFAULT_NORMALIZER_RESOLUTION,
};
