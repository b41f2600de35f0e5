//! Criterion benches for the solver kernels live in `benches/`; run `cargo bench -p bilinear-bench`.
