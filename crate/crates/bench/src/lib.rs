//! Shared fixtures for the criterion benchmarks.

use spatial_sim::circulant::{plan_embedding, EmbeddingPlan};
use spatial_sim::{Grid2D, Result};

/// Exponential covariance with range `n/8` on an `n × n` unit-spaced grid,
/// the model timed by the scaling benchmark.
pub fn exponential_plan(n: usize) -> Result<EmbeddingPlan> {
    let range = n as f64 / 8.0;
    plan_embedding(Grid2D::square(n)?, &move |hx, hy| (-hx.hypot(hy) / range).exp())
}
