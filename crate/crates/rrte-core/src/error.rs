//! Error type shared by all solver stages.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the grid box [{x0}, {x1}] x [{y0}, {y1}]")]
    OutOfBounds {
        x: f64,
        y: f64,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },

    #[error("metric is not positive: eps_r = {value} at node ({i}, {k})")]
    NonPositiveMetric { value: f64, i: usize, k: usize },

    #[error("source ({x}, {y}) must lie below the slab, outside the closure of the domain")]
    SourceInsideDomain { x: f64, y: f64 },

    #[error("geodesic descent stalled at ({x}, {y}): |grad tau| = {grad_norm:.3e}")]
    DescentStall { x: f64, y: f64, grad_norm: f64 },

    #[error("fixed-point iteration did not converge in {iters} sweeps (last update {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("non-positive boundary radiance {value:.3e} at node ({x}, {y}), source index {source_index}")]
    NonPositiveBoundary {
        x: f64,
        y: f64,
        source_index: usize,
        value: f64,
    },

    #[error("basis half-width d = {basis_d} does not match source grid d = {grid_d}")]
    BasisMismatch { basis_d: f64, grid_d: f64 },

    #[error("exponential overflow in {context}: argument {arg:.3e} (iterate far outside the admissible ball)")]
    Overflow { context: &'static str, arg: f64 },

    #[error("unknown glyph '{0}'")]
    UnknownGlyph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
