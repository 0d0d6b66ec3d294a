//! Reconstruction of the attenuation coefficient by convexification.
//!
//! The radiance is transformed node-wise: `v = ln u`, then
//! `w = (tau_y / sqrt(eps_r)) v`, and `w(x, alpha)` is truncated against
//! the special basis, `w = sum_n w_n(x) Q_n(alpha)`. Differentiating the
//! transport equation in the source parameter eliminates the unknown
//! coefficient and leaves a quasilinear system for the coefficient vector
//! `V = (w_0, .., w_{N-1})` with Dirichlet data computable from the
//! measured boundary radiance. The system residual is squared, weighted by
//! the depth exponential `e^{2 lambda y}`, and minimized over states with
//! fixed boundary; the attenuation is then recovered from the minimizer by
//! source-averaging the untransformed equation.

mod functional;
mod optimize;
mod probe;
mod recover;
mod system;

pub use functional::{evaluate_j, gradient_j, residual_at, ResidualWorkspace};
pub use optimize::{minimize, FunctionalConfig, MinimizeResult, OptimizerKind, StopReason};
pub use probe::{convexity_probe, ProbeReport, ProbeSample};
pub use recover::{boundary_coefficients, recover_a, starting_point, BoundaryVector};
pub use system::{SystemCoefficients, TauTreatment};
