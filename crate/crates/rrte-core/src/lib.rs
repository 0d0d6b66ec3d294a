//! Forward simulation and reconstruction for the steady-state radiative
//! transfer equation in a Riemannian metric.
//!
//! Photons propagate along geodesic lines of the metric `sqrt(eps_r) |dx|`
//! generated by a spatially variable dielectric constant. The forward
//! problem computes the steady-state radiance produced by a line of
//! mollified point sources; the inverse problem recovers the attenuation
//! coefficient `a = mu_a + mu_s` from boundary radiance measurements by
//! minimizing a depth-exponentially weighted least-squares functional whose
//! weight makes it strictly convex for large enough weight parameter.
//!
//! Pipeline overview:
//!
//! 1. [`eikonal`] — first-arrival travel times `tau(x, source)` by fast
//!    marching, per-source gradient fields.
//! 2. [`geodesic`] — geodesic polylines traced by descent through the
//!    interpolated travel time, line integrals along them.
//! 3. [`forward`] — the equivalent Volterra integral equation solved by
//!    Picard iteration; boundary data extraction.
//! 4. [`basis`] — the special orthonormal basis of `L^2(-d,d)` built from
//!    `{alpha^n e^alpha}`, whose derivative Gram matrix is unit triangular.
//! 5. [`inverse`] — Galerkin truncation in the source parameter, weighted
//!    functional, adjoint gradient, quasi-Newton/gradient-descent
//!    minimization, recovery of the attenuation coefficient.
//! 6. [`phantom`], [`noise`], [`experiment`] — letter phantoms,
//!    multiplicative boundary noise, experiment orchestration and reports.

pub mod basis;
pub mod eikonal;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod forward;
pub mod galerkin;
pub mod geodesic;
pub mod grid;
pub mod inverse;
pub mod noise;
pub mod phantom;
pub mod quad;

pub use error::{Error, Result};
