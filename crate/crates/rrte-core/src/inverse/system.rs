//! Per-node coefficients of the projected quasilinear system.
//!
//! Every travel-time factor enters through its truncated basis expansion,
//! so the source-parameter derivative of any assembled expression is the
//! same coefficients against `{Q_n'}`. The zeroth-order coefficient
//!
//! ```text
//! c(x, alpha) = (tau_x / sqrt(eps)) d/dx (sqrt(eps) / tau_y)
//!             - (sqrt(eps) / tau_y) d/dy (tau_y / sqrt(eps))
//! ```
//!
//! is built from synthesized fields with the same difference stencils the
//! residual uses.

use crate::basis::BasisSet;
use crate::eikonal::{tau_fourier_coeffs, MetricField, TauBasisTable, TravelTimeField};
use crate::error::Result;
use crate::forward::PhaseKernel;
use crate::grid::{Grid2D, ScalarField2D, SourceGrid};

/// How travel-time factors enter the assembled coefficients.
///
/// `Raw` reads the interpolated gradient fields directly at every source
/// node (the source-parameter derivative is applied once, to the whole
/// projected expression, so no separate `d tau / d alpha` is needed).
/// `Synthesized` routes them through the truncated basis expansion first;
/// kept for comparison, it trades accuracy for the smoothing the
/// truncation provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauTreatment {
    Raw,
    Synthesized,
}

/// Frozen per-node data for residual, functional, gradient, recovery and
/// probes: synthesized transport ratios, zeroth-order coefficients, the
/// scattering weights, basis tables and the system matrix.
#[derive(Debug, Clone)]
pub struct SystemCoefficients {
    pub grid: Grid2D,
    pub sources: SourceGrid,
    pub n_basis: usize,
    /// `tau_x / tau_y` at `[node * ns + j]`.
    pub r1: Vec<f64>,
    /// Zeroth-order coefficient `c` at `[node * ns + j]`.
    pub c0: Vec<f64>,
    /// `sqrt(eps) / tau_y` at `[node * ns + j]` (the `v = rho w` factor).
    pub rho: Vec<f64>,
    /// Scattering level per node.
    pub mu_s: Vec<f64>,
    /// `K(alpha_j, alpha_l) * weight_l`, `[j][l]`.
    pub kw: Vec<Vec<f64>>,
    /// `Q_m(alpha_j)`, `[m][j]`.
    pub qv: Vec<Vec<f64>>,
    /// Source-node trapezoid weights.
    pub src_w: Vec<f64>,
    /// System matrix `b[n][s] = [Q_s', Q_n]` applied to projected data.
    pub b: Vec<Vec<f64>>,
    /// Synthesized `tau_x / sqrt(eps)` and `tau_y / sqrt(eps)` per
    /// `[node * ns + j]`, kept for the recovery formula.
    pub nu_x: Vec<f64>,
    pub nu_y: Vec<f64>,
}

/// Central difference in x at interior columns, one-sided second order at
/// the lateral faces, over a strided per-source table.
fn d_dx(values: &[f64], grid: &Grid2D, ns: usize, j: usize, i: usize, k: usize) -> f64 {
    let w = grid.nx + 1;
    let at = |ii: usize| values[(k * w + ii) * ns + j];
    let inv = 0.5 / grid.hx;
    if i == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv
    } else if i == grid.nx {
        (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) * inv
    } else {
        (at(i + 1) - at(i - 1)) * inv
    }
}

fn d_dy(values: &[f64], grid: &Grid2D, ns: usize, j: usize, i: usize, k: usize) -> f64 {
    let w = grid.nx + 1;
    let at = |kk: usize| values[(kk * w + i) * ns + j];
    let inv = 0.5 / grid.hy;
    if k == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv
    } else if k == grid.ny {
        (3.0 * at(k) - 4.0 * at(k - 1) + at(k - 2)) * inv
    } else {
        (at(k + 1) - at(k - 1)) * inv
    }
}

impl SystemCoefficients {
    /// Assembles from travel-time fields with the default raw treatment.
    pub fn assemble(
        tts: &[TravelTimeField],
        metric: &MetricField,
        mu_s: &ScalarField2D,
        kernel: &PhaseKernel,
        basis: &BasisSet,
        sources: &SourceGrid,
        grid: &Grid2D,
    ) -> Result<Self> {
        Self::assemble_with(tts, metric, mu_s, kernel, basis, sources, grid, TauTreatment::Raw)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn assemble_with(
        tts: &[TravelTimeField],
        metric: &MetricField,
        mu_s: &ScalarField2D,
        kernel: &PhaseKernel,
        basis: &BasisSet,
        sources: &SourceGrid,
        grid: &Grid2D,
        treatment: TauTreatment,
    ) -> Result<Self> {
        let ns = sources.n_sources();
        let nb = basis.n;
        let mut tx = vec![0.0; grid.n_nodes() * ns];
        let mut ty = vec![0.0; grid.n_nodes() * ns];
        match treatment {
            TauTreatment::Raw => {
                for (i, k, x, y) in grid.nodes() {
                    let node = grid.idx(i, k);
                    for j in 0..ns {
                        tx[node * ns + j] = tts[j].tau_x.interp_bilinear(x, y)?;
                        ty[node * ns + j] = tts[j].tau_y.interp_bilinear(x, y)?;
                    }
                }
            }
            TauTreatment::Synthesized => {
                let tau: TauBasisTable = tau_fourier_coeffs(tts, sources, basis, grid)?;
                let qv = basis.q_table(sources)?;
                for node in 0..grid.n_nodes() {
                    let cx = tau.coeff_x(node);
                    let cy = tau.coeff_y(node);
                    for j in 0..ns {
                        tx[node * ns + j] = (0..nb).map(|m| cx[m] * qv[m][j]).sum();
                        ty[node * ns + j] = (0..nb).map(|m| cy[m] * qv[m][j]).sum();
                    }
                }
            }
        }
        Self::from_tau_values(tx, ty, metric, mu_s, kernel, basis, sources, grid)
    }

    /// Core assembly from per-(node, source) travel-time gradients.
    #[allow(clippy::too_many_arguments)]
    pub fn from_tau_values(
        tx: Vec<f64>,
        ty: Vec<f64>,
        metric: &MetricField,
        mu_s: &ScalarField2D,
        kernel: &PhaseKernel,
        basis: &BasisSet,
        sources: &SourceGrid,
        grid: &Grid2D,
    ) -> Result<Self> {
        basis.check_source_grid(sources)?;
        let grid = *grid;
        assert_eq!(mu_s.grid, grid, "scattering field must live on the inversion grid");
        let ns = sources.n_sources();
        let nn = grid.n_nodes();
        let nb = basis.n;
        let qv = basis.q_table(sources)?;

        let mut sqrt_eps = vec![0.0; nn];
        for (i, k, x, y) in grid.nodes() {
            sqrt_eps[grid.idx(i, k)] = metric.eps_r.interp_bilinear(x, y)?.sqrt();
        }

        // rho = sqrt(eps)/tau_y and its reciprocal field for the c terms
        let mut rho = vec![0.0; nn * ns];
        let mut inv_rho = vec![0.0; nn * ns];
        let mut r1 = vec![0.0; nn * ns];
        let mut nu_x = vec![0.0; nn * ns];
        let mut nu_y = vec![0.0; nn * ns];
        for node in 0..nn {
            let se = sqrt_eps[node];
            for j in 0..ns {
                let tyv = ty[node * ns + j];
                debug_assert!(tyv > 0.0, "depth derivative of tau must stay positive");
                rho[node * ns + j] = se / tyv;
                inv_rho[node * ns + j] = tyv / se;
                r1[node * ns + j] = tx[node * ns + j] / tyv;
                nu_x[node * ns + j] = tx[node * ns + j] / se;
                nu_y[node * ns + j] = tyv / se;
            }
        }

        let mut c0 = vec![0.0; nn * ns];
        for k in 0..=grid.ny {
            for i in 0..=grid.nx {
                let node = grid.idx(i, k);
                for j in 0..ns {
                    let drho_dx = d_dx(&rho, &grid, ns, j, i, k);
                    let dinvrho_dy = d_dy(&inv_rho, &grid, ns, j, i, k);
                    c0[node * ns + j] =
                        nu_x[node * ns + j] * drho_dx - rho[node * ns + j] * dinvrho_dy;
                }
            }
        }

        let src_w: Vec<f64> = (0..ns).map(|j| sources.weight(j)).collect();
        Ok(SystemCoefficients {
            grid,
            sources: sources.clone(),
            n_basis: nb,
            r1,
            c0,
            rho,
            mu_s: mu_s.values.clone(),
            kw: kernel.weighted_matrix(sources),
            qv,
            src_w,
            b: basis.b.clone(),
            nu_x,
            nu_y,
        })
    }

    #[inline]
    pub fn n_sources(&self) -> usize {
        self.sources.n_sources()
    }
}
