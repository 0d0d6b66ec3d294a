//! Residual of the projected system, the weighted functional and its exact
//! discrete gradient.
//!
//! The residual assembles the source-parameter derivative of the
//! transformed transport equation: the full expression
//!
//! ```text
//! T(x, alpha) = w_y + (tau_x/tau_y) w_x + c w
//!             - e^{-rho w}(alpha) mu_s int K(alpha, beta) e^{rho w}(beta) d beta
//! ```
//!
//! is evaluated at the source nodes, projected onto the basis, and the
//! system matrix applies the derivative: `res_n = sum_s b[n][s] [T, Q_s]`.
//! The unknown coefficient is constant in the source parameter, so it
//! drops out of the derivative.
//!
//! Spatial discretization is a box scheme: residuals live on depth
//! half-levels `(x_i, y_{k+1/2})` with interior columns `i = 1..m-1`.
//! The depth derivative is the exact difference across the level pair and
//! every other factor is the average of the two levels, which is second
//! order and leaves no odd-even null mode (a centered depth difference
//! would skip rows, and the exponential depth weight then amplifies the
//! unseen mode into top-row artifacts).
//!
//! `J = sum h h_y e^{2 lambda y} |res|^2` over half-levels; its gradient
//! is the exact chain rule through the stencils, accumulated sparsely and
//! forced to zero on boundary nodes (minimization keeps the boundary
//! trace fixed).

use super::system::SystemCoefficients;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::galerkin::GalerkinState;

/// Scratch buffers reused across nodes.
#[derive(Debug, Clone)]
pub struct ResidualWorkspace {
    vdx: Vec<f64>,
    vdy: Vec<f64>,
    vav: Vec<f64>,
    w: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    ev: Vec<f64>,
    einv: Vec<f64>,
    scat: Vec<f64>,
    r1h: Vec<f64>,
    c0h: Vec<f64>,
    rhoh: Vec<f64>,
    t: Vec<f64>,
    proj: Vec<f64>,
    tbar: Vec<f64>,
    gl: Vec<f64>,
}

impl ResidualWorkspace {
    pub fn new(coeffs: &SystemCoefficients) -> Self {
        let ns = coeffs.n_sources();
        let nb = coeffs.n_basis;
        ResidualWorkspace {
            vdx: vec![0.0; nb],
            vdy: vec![0.0; nb],
            vav: vec![0.0; nb],
            w: vec![0.0; ns],
            wx: vec![0.0; ns],
            wy: vec![0.0; ns],
            ev: vec![0.0; ns],
            einv: vec![0.0; ns],
            scat: vec![0.0; ns],
            r1h: vec![0.0; ns],
            c0h: vec![0.0; ns],
            rhoh: vec![0.0; ns],
            t: vec![0.0; ns],
            proj: vec![0.0; nb],
            tbar: vec![0.0; ns],
            gl: vec![0.0; ns],
        }
    }
}

/// Evaluates `T(x_i, y_{k+1/2}, alpha_j)` into `ws.t` for the level pair
/// `(k, k+1)`. With `linear_only` the zeroth-order and scattering terms
/// are omitted (the transport part used by the Carleman probe).
fn assemble_t(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    i: usize,
    k: usize,
    ws: &mut ResidualWorkspace,
    linear_only: bool,
) -> Result<()> {
    let g = coeffs.grid;
    let ns = coeffs.n_sources();
    let nb = coeffs.n_basis;
    debug_assert!(i >= 1 && i < g.nx && k < g.ny);
    let node_lo = g.idx(i, k);
    let node_hi = g.idx(i, k + 1);

    // level-pair stencil: exact difference in depth, averages of the
    // values and of the central transverse differences. A centered depth
    // difference would skip rows and leave an odd-even null mode that the
    // exponential depth weight amplifies into top-row artifacts.
    let lo = v.coeffs(i, k);
    let hi = v.coeffs(i, k + 1);
    let e_lo = v.coeffs(i + 1, k);
    let e_hi = v.coeffs(i + 1, k + 1);
    let w_lo = v.coeffs(i - 1, k);
    let w_hi = v.coeffs(i - 1, k + 1);
    let inv_hy = 1.0 / g.hy;
    let inv_4hx = 0.25 / g.hx;
    for m in 0..nb {
        ws.vdy[m] = (hi[m] - lo[m]) * inv_hy;
        ws.vav[m] = 0.5 * (hi[m] + lo[m]);
        ws.vdx[m] = (e_lo[m] + e_hi[m] - w_lo[m] - w_hi[m]) * inv_4hx;
    }

    for j in 0..ns {
        let mut w = 0.0;
        let mut wx = 0.0;
        let mut wy = 0.0;
        for m in 0..nb {
            let q = coeffs.qv[m][j];
            w += ws.vav[m] * q;
            wx += ws.vdx[m] * q;
            wy += ws.vdy[m] * q;
        }
        ws.w[j] = w;
        ws.wx[j] = wx;
        ws.wy[j] = wy;
        ws.r1h[j] = 0.5 * (coeffs.r1[node_lo * ns + j] + coeffs.r1[node_hi * ns + j]);
        ws.c0h[j] = 0.5 * (coeffs.c0[node_lo * ns + j] + coeffs.c0[node_hi * ns + j]);
        ws.rhoh[j] = 0.5 * (coeffs.rho[node_lo * ns + j] + coeffs.rho[node_hi * ns + j]);
    }
    if linear_only {
        for j in 0..ns {
            ws.t[j] = ws.wy[j] + ws.r1h[j] * ws.wx[j];
            ws.ev[j] = 0.0;
            ws.einv[j] = 0.0;
            ws.scat[j] = 0.0;
        }
        return Ok(());
    }
    for j in 0..ns {
        let arg = ws.rhoh[j] * ws.w[j];
        if arg.abs() > 700.0 {
            return Err(Error::Overflow {
                context: "scattering exponential",
                arg,
            });
        }
        ws.ev[j] = arg.exp();
        ws.einv[j] = 1.0 / ws.ev[j];
    }
    let mu = 0.5 * (coeffs.mu_s[node_lo] + coeffs.mu_s[node_hi]);
    for j in 0..ns {
        let s: f64 = (0..ns).map(|l| coeffs.kw[j][l] * ws.ev[l]).sum();
        ws.scat[j] = mu * ws.einv[j] * s;
        ws.t[j] = ws.wy[j] + ws.r1h[j] * ws.wx[j] + ws.c0h[j] * ws.w[j] - ws.scat[j];
    }
    Ok(())
}

/// Projects `ws.t` and applies the system matrix into `out`.
fn project_and_apply(coeffs: &SystemCoefficients, ws: &mut ResidualWorkspace, out: &mut [f64]) {
    let ns = coeffs.n_sources();
    let nb = coeffs.n_basis;
    for s in 0..nb {
        let mut acc = 0.0;
        for j in 0..ns {
            acc += coeffs.src_w[j] * ws.t[j] * coeffs.qv[s][j];
        }
        ws.proj[s] = acc;
    }
    for n in 0..nb {
        out[n] = (0..nb).map(|s| coeffs.b[n][s] * ws.proj[s]).sum();
    }
}

/// Residual vector of the projected system at the half-level
/// `(x_i, y_{k+1/2})`, `1 <= i <= m-1`, `0 <= k < m_y`.
pub fn residual_at(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    i: usize,
    k: usize,
    out: &mut [f64],
    ws: &mut ResidualWorkspace,
) -> Result<()> {
    assemble_t(coeffs, v, i, k, ws, false)?;
    project_and_apply(coeffs, ws, out);
    Ok(())
}

/// Transport-only residual (no zeroth-order or scattering term), for the
/// Carleman-inequality probe.
pub(crate) fn transport_residual_at(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    i: usize,
    k: usize,
    out: &mut [f64],
    ws: &mut ResidualWorkspace,
) -> Result<()> {
    assemble_t(coeffs, v, i, k, ws, true)?;
    project_and_apply(coeffs, ws, out);
    Ok(())
}

#[inline]
fn carleman_weight(lambda: f64, y: f64) -> f64 {
    (2.0 * lambda * y).exp()
}

#[inline]
pub(crate) fn half_level_weight(g: &crate::grid::Grid2D, k: usize, lambda: f64) -> f64 {
    g.hy * g.hx * carleman_weight(lambda, g.y(k) + 0.5 * g.hy)
}

/// `J_lambda(V)`: weighted squared residual over interior columns and
/// depth half-levels.
pub fn evaluate_j(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    lambda: f64,
    mode: Exec,
) -> Result<f64> {
    let g = coeffs.grid;
    let rows = exec::map_collect(mode, g.ny, |k| -> Result<f64> {
        let mut ws = ResidualWorkspace::new(coeffs);
        let mut res = vec![0.0; coeffs.n_basis];
        let wy = half_level_weight(&g, k, lambda);
        let mut acc = 0.0;
        for i in 1..g.nx {
            residual_at(coeffs, v, i, k, &mut res, &mut ws)?;
            acc += wy * res.iter().map(|r| r * r).sum::<f64>();
        }
        Ok(acc)
    });
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total)
}

/// Sparse gradient contribution of one half-level residual.
struct NodeGrad {
    i: usize,
    k: usize,
    /// d/d(level-pair average), per component.
    d_av: Vec<f64>,
    /// d/d(transverse difference), per component.
    d_x: Vec<f64>,
    /// d/d(depth difference), per component.
    d_y: Vec<f64>,
}

/// Exact gradient of the discrete functional; zero on boundary nodes.
pub fn gradient_j(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    lambda: f64,
    mode: Exec,
) -> Result<GalerkinState> {
    let g = coeffs.grid;
    let ns = coeffs.n_sources();
    let nb = coeffs.n_basis;
    let rows = exec::map_collect(mode, g.ny, |k| -> Result<Vec<NodeGrad>> {
        let mut ws = ResidualWorkspace::new(coeffs);
        let mut res = vec![0.0; nb];
        let wcell = half_level_weight(&g, k, lambda);
        let mut out = Vec::with_capacity(g.nx - 1);
        for i in 1..g.nx {
            assemble_t(coeffs, v, i, k, &mut ws, false)?;
            project_and_apply(coeffs, &mut ws, &mut res);

            // adjoint through the matrix and the projection:
            // tbar_j = sum_s [sum_n 2 w res_n b[n][s]] src_w_j Q_s(alpha_j)
            for j in 0..ns {
                ws.tbar[j] = 0.0;
            }
            for s in 0..nb {
                let mut pbar = 0.0;
                for (n, r) in res.iter().enumerate() {
                    pbar += 2.0 * wcell * r * coeffs.b[n][s];
                }
                for j in 0..ns {
                    ws.tbar[j] += pbar * coeffs.src_w[j] * coeffs.qv[s][j];
                }
            }

            // adjoint of the scattering coupling across sources:
            // gl[l] = sum_j tbar_j einv_j kw[j][l]
            let mu = 0.5 * (coeffs.mu_s[g.idx(i, k)] + coeffs.mu_s[g.idx(i, k + 1)]);
            for l in 0..ns {
                let mut acc = 0.0;
                for j in 0..ns {
                    acc += ws.tbar[j] * ws.einv[j] * coeffs.kw[j][l];
                }
                ws.gl[l] = acc;
            }

            let mut d_av = vec![0.0; nb];
            let mut d_x = vec![0.0; nb];
            let mut d_y = vec![0.0; nb];
            for j in 0..ns {
                // vbar_j = tbar_j scat_j - mu e_j gl_j, chained through
                // v_j = rho_j w_j; the direct c0 part adds tbar_j c0_j
                let vbar = ws.tbar[j] * ws.scat[j] - mu * ws.ev[j] * ws.gl[j];
                let dw = ws.tbar[j] * ws.c0h[j] + vbar * ws.rhoh[j];
                let dx = ws.tbar[j] * ws.r1h[j];
                let dy = ws.tbar[j];
                for m in 0..nb {
                    let q = coeffs.qv[m][j];
                    d_av[m] += dw * q;
                    d_x[m] += dx * q;
                    d_y[m] += dy * q;
                }
            }
            out.push(NodeGrad { i, k, d_av, d_x, d_y });
        }
        Ok(out)
    });

    let mut grad = GalerkinState::zeros(g, nb);
    let inv_hy = 1.0 / g.hy;
    let inv_4hx = 0.25 / g.hx;
    let interior = |i: usize, k: usize| i >= 1 && i < g.nx && k >= 1 && k < g.ny;
    for row in rows {
        for ng in row? {
            for (kk, sy) in [(ng.k, -inv_hy), (ng.k + 1, inv_hy)] {
                if interior(ng.i, kk) {
                    let slot = grad.coeffs_mut(ng.i, kk);
                    for m in 0..nb {
                        slot[m] += sy * ng.d_y[m] + 0.5 * ng.d_av[m];
                    }
                }
                if interior(ng.i + 1, kk) {
                    let slot = grad.coeffs_mut(ng.i + 1, kk);
                    for m in 0..nb {
                        slot[m] += inv_4hx * ng.d_x[m];
                    }
                }
                if interior(ng.i - 1, kk) {
                    let slot = grad.coeffs_mut(ng.i - 1, kk);
                    for m in 0..nb {
                        slot[m] -= inv_4hx * ng.d_x[m];
                    }
                }
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::forward::PhaseKernel;
    use crate::grid::{Domain2D, Grid2D, ScalarField2D, SourceGrid};
    use rand::{Rng, SeedableRng};

    /// Flat synthetic coefficients: tau_x = alpha-independent ramp,
    /// tau_y = 1, eps = 1, so rho = 1 and c0 = 0.
    fn synthetic_coeffs(mu_s_level: f64, n_basis: usize) -> SystemCoefficients {
        let dom = Domain2D::reference();
        let grid = Grid2D::over_domain(&dom, 8, 8);
        let sources = SourceGrid::new(dom.source_half_width, 8);
        let basis = BasisSet::build(n_basis, dom.source_half_width).unwrap();
        // metric box covering the slab
        let boxg = Grid2D::new(-0.6, 0.0, 0.05, 0.05, 24, 44);
        let metric = crate::eikonal::MetricField::uniform(boxg, 1.0, 1.0).unwrap();
        let ns = sources.n_sources();
        let mut tx = vec![0.0; grid.n_nodes() * ns];
        let ty = vec![1.0; grid.n_nodes() * ns];
        for (i, k, x, _) in grid.nodes() {
            let node = grid.idx(i, k);
            for j in 0..ns {
                tx[node * ns + j] = 0.3 * x;
            }
        }
        let mu_s = ScalarField2D::from_fn(grid, |_, _| mu_s_level);
        let kernel = PhaseKernel::new(0.5, dom.source_half_width).unwrap();
        SystemCoefficients::from_tau_values(
            tx, ty, &metric, &mu_s, &kernel, &basis, &sources, &grid,
        )
        .unwrap()
    }

    fn random_state(coeffs: &SystemCoefficients, seed: u64, scale: f64) -> GalerkinState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = GalerkinState::zeros(coeffs.grid, coeffs.n_basis);
        for d in &mut v.data {
            *d = rng.gen_range(-scale..scale);
        }
        v
    }

    #[test]
    fn zero_state_without_scattering_has_zero_residual() {
        let coeffs = synthetic_coeffs(0.0, 3);
        let v = GalerkinState::zeros(coeffs.grid, 3);
        let mut ws = ResidualWorkspace::new(&coeffs);
        let mut res = vec![0.0; 3];
        residual_at(&coeffs, &v, 3, 4, &mut res, &mut ws).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-14));
        assert_eq!(evaluate_j(&coeffs, &v, 5.0, Exec::Sequential).unwrap(), 0.0);
    }

    #[test]
    fn residual_is_affine_without_scattering() {
        // with mu_s = 0 the operator is linear in V
        let coeffs = synthetic_coeffs(0.0, 3);
        let v1 = random_state(&coeffs, 1, 0.5);
        let v2 = random_state(&coeffs, 2, 0.5);
        let mut sum = v1.clone();
        for (s, b) in sum.data.iter_mut().zip(&v2.data) {
            *s += b;
        }
        let mut ws = ResidualWorkspace::new(&coeffs);
        let (mut r1, mut r2, mut rs) = (vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]);
        for (i, k) in [(1, 0), (4, 3), (7, 7)] {
            residual_at(&coeffs, &v1, i, k, &mut r1, &mut ws).unwrap();
            residual_at(&coeffs, &v2, i, k, &mut r2, &mut ws).unwrap();
            residual_at(&coeffs, &sum, i, k, &mut rs, &mut ws).unwrap();
            for n in 0..3 {
                assert!((rs[n] - r1[n] - r2[n]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_consistent_with_manufactured_solution() {
        // rho = 1, c0 = 0, mu_s = 0, tau_x/tau_y = 0.3 x: for
        // w_n(x, y) = g_n(y - 0.15 x^2) the transport part is exactly
        // g_n'(s) (1 - 0.09 x^2); the discrete residual converges to its
        // projected image at second order on the half-level stencil
        let residual_norm = |m: usize| -> f64 {
            let dom = Domain2D::reference();
            let grid = Grid2D::over_domain(&dom, m, m);
            let sources = SourceGrid::new(dom.source_half_width, 8);
            let basis = BasisSet::build(2, dom.source_half_width).unwrap();
            let boxg = Grid2D::new(-0.6, 0.0, 0.05, 0.05, 24, 44);
            let metric = crate::eikonal::MetricField::uniform(boxg, 1.0, 1.0).unwrap();
            let ns = sources.n_sources();
            let mut tx = vec![0.0; grid.n_nodes() * ns];
            let ty = vec![1.0; grid.n_nodes() * ns];
            for (i, k, x, _) in grid.nodes() {
                let node = grid.idx(i, k);
                for j in 0..ns {
                    tx[node * ns + j] = 0.3 * x;
                }
            }
            let mu_s = ScalarField2D::zeros(grid);
            let kernel = PhaseKernel::new(0.5, dom.source_half_width).unwrap();
            let coeffs = SystemCoefficients::from_tau_values(
                tx, ty, &metric, &mu_s, &kernel, &basis, &sources, &grid,
            )
            .unwrap();
            let mut v = GalerkinState::zeros(grid, 2);
            for (i, k, x, y) in grid.nodes() {
                let s = y - 0.15 * x * x;
                v.coeffs_mut(i, k)[0] = (1.3 * s).sin();
                v.coeffs_mut(i, k)[1] = 0.5 * (0.9 * s).cos();
            }
            let mut ws = ResidualWorkspace::new(&coeffs);
            let mut res = vec![0.0; 2];
            let mut worst = 0.0_f64;
            for k in 0..grid.ny {
                for i in 1..grid.nx {
                    residual_at(&coeffs, &v, i, k, &mut res, &mut ws).unwrap();
                    // subtract the exact characteristic derivative image
                    let x = grid.x(i);
                    let y = grid.y(k) + 0.5 * grid.hy;
                    let s = y - 0.15 * x * x;
                    let factor = 1.0 - 0.09 * x * x;
                    let exact = [
                        factor * 1.3 * (1.3 * s).cos(),
                        factor * -0.45 * (0.9 * s).sin(),
                    ];
                    // project the exact alpha-constant T onto the system
                    let ones: Vec<f64> = vec![1.0; ns];
                    let mut t_exact = vec![0.0; ns];
                    for j in 0..ns {
                        t_exact[j] = exact[0] * coeffs.qv[0][j] * ones[j]
                            + exact[1] * coeffs.qv[1][j];
                    }
                    let mut ws2 = ResidualWorkspace::new(&coeffs);
                    ws2.t.copy_from_slice(&t_exact);
                    let mut res_exact = vec![0.0; 2];
                    super::project_and_apply(&coeffs, &mut ws2, &mut res_exact);
                    for n in 0..2 {
                        worst = worst.max((res[n] - res_exact[n]).abs());
                    }
                }
            }
            worst
        };
        let coarse = residual_norm(8);
        let fine = residual_norm(16);
        let order = (coarse / fine).log2();
        assert!(order > 1.6, "observed order {order} (coarse {coarse:.2e}, fine {fine:.2e})");
    }

    #[test]
    fn functional_weight_monotone_in_lambda() {
        let coeffs = synthetic_coeffs(5.0, 3);
        let v = random_state(&coeffs, 3, 0.3);
        let j0 = evaluate_j(&coeffs, &v, 0.0, Exec::Sequential).unwrap();
        let j1 = evaluate_j(&coeffs, &v, 1.0, Exec::Sequential).unwrap();
        let j5 = evaluate_j(&coeffs, &v, 5.0, Exec::Sequential).unwrap();
        // depth is at least 1, so e^{2 lambda y} grows with lambda
        assert!(j0 < j1 && j1 < j5);
        assert!(j0 > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (mu, lambda, seed) in [(0.0, 0.0, 7), (5.0, 0.0, 8), (5.0, 5.0, 9)] {
            let coeffs = synthetic_coeffs(mu, 3);
            let v = random_state(&coeffs, seed, 0.4);
            let grad = gradient_j(&coeffs, &v, lambda, Exec::Sequential).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 100);
            for _ in 0..5 {
                let mut dir = GalerkinState::zeros(coeffs.grid, 3);
                for k in 1..coeffs.grid.ny {
                    for i in 1..coeffs.grid.nx {
                        for m in 0..3 {
                            dir.coeffs_mut(i, k)[m] = rng.gen_range(-1.0..1.0);
                        }
                    }
                }
                let gd = crate::galerkin::dot(&grad, &dir);
                let step = 1e-6;
                let mut vp = v.clone();
                let mut vm = v.clone();
                for ((p, m), d) in vp.data.iter_mut().zip(vm.data.iter_mut()).zip(&dir.data) {
                    *p += step * d;
                    *m -= step * d;
                }
                let fp = evaluate_j(&coeffs, &vp, lambda, Exec::Sequential).unwrap();
                let fm = evaluate_j(&coeffs, &vm, lambda, Exec::Sequential).unwrap();
                let fd = (fp - fm) / (2.0 * step);
                assert!(
                    (fd - gd).abs() <= 1e-5 * gd.abs().max(1e-12),
                    "mu={mu} lambda={lambda}: fd={fd} vs adjoint={gd}"
                );
            }
        }
    }

    #[test]
    fn gradient_vanishes_on_boundary_nodes() {
        let coeffs = synthetic_coeffs(5.0, 3);
        let v = random_state(&coeffs, 11, 0.4);
        let grad = gradient_j(&coeffs, &v, 2.0, Exec::Sequential).unwrap();
        let g = coeffs.grid;
        for (i, k, _) in crate::galerkin::boundary_nodes(&g) {
            assert!(grad.coeffs(i, k).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn overflow_far_outside_ball_reported() {
        let coeffs = synthetic_coeffs(5.0, 3);
        let mut v = GalerkinState::zeros(coeffs.grid, 3);
        for d in &mut v.data {
            *d = 1e4;
        }
        assert!(matches!(
            evaluate_j(&coeffs, &v, 5.0, Exec::Sequential),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let coeffs = synthetic_coeffs(5.0, 3);
        let v = random_state(&coeffs, 21, 0.4);
        let a = evaluate_j(&coeffs, &v, 5.0, Exec::Parallel).unwrap();
        let b = evaluate_j(&coeffs, &v, 5.0, Exec::Sequential).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let ga = gradient_j(&coeffs, &v, 5.0, Exec::Parallel).unwrap();
        let gb = gradient_j(&coeffs, &v, 5.0, Exec::Sequential).unwrap();
        assert_eq!(ga.data, gb.data);
    }
}
