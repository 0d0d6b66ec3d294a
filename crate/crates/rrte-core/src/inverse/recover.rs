//! Boundary data for the coefficient fields, the interpolated starting
//! point, and recovery of the attenuation coefficient from the minimizer.

use super::system::SystemCoefficients;
use crate::error::{Error, Result};
use crate::forward::BoundaryDataSet;
use crate::galerkin::{GalerkinState, Side};
use crate::grid::{trapezoid_alpha, Grid2D, ScalarField2D};

/// Dirichlet data for the coefficient fields: per boundary node, the `N`
/// projections of `(tau_y / sqrt(eps)) ln g_1`.
#[derive(Debug, Clone)]
pub struct BoundaryVector {
    pub grid: Grid2D,
    pub n_basis: usize,
    pub nodes: Vec<(usize, usize, Side)>,
    /// `p[pos * n_basis + n]`.
    pub p: Vec<f64>,
    /// How many non-positive radiance values were clipped before the
    /// logarithm (only user-supplied data can trigger this).
    pub clipped: usize,
}

/// Projects the logarithmic boundary transform onto the basis.
///
/// Non-positive radiance values (possible only in user-supplied data; the
/// multiplicative noise model cannot produce them) are clipped to
/// `1e-6 * min positive value` with a warning.
pub fn boundary_coefficients(
    bd: &BoundaryDataSet,
    coeffs: &SystemCoefficients,
) -> Result<BoundaryVector> {
    assert_eq!(bd.grid, coeffs.grid, "boundary data grid mismatch");
    let ns = coeffs.n_sources();
    let nb = coeffs.n_basis;
    let min_positive = bd
        .values
        .iter()
        .cloned()
        .filter(|&v| v > 0.0)
        .fold(f64::MAX, f64::min);
    if min_positive == f64::MAX {
        let (i, k, _) = bd.nodes[0];
        return Err(Error::NonPositiveBoundary {
            x: bd.grid.x(i),
            y: bd.grid.y(k),
            source_index: 0,
            value: bd.values[0],
        });
    }
    let floor = 1e-6 * min_positive;

    let mut clipped = 0;
    let mut p = vec![0.0; bd.nodes.len() * nb];
    let mut samples = vec![0.0; ns];
    for (pos, &(i, k, _)) in bd.nodes.iter().enumerate() {
        let node = coeffs.grid.idx(i, k);
        for (j, s) in samples.iter_mut().enumerate() {
            let mut g1 = bd.value(pos, j);
            if g1 <= 0.0 {
                clipped += 1;
                log::warn!(
                    "clipping non-positive boundary value {g1:.3e} at node ({i}, {k}), source {j}"
                );
                g1 = floor;
            }
            *s = coeffs.nu_y[node * ns + j] * g1.ln();
        }
        for n in 0..nb {
            let prod: Vec<f64> = samples
                .iter()
                .zip(&coeffs.qv[n])
                .map(|(s, q)| s * q)
                .collect();
            p[pos * nb + n] = trapezoid_alpha(&coeffs.sources, &prod)?;
        }
    }
    Ok(BoundaryVector {
        grid: coeffs.grid,
        n_basis: nb,
        nodes: bd.nodes.clone(),
        p,
        clipped,
    })
}

impl BoundaryVector {
    /// Writes the boundary values into a state's boundary nodes.
    pub fn apply_to(&self, v: &mut GalerkinState) {
        assert_eq!(v.grid, self.grid);
        for (pos, &(i, k, _)) in self.nodes.iter().enumerate() {
            v.coeffs_mut(i, k)
                .copy_from_slice(&self.p[pos * self.n_basis..(pos + 1) * self.n_basis]);
        }
    }

    fn lookup(&self, i: usize, k: usize) -> &[f64] {
        let pos = self
            .nodes
            .iter()
            .position(|&(ni, nk, _)| ni == i && nk == k)
            .expect("boundary node");
        &self.p[pos * self.n_basis..(pos + 1) * self.n_basis]
    }
}

/// Starting point: the average of the transverse and depth linear
/// interpolations of the boundary values.
pub fn starting_point(p: &BoundaryVector, grid: &Grid2D) -> GalerkinState {
    assert_eq!(*grid, p.grid);
    let nb = p.n_basis;
    let mut v = GalerkinState::zeros(*grid, nb);
    // boundary rows first
    p.apply_to(&mut v);
    let width = grid.x_max() - grid.x0;
    let depth = grid.y_max() - grid.y0;
    for k in 1..grid.ny {
        let y = grid.y(k);
        for i in 1..grid.nx {
            let x = grid.x(i);
            let wl = (grid.x_max() - x) / width;
            let wb = (grid.y_max() - y) / depth;
            let left = p.lookup(0, k);
            let right = p.lookup(grid.nx, k);
            let bottom = p.lookup(i, 0);
            let top = p.lookup(i, grid.ny);
            let slot = v.coeffs_mut(i, k);
            for n in 0..nb {
                slot[n] = 0.5 * (wl * left[n] + (1.0 - wl) * right[n])
                    + 0.5 * (wb * bottom[n] + (1.0 - wb) * top[n]);
            }
        }
    }
    v
}

/// Recovers the attenuation coefficient from the final coefficient fields
/// by source-averaging the untransformed equation:
///
/// ```text
/// a(x) = (1/2d) int [ -(grad tau / sqrt(eps)) . grad v
///                     + e^{-v} mu_s int K e^{v} d beta ] d alpha,
/// v = (sqrt(eps) / tau_y) w.
/// ```
pub fn recover_a(v: &GalerkinState, coeffs: &SystemCoefficients) -> Result<ScalarField2D> {
    let g = coeffs.grid;
    let ns = coeffs.n_sources();
    let nb = coeffs.n_basis;
    let nn = g.n_nodes();

    // v(x, alpha_j) = rho * w on every node
    let mut vfield = vec![0.0; nn * ns];
    for k in 0..=g.ny {
        for i in 0..=g.nx {
            let node = g.idx(i, k);
            let c = v.coeffs(i, k);
            for j in 0..ns {
                let w: f64 = (0..nb).map(|m| c[m] * coeffs.qv[m][j]).sum();
                vfield[node * ns + j] = coeffs.rho[node * ns + j] * w;
            }
        }
    }

    let w = g.nx + 1;
    let dvx = |j: usize, i: usize, k: usize| -> f64 {
        let at = |ii: usize| vfield[(k * w + ii) * ns + j];
        let inv = 0.5 / g.hx;
        if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv
        } else if i == g.nx {
            (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) * inv
        } else {
            (at(i + 1) - at(i - 1)) * inv
        }
    };
    let dvy = |j: usize, i: usize, k: usize| -> f64 {
        let at = |kk: usize| vfield[(kk * w + i) * ns + j];
        let inv = 0.5 / g.hy;
        if k == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv
        } else if k == g.ny {
            (3.0 * at(k) - 4.0 * at(k - 1) + at(k - 2)) * inv
        } else {
            (at(k + 1) - at(k - 1)) * inv
        }
    };

    let mut out = ScalarField2D::zeros(g);
    let mut samples = vec![0.0; ns];
    let mut ev = vec![0.0; ns];
    let inv2d = 1.0 / (2.0 * coeffs.sources.d);
    for k in 0..=g.ny {
        for i in 0..=g.nx {
            let node = g.idx(i, k);
            for j in 0..ns {
                let arg = vfield[node * ns + j];
                if arg.abs() > 700.0 {
                    return Err(Error::Overflow {
                        context: "recovery exponential",
                        arg,
                    });
                }
                ev[j] = arg.exp();
            }
            let mu = coeffs.mu_s[node];
            for j in 0..ns {
                let transport = coeffs.nu_x[node * ns + j] * dvx(j, i, k)
                    + coeffs.nu_y[node * ns + j] * dvy(j, i, k);
                let scat: f64 = (0..ns).map(|l| coeffs.kw[j][l] * ev[l]).sum();
                samples[j] = -transport + mu / ev[j] * scat;
            }
            *out.at_mut(i, k) = inv2d * trapezoid_alpha(&coeffs.sources, &samples)?;
        }
    }
    Ok(out)
}
