//! Galerkin coefficient fields and the semidiscrete `H^1` norm.
//!
//! A [`GalerkinState`] holds the `N` coefficient fields `w_0..w_{N-1}` of
//! the truncated expansion `w(x, alpha) = sum_n w_n(x) Q_n(alpha)` on a slab
//! grid. Transverse derivatives are central differences at interior columns
//! `i = 1..m-1`; depth derivatives are central at interior rows and
//! one-sided second order at the depth faces. The norm sums `h * h_y`
//! weighted squares over interior columns with trapezoid weights in depth.

use crate::grid::Grid2D;
use serde::{Deserialize, Serialize};

/// Which part of the slab boundary a node belongs to.
///
/// `Near` is the inflow side `y = a`, `Far` is `y = b`, `Left`/`Right` are
/// the lateral sides `x = -A` / `x = A`. Corner nodes at `y = a` belong to
/// `Near`, corner nodes at `y = b` to `Far`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Near,
    Far,
    Left,
    Right,
}

impl Side {
    pub fn id(&self) -> u8 {
        match self {
            Side::Near => 1,
            Side::Far => 2,
            Side::Left => 3,
            Side::Right => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Side> {
        match id {
            1 => Some(Side::Near),
            2 => Some(Side::Far),
            3 => Some(Side::Left),
            4 => Some(Side::Right),
            _ => None,
        }
    }
}

/// Fixed enumeration of the boundary nodes of a slab grid: near side, far
/// side, then lateral columns bottom-up.
pub fn boundary_nodes(grid: &Grid2D) -> Vec<(usize, usize, Side)> {
    let mut out = Vec::with_capacity(2 * (grid.nx + 1) + 2 * (grid.ny - 1));
    for i in 0..=grid.nx {
        out.push((i, 0, Side::Near));
    }
    for i in 0..=grid.nx {
        out.push((i, grid.ny, Side::Far));
    }
    for k in 1..grid.ny {
        out.push((0, k, Side::Left));
        out.push((grid.nx, k, Side::Right));
    }
    out
}

/// `N` coefficient fields on a slab grid, node-major storage:
/// `data[(k*(nx+1)+i)*n + comp]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub grid: Grid2D,
    pub n_basis: usize,
    pub data: Vec<f64>,
}

impl GalerkinState {
    pub fn zeros(grid: Grid2D, n_basis: usize) -> Self {
        assert!(grid.nx >= 2 && grid.ny >= 2, "stencils need a 3-node span");
        GalerkinState {
            grid,
            n_basis,
            data: vec![0.0; grid.n_nodes() * n_basis],
        }
    }

    #[inline]
    pub fn coeffs(&self, i: usize, k: usize) -> &[f64] {
        let at = self.grid.idx(i, k) * self.n_basis;
        &self.data[at..at + self.n_basis]
    }

    #[inline]
    pub fn coeffs_mut(&mut self, i: usize, k: usize) -> &mut [f64] {
        let at = self.grid.idx(i, k) * self.n_basis;
        &mut self.data[at..at + self.n_basis]
    }

    /// Central transverse difference at an interior column `1 <= i <= nx-1`.
    #[inline]
    pub fn dx(&self, i: usize, k: usize, out: &mut [f64]) {
        debug_assert!(i >= 1 && i < self.grid.nx);
        let inv = 0.5 / self.grid.hx;
        let e = self.coeffs(i + 1, k);
        let w = self.coeffs(i - 1, k);
        for n in 0..self.n_basis {
            out[n] = (e[n] - w[n]) * inv;
        }
    }

    /// Depth difference: central at interior rows, one-sided second order at
    /// the depth faces.
    #[inline]
    pub fn dy(&self, i: usize, k: usize, out: &mut [f64]) {
        let inv = 0.5 / self.grid.hy;
        if k == 0 {
            let c0 = self.coeffs(i, 0);
            let c1 = self.coeffs(i, 1);
            let c2 = self.coeffs(i, 2);
            for n in 0..self.n_basis {
                out[n] = (-3.0 * c0[n] + 4.0 * c1[n] - c2[n]) * inv;
            }
        } else if k == self.grid.ny {
            let c0 = self.coeffs(i, k);
            let c1 = self.coeffs(i, k - 1);
            let c2 = self.coeffs(i, k - 2);
            for n in 0..self.n_basis {
                out[n] = (3.0 * c0[n] - 4.0 * c1[n] + c2[n]) * inv;
            }
        } else {
            let up = self.coeffs(i, k + 1);
            let dn = self.coeffs(i, k - 1);
            for n in 0..self.n_basis {
                out[n] = (up[n] - dn[n]) * inv;
            }
        }
    }

    /// The stencil rows a depth difference at row `k` reads from.
    pub fn dy_stencil(grid: &Grid2D, k: usize) -> [(usize, f64); 3] {
        if k == 0 {
            [(0, -3.0), (1, 4.0), (2, -1.0)]
        } else if k == grid.ny {
            [(k, 3.0), (k - 1, -4.0), (k - 2, 1.0)]
        } else {
            [(k + 1, 1.0), (k - 1, -1.0), (k, 0.0)]
        }
    }

    /// Trapezoid weight of depth row `k` (already multiplied by `h_y`).
    #[inline]
    pub fn depth_weight(grid: &Grid2D, k: usize) -> f64 {
        if k == 0 || k == grid.ny {
            0.5 * grid.hy
        } else {
            grid.hy
        }
    }
}

/// Semidiscrete `H^1` norm: interior-column sum of the squared values and
/// both difference quotients, trapezoid in depth.
pub fn norm_h1h(v: &GalerkinState) -> f64 {
    let g = v.grid;
    let n = v.n_basis;
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut acc = 0.0;
    for k in 0..=g.ny {
        let wy = GalerkinState::depth_weight(&g, k) * g.hx;
        for i in 1..g.nx {
            v.dx(i, k, &mut dx);
            v.dy(i, k, &mut dy);
            let c = v.coeffs(i, k);
            let mut s = 0.0;
            for m in 0..n {
                s += c[m] * c[m] + dx[m] * dx[m] + dy[m] * dy[m];
            }
            acc += wy * s;
        }
    }
    acc.sqrt()
}

/// Plain Euclidean dot product of two states' raw data.
pub fn dot(a: &GalerkinState, b: &GalerkinState) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain2D;

    fn grid() -> Grid2D {
        Grid2D::over_domain(&Domain2D::reference(), 10, 10)
    }

    fn fill<F: Fn(f64, f64, usize) -> f64>(grid: Grid2D, n: usize, f: F) -> GalerkinState {
        let mut v = GalerkinState::zeros(grid, n);
        for k in 0..=grid.ny {
            for i in 0..=grid.nx {
                for m in 0..n {
                    v.coeffs_mut(i, k)[m] = f(grid.x(i), grid.y(k), m);
                }
            }
        }
        v
    }

    #[test]
    fn norm_of_zero_is_zero() {
        assert_eq!(norm_h1h(&GalerkinState::zeros(grid(), 3)), 0.0);
    }

    #[test]
    fn norm_is_homogeneous() {
        let v = fill(grid(), 2, |x, y, m| (x * 3.0 + y + m as f64).sin());
        let mut w = v.clone();
        for d in &mut w.data {
            *d *= 2.0;
        }
        assert!((norm_h1h(&w) - 2.0 * norm_h1h(&v)).abs() < 1e-12 * norm_h1h(&v));
    }

    #[test]
    fn norm_of_unit_first_component() {
        // w_0 = 1 everywhere: derivatives vanish, norm^2 equals the
        // quadrature measure of the interior strip, (2A - h)(b - a).
        let g = grid();
        let v = fill(g, 3, |_, _, m| if m == 0 { 1.0 } else { 0.0 });
        let measure = (g.nx - 1) as f64 * g.hx * (g.y_max() - g.y0);
        assert!((norm_h1h(&v) - measure.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_zero_iff_zero_with_zero_boundary() {
        let g = grid();
        let mut v = GalerkinState::zeros(g, 2);
        v.coeffs_mut(4, 5)[1] = 1e-9;
        assert!(norm_h1h(&v) > 0.0);
    }

    #[test]
    fn triangle_inequality_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let g = grid();
        for _ in 0..20 {
            let mut a = GalerkinState::zeros(g, 3);
            let mut b = GalerkinState::zeros(g, 3);
            for d in &mut a.data {
                *d = rng.gen_range(-1.0..1.0);
            }
            for d in &mut b.data {
                *d = rng.gen_range(-1.0..1.0);
            }
            let mut sum = a.clone();
            for (s, y) in sum.data.iter_mut().zip(&b.data) {
                *s += y;
            }
            assert!(norm_h1h(&sum) <= norm_h1h(&a) + norm_h1h(&b) + 1e-12);
        }
    }

    #[test]
    fn one_sided_depth_stencil_is_second_order() {
        // exact derivative of y^2 at the faces
        let g = grid();
        let v = fill(g, 1, |_, y, _| y * y);
        let mut dy = [0.0];
        v.dy(3, 0, &mut dy);
        assert!((dy[0] - 2.0 * g.y0).abs() < 1e-10);
        v.dy(3, g.ny, &mut dy);
        assert!((dy[0] - 2.0 * g.y_max()).abs() < 1e-10);
    }

    #[test]
    fn boundary_enumeration_counts() {
        let g = grid();
        let b = boundary_nodes(&g);
        assert_eq!(b.len(), 2 * (g.nx + 1) + 2 * (g.ny - 1));
        assert_eq!(b.iter().filter(|(_, _, s)| *s == Side::Near).count(), g.nx + 1);
    }
}
