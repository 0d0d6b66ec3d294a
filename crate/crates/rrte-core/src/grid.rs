//! Uniform rectangular grids, scalar fields with bilinear interpolation,
//! and the composite trapezoid rule on the source segment.
//!
//! Geometry convention (2D specialization): `x` is the transverse
//! coordinate, `y` is depth. The slab `Omega = (-A, A) x (a, b)` sits above
//! the source segment `Gamma_d = {(alpha, 0) : alpha in [-d, d]}`, which is
//! disjoint from the closure of `Omega` because `0 < a`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// The slab `Omega = (-A, A) x (a, b)` and the source segment half-width `d`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Domain2D {
    /// Transverse half-width of the slab.
    pub half_width: f64,
    /// Near depth (inflow side of the slab).
    pub near: f64,
    /// Far depth.
    pub far: f64,
    /// Source segment half-width.
    pub source_half_width: f64,
}

impl Domain2D {
    pub fn new(half_width: f64, near: f64, far: f64, source_half_width: f64) -> Result<Self> {
        if !(0.0 < near && near < far) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < a < b, got a = {near}, b = {far}"
            )));
        }
        if half_width <= 0.0 || source_half_width <= 0.0 {
            return Err(Error::InvalidParameter(
                "half-widths A and d must be positive".into(),
            ));
        }
        Ok(Domain2D {
            half_width,
            near,
            far,
            source_half_width,
        })
    }

    /// The configuration used throughout the experiments:
    /// `A = d = 1/2`, `a = 1`, `b = 2`.
    pub fn reference() -> Self {
        Domain2D::new(0.5, 1.0, 2.0, 0.5).unwrap()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() < self.half_width && y > self.near && y < self.far
    }

    pub fn contains_closure(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.half_width && y >= self.near && y <= self.far
    }
}

/// Uniform rectangular grid with `nx * ny` cells, node `(i, k)` at
/// `(x0 + i*hx, y0 + k*hy)`, depth-major storage (`k` outer, `i` inner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    /// Number of intervals in x (nodes are `0..=nx`).
    pub nx: usize,
    /// Number of intervals in y.
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x0: f64, y0: f64, hx: f64, hy: f64, nx: usize, ny: usize) -> Self {
        assert!(hx > 0.0 && hy > 0.0 && nx >= 1 && ny >= 1);
        Grid2D {
            x0,
            y0,
            hx,
            hy,
            nx,
            ny,
        }
    }

    /// Grid over the slab with `m` transverse and `m_y` depth intervals.
    pub fn over_domain(d: &Domain2D, m: usize, m_y: usize) -> Self {
        Grid2D::new(
            -d.half_width,
            d.near,
            2.0 * d.half_width / m as f64,
            (d.far - d.near) / m_y as f64,
            m,
            m_y,
        )
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        debug_assert!(i <= self.nx && k <= self.ny);
        k * (self.nx + 1) + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, k: usize) -> f64 {
        self.y0 + k as f64 * self.hy
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny)
    }

    /// True when `(x, y)` lies in the closed bounding box (with a tiny
    /// rounding allowance).
    pub fn in_box(&self, x: f64, y: f64) -> bool {
        let tol_x = 1e-9 * self.hx;
        let tol_y = 1e-9 * self.hy;
        x >= self.x0 - tol_x
            && x <= self.x_max() + tol_x
            && y >= self.y0 - tol_y
            && y <= self.y_max() + tol_y
    }

    /// Cell index and in-cell fractions for a point inside the box.
    #[inline]
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let fx = (x - self.x0) / self.hx;
        let fy = (y - self.y0) / self.hy;
        let i = (fx.floor() as isize).clamp(0, self.nx as isize - 1) as usize;
        let k = (fy.floor() as isize).clamp(0, self.ny as isize - 1) as usize;
        ((i), (k), fx - i as f64, fy - k as f64)
    }

    /// Iterator over all node coordinates, depth-major.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..=self.ny).flat_map(move |k| (0..=self.nx).map(move |i| (i, k, self.x(i), self.y(k))))
    }
}

/// Scalar values on the nodes of a [`Grid2D`].
#[derive(Debug, Clone)]
pub struct ScalarField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField2D {
            grid,
            values: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid2D, f: F) -> Self {
        let mut v = Vec::with_capacity(grid.n_nodes());
        for k in 0..=grid.ny {
            for i in 0..=grid.nx {
                v.push(f(grid.x(i), grid.y(k)));
            }
        }
        ScalarField2D { grid, values: v }
    }

    #[inline]
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, k)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, k: usize) -> &mut f64 {
        let idx = self.grid.idx(i, k);
        &mut self.values[idx]
    }

    /// Tensor-product linear interpolant of the four enclosing nodes.
    ///
    /// Errors when the point falls outside the grid's bounding box.
    pub fn interp_bilinear(&self, x: f64, y: f64) -> Result<f64> {
        if !self.grid.in_box(x, y) {
            return Err(Error::OutOfBounds {
                x,
                y,
                x0: self.grid.x0,
                x1: self.grid.x_max(),
                y0: self.grid.y0,
                y1: self.grid.y_max(),
            });
        }
        Ok(self.interp_unchecked(x, y))
    }

    /// Interpolation without the box test; the caller guarantees the point
    /// is inside (coordinates are clamped to the boundary cells).
    #[inline]
    pub fn interp_unchecked(&self, x: f64, y: f64) -> f64 {
        let (i, k, fx, fy) = self.grid.locate(x, y);
        let w = self.grid.nx + 1;
        let base = k * w + i;
        let v00 = self.values[base];
        let v10 = self.values[base + 1];
        let v01 = self.values[base + w];
        let v11 = self.values[base + w + 1];
        (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
    }

    /// Writes `x,y,value` rows with 15 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "x,y,value")?;
        for (i, k, x, y) in self.grid.nodes() {
            writeln!(out, "{:.14e},{:.14e},{:.14e}", x, y, self.at(i, k))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)
    }
}

/// Nodes `alpha_j = -d + j * h_alpha` on the source segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceGrid {
    pub d: f64,
    /// Number of intervals; there are `m_alpha + 1` sources.
    pub m_alpha: usize,
}

impl SourceGrid {
    pub fn new(d: f64, m_alpha: usize) -> Self {
        assert!(d > 0.0 && m_alpha >= 1);
        SourceGrid { d, m_alpha }
    }

    #[inline]
    pub fn n_sources(&self) -> usize {
        self.m_alpha + 1
    }

    #[inline]
    pub fn h_alpha(&self) -> f64 {
        2.0 * self.d / self.m_alpha as f64
    }

    #[inline]
    pub fn alpha(&self, j: usize) -> f64 {
        -self.d + j as f64 * self.h_alpha()
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..self.n_sources()).map(|j| self.alpha(j)).collect()
    }

    /// Trapezoid weight of node `j` (already multiplied by the step).
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        let h = self.h_alpha();
        if j == 0 || j == self.m_alpha {
            0.5 * h
        } else {
            h
        }
    }
}

/// Composite trapezoid rule over the source segment.
///
/// `samples` holds one value per source node `alpha_j`.
pub fn trapezoid_alpha(sources: &SourceGrid, samples: &[f64]) -> Result<f64> {
    if samples.len() != sources.n_sources() {
        return Err(Error::InvalidParameter(format!(
            "expected {} samples on the source grid, got {}",
            sources.n_sources(),
            samples.len()
        )));
    }
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "trapezoid rule needs at least 2 samples".into(),
        ));
    }
    Ok((0..samples.len())
        .map(|j| sources.weight(j) * samples[j])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid() -> Grid2D {
        Grid2D::over_domain(&Domain2D::reference(), 20, 20)
    }

    #[test]
    fn interp_reproduces_nodes() {
        let g = unit_grid();
        let f = ScalarField2D::from_fn(g, |x, y| (3.1 * x).sin() + y * y);
        for (i, k, x, y) in g.nodes() {
            let v = f.at(i, k);
            assert!((f.interp_bilinear(x, y).unwrap() - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn interp_exact_on_affine() {
        let g = unit_grid();
        let f = ScalarField2D::from_fn(g, |x, y| x + y);
        let p = (0.137, 1.411);
        assert!((f.interp_bilinear(p.0, p.1).unwrap() - (p.0 + p.1)).abs() < 1e-12);
    }

    #[test]
    fn interp_exact_on_product_at_cell_center() {
        // bilinear reproduces the pure product term on a tensor grid
        let g = unit_grid();
        let f = ScalarField2D::from_fn(g, |x, y| x * y);
        let (x, y) = (g.x(7) + 0.5 * g.hx, g.y(3) + 0.5 * g.hy);
        assert!((f.interp_bilinear(x, y).unwrap() - x * y).abs() < 1e-12);
    }

    #[test]
    fn interp_out_of_bounds_is_an_error() {
        let g = unit_grid();
        let f = ScalarField2D::zeros(g);
        let err = f.interp_bilinear(0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }), "{err}");
        assert!(err.to_string().contains("outside"));
    }

    #[test]
    fn trapezoid_constant_and_odd() {
        let s = SourceGrid::new(0.5, 20);
        let ones = vec![1.0; 21];
        assert!((trapezoid_alpha(&s, &ones).unwrap() - 1.0).abs() < 1e-14);
        let odd: Vec<f64> = s.alphas();
        assert!(trapezoid_alpha(&s, &odd).unwrap().abs() < 1e-14);
    }

    #[test]
    fn trapezoid_quadratic_error_bound() {
        // closed form: int_{-1/2}^{1/2} a^2 da = 1/12, error <= h^2 max|f''| / 12
        let s = SourceGrid::new(0.5, 20);
        let sq: Vec<f64> = s.alphas().iter().map(|a| a * a).collect();
        let got = trapezoid_alpha(&s, &sq).unwrap();
        let h = s.h_alpha();
        assert!((got - 1.0 / 12.0).abs() <= h * h * 2.0 / 12.0 + 1e-15);
    }

    #[test]
    fn trapezoid_second_order_convergence() {
        // observed order on a smooth integrand should be near 2
        let f = |a: f64| (1.3 * a).exp() * (2.0 * a).cos();
        let exact = {
            let q = crate::quad::GaussLegendre::new(64, -0.5, 0.5);
            q.integrate(f)
        };
        let err = |m: usize| {
            let s = SourceGrid::new(0.5, m);
            let v: Vec<f64> = s.alphas().iter().map(|&a| f(a)).collect();
            (trapezoid_alpha(&s, &v).unwrap() - exact).abs()
        };
        let order = (err(20) / err(40)).log2();
        assert!((1.8..=2.2).contains(&order), "observed order {order}");
    }

    #[test]
    fn trapezoid_rejects_wrong_length() {
        let s = SourceGrid::new(0.5, 20);
        assert!(trapezoid_alpha(&s, &[1.0]).is_err());
    }

    #[test]
    fn csv_roundtrip_format() {
        let g = Grid2D::new(0.0, 0.0, 0.5, 0.5, 1, 1);
        let f = ScalarField2D::from_fn(g, |x, y| x + 10.0 * y);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,y,value");
        // one row per node, 15 significant digits
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(text.contains("5.00000000000000e-1"));
    }

    proptest! {
        #[test]
        fn interp_exact_on_tensor_affine(
            c in proptest::array::uniform4(-5.0f64..5.0),
            px in -0.49f64..0.49,
            py in 1.01f64..1.99,
        ) {
            let g = unit_grid();
            let f = ScalarField2D::from_fn(g, |x, y| c[0] + c[1] * x + c[2] * y + c[3] * x * y);
            let want = c[0] + c[1] * px + c[2] * py + c[3] * px * py;
            let got = f.interp_bilinear(px, py).unwrap();
            prop_assert!((got - want).abs() < 1e-12);
        }
    }
}
