//! Geodesic polylines traced through computed travel-time fields, and line
//! integrals along them.
//!
//! A geodesic from a sub-slab source to a slab point is traced backwards
//! from the target by steepest descent through the interpolated travel
//! time (`dx/dsigma = -grad tau / |grad tau|`, midpoint steps of a quarter
//! grid cell). Once the path crosses the slab's near face it continues as
//! the exact straight segment to the source, since the metric is constant
//! below the slab. The returned polyline is ordered source -> target.

use crate::eikonal::{MetricField, TravelTimeField};
use crate::error::{Error, Result};
use crate::grid::ScalarField2D;

/// Which length element weighs a line integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathWeight {
    /// `d sigma`, Euclidean arclength.
    Euclidean,
    /// `d s = sqrt(eps_r) d sigma`, Riemannian length.
    Riemannian,
}

/// Ordered vertex list from the source to a target point, with cumulative
/// Euclidean arclength `sigma` and Riemannian length `s` per vertex.
///
/// `s` increments are trapezoid averages of `sqrt(eps_r)` at segment
/// endpoints, so `line_integral(path, sqrt(eps_r), Euclidean)` equals
/// `line_integral(path, 1, Riemannian)` identically.
#[derive(Debug, Clone)]
pub struct GeodesicPolyline {
    pub points: Vec<[f64; 2]>,
    pub sigma: Vec<f64>,
    pub s: Vec<f64>,
}

impl GeodesicPolyline {
    /// Builds cumulative lengths from an ordered vertex list.
    fn from_points(points: Vec<[f64; 2]>, metric: &MetricField) -> Self {
        let mut sigma = Vec::with_capacity(points.len());
        let mut s = Vec::with_capacity(points.len());
        sigma.push(0.0);
        s.push(0.0);
        for w in points.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            let se0 = metric.sqrt_eps_at(w[0][0], w[0][1]);
            let se1 = metric.sqrt_eps_at(w[1][0], w[1][1]);
            sigma.push(sigma.last().unwrap() + d);
            s.push(s.last().unwrap() + d * 0.5 * (se0 + se1));
        }
        GeodesicPolyline { points, sigma, s }
    }

    pub fn len_euclidean(&self) -> f64 {
        *self.sigma.last().unwrap()
    }

    pub fn len_riemannian(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Writes `x,y,sigma,s` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "x,y,sigma,s")?;
        for (p, (sig, s)) in self.points.iter().zip(self.sigma.iter().zip(&self.s)) {
            writeln!(out, "{:.14e},{:.14e},{:.14e},{:.14e}", p[0], p[1], sig, s)?;
        }
        Ok(())
    }
}

/// Traces the geodesic from the travel-time field's source to `target`.
pub fn trace_geodesic(
    tt: &TravelTimeField,
    metric: &MetricField,
    target: [f64; 2],
) -> Result<GeodesicPolyline> {
    let g = *metric.grid();
    if !g.in_box(target[0], target[1]) {
        return Err(Error::OutOfBounds {
            x: target[0],
            y: target[1],
            x0: g.x0,
            x1: g.x_max(),
            y0: g.y0,
            y1: g.y_max(),
        });
    }
    let source = tt.source;
    let near = metric.slab_near;
    let step = 0.25 * g.hx.min(g.hy);

    // Entirely below the slab: the geodesic is the straight segment,
    // subdivided at trace resolution so line integrals stay accurate.
    if target[1] <= near + 1e-12 {
        return Ok(GeodesicPolyline::from_points(
            subdivide(source, target, step),
            metric,
        ));
    }
    let max_steps = (20.0 * (g.hx * g.nx as f64 + g.hy * g.ny as f64) / step) as usize;
    let clamp = |p: [f64; 2]| -> [f64; 2] {
        [
            p[0].clamp(g.x0, g.x_max()),
            p[1].clamp(g.y0, g.y_max()),
        ]
    };
    let direction = |p: [f64; 2]| -> Result<[f64; 2]> {
        let gx = tt.tau_x.interp_unchecked(p[0], p[1]);
        let gy = tt.tau_y.interp_unchecked(p[0], p[1]);
        let norm = (gx * gx + gy * gy).sqrt();
        if norm < 0.1 * metric.base.sqrt() {
            return Err(Error::DescentStall {
                x: p[0],
                y: p[1],
                grad_norm: norm,
            });
        }
        Ok([-gx / norm, -gy / norm])
    };

    // Descend from the target until the path leaves the slab.
    let mut reversed = vec![target];
    let mut p = target;
    let mut crossed = None;
    for _ in 0..max_steps {
        let d1 = direction(p)?;
        let mid = clamp([p[0] + 0.5 * step * d1[0], p[1] + 0.5 * step * d1[1]]);
        let d2 = direction(mid)?;
        let q = clamp([p[0] + step * d2[0], p[1] + step * d2[1]]);
        if q[1] < near {
            // linear interpolation of the crossing with y = near
            let t = (near - p[1]) / (q[1] - p[1]);
            crossed = Some([p[0] + t * (q[0] - p[0]), near]);
            break;
        }
        reversed.push(q);
        p = q;
    }
    let crossing = crossed.ok_or(Error::DescentStall {
        x: p[0],
        y: p[1],
        grad_norm: f64::NAN,
    })?;

    let mut points = subdivide(source, crossing, step);
    points.extend(reversed.into_iter().rev());
    Ok(GeodesicPolyline::from_points(points, metric))
}

/// Points of the straight segment `from -> to` at roughly `step` spacing,
/// both endpoints included.
fn subdivide(from: [f64; 2], to: [f64; 2], step: f64) -> Vec<[f64; 2]> {
    let d = ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt();
    let n = (d / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|t| {
            let f = t as f64 / n as f64;
            [from[0] + f * (to[0] - from[0]), from[1] + f * (to[1] - from[1])]
        })
        .collect()
}

/// Composite trapezoid of `f` along the polyline vertices with the chosen
/// length element.
pub fn line_integral(path: &GeodesicPolyline, f: &ScalarField2D, weight: PathWeight) -> Result<f64> {
    let mut acc = 0.0;
    let mut prev = f.interp_bilinear(path.points[0][0], path.points[0][1])?;
    for v in 1..path.points.len() {
        let cur = f.interp_bilinear(path.points[v][0], path.points[v][1])?;
        let dl = match weight {
            PathWeight::Euclidean => path.sigma[v] - path.sigma[v - 1],
            PathWeight::Riemannian => path.s[v] - path.s[v - 1],
        };
        acc += 0.5 * (prev + cur) * dl;
        prev = cur;
    }
    Ok(acc)
}

/// Trapezoid of `f` along the path treating points outside the field's box
/// as zero. Used for coefficients that vanish outside the slab.
pub fn line_integral_zero_ext(path: &GeodesicPolyline, f: &ScalarField2D) -> f64 {
    let at = |p: [f64; 2]| -> f64 {
        if f.grid.in_box(p[0], p[1]) {
            f.interp_unchecked(p[0], p[1])
        } else {
            0.0
        }
    };
    let mut acc = 0.0;
    let mut prev = at(path.points[0]);
    for v in 1..path.points.len() {
        let cur = at(path.points[v]);
        acc += 0.5 * (prev + cur) * (path.sigma[v] - path.sigma[v - 1]);
        prev = cur;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eikonal::solve_eikonal;
    use crate::grid::Grid2D;

    fn box_grid(cells_per_unit: usize) -> Grid2D {
        let h = 1.0 / cells_per_unit as f64;
        Grid2D::new(-0.6, 0.0, h, h, (1.2 / h).round() as usize, (2.0 / h).round() as usize)
    }

    #[test]
    fn unit_metric_paths_are_straight() {
        let g = box_grid(40);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let target = [0.35, 1.8];
        let path = trace_geodesic(&tt, &m, target).unwrap();
        // chord deviation
        let len = (target[0].powi(2) + target[1].powi(2)).sqrt();
        let mut dev = 0.0_f64;
        for p in &path.points {
            let cross = (p[0] * target[1] - p[1] * target[0]).abs() / len;
            dev = dev.max(cross);
        }
        assert!(dev <= g.hx, "deviation {dev} vs h {}", g.hx);
        assert!((path.len_euclidean() - len).abs() < 2.0 * g.hx);
        // endpoints
        let last = path.points.last().unwrap();
        assert!((last[0] - target[0]).abs() < 1e-12 && (last[1] - target[1]).abs() < 1e-12);
        assert_eq!(path.points[0], [0.0, 0.0]);
    }

    #[test]
    fn depth_increases_along_slab_portion() {
        let g = box_grid(40);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let tt = solve_eikonal(&m, [-0.3, 0.0]).unwrap();
        let path = trace_geodesic(&tt, &m, [0.4, 1.9]).unwrap();
        let mut prev = -f64::MAX;
        for p in &path.points {
            if p[1] > 1.0 + 1e-9 {
                assert!(p[1] > prev, "depth not increasing at {:?}", p);
                prev = p[1];
            }
        }
    }

    #[test]
    fn heterogeneous_metric_bends_off_axis_paths() {
        let g = box_grid(80);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let target = [0.45, 1.95];
        let path = trace_geodesic(&tt, &m, target).unwrap();
        let len = (target[0].powi(2) + target[1].powi(2)).sqrt();
        let mut dev = 0.0_f64;
        for p in &path.points {
            let cross = (p[0] * target[1] - p[1] * target[0]).abs() / len;
            dev = dev.max(cross);
        }
        assert!(dev > g.hx, "expected visible bending, got {dev}");
    }

    #[test]
    fn short_vertical_hop_length() {
        let g = box_grid(40);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let tt = solve_eikonal(&m, [0.1, 0.0]).unwrap();
        let delta = 2.0 * g.hy;
        let path = trace_geodesic(&tt, &m, [0.1, delta]).unwrap();
        assert!((path.len_euclidean() - delta).abs() < 0.1 * delta);
    }

    #[test]
    fn line_integral_of_one_is_arclength() {
        let g = box_grid(40);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let tt = solve_eikonal(&m, [0.2, 0.0]).unwrap();
        let path = trace_geodesic(&tt, &m, [-0.3, 1.7]).unwrap();
        let ones = ScalarField2D::from_fn(g, |_, _| 1.0);
        let got = line_integral(&path, &ones, PathWeight::Euclidean).unwrap();
        assert!((got - path.len_euclidean()).abs() < 1e-12);
        let zeros = ScalarField2D::zeros(g);
        assert_eq!(line_integral(&path, &zeros, PathWeight::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn riemannian_weight_matches_sqrt_eps_integrand() {
        let g = box_grid(40);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let path = trace_geodesic(&tt, &m, [0.25, 1.6]).unwrap();
        let a = line_integral(&path, &m.sqrt_eps, PathWeight::Euclidean).unwrap();
        let ones = ScalarField2D::from_fn(g, |_, _| 1.0);
        let b = line_integral(&path, &ones, PathWeight::Riemannian).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn riemannian_increment_tracks_metric_segmentwise() {
        let g = box_grid(40);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let path = trace_geodesic(&tt, &m, [0.3, 1.9]).unwrap();
        for v in 1..path.points.len() {
            let dsig = path.sigma[v] - path.sigma[v - 1];
            if dsig < 1e-14 {
                continue;
            }
            let ds = path.s[v] - path.s[v - 1];
            let mid = [
                0.5 * (path.points[v][0] + path.points[v - 1][0]),
                0.5 * (path.points[v][1] + path.points[v - 1][1]),
            ];
            let se = m.sqrt_eps_at(mid[0], mid[1]);
            assert!((ds / dsig - se).abs() < 5e-3, "segment {v}");
        }
    }

    #[test]
    fn csv_export_shape() {
        let g = box_grid(20);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let path = trace_geodesic(&tt, &m, [0.2, 1.5]).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,sigma,s\n"));
        assert_eq!(text.lines().count(), 1 + path.points.len());
    }
}
