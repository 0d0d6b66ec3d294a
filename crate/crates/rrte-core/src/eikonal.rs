//! First-arrival travel times `tau(x, source)` in the metric
//! `sqrt(eps_r) |dx|`, solved by first-order upwind fast marching.
//!
//! The dielectric field is constant below the slab (`y <= a`), so there the
//! travel time from a sub-slab source is exactly `sqrt(eps_base)` times the
//! Euclidean distance: geodesics are straight in the constant region and
//! cannot do better through the slab, where `eps_r` is no smaller (depth
//! monotonicity). All sub-slab nodes are therefore initialized exactly and
//! the march only computes the slab region. This removes the source-cusp
//! error entirely; it subsumes the usual exact-disk initialization.

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::grid::{Grid2D, ScalarField2D, SourceGrid};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Dielectric constant field on an enlarged box containing the slab and the
/// source segment.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub eps_r: ScalarField2D,
    /// `sqrt(eps_r)` on the same nodes; Riemannian lengths interpolate this
    /// field, so `ds = sqrt(eps_r) dsigma` holds exactly against it.
    pub sqrt_eps: ScalarField2D,
    /// Depth of the slab's near face; `eps_r` is constant for `y <= slab_near`.
    pub slab_near: f64,
    /// The constant sub-slab value (1 for a physical dielectric).
    pub base: f64,
}

impl MetricField {
    /// Validates positivity, constant sub-slab values and depth monotonicity.
    pub fn new(eps_r: ScalarField2D, slab_near: f64) -> Result<Self> {
        let g = eps_r.grid;
        let mut base = None;
        for k in 0..=g.ny {
            for i in 0..=g.nx {
                let v = eps_r.at(i, k);
                if !(v > 0.0) {
                    return Err(Error::NonPositiveMetric { value: v, i, k });
                }
                if g.y(k) <= slab_near + 1e-12 {
                    let b = *base.get_or_insert(v);
                    if (v - b).abs() > 1e-9 * b {
                        return Err(Error::InvalidParameter(format!(
                            "dielectric not constant below the slab: {v} vs {b} at ({i}, {k})"
                        )));
                    }
                }
                if k > 0 {
                    let below = eps_r.at(i, k - 1);
                    if v < below - 1e-9 * below.abs() {
                        return Err(Error::InvalidParameter(format!(
                            "dielectric decreases with depth at ({i}, {k}): {v} < {below}"
                        )));
                    }
                }
            }
        }
        let base = base.ok_or_else(|| {
            Error::InvalidParameter("metric grid does not reach below the slab".into())
        })?;
        let sqrt_eps = ScalarField2D {
            grid: g,
            values: eps_r.values.iter().map(|v| v.sqrt()).collect(),
        };
        Ok(MetricField {
            eps_r,
            sqrt_eps,
            slab_near,
            base,
        })
    }

    /// The box used in the experiments: `eps_r = 1 + x^2 ln(y)` above
    /// `y = 1`, `eps_r = 1` otherwise.
    pub fn heterogeneous_slab(grid: Grid2D) -> Result<Self> {
        let f = ScalarField2D::from_fn(grid, |x, y| {
            if y > 1.0 {
                1.0 + x * x * y.ln()
            } else {
                1.0
            }
        });
        MetricField::new(f, 1.0)
    }

    /// Spatially constant dielectric.
    pub fn uniform(grid: Grid2D, eps: f64, slab_near: f64) -> Result<Self> {
        MetricField::new(ScalarField2D::from_fn(grid, |_, _| eps), slab_near)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.eps_r.grid
    }

    #[inline]
    pub fn sqrt_eps_at(&self, x: f64, y: f64) -> f64 {
        self.sqrt_eps.interp_unchecked(x, y)
    }
}

/// Travel time from one source together with its gradient fields.
#[derive(Debug, Clone)]
pub struct TravelTimeField {
    pub source: [f64; 2],
    pub tau: ScalarField2D,
    pub tau_x: ScalarField2D,
    pub tau_y: ScalarField2D,
}

#[derive(Copy, Clone)]
struct HeapEntry {
    tau: f64,
    idx: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.tau == other.tau && self.idx == other.idx
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on tau
        other
            .tau
            .total_cmp(&self.tau)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Upwind update from the smaller x- and y-neighbor values.
#[inline]
fn upwind_update(a: f64, b: f64, hx: f64, hy: f64, eps: f64) -> f64 {
    let sq = eps.sqrt();
    let one_d = (a + sq * hx).min(b + sq * hy);
    if a == f64::INFINITY || b == f64::INFINITY {
        return one_d;
    }
    let p = 1.0 / (hx * hx);
    let q = 1.0 / (hy * hy);
    let s = p + q;
    let m = p * a + q * b;
    let disc = m * m - s * (p * a * a + q * b * b - eps);
    if disc <= 0.0 {
        return one_d;
    }
    let t = (m + disc.sqrt()) / s;
    if t >= a.max(b) {
        t.min(one_d)
    } else {
        one_d
    }
}

/// Solves `|grad tau|^2 = eps_r` with `tau(source) = 0` by fast marching.
///
/// The source must lie inside the metric box and strictly below the slab
/// (on the source segment in the experiment geometry). Gradients are
/// central differences at interior nodes and one-sided second order at the
/// box faces.
pub fn solve_eikonal(metric: &MetricField, source: [f64; 2]) -> Result<TravelTimeField> {
    let g = *metric.grid();
    let [sx, sy] = source;
    if !g.in_box(sx, sy) {
        return Err(Error::OutOfBounds {
            x: sx,
            y: sy,
            x0: g.x0,
            x1: g.x_max(),
            y0: g.y0,
            y1: g.y_max(),
        });
    }
    if sy > metric.slab_near - 1e-12 {
        return Err(Error::SourceInsideDomain { x: sx, y: sy });
    }

    let w = g.nx + 1;
    let n = g.n_nodes();
    let sqrt_base = metric.base.sqrt();
    let mut tau = vec![f64::INFINITY; n];
    let mut known = vec![false; n];
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();

    // Exact initialization of the constant-metric region below the slab.
    for k in 0..=g.ny {
        if g.y(k) > metric.slab_near + 1e-12 {
            break;
        }
        for i in 0..=g.nx {
            let idx = g.idx(i, k);
            let dx = g.x(i) - sx;
            let dy = g.y(k) - sy;
            tau[idx] = sqrt_base * (dx * dx + dy * dy).sqrt();
            known[idx] = true;
        }
    }

    // Seed the frontier above the initialized band.
    let relax = |tau: &mut Vec<f64>,
                 heap: &mut BinaryHeap<HeapEntry>,
                 known: &[bool],
                 i: usize,
                 k: usize| {
        let idx = k * w + i;
        if known[idx] {
            return;
        }
        let ax = if i > 0 && known[idx - 1] {
            tau[idx - 1]
        } else {
            f64::INFINITY
        };
        let ax = if i < g.nx && known[idx + 1] {
            ax.min(tau[idx + 1])
        } else {
            ax
        };
        let ay = if k > 0 && known[idx - w] {
            tau[idx - w]
        } else {
            f64::INFINITY
        };
        let ay = if k < g.ny && known[idx + w] {
            ay.min(tau[idx + w])
        } else {
            ay
        };
        if ax == f64::INFINITY && ay == f64::INFINITY {
            return;
        }
        let t = upwind_update(ax, ay, g.hx, g.hy, metric.eps_r.values[idx]);
        if t < tau[idx] {
            tau[idx] = t;
            heap.push(HeapEntry {
                tau: t,
                idx: idx as u32,
            });
        }
    };

    for k in 0..=g.ny {
        for i in 0..=g.nx {
            if !known[k * w + i] {
                relax(&mut tau, &mut heap, &known, i, k);
            }
        }
    }

    while let Some(HeapEntry { tau: t, idx }) = heap.pop() {
        let idx = idx as usize;
        if known[idx] || t > tau[idx] {
            continue;
        }
        known[idx] = true;
        let (i, k) = (idx % w, idx / w);
        if i > 0 {
            relax(&mut tau, &mut heap, &known, i - 1, k);
        }
        if i < g.nx {
            relax(&mut tau, &mut heap, &known, i + 1, k);
        }
        if k > 0 {
            relax(&mut tau, &mut heap, &known, i, k - 1);
        }
        if k < g.ny {
            relax(&mut tau, &mut heap, &known, i, k + 1);
        }
    }

    let tau = ScalarField2D {
        grid: g,
        values: tau,
    };
    let (tau_x, tau_y) = gradient_fields(&tau);
    Ok(TravelTimeField {
        source,
        tau,
        tau_x,
        tau_y,
    })
}

/// Central differences inside, one-sided second order at the box faces.
pub fn gradient_fields(f: &ScalarField2D) -> (ScalarField2D, ScalarField2D) {
    let g = f.grid;
    let mut gx = ScalarField2D::zeros(g);
    let mut gy = ScalarField2D::zeros(g);
    let inv2x = 0.5 / g.hx;
    let inv2y = 0.5 / g.hy;
    for k in 0..=g.ny {
        for i in 0..=g.nx {
            let vx = if i == 0 {
                (-3.0 * f.at(0, k) + 4.0 * f.at(1, k) - f.at(2, k)) * inv2x
            } else if i == g.nx {
                (3.0 * f.at(i, k) - 4.0 * f.at(i - 1, k) + f.at(i - 2, k)) * inv2x
            } else {
                (f.at(i + 1, k) - f.at(i - 1, k)) * inv2x
            };
            let vy = if k == 0 {
                (-3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)) * inv2y
            } else if k == g.ny {
                (3.0 * f.at(i, k) - 4.0 * f.at(i, k - 1) + f.at(i, k - 2)) * inv2y
            } else {
                (f.at(i, k + 1) - f.at(i, k - 1)) * inv2y
            };
            *gx.at_mut(i, k) = vx;
            *gy.at_mut(i, k) = vy;
        }
    }
    (gx, gy)
}

/// Travel-time solves for every source node, parallel over sources.
pub fn solve_all_sources(
    metric: &MetricField,
    sources: &SourceGrid,
    mode: Exec,
) -> Result<Vec<TravelTimeField>> {
    let res = exec::map_collect(mode, sources.n_sources(), |j| {
        solve_eikonal(metric, [sources.alpha(j), 0.0])
    });
    res.into_iter().collect()
}

/// Writes `x,y,tau` rows.
pub fn write_travel_time_csv<W: std::io::Write>(tt: &TravelTimeField, out: &mut W) -> Result<()> {
    writeln!(out, "x,y,tau")?;
    for (i, k, x, y) in tt.tau.grid.nodes() {
        writeln!(out, "{:.14e},{:.14e},{:.14e}", x, y, tt.tau.at(i, k))?;
    }
    Ok(())
}

/// Projection coefficients of the travel-time gradient onto the basis, per
/// node of a target grid.
///
/// `grad tau(x, alpha)` is represented by its truncated expansion in
/// `{Q_m(alpha)}`; its alpha-derivative is then the same coefficients
/// against `{Q_m'}`. Both gradient components are projected with the
/// trapezoid rule over the source nodes.
#[derive(Debug, Clone)]
pub struct TauBasisTable {
    pub grid: Grid2D,
    pub n: usize,
    /// `cx[node * n + m]`: coefficients of `tau_x`.
    pub cx: Vec<f64>,
    /// `cy[node * n + m]`: coefficients of `tau_y`.
    pub cy: Vec<f64>,
}

impl TauBasisTable {
    #[inline]
    pub fn coeff_x(&self, node: usize) -> &[f64] {
        &self.cx[node * self.n..(node + 1) * self.n]
    }

    #[inline]
    pub fn coeff_y(&self, node: usize) -> &[f64] {
        &self.cy[node * self.n..(node + 1) * self.n]
    }

    /// Synthesized value `sum_m c_m q_col[m]` where `q_col` holds
    /// `Q_m(alpha)` (or `Q_m'(alpha)` for the alpha-derivative).
    #[inline]
    pub fn synth(c: &[f64], q_col: &[f64]) -> f64 {
        c.iter().zip(q_col).map(|(a, b)| a * b).sum()
    }
}

/// Projects per-source travel-time gradients onto the basis at every node
/// of `grid`.
pub fn tau_fourier_coeffs(
    tts: &[TravelTimeField],
    sources: &SourceGrid,
    basis: &BasisSet,
    grid: &Grid2D,
) -> Result<TauBasisTable> {
    basis.check_source_grid(sources)?;
    if tts.len() != sources.n_sources() {
        return Err(Error::InvalidParameter(format!(
            "expected {} travel-time fields, got {}",
            sources.n_sources(),
            tts.len()
        )));
    }
    let ns = sources.n_sources();
    let nb = basis.n;
    let mut cx = vec![0.0; grid.n_nodes() * nb];
    let mut cy = vec![0.0; grid.n_nodes() * nb];
    let mut sx = vec![0.0; ns];
    let mut sy = vec![0.0; ns];
    for (i, k, x, y) in grid.nodes() {
        for j in 0..ns {
            sx[j] = tts[j].tau_x.interp_bilinear(x, y)?;
            sy[j] = tts[j].tau_y.interp_bilinear(x, y)?;
        }
        let px = basis.project(sources, &sx)?;
        let py = basis.project(sources, &sy)?;
        let at = grid.idx(i, k) * nb;
        cx[at..at + nb].copy_from_slice(&px);
        cy[at..at + nb].copy_from_slice(&py);
    }
    Ok(TauBasisTable {
        grid: *grid,
        n: nb,
        cx,
        cy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain2D;

    fn box_grid(cells_per_unit: usize) -> Grid2D {
        // box [-0.6, 0.6] x [0, 2] around the reference slab and sources
        let h = 1.0 / cells_per_unit as f64;
        Grid2D::new(-0.6, 0.0, h, h, (1.2 / h).round() as usize, (2.0 / h).round() as usize)
    }

    #[test]
    fn unit_metric_reproduces_euclidean_distance() {
        let g = box_grid(80);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let h = g.hx;
        let mut worst = 0.0_f64;
        for (i, k, x, y) in g.nodes() {
            let d = (x * x + y * y).sqrt();
            if d <= 3.0 * h {
                continue;
            }
            worst = worst.max((tt.tau.at(i, k) - d).abs() / d);
        }
        assert!(worst < 0.02, "max relative error {worst}");
        let at = tt.tau.interp_bilinear(0.0, 1.0).unwrap();
        assert!((at - 1.0).abs() < 0.01);
    }

    #[test]
    fn scaled_metric_scales_travel_time() {
        let g = box_grid(40);
        let m = MetricField::uniform(g, 4.0, 1.0).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        for (i, k, x, y) in g.nodes() {
            let d = 2.0 * (x * x + y * y).sqrt();
            if d <= 6.0 * g.hx {
                continue;
            }
            assert!(
                (tt.tau.at(i, k) - d).abs() / d < 0.02,
                "at ({x}, {y}): {} vs {d}",
                tt.tau.at(i, k)
            );
        }
    }

    #[test]
    fn source_inside_slab_rejected() {
        let g = box_grid(20);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        assert!(matches!(
            solve_eikonal(&m, [0.0, 1.5]),
            Err(Error::SourceInsideDomain { .. })
        ));
    }

    #[test]
    fn non_positive_metric_rejected() {
        let g = box_grid(10);
        let f = ScalarField2D::from_fn(g, |x, _| if x > 0.55 { -1.0 } else { 1.0 });
        assert!(matches!(
            MetricField::new(f, 1.0),
            Err(Error::NonPositiveMetric { .. })
        ));
    }

    #[test]
    fn depth_decreasing_metric_rejected() {
        let g = box_grid(10);
        let f = ScalarField2D::from_fn(g, |_, y| if y > 1.0 { 2.0 - 0.3 * (y - 1.0) } else { 1.0 });
        assert!(MetricField::new(f, 1.0).is_err());
    }

    #[test]
    fn eikonal_residual_median_bound() {
        // median of | |grad tau|^2 - eps | over marched nodes
        let g = box_grid(80);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let mut res: Vec<f64> = Vec::new();
        for k in 1..g.ny {
            for i in 1..g.nx {
                if g.y(k) <= 1.0 {
                    continue;
                }
                let gx = tt.tau_x.at(i, k);
                let gy = tt.tau_y.at(i, k);
                res.push((gx * gx + gy * gy - m.eps_r.at(i, k)).abs());
            }
        }
        res.sort_by(f64::total_cmp);
        let median = res[res.len() / 2];
        // max |grad eps| for 1 + x^2 ln y on the box: |2 x ln y| <= 2*0.6*ln 2
        let bound = 5.0 * g.hx * (2.0 * 0.6 * 2.0_f64.ln());
        assert!(median <= bound, "median {median} vs bound {bound}");
    }

    #[test]
    fn depth_derivative_positive_on_slab() {
        // tau_y >= c > 0.5 for the experiment metric on the slab
        let g = box_grid(40);
        let m = MetricField::heterogeneous_slab(g).unwrap();
        let dom = Domain2D::reference();
        let slab = Grid2D::over_domain(&dom, 20, 20);
        let src = SourceGrid::new(dom.source_half_width, 4);
        let mut c = f64::MAX;
        for j in 0..src.n_sources() {
            let tt = solve_eikonal(&m, [src.alpha(j), 0.0]).unwrap();
            for (_, _, x, y) in slab.nodes() {
                c = c.min(tt.tau_y.interp_bilinear(x, y).unwrap());
            }
        }
        // Euclidean lower bound y / sqrt((x - alpha)^2 + y^2) at y = 1,
        // |x - alpha| <= 1 is 1/sqrt(2); the slab perturbation must not
        // push the minimum below 0.5.
        assert!(c > 0.5, "min tau_y = {c}");
    }

    #[test]
    fn reciprocity_for_unit_metric() {
        let g = box_grid(40);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let p = [0.3, 0.0];
        let q = [-0.2, 0.0];
        let tp = solve_eikonal(&m, p).unwrap();
        let tq = solve_eikonal(&m, q).unwrap();
        let a = tp.tau.interp_bilinear(q[0], q[1]).unwrap();
        let b = tq.tau.interp_bilinear(p[0], p[1]).unwrap();
        assert!((a - b).abs() <= 2.0 * g.hx);
    }

    #[test]
    fn tau_coeffs_constant_in_alpha() {
        // identical fields for all sources: synthesis reproduces the
        // constant within projection truncation error
        let g = box_grid(20);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let src = SourceGrid::new(0.5, 20);
        let tt = solve_eikonal(&m, [0.0, 0.0]).unwrap();
        let tts: Vec<TravelTimeField> = (0..src.n_sources()).map(|_| tt.clone()).collect();
        let basis = BasisSet::build(3, 0.5).unwrap();
        let slab = Grid2D::over_domain(&Domain2D::reference(), 4, 4);
        let tab = tau_fourier_coeffs(&tts, &src, &basis, &slab).unwrap();
        let q = basis.q_table(&src).unwrap();
        let node = slab.idx(2, 2);
        let truth = tt.tau_y.interp_bilinear(slab.x(2), slab.y(2)).unwrap();
        for j in 0..src.n_sources() {
            let col: Vec<f64> = (0..3).map(|mm| q[mm][j]).collect();
            let synth = TauBasisTable::synth(tab.coeff_y(node), &col);
            // the constant is not in the basis span; truncation plus the
            // trapezoid projection gives a few percent at the segment ends
            assert!((synth - truth).abs() < 8e-2 * truth.abs());
        }
    }

    #[test]
    fn tau_coeffs_polynomial_in_alpha_dense_projection() {
        // with N = m_alpha + 1 near-dense projection, polynomial-in-alpha
        // data is reproduced at the nodes within quadrature error
        let g = box_grid(20);
        let src = SourceGrid::new(0.5, 40);
        let basis = BasisSet::build(7, 0.5).unwrap();
        let slab = Grid2D::over_domain(&Domain2D::reference(), 3, 3);
        // synthetic fields: tau_x = alpha, tau_y = 1 + alpha^2 (spatially flat)
        let tts: Vec<TravelTimeField> = (0..src.n_sources())
            .map(|j| {
                let a = src.alpha(j);
                TravelTimeField {
                    source: [a, 0.0],
                    tau: ScalarField2D::from_fn(g, |_, _| 0.0),
                    tau_x: ScalarField2D::from_fn(g, |_, _| a),
                    tau_y: ScalarField2D::from_fn(g, |_, _| 1.0 + a * a),
                }
            })
            .collect();
        let tab = tau_fourier_coeffs(&tts, &src, &basis, &slab).unwrap();
        let q = basis.q_table(&src).unwrap();
        // polynomial data lies in the span at this size, so the synthesis
        // defect is bounded by the trapezoid Gram defect of the rule
        let mut gram_defect = 0.0_f64;
        for n in 0..7 {
            for m in 0..7 {
                let prod: Vec<f64> = (0..src.n_sources()).map(|j| q[n][j] * q[m][j]).collect();
                let g = crate::grid::trapezoid_alpha(&src, &prod).unwrap();
                let target = if n == m { 1.0 } else { 0.0 };
                gram_defect = gram_defect.max((g - target).abs());
            }
        }
        let node = slab.idx(1, 1);
        let bound = 3.0 * 7.0 * gram_defect * 1.25 + 1e-3;
        for j in 0..src.n_sources() {
            let a = src.alpha(j);
            let col: Vec<f64> = (0..7).map(|mm| q[mm][j]).collect();
            assert!(
                (TauBasisTable::synth(tab.coeff_x(node), &col) - a).abs() < bound,
                "x-component at {a}"
            );
            assert!(
                (TauBasisTable::synth(tab.coeff_y(node), &col) - (1.0 + a * a)).abs() < bound,
                "y-component at {a}"
            );
        }
    }

    #[test]
    fn tau_coeffs_closed_form_unit_metric() {
        // eps = 1: tau_y(x, y; alpha) = y / sqrt((x - alpha)^2 + y^2)
        let g = box_grid(60);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let src = SourceGrid::new(0.5, 20);
        let tts = solve_all_sources(&m, &src, Exec::Sequential).unwrap();
        let basis = BasisSet::build(3, 0.5).unwrap();
        let slab = Grid2D::over_domain(&Domain2D::reference(), 4, 4);
        let tab = tau_fourier_coeffs(&tts, &src, &basis, &slab).unwrap();
        let q = basis.q_table(&src).unwrap();
        let mut worst = 0.0_f64;
        for (i, k, x, y) in slab.nodes() {
            let node = slab.idx(i, k);
            for j in 0..src.n_sources() {
                let a = src.alpha(j);
                let col: Vec<f64> = (0..3).map(|mm| q[mm][j]).collect();
                let synth = TauBasisTable::synth(tab.coeff_y(node), &col);
                let exact = y / ((x - a).powi(2) + y * y).sqrt();
                worst = worst.max((synth - exact).abs());
            }
        }
        // truncation plus trapezoid projection plus finite differences
        println!("closed-form synthesis deviation: {worst:.3e}");
        assert!(worst < 0.05, "max deviation {worst}");
    }

    #[test]
    fn basis_source_mismatch_detected() {
        let g = box_grid(10);
        let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
        let src = SourceGrid::new(0.4, 4);
        let tts = solve_all_sources(&m, &src, Exec::Sequential).unwrap();
        let basis = BasisSet::build(3, 0.5).unwrap();
        let slab = Grid2D::over_domain(&Domain2D::reference(), 3, 3);
        assert!(matches!(
            tau_fourier_coeffs(&tts, &src, &basis, &slab),
            Err(Error::BasisMismatch { .. })
        ));
    }
}
