//! Forward transport: the steady-state radiance generated by mollified
//! point sources, computed through the equivalent Volterra integral
//! equation.
//!
//! Multiplying the transport equation by the attenuation exponential
//! `p(x, source) = exp(int_path a dsigma)` turns it into a fixed-point
//! equation along geodesics,
//!
//! ```text
//! u(x, a) = u0(x, a)
//!         + p^{-1}(x, a) int_path p(xi) mu_s(xi) [ int K(a, b) u(xi, b) db ] dsigma,
//! u0(x, a) = p^{-1}(x, a) int_path f(xi - x_a) dsigma,
//! ```
//!
//! whose kernel is of Volterra type in depth (geodesics cross the slab with
//! strictly increasing depth), so Picard iteration converges factorially.
//! The scattering kernel vanishes below the slab, which restricts the path
//! integral to the slab portion of each geodesic.

use crate::eikonal::{solve_all_sources, MetricField, TravelTimeField};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::galerkin::{boundary_nodes, Side};
use crate::geodesic::trace_geodesic;
use crate::grid::{Domain2D, Grid2D, ScalarField2D, SourceGrid};
use crate::quad::GaussLegendre;
use serde::Serialize;

/// Picard stop threshold on the max-norm update.
pub const PICARD_TOL: f64 = 1e-10;
/// Picard iteration cap. The Neumann terms grow like `q^n / n!` with
/// `q = 2 d K_0 L` around 20 for the reference scattering level, so they
/// peak near sweep 20 and need roughly 70 sweeps to fall below the stop
/// threshold; 200 leaves ample room.
pub const PICARD_MAX_ITERS: usize = 200;

/// 2D Henyey–Greenstein phase kernel
/// `K(a, b) = (1/2d) (1 - g^2) / (1 + g^2 - 2 g cos(a - b))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseKernel {
    pub g: f64,
    pub d: f64,
}

impl PhaseKernel {
    pub fn new(g: f64, d: f64) -> Result<Self> {
        if !(g.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "anisotropy must satisfy |g| < 1, got {g}"
            )));
        }
        if d <= 0.0 {
            return Err(Error::InvalidParameter("kernel half-width must be > 0".into()));
        }
        Ok(PhaseKernel { g, d })
    }

    #[inline]
    pub fn eval(&self, alpha: f64, beta: f64) -> f64 {
        let g = self.g;
        (1.0 - g * g) / ((1.0 + g * g - 2.0 * g * (alpha - beta).cos()) * 2.0 * self.d)
    }

    pub fn max_value(&self) -> f64 {
        // cos(a - b) = 1
        (1.0 + self.g.abs()) / ((1.0 - self.g.abs()) * 2.0 * self.d)
    }

    /// `K(alpha_j, beta_l) * trapezoid_weight(l)`, row-major `[j][l]`.
    pub fn weighted_matrix(&self, sources: &SourceGrid) -> Vec<Vec<f64>> {
        let alphas = sources.alphas();
        (0..sources.n_sources())
            .map(|j| {
                (0..sources.n_sources())
                    .map(|l| self.eval(alphas[j], alphas[l]) * sources.weight(l))
                    .collect()
            })
            .collect()
    }
}

/// Compactly supported mollified point source
/// `f(r) = C_eps exp(-r^2 / (eps^2 - r^2))` for `r < eps`, zero otherwise,
/// normalized so the 2D integral equals one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SourceMollifier {
    pub eps: f64,
    pub c_eps: f64,
    /// `int_0^eps f(r) dr`: the f-integral along any ray leaving the center.
    pub ray_integral: f64,
}

impl SourceMollifier {
    pub fn new(eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mollifier radius must be > 0, got {eps}"
            )));
        }
        let profile = |r: f64| {
            if r >= eps {
                0.0
            } else {
                (-r * r / (eps * eps - r * r)).exp()
            }
        };
        let q = GaussLegendre::new(128, 0.0, eps);
        let area = 2.0 * std::f64::consts::PI * q.integrate(|r| r * profile(r));
        let c_eps = 1.0 / area;
        let ray_integral = c_eps * q.integrate(profile);
        Ok(SourceMollifier {
            eps,
            c_eps,
            ray_integral,
        })
    }

    /// `f(p - center)`.
    #[inline]
    pub fn value(&self, p: [f64; 2], center: [f64; 2]) -> f64 {
        let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
        let e2 = self.eps * self.eps;
        if r2 >= e2 {
            0.0
        } else {
            self.c_eps * (-r2 / (e2 - r2)).exp()
        }
    }
}

/// Everything the forward problem needs: coefficients on the slab grid,
/// the metric on its enlarged box, kernel and source shape.
#[derive(Debug, Clone)]
pub struct OpticalModel {
    pub domain: Domain2D,
    pub mu_a: ScalarField2D,
    pub mu_s: ScalarField2D,
    /// `a = mu_a + mu_s` on the slab grid.
    pub attenuation: ScalarField2D,
    pub metric: MetricField,
    pub kernel: PhaseKernel,
    pub source: SourceMollifier,
}

impl OpticalModel {
    pub fn new(
        domain: Domain2D,
        mu_a: ScalarField2D,
        mu_s: ScalarField2D,
        metric: MetricField,
        kernel: PhaseKernel,
        source: SourceMollifier,
    ) -> Result<Self> {
        if mu_a.grid != mu_s.grid {
            return Err(Error::InvalidParameter(
                "mu_a and mu_s must share one grid".into(),
            ));
        }
        if mu_a.values.iter().chain(&mu_s.values).any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter(
                "absorption and scattering must be nonnegative".into(),
            ));
        }
        // the mollifier must vanish on the closure of the slab
        if source.eps >= domain.near {
            return Err(Error::InvalidParameter(format!(
                "mollifier radius {} reaches the slab at depth {}",
                source.eps, domain.near
            )));
        }
        let attenuation = ScalarField2D {
            grid: mu_a.grid,
            values: mu_a
                .values
                .iter()
                .zip(&mu_s.values)
                .map(|(a, s)| a + s)
                .collect(),
        };
        Ok(OpticalModel {
            domain,
            mu_a,
            mu_s,
            attenuation,
            metric,
            kernel,
            source,
        })
    }
}

/// `p(path) = exp(int_path a dsigma)` with `a` extended by zero outside its
/// grid. At least one, since `a >= 0`.
pub fn attenuation_p(path: &crate::geodesic::GeodesicPolyline, a: &ScalarField2D) -> f64 {
    crate::geodesic::line_integral_zero_ext(path, a).exp()
}

/// One quadrature vertex of a slab path portion: bilinear stencil into the
/// slab grid plus the combined weight
/// `dsigma_weight * mu_s(xi) * p(xi, source)`.
#[derive(Debug, Clone, Copy)]
pub struct SlabVertex {
    pub cell: u32,
    pub fx: f32,
    pub fy: f32,
    pub w: f64,
}

/// Precomputed per-(node, source) path data: the unscattered radiance, the
/// endpoint attenuation exponential, and the slab quadrature vertices.
#[derive(Debug)]
pub struct PathTable {
    pub grid: Grid2D,
    pub sources: SourceGrid,
    /// `u0[node * ns + j]`.
    pub u0: Vec<f64>,
    /// `p[node * ns + j] = exp(int a)` along the full geodesic.
    pub p: Vec<f64>,
    /// CSR layout: vertices of pair `q` are `verts[offsets[q]..offsets[q+1]]`.
    pub verts: Vec<SlabVertex>,
    pub offsets: Vec<usize>,
}

struct PairPaths {
    u0: f64,
    p: f64,
    verts: Vec<SlabVertex>,
}

fn build_pair(
    model: &OpticalModel,
    grid: &Grid2D,
    tt: &TravelTimeField,
    target: [f64; 2],
) -> Result<PairPaths> {
    let path = trace_geodesic(tt, &model.metric, target)?;
    let npts = path.points.len();

    // cumulative attenuation integral along the path (zero-extended a)
    let a_at = |p: [f64; 2]| -> f64 {
        if model.attenuation.grid.in_box(p[0], p[1]) {
            model.attenuation.interp_unchecked(p[0], p[1])
        } else {
            0.0
        }
    };
    let mut prefix = vec![0.0; npts];
    let mut prev = a_at(path.points[0]);
    for v in 1..npts {
        let cur = a_at(path.points[v]);
        prefix[v] = prefix[v - 1] + 0.5 * (prev + cur) * (path.sigma[v] - path.sigma[v - 1]);
        prev = cur;
    }
    let p_total = prefix[npts - 1].exp();
    debug_assert!(path.len_euclidean() > model.source.eps);
    let u0 = model.source.ray_integral / p_total;

    // resample the slab portion for the scattering quadrature
    let near = model.domain.near;
    let spacing = 0.5 * grid.hy.min(grid.hx);
    let mut kept: Vec<(usize, f64)> = Vec::new(); // (vertex, sigma)
    for v in 0..npts {
        if path.points[v][1] < near - 1e-12 {
            continue;
        }
        let sig = path.sigma[v];
        match kept.last() {
            Some(&(_, last)) if sig - last < spacing && v != npts - 1 => {}
            _ => kept.push((v, sig)),
        }
    }
    let mut verts = Vec::with_capacity(kept.len());
    if kept.len() >= 2 {
        for (pos, &(v, sig)) in kept.iter().enumerate() {
            let wq = if pos == 0 {
                0.5 * (kept[1].1 - sig)
            } else if pos == kept.len() - 1 {
                0.5 * (sig - kept[pos - 1].1)
            } else {
                0.5 * (kept[pos + 1].1 - kept[pos - 1].1)
            };
            let pt = path.points[v];
            if !model.mu_s.grid.in_box(pt[0], pt[1]) {
                continue; // outside the slab: mu_s = 0
            }
            let mus = model.mu_s.interp_unchecked(pt[0], pt[1]);
            if mus == 0.0 || wq == 0.0 {
                continue;
            }
            let (i, k, fx, fy) = grid.locate(pt[0], pt[1]);
            verts.push(SlabVertex {
                cell: grid.idx(i, k) as u32,
                fx: fx as f32,
                fy: fy as f32,
                w: wq * mus * prefix[v].exp(),
            });
        }
    }
    Ok(PairPaths {
        u0,
        p: p_total,
        verts,
    })
}

/// Traces every (node, source) geodesic and assembles the path table.
pub fn build_paths(
    model: &OpticalModel,
    grid: &Grid2D,
    sources: &SourceGrid,
    tts: &[TravelTimeField],
    mode: Exec,
) -> Result<PathTable> {
    let ns = sources.n_sources();
    let n_pairs = grid.n_nodes() * ns;
    let pairs = exec::map_collect(mode, n_pairs, |q| {
        let node = q / ns;
        let j = q % ns;
        let (i, k) = (node % (grid.nx + 1), node / (grid.nx + 1));
        build_pair(model, grid, &tts[j], [grid.x(i), grid.y(k)])
    });
    let mut u0 = Vec::with_capacity(n_pairs);
    let mut p = Vec::with_capacity(n_pairs);
    let mut offsets = Vec::with_capacity(n_pairs + 1);
    let mut verts = Vec::new();
    offsets.push(0);
    for pair in pairs {
        let pair = pair?;
        u0.push(pair.u0);
        p.push(pair.p);
        verts.extend_from_slice(&pair.verts);
        offsets.push(verts.len());
    }
    Ok(PathTable {
        grid: *grid,
        sources: sources.clone(),
        u0,
        p,
        verts,
        offsets,
    })
}

/// Steady-state radiance per (node, source) plus the pieces needed for the
/// boundary data and diagnostics.
#[derive(Debug)]
pub struct ForwardSolution {
    pub grid: Grid2D,
    pub sources: SourceGrid,
    /// `u[node * ns + j]`.
    pub u: Vec<f64>,
    pub u0: Vec<f64>,
    pub p: Vec<f64>,
    pub iterations: usize,
    /// Bound on the effective scattering kernel `mu_s max K`.
    pub kernel_bound: f64,
    /// `min u0` over slab nodes and sources (the positivity constant).
    pub min_u0: f64,
    /// Max-norm updates per sweep, for the factorial-decay diagnostics.
    pub update_history: Vec<f64>,
}

#[inline]
fn scatter_sum(u: &[f64], ns: usize, row_stride: usize, v: &SlabVertex, kw_row: &[f64]) -> f64 {
    let c = v.cell as usize;
    let (fx, fy) = (v.fx as f64, v.fy as f64);
    let w00 = (1.0 - fx) * (1.0 - fy);
    let w10 = fx * (1.0 - fy);
    let w01 = (1.0 - fx) * fy;
    let w11 = fx * fy;
    let b00 = c * ns;
    let b10 = (c + 1) * ns;
    let b01 = (c + row_stride) * ns;
    let b11 = (c + row_stride + 1) * ns;
    let mut acc = 0.0;
    for l in 0..ns {
        let s = w00 * u[b00 + l] + w10 * u[b10 + l] + w01 * u[b01 + l] + w11 * u[b11 + l];
        acc += kw_row[l] * s;
    }
    acc
}

/// One Picard sweep: `u_next = u0 + p^{-1} * path-sum of kernel-weighted
/// scattering`. Returns the max-norm update.
pub fn picard_sweep(
    paths: &PathTable,
    kw: &[Vec<f64>],
    u_cur: &[f64],
    u_next: &mut [f64],
    mode: Exec,
) -> f64 {
    let ns = paths.sources.n_sources();
    let row = paths.grid.nx + 1;
    exec::for_each_chunk_mut(mode, u_next, ns, |node, out| {
        for (j, slot) in out.iter_mut().enumerate() {
            let q = node * ns + j;
            let mut acc = 0.0;
            for v in &paths.verts[paths.offsets[q]..paths.offsets[q + 1]] {
                acc += v.w * scatter_sum(u_cur, ns, row, v, &kw[j]);
            }
            *slot = paths.u0[q] + acc / paths.p[q];
        }
    });
    u_cur
        .iter()
        .zip(u_next.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Solves the forward problem on the nodes of `grid` for all sources.
pub fn solve_forward(
    model: &OpticalModel,
    grid: &Grid2D,
    sources: &SourceGrid,
    mode: Exec,
) -> Result<ForwardSolution> {
    let tts = solve_all_sources(&model.metric, sources, mode)?;
    let paths = build_paths(model, grid, sources, &tts, mode)?;
    solve_forward_with_paths(model, &paths, mode)
}

/// Picard iteration over a prebuilt path table.
pub fn solve_forward_with_paths(
    model: &OpticalModel,
    paths: &PathTable,
    mode: Exec,
) -> Result<ForwardSolution> {
    let kw = model.kernel.weighted_matrix(&paths.sources);
    let mut u = paths.u0.clone();
    let mut next = vec![0.0; u.len()];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..PICARD_MAX_ITERS {
        let delta = picard_sweep(paths, &kw, &u, &mut next, mode);
        std::mem::swap(&mut u, &mut next);
        history.push(delta);
        if delta < PICARD_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iters: PICARD_MAX_ITERS,
            residual: *history.last().unwrap(),
        });
    }
    let mus_max = model.mu_s.values.iter().cloned().fold(0.0, f64::max);
    let min_u0 = paths.u0.iter().cloned().fold(f64::MAX, f64::min);
    Ok(ForwardSolution {
        grid: paths.grid,
        sources: paths.sources.clone(),
        iterations: history.len(),
        kernel_bound: mus_max * model.kernel.max_value(),
        min_u0,
        update_history: history,
        u,
        u0: paths.u0.clone(),
        p: paths.p.clone(),
    })
}

/// Evaluates the converged radiance at a new, typically denser, source
/// set by one application of the integral operator: the new sources'
/// unscattered parts and paths are exact, and the scattering integral
/// reads the converged coarse-source field (the fixed point makes this
/// evaluation, not another iteration). Dense-in-source radiance feeds the
/// basis projections, whose quadrature on the measurement sources alone
/// would pollute higher coefficients.
pub fn extend_solution(
    model: &OpticalModel,
    coarse: &ForwardSolution,
    dense_sources: &SourceGrid,
    dense_tts: &[TravelTimeField],
    mode: Exec,
) -> Result<ForwardSolution> {
    let grid = coarse.grid;
    let paths = build_paths(model, &grid, dense_sources, dense_tts, mode)?;
    let ns_coarse = coarse.sources.n_sources();
    let nd = dense_sources.n_sources();
    let alphas = dense_sources.alphas();
    // kernel rows against the coarse quadrature
    let kw_cross: Vec<Vec<f64>> = (0..nd)
        .map(|j| {
            (0..ns_coarse)
                .map(|l| model.kernel.eval(alphas[j], coarse.sources.alpha(l)) * coarse.sources.weight(l))
                .collect()
        })
        .collect();
    let row = grid.nx + 1;
    let mut u = vec![0.0; grid.n_nodes() * nd];
    exec::for_each_chunk_mut(mode, &mut u, nd, |node, out| {
        for (j, slot) in out.iter_mut().enumerate() {
            let q = node * nd + j;
            let mut acc = 0.0;
            for v in &paths.verts[paths.offsets[q]..paths.offsets[q + 1]] {
                acc += v.w * scatter_sum(&coarse.u, ns_coarse, row, v, &kw_cross[j]);
            }
            *slot = paths.u0[q] + acc / paths.p[q];
        }
    });
    let min_u0 = paths.u0.iter().cloned().fold(f64::MAX, f64::min);
    Ok(ForwardSolution {
        grid,
        sources: dense_sources.clone(),
        u,
        u0: paths.u0,
        p: paths.p,
        iterations: coarse.iterations,
        kernel_bound: coarse.kernel_bound,
        min_u0,
        update_history: coarse.update_history.clone(),
    })
}

/// Measured radiance on the slab boundary: the solved field on the lateral
/// and far sides, the computable unscattered part on the inflow side.
#[derive(Debug, Clone)]
pub struct BoundaryDataSet {
    pub grid: Grid2D,
    pub sources: SourceGrid,
    pub nodes: Vec<(usize, usize, Side)>,
    /// `values[pos * ns + j]` for `nodes[pos]`.
    pub values: Vec<f64>,
}

impl BoundaryDataSet {
    #[inline]
    pub fn value(&self, pos: usize, j: usize) -> f64 {
        self.values[pos * self.sources.n_sources() + j]
    }

    /// Writes `side,x,y,alpha,g` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "side,x,y,alpha,g")?;
        for (pos, &(i, k, side)) in self.nodes.iter().enumerate() {
            for j in 0..self.sources.n_sources() {
                writeln!(
                    out,
                    "{},{:.14e},{:.14e},{:.14e},{:.14e}",
                    side.id(),
                    self.grid.x(i),
                    self.grid.y(k),
                    self.sources.alpha(j),
                    self.value(pos, j)
                )?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)
    }

    /// Parses rows written by [`BoundaryDataSet::write_csv`] against a known
    /// grid and source layout.
    pub fn read_csv<R: std::io::BufRead>(
        input: R,
        grid: Grid2D,
        sources: SourceGrid,
    ) -> Result<Self> {
        let nodes = boundary_nodes(&grid);
        let ns = sources.n_sources();
        let mut index = std::collections::HashMap::new();
        for (pos, &(i, k, _)) in nodes.iter().enumerate() {
            index.insert((i, k), pos);
        }
        let mut values = vec![f64::NAN; nodes.len() * ns];
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                continue;
            }
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Parse(format!(
                    "boundary row {lineno}: expected 5 columns, got {}",
                    cols.len()
                )));
            }
            let x: f64 = cols[1].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let y: f64 = cols[2].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let alpha: f64 = cols[3].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let g: f64 = cols[4].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let i = ((x - grid.x0) / grid.hx).round() as i64;
            let k = ((y - grid.y0) / grid.hy).round() as i64;
            let j = ((alpha + sources.d) / sources.h_alpha()).round() as i64;
            if i < 0 || k < 0 || j < 0 || j >= ns as i64 {
                continue; // node from a finer grid, not on this one
            }
            let (iu, ku, ju) = (i as usize, k as usize, j as usize);
            if (grid.x(iu) - x).abs() > 1e-9 * grid.hx.max(1.0)
                || (grid.y(ku) - y).abs() > 1e-9 * grid.hy.max(1.0)
                || (sources.alpha(ju) - alpha).abs() > 1e-9
            {
                continue;
            }
            if let Some(&pos) = index.get(&(iu, ku)) {
                values[pos * ns + ju] = g;
            }
        }
        if let Some(flat) = values.iter().position(|v| v.is_nan()) {
            let pos = flat / ns;
            let (i, k, _) = nodes[pos];
            return Err(Error::Parse(format!(
                "boundary data incomplete: no value for node ({i}, {k}), source {}",
                flat % ns
            )));
        }
        Ok(BoundaryDataSet {
            grid,
            sources,
            nodes,
            values,
        })
    }

    pub fn load_csv(path: &std::path::Path, grid: Grid2D, sources: SourceGrid) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(f, grid, sources)
    }

    /// Restriction to the boundary nodes of a coarser grid whose nodes are
    /// a subset of this one's.
    pub fn restrict_to(&self, coarse: Grid2D) -> Result<BoundaryDataSet> {
        let ns = self.sources.n_sources();
        let nodes = boundary_nodes(&coarse);
        let mut values = Vec::with_capacity(nodes.len() * ns);
        for &(i, k, _) in &nodes {
            let (x, y) = (coarse.x(i), coarse.y(k));
            let pos = self
                .nodes
                .iter()
                .position(|&(fi, fk, _)| {
                    (self.grid.x(fi) - x).abs() < 1e-9 && (self.grid.y(fk) - y).abs() < 1e-9
                })
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "coarse boundary node ({x}, {y}) is not a node of the data grid"
                    ))
                })?;
            values.extend_from_slice(&self.values[pos * ns..(pos + 1) * ns]);
        }
        Ok(BoundaryDataSet {
            grid: coarse,
            sources: self.sources.clone(),
            nodes,
            values,
        })
    }
}

/// Extracts the boundary data: solved radiance on the lateral and far
/// sides, the unscattered part on the inflow side. All values must be
/// positive (their logarithm feeds the inversion).
pub fn extract_boundary(sol: &ForwardSolution) -> Result<BoundaryDataSet> {
    let ns = sol.sources.n_sources();
    let nodes = boundary_nodes(&sol.grid);
    let mut values = Vec::with_capacity(nodes.len() * ns);
    for &(i, k, side) in &nodes {
        let node = sol.grid.idx(i, k);
        for j in 0..ns {
            let v = match side {
                Side::Near => sol.u0[node * ns + j],
                _ => sol.u[node * ns + j],
            };
            if !(v > 0.0) {
                return Err(Error::NonPositiveBoundary {
                    x: sol.grid.x(i),
                    y: sol.grid.y(k),
                    source_index: j,
                    value: v,
                });
            }
            values.push(v);
        }
    }
    Ok(BoundaryDataSet {
        grid: sol.grid,
        sources: sol.sources.clone(),
        nodes,
        values,
    })
}
