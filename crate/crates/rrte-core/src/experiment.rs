//! Scene configuration, pipeline orchestration and machine-readable
//! reports.
//!
//! A scene bundles the slab geometry, grids, phantom, kernel, noise and
//! optimizer choices. Simulated boundary data is always generated on a
//! grid at least twice finer than the inversion grid and then restricted
//! to it, so inversion never sees its own discretization. Reports are
//! plain serializable structs; a fixed seed makes a whole experiment
//! byte-reproducible except for the timing field.

use crate::basis::BasisSet;
use crate::eikonal::{solve_all_sources, MetricField, TravelTimeField};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{
    extract_boundary, BoundaryDataSet, ForwardSolution, OpticalModel, PhaseKernel,
    SourceMollifier,
};
use crate::galerkin::GalerkinState;
use crate::grid::{Domain2D, Grid2D, ScalarField2D, SourceGrid};
use crate::inverse::{
    boundary_coefficients, minimize, recover_a, starting_point, BoundaryVector, FunctionalConfig,
    MinimizeResult, OptimizerKind, SystemCoefficients,
};
use crate::noise::{add_noise, NoiseSpec};
use crate::phantom::{rasterize_letter, Phantom, Placement};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainSection {
    pub half_width: f64,
    pub near: f64,
    pub far: f64,
    pub source_half_width: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            half_width: 0.5,
            near: 1.0,
            far: 2.0,
            source_half_width: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSection {
    /// Transverse intervals of the inversion grid.
    pub m: usize,
    /// Depth intervals of the inversion grid.
    pub m_y: usize,
    /// Data-simulation refinement over the inversion grid (>= 2).
    pub sim_refine: usize,
    /// Travel-time box resolution, cells per unit length.
    pub tau_cells_per_unit: usize,
    /// Extra box cells beyond the slab and source segment.
    pub box_pad_cells: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            m: 20,
            m_y: 20,
            sim_refine: 2,
            tau_cells_per_unit: 80,
            box_pad_cells: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceSection {
    /// Source intervals of the transport solve (the scattering
    /// beta-quadrature runs on these nodes).
    pub m_alpha: usize,
    /// Source intervals of the recorded data and of every inverse-side
    /// projection. The converged radiance is extended to this grid by one
    /// application of the integral operator; projections onto the basis
    /// need a denser quadrature than the transport solve does.
    pub m_alpha_data: usize,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection {
            m_alpha: 20,
            m_alpha_data: 80,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSection {
    /// "A", "S", "Z", "SZ", "Omega", or "none".
    pub glyph: String,
    pub c_a: f64,
    pub mu_s: f64,
    /// `[x0, y0, x1, y1]`.
    pub placement: [f64; 4],
}

impl Default for PhantomSection {
    fn default() -> Self {
        PhantomSection {
            glyph: "A".into(),
            c_a: 5.0,
            mu_s: 5.0,
            placement: [-0.35, 1.15, 0.35, 1.85],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSection {
    pub g: f64,
    pub source_eps: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            g: 0.5,
            source_eps: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSection {
    /// "heterogeneous" (the slab profile `1 + x^2 ln y`) or "unit".
    pub kind: String,
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection {
            kind: "heterogeneous".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSection {
    pub delta: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { delta: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSection {
    pub lambda: f64,
    pub n_basis: usize,
    pub mode: OptimizerKind,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub beta: f64,
    pub radius: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            lambda: 5.0,
            n_basis: 3,
            mode: OptimizerKind::Qn,
            grad_tol: 1e-2,
            max_iters: 2000,
            beta: 0.5,
            radius: 1e3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RngSection {
    /// Pinned generator family, so reports are portable.
    pub algorithm: String,
}

impl Default for RngSection {
    fn default() -> Self {
        RngSection {
            algorithm: "chacha8".into(),
        }
    }
}

/// Full scene description; every field has a default matching the
/// reference experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SceneConfig {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub sources: SourceSection,
    pub phantom: PhantomSection,
    pub kernel: KernelSection,
    pub metric: MetricSection,
    pub noise: NoiseSection,
    pub optimizer: OptimizerSection,
    pub rng: RngSection,
    pub seed: u64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.sim_refine < 2 {
            return Err(Error::InvalidParameter(
                "sim_refine must be >= 2: data must come from a finer grid than the inversion"
                    .into(),
            ));
        }
        if self.rng.algorithm != "chacha8" {
            return Err(Error::InvalidParameter(format!(
                "unsupported rng algorithm '{}': reports pin chacha8",
                self.rng.algorithm
            )));
        }
        if self.metric.kind != "unit" && self.metric.kind != "heterogeneous" {
            return Err(Error::InvalidParameter(format!(
                "unknown metric kind '{}'",
                self.metric.kind
            )));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain2D> {
        Domain2D::new(
            self.domain.half_width,
            self.domain.near,
            self.domain.far,
            self.domain.source_half_width,
        )
    }

    pub fn inversion_grid(&self) -> Result<Grid2D> {
        Ok(Grid2D::over_domain(&self.domain()?, self.grid.m, self.grid.m_y))
    }

    pub fn simulation_grid(&self) -> Result<Grid2D> {
        Ok(Grid2D::over_domain(
            &self.domain()?,
            self.grid.m * self.grid.sim_refine,
            self.grid.m_y * self.grid.sim_refine,
        ))
    }

    /// The data and inversion source grid.
    pub fn source_grid(&self) -> Result<SourceGrid> {
        Ok(SourceGrid::new(
            self.domain()?.source_half_width,
            self.sources.m_alpha_data.max(self.sources.m_alpha),
        ))
    }

    /// The transport-solve source grid.
    pub fn transport_source_grid(&self) -> Result<SourceGrid> {
        Ok(SourceGrid::new(
            self.domain()?.source_half_width,
            self.sources.m_alpha,
        ))
    }

    /// Travel-time box: covers the slab, the source segment and a pad.
    pub fn metric_box(&self) -> Result<Grid2D> {
        let d = self.domain()?;
        let h = 1.0 / self.grid.tau_cells_per_unit as f64;
        let pad = self.grid.box_pad_cells;
        let half = d.half_width.max(d.source_half_width);
        let nx_half = (half / h).ceil() as usize + pad;
        let ny = (d.far / h).ceil() as usize + pad;
        Ok(Grid2D::new(
            -(nx_half as f64) * h,
            0.0,
            h,
            h,
            2 * nx_half,
            ny,
        ))
    }

    pub fn build_metric(&self) -> Result<MetricField> {
        let boxg = self.metric_box()?;
        match self.metric.kind.as_str() {
            "unit" => MetricField::uniform(boxg, 1.0, self.domain.near),
            "heterogeneous" => {
                if (self.domain.near - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(
                        "the heterogeneous profile is anchored at near depth 1".into(),
                    ));
                }
                MetricField::heterogeneous_slab(boxg)
            }
            other => Err(Error::InvalidParameter(format!("unknown metric kind '{other}'"))),
        }
    }

    pub fn phantom_on(&self, grid: &Grid2D) -> Result<Phantom> {
        let p = self.phantom.placement;
        let placement = Placement::new(p[0], p[1], p[2], p[3]);
        if self.phantom.glyph == "none" || self.phantom.glyph.is_empty() {
            return Ok(Phantom::empty(*grid, self.phantom.mu_s));
        }
        let mask = rasterize_letter(&self.phantom.glyph, grid, placement)?;
        Ok(Phantom::new(*grid, mask, self.phantom.c_a, self.phantom.mu_s))
    }

    pub fn functional_config(&self) -> FunctionalConfig {
        FunctionalConfig {
            lambda: self.optimizer.lambda,
            grad_tol: self.optimizer.grad_tol,
            max_iters: self.optimizer.max_iters,
            beta: self.optimizer.beta,
            radius: self.optimizer.radius,
            optimizer: self.optimizer.mode,
            lbfgs_memory: 10,
        }
    }
}

/// Everything the forward stage produces.
pub struct SimulationArtifacts {
    pub sim_grid: Grid2D,
    pub sources: SourceGrid,
    pub model: OpticalModel,
    pub tts: Vec<TravelTimeField>,
    pub solution: ForwardSolution,
    /// Boundary data on the simulation grid.
    pub boundary: BoundaryDataSet,
}

/// Runs the forward pipeline on the simulation grid: Picard iteration on
/// the transport source grid, then extension of the converged radiance to
/// the data source grid.
pub fn simulate_scene(cfg: &SceneConfig, mode: Exec) -> Result<SimulationArtifacts> {
    cfg.validate()?;
    let domain = cfg.domain()?;
    let sim_grid = cfg.simulation_grid()?;
    let transport_sources = cfg.transport_source_grid()?;
    let data_sources = cfg.source_grid()?;
    let metric = cfg.build_metric()?;
    let phantom = cfg.phantom_on(&sim_grid)?;
    let model = OpticalModel::new(
        domain,
        phantom.mu_a_field(),
        phantom.mu_s_field(),
        metric,
        PhaseKernel::new(cfg.kernel.g, domain.source_half_width)?,
        SourceMollifier::new(cfg.kernel.source_eps)?,
    )?;
    let coarse_tts = solve_all_sources(&model.metric, &transport_sources, mode)?;
    let paths =
        crate::forward::build_paths(&model, &sim_grid, &transport_sources, &coarse_tts, mode)?;
    let coarse = crate::forward::solve_forward_with_paths(&model, &paths, mode)?;
    let (tts, solution) = if data_sources.n_sources() == transport_sources.n_sources() {
        (coarse_tts, coarse)
    } else {
        let dense_tts = solve_all_sources(&model.metric, &data_sources, mode)?;
        let dense =
            crate::forward::extend_solution(&model, &coarse, &data_sources, &dense_tts, mode)?;
        (dense_tts, dense)
    };
    let boundary = extract_boundary(&solution)?;
    Ok(SimulationArtifacts {
        sim_grid,
        sources: data_sources,
        model,
        tts,
        solution,
        boundary,
    })
}

/// Inversion-side frozen data for one basis size.
pub struct InversionContext {
    pub basis: BasisSet,
    pub coeffs: SystemCoefficients,
    pub pvec: BoundaryVector,
    pub v0: GalerkinState,
}

/// Assembles the inversion context from boundary data on the inversion
/// grid and precomputed travel-time fields.
pub fn inversion_context(
    cfg: &SceneConfig,
    data: &BoundaryDataSet,
    tts: &[TravelTimeField],
    n_basis: usize,
) -> Result<InversionContext> {
    let domain = cfg.domain()?;
    let inv_grid = cfg.inversion_grid()?;
    let sources = cfg.source_grid()?;
    let metric = cfg.build_metric()?;
    let basis = BasisSet::build(n_basis, domain.source_half_width)?;
    let mu_s = ScalarField2D::from_fn(inv_grid, |_, _| cfg.phantom.mu_s);
    let kernel = PhaseKernel::new(cfg.kernel.g, domain.source_half_width)?;
    let coeffs =
        SystemCoefficients::assemble(tts, &metric, &mu_s, &kernel, &basis, &sources, &inv_grid)?;
    let pvec = boundary_coefficients(data, &coeffs)?;
    let v0 = starting_point(&pvec, &inv_grid);
    Ok(InversionContext {
        basis,
        coeffs,
        pvec,
        v0,
    })
}

/// One reconstruction: minimization plus coefficient recovery.
pub struct InversionRun {
    pub minimize: MinimizeResult,
    pub a_hat: ScalarField2D,
}

pub fn run_inversion(
    ctx: &InversionContext,
    fcfg: &FunctionalConfig,
    mode: Exec,
) -> Result<InversionRun> {
    let result = minimize(&ctx.v0, &ctx.coeffs, fcfg, mode)?;
    let a_hat = recover_a(&result.v_final, &ctx.coeffs)?;
    Ok(InversionRun {
        minimize: result,
        a_hat,
    })
}

/// Reconstruction quality against the known phantom.
#[derive(Debug, Clone, Serialize)]
pub struct TruthMetrics {
    pub contrast_computed: f64,
    pub contrast_correct: f64,
    pub rel_l2_error: f64,
    pub centroid_computed: Option<[f64; 2]>,
    pub centroid_true: Option<[f64; 2]>,
    pub centroid_offset: Option<f64>,
}

/// Quadrature weight of node `(i, k)` (trapezoid in both directions).
fn node_weight(g: &Grid2D, i: usize, k: usize) -> f64 {
    let wx = if i == 0 || i == g.nx { 0.5 } else { 1.0 };
    let wy = if k == 0 || k == g.ny { 0.5 } else { 1.0 };
    wx * wy * g.hx * g.hy
}

/// Compares the recovered attenuation with the phantom truth.
///
/// The absorption part is read off as `mu_a = max(a_hat - mu_s, 0)`; the
/// contrast follows the inclusion/background convention
/// `1 + max(mu_a) / mu_s`. The maximum and the centroid are taken over
/// interior nodes (one-sided boundary stencils make the outermost ring
/// noisier), with a half-maximum cut for the centroid.
pub fn truth_metrics(a_hat: &ScalarField2D, truth: &Phantom) -> TruthMetrics {
    let g = a_hat.grid;
    let mu_s = truth.mu_s_level;
    let a_true = truth.attenuation_field();
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, k, _, _) in g.nodes() {
        let w = node_weight(&g, i, k);
        let d = a_hat.at(i, k) - a_true.at(i, k);
        num += w * d * d;
        den += w * a_true.at(i, k).powi(2);
    }
    let rel_l2_error = (num / den).sqrt();

    let mut mu_max = 0.0_f64;
    for k in 1..g.ny {
        for i in 1..g.nx {
            mu_max = mu_max.max((a_hat.at(i, k) - mu_s).max(0.0));
        }
    }
    let contrast_computed = 1.0 + mu_max / mu_s;
    let contrast_correct = 1.0 + truth.c_a / mu_s;

    let centroid_computed = if mu_max > 0.0 {
        let cut = 0.5 * mu_max;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sw = 0.0;
        for k in 1..g.ny {
            for i in 1..g.nx {
                let m = (a_hat.at(i, k) - mu_s).max(0.0);
                if m >= cut {
                    sx += m * g.x(i);
                    sy += m * g.y(k);
                    sw += m;
                }
            }
        }
        Some([sx / sw, sy / sw])
    } else {
        None
    };
    let centroid_true = truth.centroid();
    let centroid_offset = match (centroid_computed, centroid_true) {
        (Some(a), Some(b)) => Some(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()),
        _ => None,
    };
    TruthMetrics {
        contrast_computed,
        contrast_correct,
        rel_l2_error,
        centroid_computed,
        centroid_true,
        centroid_offset,
    }
}

/// Machine-readable record of one reconstruction run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub label: String,
    pub test: u8,
    pub glyph: String,
    pub c_a: f64,
    pub mu_s_level: f64,
    pub lambda: f64,
    pub n_basis: usize,
    pub noise_delta: f64,
    pub seed: u64,
    pub grid_m: usize,
    pub sim_refine: usize,
    pub metrics: TruthMetrics,
    pub w_norm_table: Vec<f64>,
    pub j_initial: f64,
    pub j_final: f64,
    pub grad_norm_final: f64,
    pub iterations: usize,
    pub stop: crate::inverse::StopReason,
    pub clipped_boundary_values: usize,
    pub left_ball: bool,
    pub forward_iterations: Option<usize>,
    pub kernel_bound: Option<f64>,
    pub min_u0: Option<f64>,
    /// Wall-clock seconds; excluded from reproducibility comparisons.
    pub timing_seconds: f64,
}

/// `L^2` norms of the coefficient fields of a state.
pub fn coefficient_norms(v: &GalerkinState) -> Vec<f64> {
    let g = v.grid;
    let mut out = vec![0.0; v.n_basis];
    for (i, k, _, _) in g.nodes() {
        let w = node_weight(&g, i, k);
        for (n, o) in out.iter_mut().enumerate() {
            *o += w * v.coeffs(i, k)[n].powi(2);
        }
    }
    for o in &mut out {
        *o = o.sqrt();
    }
    out
}

/// Output of one full simulate-and-invert run.
pub struct RunOutput {
    pub report: ExperimentReport,
    pub a_hat: ScalarField2D,
    pub v_final: GalerkinState,
    pub j_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
}

/// Simulates data, inverts it, and assembles the report.
pub fn full_run(cfg: &SceneConfig, label: &str, test: u8, mode: Exec) -> Result<RunOutput> {
    let started = std::time::Instant::now();
    let sim = simulate_scene(cfg, mode)?;
    run_with_simulation(cfg, &sim, label, test, mode, started)
}

/// Inverts an existing simulation (reused across parameter sweeps).
pub fn run_with_simulation(
    cfg: &SceneConfig,
    sim: &SimulationArtifacts,
    label: &str,
    test: u8,
    mode: Exec,
    started: std::time::Instant,
) -> Result<RunOutput> {
    let inv_grid = cfg.inversion_grid()?;
    // restrict first: the noise model perturbs the measured data at the
    // resolution the inversion sees
    let data = add_noise(
        &sim.boundary.restrict_to(inv_grid)?,
        &NoiseSpec {
            delta: cfg.noise.delta,
            seed: cfg.seed,
        },
    );
    let ctx = inversion_context(cfg, &data, &sim.tts, cfg.optimizer.n_basis)?;
    let run = run_inversion(&ctx, &cfg.functional_config(), mode)?;
    let truth = cfg.phantom_on(&inv_grid)?;
    let metrics = truth_metrics(&run.a_hat, &truth);
    let report = ExperimentReport {
        label: label.to_string(),
        test,
        glyph: cfg.phantom.glyph.clone(),
        c_a: cfg.phantom.c_a,
        mu_s_level: cfg.phantom.mu_s,
        lambda: cfg.optimizer.lambda,
        n_basis: cfg.optimizer.n_basis,
        noise_delta: cfg.noise.delta,
        seed: cfg.seed,
        grid_m: cfg.grid.m,
        sim_refine: cfg.grid.sim_refine,
        metrics,
        w_norm_table: coefficient_norms(&run.minimize.v_final),
        j_initial: run.minimize.j_history[0],
        j_final: *run.minimize.j_history.last().unwrap(),
        grad_norm_final: *run.minimize.grad_norm_history.last().unwrap(),
        iterations: run.minimize.iterations,
        stop: run.minimize.stop,
        clipped_boundary_values: ctx.pvec.clipped,
        left_ball: run.minimize.left_ball,
        forward_iterations: Some(sim.solution.iterations),
        kernel_bound: Some(sim.solution.kernel_bound),
        min_u0: Some(sim.solution.min_u0),
        timing_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        report,
        a_hat: run.a_hat,
        v_final: run.minimize.v_final,
        j_history: run.minimize.j_history,
        grad_norm_history: run.minimize.grad_norm_history,
    })
}

/// Coefficient-field norm table computed straight from simulated data:
/// `w(x, alpha) = (tau_y / sqrt(eps)) ln u` on the simulation grid,
/// projected onto the first twelve basis functions.
#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub norms: Vec<f64>,
    /// `sum_{n>=3} |w_n| / sum_{n>=0} |w_n|`.
    pub tail_ratio: f64,
}

pub fn table1_norms(cfg: &SceneConfig, sim: &SimulationArtifacts) -> Result<Table1Report> {
    let n_basis = 12;
    let basis = BasisSet::build(n_basis, cfg.domain()?.source_half_width)?;
    let g = sim.sim_grid;
    let ns = sim.sources.n_sources();
    let mut norms_sq = vec![0.0; n_basis];
    let mut samples = vec![0.0; ns];
    for (i, k, x, y) in g.nodes() {
        let node = g.idx(i, k);
        let se = sim.model.metric.eps_r.interp_bilinear(x, y)?.sqrt();
        for (j, s) in samples.iter_mut().enumerate() {
            let u = sim.solution.u[node * ns + j];
            let ty = sim.tts[j].tau_y.interp_bilinear(x, y)?;
            *s = ty / se * u.ln();
        }
        let c = basis.project(&sim.sources, &samples)?;
        let w = node_weight(&g, i, k);
        for n in 0..n_basis {
            norms_sq[n] += w * c[n] * c[n];
        }
    }
    let norms: Vec<f64> = norms_sq.iter().map(|x| x.sqrt()).collect();
    let head: f64 = norms.iter().sum();
    let tail: f64 = norms[3..].iter().sum();
    Ok(Table1Report {
        norms,
        tail_ratio: tail / head,
    })
}

/// Writes `x,y,alpha,u` rows of a forward solution.
pub fn write_radiance_csv<W: Write>(sol: &ForwardSolution, out: &mut W) -> Result<()> {
    writeln!(out, "x,y,alpha,u")?;
    let ns = sol.sources.n_sources();
    for (i, k, x, y) in sol.grid.nodes() {
        let node = sol.grid.idx(i, k);
        for j in 0..ns {
            writeln!(
                out,
                "{:.14e},{:.14e},{:.14e},{:.14e}",
                x,
                y,
                sol.sources.alpha(j),
                sol.u[node * ns + j]
            )?;
        }
    }
    Ok(())
}

/// Writes `x,y,n,w` rows of the coefficient fields.
pub fn write_state_csv<W: Write>(v: &GalerkinState, out: &mut W) -> Result<()> {
    writeln!(out, "x,y,n,w")?;
    for (i, k, x, y) in v.grid.nodes() {
        for n in 0..v.n_basis {
            writeln!(
                out,
                "{:.14e},{:.14e},{},{:.14e}",
                x,
                y,
                n,
                v.coeffs(i, k)[n]
            )?;
        }
    }
    Ok(())
}

/// Writes `iter,J,grad_norm` rows.
pub fn write_history_csv<W: Write>(j: &[f64], g: &[f64], out: &mut W) -> Result<()> {
    writeln!(out, "iter,J,grad_norm")?;
    for (it, (jv, gv)) in j.iter().zip(g).enumerate() {
        writeln!(out, "{},{:.14e},{:.14e}", it, jv, gv)?;
    }
    Ok(())
}

fn write_run_files(dir: &Path, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    out.a_hat.save_csv(&dir.join("a_hat.csv"))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("v_final.csv"))?);
    write_state_csv(&out.v_final, &mut f)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("history.csv"))?);
    write_history_csv(&out.j_history, &out.grad_norm_history, &mut f)?;
    let json = serde_json::to_string_pretty(&out.report)
        .map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    Ok(())
}

/// Runs one of the four experiment families and returns all per-run
/// reports. When `out_dir` is given, each run writes `a_hat.csv`,
/// `v_final.csv`, `history.csv` and `report.json` into its own
/// subdirectory, plus a combined `report.json` at the top.
///
/// Test 1: the reference letter with weight and basis sweeps (plus the
/// norm table that motivates the basis truncation). Test 2: contrast
/// levels 3:1 to 6:1. Test 3: the two-letter phantom. Test 4: the noisy
/// data runs.
pub fn run_test(
    test: u8,
    base: &SceneConfig,
    out_dir: Option<&Path>,
    mode: Exec,
) -> Result<Vec<ExperimentReport>> {
    let mut reports = Vec::new();
    let mut emit = |cfg: &SceneConfig, sim: &SimulationArtifacts, label: String| -> Result<()> {
        let started = std::time::Instant::now();
        let out = run_with_simulation(cfg, sim, &label, test, mode, started)?;
        if let Some(dir) = out_dir {
            write_run_files(&dir.join(&label), &out)?;
        }
        reports.push(out.report);
        Ok(())
    };

    match test {
        1 => {
            let mut cfg = base.clone();
            cfg.phantom.glyph = "A".into();
            cfg.phantom.c_a = 5.0;
            cfg.noise.delta = 0.0;
            let sim = simulate_scene(&cfg, mode)?;
            let table = table1_norms(&cfg, &sim)?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
                let json = serde_json::to_string_pretty(&table)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                std::fs::write(dir.join("w_norms.json"), json + "\n")?;
            }
            for lambda in [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 20.0] {
                let mut c = cfg.clone();
                c.optimizer.lambda = lambda;
                c.optimizer.n_basis = 3;
                emit(&c, &sim, format!("lambda{lambda}_n3"))?;
            }
            for n in [1, 2, 3, 5, 7, 12] {
                let mut c = cfg.clone();
                c.optimizer.lambda = 5.0;
                c.optimizer.n_basis = n;
                emit(&c, &sim, format!("lambda5_n{n}"))?;
            }
        }
        2 => {
            for c_a in [10.0, 15.0, 20.0, 30.0] {
                let mut c = base.clone();
                c.phantom.glyph = "A".into();
                c.phantom.c_a = c_a;
                c.noise.delta = 0.0;
                let sim = simulate_scene(&c, mode)?;
                emit(&c, &sim, format!("ca{c_a}"))?;
            }
        }
        3 => {
            let mut c = base.clone();
            c.phantom.glyph = "SZ".into();
            c.phantom.c_a = 5.0;
            c.noise.delta = 0.0;
            let sim = simulate_scene(&c, mode)?;
            emit(&c, &sim, "sz".into())?;
        }
        4 => {
            for glyph in ["A", "Omega"] {
                let mut c = base.clone();
                c.phantom.glyph = glyph.into();
                c.phantom.c_a = 5.0;
                let sim = simulate_scene(&c, mode)?;
                for delta in [0.03, 0.05] {
                    let mut cd = c.clone();
                    cd.noise.delta = delta;
                    emit(&cd, &sim, format!("{}_delta{delta}", glyph.to_lowercase()))?;
                }
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown test id {other}; expected 1..=4"
            )))
        }
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let json =
            serde_json::to_string_pretty(&reports).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
    }
    Ok(reports)
}
