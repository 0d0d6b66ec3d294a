//! `rrte` — simulate boundary radiance data for the Riemannian transport
//! slab and reconstruct the attenuation coefficient from it.
//!
//! Subcommands: `simulate`, `invert`, `experiment`, `basis-check`,
//! `probe`. Configuration is a TOML file with `[domain]`, `[grid]`,
//! `[sources]`, `[phantom]`, `[kernel]`, `[metric]`, `[noise]`,
//! `[optimizer]` and `[rng]` sections; every key has a default matching
//! the reference experiment. On failure a machine-readable error object
//! is printed to stderr and the exit code is nonzero.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rrte_core::basis::BasisSet;
use rrte_core::exec::Exec;
use rrte_core::experiment::{
    inversion_context, run_inversion, run_test, simulate_scene, table1_norms, truth_metrics,
    write_history_csv, write_radiance_csv, write_state_csv, ExperimentReport, SceneConfig,
};
use rrte_core::forward::BoundaryDataSet;
use rrte_core::galerkin::norm_h1h;
use rrte_core::inverse::{convexity_probe, OptimizerKind};
use rrte_core::noise::{add_noise, NoiseSpec};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "rrte", version, about = "Riemannian radiative transfer: forward simulation and convexified reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Scene configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for every random choice of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the rayon thread pool for this run.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write `u.csv`, `boundary.csv`,
    /// `meta.json`.
    Simulate(CommonOpts),
    /// Reconstruct the attenuation coefficient from boundary data.
    Invert {
        #[command(flatten)]
        common: CommonOpts,
        /// Boundary data CSV (as written by `simulate`).
        #[arg(long)]
        data: PathBuf,
        /// Carleman weight parameter.
        #[arg(long)]
        lambda: Option<f64>,
        /// Number of basis functions.
        #[arg(long)]
        nbasis: Option<usize>,
        /// Minimization mode.
        #[arg(long, value_parser = parse_optimizer)]
        optimizer: Option<OptimizerKind>,
        /// Gradient-norm stop threshold.
        #[arg(long)]
        grad_tol: Option<f64>,
    },
    /// Run one of the four experiment families.
    Experiment {
        #[command(flatten)]
        common: CommonOpts,
        /// Test id, 1 through 4.
        #[arg(long)]
        test: u8,
    },
    /// Print basis diagnostics (the derivative Gram matrix, determinant,
    /// orthonormality residual) as JSON.
    BasisCheck {
        #[arg(long, default_value_t = 3)]
        nbasis: usize,
        #[arg(long, default_value_t = 0.5)]
        d: f64,
    },
    /// Run the convexity and Carleman probes on the configured scene.
    Probe {
        #[command(flatten)]
        common: CommonOpts,
        /// Weight parameters to probe (always includes 0 for contrast).
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Ball radius; defaults to twice the starting point's norm.
        #[arg(long)]
        radius: Option<f64>,
    },
}

fn parse_optimizer(s: &str) -> std::result::Result<OptimizerKind, String> {
    match s {
        "gd" => Ok(OptimizerKind::Gd),
        "qn" => Ok(OptimizerKind::Qn),
        other => Err(format!("unknown optimizer '{other}', expected gd or qn")),
    }
}

fn load_config(opts: &CommonOpts) -> Result<SceneConfig> {
    let mut cfg: SceneConfig = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SceneConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn mode(opts: &CommonOpts) -> Exec {
    if opts.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct SimulationMeta {
    min_u0: f64,
    kernel_bound: f64,
    picard_iterations: usize,
    sim_grid_m: usize,
    sim_grid_m_y: usize,
    n_sources: usize,
}

fn cmd_simulate(opts: &CommonOpts) -> Result<()> {
    let cfg = load_config(opts)?;
    let sim = simulate_scene(&cfg, mode(opts))?;
    std::fs::create_dir_all(&opts.out)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(opts.out.join("u.csv"))?);
    write_radiance_csv(&sim.solution, &mut f)?;
    sim.boundary.save_csv(&opts.out.join("boundary.csv"))?;
    write_json(
        &opts.out.join("meta.json"),
        &SimulationMeta {
            min_u0: sim.solution.min_u0,
            kernel_bound: sim.solution.kernel_bound,
            picard_iterations: sim.solution.iterations,
            sim_grid_m: sim.sim_grid.nx,
            sim_grid_m_y: sim.sim_grid.ny,
            n_sources: sim.sources.n_sources(),
        },
    )?;
    println!(
        "simulated {} nodes x {} sources in {} sweeps; min u0 = {:.6e}",
        sim.sim_grid.n_nodes(),
        sim.sources.n_sources(),
        sim.solution.iterations,
        sim.solution.min_u0
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_invert(
    common: &CommonOpts,
    data: &Path,
    lambda: Option<f64>,
    nbasis: Option<usize>,
    optimizer: Option<OptimizerKind>,
    grad_tol: Option<f64>,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(l) = lambda {
        cfg.optimizer.lambda = l;
    }
    if let Some(n) = nbasis {
        cfg.optimizer.n_basis = n;
    }
    if let Some(o) = optimizer {
        cfg.optimizer.mode = o;
    }
    if let Some(t) = grad_tol {
        cfg.optimizer.grad_tol = t;
    }
    let exec = mode(common);
    let started = std::time::Instant::now();
    let inv_grid = cfg.inversion_grid()?;
    let sources = cfg.source_grid()?;
    // rows from a finer data grid are skipped; the inversion-grid subset
    // must be complete
    let boundary = BoundaryDataSet::load_csv(data, inv_grid, sources.clone())?;
    let noisy = add_noise(
        &boundary,
        &NoiseSpec {
            delta: cfg.noise.delta,
            seed: cfg.seed,
        },
    );
    let metric = cfg.build_metric()?;
    let tts = rrte_core::eikonal::solve_all_sources(&metric, &sources, exec)?;
    let ctx = inversion_context(&cfg, &noisy, &tts, cfg.optimizer.n_basis)?;
    let run = run_inversion(&ctx, &cfg.functional_config(), exec)?;
    let truth = cfg.phantom_on(&inv_grid)?;
    let metrics = truth_metrics(&run.a_hat, &truth);

    std::fs::create_dir_all(&common.out)?;
    run.a_hat.save_csv(&common.out.join("a_hat.csv"))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(common.out.join("v_final.csv"))?);
    write_state_csv(&run.minimize.v_final, &mut f)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(common.out.join("history.csv"))?);
    write_history_csv(
        &run.minimize.j_history,
        &run.minimize.grad_norm_history,
        &mut f,
    )?;
    let report = ExperimentReport {
        label: "invert".into(),
        test: 0,
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
        w_norm_table: rrte_core::experiment::coefficient_norms(&run.minimize.v_final),
        j_initial: run.minimize.j_history[0],
        j_final: *run.minimize.j_history.last().unwrap(),
        grad_norm_final: *run.minimize.grad_norm_history.last().unwrap(),
        iterations: run.minimize.iterations,
        stop: run.minimize.stop,
        clipped_boundary_values: ctx.pvec.clipped,
        left_ball: run.minimize.left_ball,
        forward_iterations: None,
        kernel_bound: None,
        min_u0: None,
        timing_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&common.out.join("report.json"), &report)?;
    println!(
        "reconstruction: contrast {:.3} (correct {:.3}), rel L2 error {:.4}, {} iterations",
        report.metrics.contrast_computed,
        report.metrics.contrast_correct,
        report.metrics.rel_l2_error,
        report.iterations
    );
    Ok(())
}

fn cmd_experiment(common: &CommonOpts, test: u8) -> Result<()> {
    let cfg = load_config(common)?;
    let reports = run_test(test, &cfg, Some(&common.out.join(format!("test{test}"))), mode(common))?;
    for r in &reports {
        println!(
            "{}: contrast {:.3} (correct {:.3}), rel L2 error {:.4}",
            r.label, r.metrics.contrast_computed, r.metrics.contrast_correct, r.metrics.rel_l2_error
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ProbeOutput {
    at_zero: rrte_core::inverse::ProbeReport,
    at_lambda: rrte_core::inverse::ProbeReport,
}

fn cmd_probe(common: &CommonOpts, lambda: Option<f64>, trials: usize, radius: Option<f64>) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(l) = lambda {
        cfg.optimizer.lambda = l;
    }
    let exec = mode(common);
    let sim = simulate_scene(&cfg, exec)?;
    let data = sim.boundary.restrict_to(cfg.inversion_grid()?)?;
    let ctx = inversion_context(&cfg, &data, &sim.tts, cfg.optimizer.n_basis)?;
    let r = radius.unwrap_or_else(|| 2.0 * norm_h1h(&ctx.v0));
    let at_zero = convexity_probe(&ctx.coeffs, &ctx.v0, 0.0, r, trials, cfg.seed, exec)?;
    let at_lambda = convexity_probe(
        &ctx.coeffs,
        &ctx.v0,
        cfg.optimizer.lambda,
        r,
        trials,
        cfg.seed,
        exec,
    )?;
    let out = ProbeOutput { at_zero, at_lambda };
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("probe.json"), &out)?;
    println!(
        "min convexity ratio: {:.3e} at lambda = 0, {:.3e} at lambda = {}; nonnegative gaps {}/{}",
        out.at_zero.min_ratio,
        out.at_lambda.min_ratio,
        cfg.optimizer.lambda,
        out.at_lambda.nonneg_gaps,
        out.at_lambda.trials
    );
    // the norm table of the data-side coefficients motivates the basis size
    let table = table1_norms(&cfg, &sim)?;
    write_json(&common.out.join("w_norms.json"), &table)?;
    Ok(())
}

fn cmd_basis_check(nbasis: usize, d: f64) -> Result<()> {
    let basis = BasisSet::build(nbasis, d)?;
    let report = basis.check_report();
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(opts) => cmd_simulate(opts),
        Command::Invert {
            common,
            data,
            lambda,
            nbasis,
            optimizer,
            grad_tol,
        } => cmd_invert(common, data, *lambda, *nbasis, *optimizer, *grad_tol),
        Command::Experiment { common, test } => cmd_experiment(common, *test),
        Command::BasisCheck { nbasis, d } => cmd_basis_check(*nbasis, *d),
        Command::Probe {
            common,
            lambda,
            trials,
            radius,
        } => cmd_probe(common, *lambda, *trials, *radius),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(err) = run() {
        let obj = serde_json::json!({ "error": format!("{err:#}") });
        eprintln!("{obj}");
        std::process::exit(1);
    }
}
