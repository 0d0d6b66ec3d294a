//! Rayon vs sequential timings for the data-parallel kernels: the
//! per-source eikonal batch, geodesic path construction, one transport
//! sweep, and a functional-plus-gradient evaluation.
//!
//! Built with the default `parallel` feature both modes are measured in
//! one run; without it both names time the sequential path.

use criterion::{criterion_group, criterion_main, Criterion};
use rrte_core::eikonal::solve_all_sources;
use rrte_core::exec::Exec;
use rrte_core::experiment::{inversion_context, simulate_scene, SceneConfig};
use rrte_core::forward::{build_paths, picard_sweep};
use rrte_core::inverse::{evaluate_j, gradient_j};

fn bench_config() -> SceneConfig {
    let mut cfg = SceneConfig::default();
    cfg.grid.m = 10;
    cfg.grid.m_y = 10;
    cfg.grid.sim_refine = 2;
    cfg.grid.tau_cells_per_unit = 40;
    cfg.sources.m_alpha = 10;
    cfg
}

fn bench_eikonal(c: &mut Criterion) {
    let cfg = bench_config();
    let metric = cfg.build_metric().unwrap();
    let sources = cfg.source_grid().unwrap();
    let mut group = c.benchmark_group("eikonal_batch");
    group.sample_size(10);
    for (name, mode) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        group.bench_function(name, |b| {
            b.iter(|| solve_all_sources(&metric, &sources, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_paths_and_sweep(c: &mut Criterion) {
    let cfg = bench_config();
    let sim = simulate_scene(&cfg, Exec::Parallel).unwrap();
    let grid = sim.sim_grid;
    let mut group = c.benchmark_group("path_table");
    group.sample_size(10);
    for (name, mode) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        group.bench_function(name, |b| {
            b.iter(|| build_paths(&sim.model, &grid, &sim.sources, &sim.tts, mode).unwrap())
        });
    }
    group.finish();

    let paths = build_paths(&sim.model, &grid, &sim.sources, &sim.tts, Exec::Parallel).unwrap();
    let kw = sim.model.kernel.weighted_matrix(&sim.sources);
    let u = paths.u0.clone();
    let mut group = c.benchmark_group("picard_sweep");
    group.sample_size(20);
    for (name, mode) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        group.bench_function(name, |b| {
            let mut next = vec![0.0; u.len()];
            b.iter(|| picard_sweep(&paths, &kw, &u, &mut next, mode))
        });
    }
    group.finish();
}

fn bench_functional(c: &mut Criterion) {
    let cfg = bench_config();
    let sim = simulate_scene(&cfg, Exec::Parallel).unwrap();
    let data = sim
        .boundary
        .restrict_to(cfg.inversion_grid().unwrap())
        .unwrap();
    let ctx = inversion_context(&cfg, &data, &sim.tts, 3).unwrap();
    let mut group = c.benchmark_group("functional_and_gradient");
    group.sample_size(20);
    for (name, mode) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let j = evaluate_j(&ctx.coeffs, &ctx.v0, 5.0, mode).unwrap();
                let g = gradient_j(&ctx.coeffs, &ctx.v0, 5.0, mode).unwrap();
                (j, g)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_eikonal, bench_paths_and_sweep, bench_functional);
criterion_main!(benches);
