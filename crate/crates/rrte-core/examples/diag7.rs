use rrte_core::exec::Exec;
use rrte_core::experiment::*;
use rrte_core::forward::BoundaryDataSet;
use rrte_core::inverse::*;

fn run_case(c_a: f64, normalize: bool, max_iters: usize) {
    let mut cfg = SceneConfig::default();
    cfg.phantom.glyph = "A".into();
    cfg.phantom.c_a = c_a;

    let mode = Exec::Parallel;
    let sim = simulate_scene(&cfg, mode).unwrap();
    let inv_grid = cfg.inversion_grid().unwrap();
    let mut data = sim.boundary.restrict_to(inv_grid).unwrap();
    if normalize {
        // constant radiance rescale: the inverse problem is invariant,
        // the truncated system's error scales with |ln u|
        let c = sim.model.source.ray_integral
            * (-cfg.phantom.mu_s * 0.5 * (cfg.domain.far - cfg.domain.near)).exp();
        for v in data.values.iter_mut() {
            *v /= c;
        }
    }
    let data: BoundaryDataSet = data;
    let ctx = inversion_context(&cfg, &data, &sim.tts, 3).unwrap();
    let truth = cfg.phantom_on(&inv_grid).unwrap();

    let fcfg = FunctionalConfig {
        lambda: 5.0,
        grad_tol: 1e-2,
        max_iters,
        ..Default::default()
    };
    let out = minimize(&ctx.v0, &ctx.coeffs, &fcfg, mode).unwrap();
    let a = recover_a(&out.v_final, &ctx.coeffs).unwrap();
    let m = truth_metrics(&a, &truth);
    println!(
        "c_a {c_a}, normalize {normalize}: stop {:?} at {}, J {:.3e} -> {:.3e}, contrast {:.3} (correct {:.1}), relL2 {:.4}, centroid {:?}",
        out.stop,
        out.iterations,
        out.j_history[0],
        out.j_history.last().unwrap(),
        m.contrast_computed,
        m.contrast_correct,
        m.rel_l2_error,
        m.centroid_computed
    );
}

fn main() {
    for c_a in [5.0, 10.0] {
        for normalize in [false, true] {
            run_case(c_a, normalize, 3000);
        }
    }
}
