use rrte_core::exec::Exec;
use rrte_core::experiment::*;
use rrte_core::inverse::*;

fn main() {
    let mut cfg = SceneConfig::default();
    cfg.phantom.glyph = "A".into();
    cfg.phantom.c_a = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5.0);

    let mode = Exec::Parallel;
    let sim = simulate_scene(&cfg, mode).unwrap();
    let inv_grid = cfg.inversion_grid().unwrap();
    let data = sim.boundary.restrict_to(inv_grid).unwrap();
    let ctx = inversion_context(&cfg, &data, &sim.tts, 3).unwrap();
    let truth = cfg.phantom_on(&inv_grid).unwrap();

    // iteration-0 quality
    let a0 = recover_a(&ctx.v0, &ctx.coeffs).unwrap();
    let m0 = truth_metrics(&a0, &truth);
    println!(
        "iter    0: contrast {:.3}, relL2 {:.4}, centroid y {:.2}",
        m0.contrast_computed,
        m0.rel_l2_error,
        m0.centroid_computed.map(|c| c[1]).unwrap_or(f64::NAN)
    );
    // walk the descent in chunks and report quality
    let gd = std::env::args().any(|a| a == "gd");
    let _ = gd;
    let mut v = ctx.v0.clone();
    let mut total = 0;
    for _chunk in 0..15 {
        let fcfg = FunctionalConfig {
            lambda: 5.0,
            grad_tol: 1e-12,
            max_iters: if gd { 200 } else { 25 },
            optimizer: if gd { OptimizerKind::Gd } else { OptimizerKind::Qn },
            beta: 0.5,
            ..Default::default()
        };
        let out = minimize(&v, &ctx.coeffs, &fcfg, mode).unwrap();
        total += out.iterations;
        v = out.v_final;
        let a = recover_a(&v, &ctx.coeffs).unwrap();
        let m = truth_metrics(&a, &truth);
        println!(
            "iter {:4}: J {:.4e}, grad {:.3e}, contrast {:.3}, relL2 {:.4}, centroid y {:.2}",
            total,
            out.j_history.last().unwrap(),
            out.grad_norm_history.last().unwrap(),
            m.contrast_computed,
            m.rel_l2_error,
            m.centroid_computed.map(|c| c[1]).unwrap_or(f64::NAN)
        );
        if out.iterations < fcfg.max_iters {
            break;
        }
    }
}
