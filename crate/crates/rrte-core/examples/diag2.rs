use rrte_core::exec::Exec;
use rrte_core::experiment::*;
use rrte_core::galerkin::{boundary_nodes, norm_h1h, GalerkinState};
use rrte_core::grid::trapezoid_alpha;
use rrte_core::inverse::*;

fn main() {
    let mut cfg = SceneConfig::default();
    cfg.phantom.glyph = "A".into();
    cfg.phantom.c_a = 5.0;

    let mode = Exec::Parallel;
    let sim = simulate_scene(&cfg, mode).unwrap();
    let inv_grid = cfg.inversion_grid().unwrap();
    let data = sim.boundary.restrict_to(inv_grid).unwrap();
    let nb: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let ctx = inversion_context(&cfg, &data, &sim.tts, nb).unwrap();
    let c = &ctx.coeffs;
    let ns = c.n_sources();

    // V_true: project w = (tau_y / sqrt(eps)) ln u at inversion nodes,
    // sampling u from the fine solution field
    let mut v_true = GalerkinState::zeros(inv_grid, nb);
    let fine = sim.sim_grid;
    let nsrc = sim.sources.n_sources();
    assert_eq!(nsrc, ns);
    for (i, k, x, y) in inv_grid.nodes() {
        let node = c.grid.idx(i, k);
        let fi = ((x - fine.x0) / fine.hx).round() as usize;
        let fk = ((y - fine.y0) / fine.hy).round() as usize;
        let fnode = fine.idx(fi, fk);
        let samples: Vec<f64> = (0..ns)
            .map(|j| c.nu_y[node * ns + j] * sim.solution.u[fnode * ns + j].ln())
            .collect();
        for n in 0..nb {
            let prod: Vec<f64> = samples.iter().zip(&c.qv[n]).map(|(a, b)| a * b).collect();
            v_true.coeffs_mut(i, k)[n] = trapezoid_alpha(&c.sources, &prod).unwrap();
        }
    }

    // boundary agreement
    let mut worst = 0.0_f64;
    for (pos, &(i, k, _)) in ctx.pvec.nodes.iter().enumerate() {
        for n in 0..nb {
            worst = worst.max((ctx.pvec.p[pos * nb + n] - v_true.coeffs(i, k)[n]).abs());
        }
    }
    println!("boundary P vs V_true max diff: {worst:.3e}");

    let lambda = 5.0;
    let j0 = evaluate_j(c, &ctx.v0, lambda, mode).unwrap();
    let jt = evaluate_j(c, &v_true, lambda, mode).unwrap();
    println!("J(V0) = {j0:.6e}, J(V_true) = {jt:.6e}");
    let gt = gradient_j(c, &v_true, lambda, mode).unwrap();
    println!("grad norm at V_true: {:.3e}", norm_h1h(&gt));

    // residual profile at V_true along the center column
    let mut ws = ResidualWorkspace::new(c);
    let mut res = vec![0.0; nb];
    for k in [0, 5, 10, 15, 19] {
        residual_at(c, &v_true, 10, k, &mut res, &mut ws).unwrap();
        println!("res at (10, {k}): {res:?}");
    }

    // recovery from V_true
    let a_true_hat = recover_a(&v_true, c).unwrap();
    let truth = cfg.phantom_on(&inv_grid).unwrap();
    let m = truth_metrics(&a_true_hat, &truth);
    println!(
        "recover from V_true: contrast {:.3} (correct {:.3}), relL2 {:.4}",
        m.contrast_computed, m.contrast_correct, m.rel_l2_error
    );

    // norms of V_true components and the starting point
    println!(
        "V_true component norms: {:?}",
        coefficient_norms(&v_true)
    );
    println!("V0 component norms:      {:?}", coefficient_norms(&ctx.v0));
    println!(
        "H1 norms: V_true {:.3}, V0 {:.3}, diff {:.3}",
        norm_h1h(&v_true),
        norm_h1h(&ctx.v0),
        {
            let mut d = v_true.clone();
            for (a, b) in d.data.iter_mut().zip(&ctx.v0.data) {
                *a -= b;
            }
            norm_h1h(&d)
        }
    );
    let _ = boundary_nodes(&inv_grid);

    // minimize from the interpolated starting point (the real pipeline)
    let fcfg = FunctionalConfig {
        lambda,
        grad_tol: 1e-2,
        max_iters: 3000,
        ..Default::default()
    };
    let out = minimize(&ctx.v0, c, &fcfg, mode).unwrap();
    println!(
        "minimize from V0: stop {:?} after {} iters, J {:.4e} -> {:.4e}, grad {:.3e}",
        out.stop,
        out.iterations,
        out.j_history[0],
        out.j_history.last().unwrap(),
        out.grad_norm_history.last().unwrap()
    );
    let a2 = recover_a(&out.v_final, c).unwrap();
    let m2 = truth_metrics(&a2, &truth);
    println!(
        "pipeline result: contrast {:.3} (correct 2.0), relL2 {:.4}, centroid {:?}",
        m2.contrast_computed, m2.rel_l2_error, m2.centroid_computed
    );
    println!("row profiles of a_hat (max per row, interior):");
    for k in 1..inv_grid.ny {
        let mut mx = f64::MIN;
        let mut mn = f64::MAX;
        for i in 1..inv_grid.nx {
            mx = mx.max(a2.at(i, k));
            mn = mn.min(a2.at(i, k));
        }
        let true_max = (1..inv_grid.nx)
            .map(|i| truth.attenuation_field().at(i, k))
            .fold(f64::MIN, f64::max);
        println!(
            "  y {:.2}: a_hat in [{:+.2}, {:+.2}], true max {:.1}",
            inv_grid.y(k),
            mn,
            mx,
            true_max
        );
    }

    // and from V_true
    let out2 = minimize(&v_true, c, &fcfg, mode).unwrap();
    let a3 = recover_a(&out2.v_final, c).unwrap();
    let m3 = truth_metrics(&a3, &truth);
    println!(
        "minimize from V_true: J {:.4e} -> {:.4e}, contrast {:.3}, relL2 {:.4}",
        out2.j_history[0],
        out2.j_history.last().unwrap(),
        m3.contrast_computed,
        m3.rel_l2_error
    );
}
