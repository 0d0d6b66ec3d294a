use rrte_core::exec::Exec;
use rrte_core::experiment::*;
use rrte_core::galerkin::GalerkinState;
use rrte_core::grid::trapezoid_alpha;

fn main() {
    let mut cfg = SceneConfig::default();
    cfg.grid.m = 10;
    cfg.grid.m_y = 10;
    cfg.grid.sim_refine = 2;
    cfg.grid.tau_cells_per_unit = 40;
    cfg.sources.m_alpha = 10;
    cfg.phantom.glyph = "A".into();

    let mode = Exec::Parallel;
    let sim = simulate_scene(&cfg, mode).unwrap();
    let inv_grid = cfg.inversion_grid().unwrap();
    let data = sim.boundary.restrict_to(inv_grid).unwrap();
    let ctx = inversion_context(&cfg, &data, &sim.tts, 3).unwrap();
    let c = &ctx.coeffs;
    let ns = c.n_sources();

    // what multiplies a constant through the projected derivative
    let ones = vec![1.0; ns];
    let q1: Vec<f64> = (0..3)
        .map(|n| {
            let prod: Vec<f64> = ones.iter().zip(&c.qv[n]).map(|(a, b)| a * b).collect();
            trapezoid_alpha(&c.sources, &prod).unwrap()
        })
        .collect();
    let bq1: Vec<f64> = (0..3)
        .map(|n| (0..3).map(|s| c.b[n][s] * q1[s]).sum())
        .collect();
    println!("proj(1) = {q1:?}");
    println!("B proj(1) = {bq1:?}  (multiplies -a in the residual of a true solution)");
    println!("B = {:?}", c.b);

    // V_true as in diag2
    let mut v_true = GalerkinState::zeros(inv_grid, 3);
    let fine = sim.sim_grid;
    for (i, k, x, y) in inv_grid.nodes() {
        let node = c.grid.idx(i, k);
        let fi = ((x - fine.x0) / fine.hx).round() as usize;
        let fk = ((y - fine.y0) / fine.hy).round() as usize;
        let fnode = fine.idx(fi, fk);
        let samples: Vec<f64> = (0..ns)
            .map(|j| c.nu_y[node * ns + j] * sim.solution.u[fnode * ns + j].ln())
            .collect();
        for n in 0..3 {
            let prod: Vec<f64> = samples.iter().zip(&c.qv[n]).map(|(a, b)| a * b).collect();
            v_true.coeffs_mut(i, k)[n] = trapezoid_alpha(&c.sources, &prod).unwrap();
        }
    }

    // raw T samples at a node below the letter (a = mu_s = 5 there)
    let (i, k) = (5usize, 2usize);
    let node = inv_grid.idx(i, k);
    let mut vdx = vec![0.0; 3];
    let mut vdy = vec![0.0; 3];
    v_true.dx(i, k, &mut vdx);
    v_true.dy(i, k, &mut vdy);
    let cslice = v_true.coeffs(i, k);
    let mut t = vec![0.0; ns];
    let mut parts = vec![[0.0; 4]; ns];
    let mut ev = vec![0.0; ns];
    for j in 0..ns {
        let mut w = 0.0;
        let mut wx = 0.0;
        let mut wy = 0.0;
        for m in 0..3 {
            let q = c.qv[m][j];
            w += cslice[m] * q;
            wx += vdx[m] * q;
            wy += vdy[m] * q;
        }
        ev[j] = (c.rho[node * ns + j] * w).exp();
        parts[j][0] = wy;
        parts[j][1] = c.r1[node * ns + j] * wx;
        parts[j][2] = c.c0[node * ns + j] * w;
        t[j] = wy + parts[j][1] + parts[j][2];
    }
    for j in 0..ns {
        let s: f64 = (0..ns).map(|l| c.kw[j][l] * ev[l]).sum();
        let scat = c.mu_s[node] / ev[j] * s;
        parts[j][3] = -scat;
        t[j] -= scat;
    }
    println!("node (5,2), y = {:.2}; T_j should be ~ -a = -5:", inv_grid.y(k));
    for j in 0..ns {
        println!(
            "  alpha {:+.2}: T = {:+.4}  [wy {:+.3}, transport {:+.3}, zeroth {:+.3}, -scat {:+.3}]",
            c.sources.alpha(j),
            t[j],
            parts[j][0],
            parts[j][1],
            parts[j][2],
            parts[j][3]
        );
    }
}
