use rrte_core::exec::Exec;
use rrte_core::experiment::*;

fn main() {
    let mut cfg = SceneConfig::default();
    cfg.phantom.glyph = "A".into();

    let sim = simulate_scene(&cfg, Exec::Parallel).unwrap();
    let t = table1_norms(&cfg, &sim).unwrap();
    println!("small scene norms: {:?}", t.norms);
    println!("tail ratio: {:.5}", t.tail_ratio);

    // per-alpha flatness of the transport identity with raw samples:
    // T = w_y + (tx/ty) w_x + c w - scat evaluated from the fine field
    // with no basis truncation anywhere
    let g = sim.sim_grid;
    let ns = sim.sources.n_sources();
    let u = &sim.solution.u;
    let se =
        |x: f64, y: f64| -> f64 { sim.model.metric.eps_r.interp_bilinear(x, y).unwrap().sqrt() };
    let (i, k) = (20usize, 8usize); // x = 0, y = 1.2 on the fine grid
    let (x, y) = (g.x(i), g.y(k));
    let kernel = &sim.model.kernel;
    let mut row = vec![0.0; ns];
    for j in 0..ns {
        // w at the 5-point stencil
        let w_at = |ii: usize, kk: usize, jj: usize| -> f64 {
            let ty = sim.tts[jj]
                .tau_y
                .interp_bilinear(g.x(ii), g.y(kk))
                .unwrap();
            ty / se(g.x(ii), g.y(kk)) * u[g.idx(ii, kk) * ns + jj].ln()
        };
        let w0 = w_at(i, k, j);
        let wx = (w_at(i + 1, k, j) - w_at(i - 1, k, j)) / (2.0 * g.hx);
        let wy = (w_at(i, k + 1, j) - w_at(i, k - 1, j)) / (2.0 * g.hy);
        let tx = sim.tts[j].tau_x.interp_bilinear(x, y).unwrap();
        let ty = sim.tts[j].tau_y.interp_bilinear(x, y).unwrap();
        let r1 = tx / ty;
        // c coefficient by raw differences
        let rho_at = |ii: usize, kk: usize| -> f64 {
            se(g.x(ii), g.y(kk))
                / sim.tts[j]
                    .tau_y
                    .interp_bilinear(g.x(ii), g.y(kk))
                    .unwrap()
        };
        let drho_dx = (rho_at(i + 1, k) - rho_at(i - 1, k)) / (2.0 * g.hx);
        let dinv_dy = (1.0 / rho_at(i, k + 1) - 1.0 / rho_at(i, k - 1)) / (2.0 * g.hy);
        let c0 = tx / se(x, y) * drho_dx - rho_at(i, k) * dinv_dy;
        // scattering from raw radiance
        let mut s = 0.0;
        for l in 0..ns {
            s += kernel.eval(sim.sources.alpha(j), sim.sources.alpha(l))
                * sim.sources.weight(l)
                * u[g.idx(i, k) * ns + l];
        }
        let scat = sim.model.mu_s.at(i, k) * s / u[g.idx(i, k) * ns + j];
        row[j] = wy + r1 * wx + c0 * w0 - scat;
    }
    println!("raw T over alpha at (x=0, y=1.2), expect -a = -5:");
    for (j, t) in row.iter().enumerate() {
        println!("  alpha {:+.2}: {:+.4}", sim.sources.alpha(j), t);
    }
}
