use rrte_core::basis::BasisSet;
use rrte_core::exec::Exec;
use rrte_core::experiment::*;

fn main() {
    let mut cfg = SceneConfig::default();
    cfg.phantom.glyph = "A".into();
    let sim = simulate_scene(&cfg, Exec::Parallel).unwrap();
    let ns = sim.sources.n_sources();
    let basis = BasisSet::build(12, 0.5).unwrap();
    let se =
        |x: f64, y: f64| -> f64 { sim.model.metric.eps_r.interp_bilinear(x, y).unwrap().sqrt() };

    // alpha-spectra of tau_y, of ln u, and of w at a few nodes
    for (x, y) in [(0.0, 1.5), (0.3, 1.8), (-0.2, 1.2), (0.0, 1.95)] {
        let g = sim.sim_grid;
        let i = ((x - g.x0) / g.hx).round() as usize;
        let k = ((y - g.y0) / g.hy).round() as usize;
        let node = g.idx(i, k);
        let ty: Vec<f64> = (0..ns)
            .map(|j| sim.tts[j].tau_y.interp_bilinear(g.x(i), g.y(k)).unwrap())
            .collect();
        let lnu: Vec<f64> = (0..ns).map(|j| sim.solution.u[node * ns + j].ln()).collect();
        let w: Vec<f64> = (0..ns).map(|j| ty[j] / se(g.x(i), g.y(k)) * lnu[j]).collect();
        let cty = basis.project(&sim.sources, &ty).unwrap();
        let clnu = basis.project(&sim.sources, &lnu).unwrap();
        let cw = basis.project(&sim.sources, &w).unwrap();
        let fmt = |c: &[f64]| -> String {
            c.iter().take(6).map(|v| format!("{v:+.4}")).collect::<Vec<_>>().join(" ")
        };
        println!("node ({x:+.2}, {y:.2}):");
        println!("  tau_y c0..c5: {}", fmt(&cty));
        println!("  ln u  c0..c5: {}", fmt(&clnu));
        println!("  w     c0..c5: {}", fmt(&cw));
    }

    // second difference roughness of tau_y in alpha (noise indicator)
    let g = sim.sim_grid;
    let mut rough = 0.0_f64;
    let mut scale = 0.0_f64;
    for (_, _, x, y) in g.nodes() {
        if y < 1.05 {
            continue;
        }
        let ty: Vec<f64> = (0..ns)
            .map(|j| sim.tts[j].tau_y.interp_bilinear(x, y).unwrap())
            .collect();
        for j in 1..ns - 1 {
            rough = rough.max((ty[j + 1] - 2.0 * ty[j] + ty[j - 1]).abs());
        }
        scale = scale.max(ty.iter().fold(0.0_f64, |a, &b| a.max(b.abs())));
    }
    println!("max |second alpha-difference of tau_y| = {rough:.3e} (scale {scale:.3})");
    // smooth reference: y/r has second difference ~ h_alpha^2 * d2/da2 ~ 2.5e-3
}
