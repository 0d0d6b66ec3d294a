use rrte_core::basis::BasisSet;
use rrte_core::eikonal::*;
use rrte_core::exec::Exec;
use rrte_core::grid::*;

fn main() {
    // raw FMM tau_y vs closed form at slab nodes
    let h = 1.0 / 60.0;
    let g = Grid2D::new(-0.6, 0.0, h, h, 72, 120);
    let m = MetricField::uniform(g, 1.0, 1.0).unwrap();
    let src = SourceGrid::new(0.5, 12);
    let tts = solve_all_sources(&m, &src, Exec::Parallel).unwrap();
    let slab = Grid2D::over_domain(&Domain2D::reference(), 4, 4);
    let mut worst = (0.0_f64, 0.0, 0.0, 0.0);
    for (_, _, x, y) in slab.nodes() {
        for j in 0..src.n_sources() {
            let a = src.alpha(j);
            let exact = y / ((x - a).powi(2) + y * y).sqrt();
            let got = tts[j].tau_y.interp_bilinear(x, y).unwrap();
            if (got - exact).abs() > worst.0 {
                worst = ((got - exact).abs(), x, y, a);
            }
        }
    }
    println!("raw tau_y worst: {:?}", worst);

    // projection/synthesis error alone, using exact samples
    let basis = BasisSet::build(5, 0.5).unwrap();
    let mut worst2 = (0.0_f64, 0.0, 0.0, 0.0);
    for (_, _, x, y) in slab.nodes() {
        let samples: Vec<f64> = src
            .alphas()
            .iter()
            .map(|&a| y / ((x - a).powi(2) + y * y).sqrt())
            .collect();
        let c = basis.project(&src, &samples).unwrap();
        for j in 0..src.n_sources() {
            let a = src.alpha(j);
            let synth = basis.synth(&c, a);
            let exact = samples[j];
            if (synth - exact).abs() > worst2.0 {
                worst2 = ((synth - exact).abs(), x, y, a);
            }
        }
    }
    println!("projection-only worst: {:?}", worst2);

    // identity function synthesis at various m_alpha
    for ma in [12usize, 20, 40, 80] {
        let s = SourceGrid::new(0.5, ma);
        let c = basis.project(&s, &s.alphas()).unwrap();
        let mut w: f64 = 0.0;
        for &a in &s.alphas() {
            w = w.max((basis.synth(&c, a) - a).abs());
        }
        println!("identity synth m_alpha={ma}: max err {w:.3e}");
    }
}
// (appended diagnostics run via `cargo run --example diag -- opt`)
