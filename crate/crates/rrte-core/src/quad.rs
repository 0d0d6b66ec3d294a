//! Gauss–Legendre quadrature nodes and weights.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev initial guess; weights follow from the
//! derivative identity `w_i = 2 / ((1 - x_i^2) P_n'(x_i)^2)`.

/// A Gauss–Legendre rule on an interval `(lo, hi)`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Evaluates `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from P_n and P_{n-1}
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl GaussLegendre {
    /// Rule with `n` nodes mapped to the interval `(lo, hi)`.
    pub fn new(n: usize, lo: f64, hi: f64) -> Self {
        assert!(n >= 1 && hi > lo);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for i in 0..(n + 1) / 2 {
            // Chebyshev guess for the i-th root, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * d * d);
            nodes[i] = mid - half * x;
            nodes[n - 1 - i] = mid + half * x;
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over the rule's interval.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        // n-point rule is exact to degree 2n-1
        let q = GaussLegendre::new(8, -1.0, 1.0);
        for deg in 0..16 {
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let got = q.integrate(|x| x.powi(deg));
            assert!((got - exact).abs() < 1e-13, "deg {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn exponential_on_shifted_interval() {
        let q = GaussLegendre::new(64, -0.5, 0.5);
        let got = q.integrate(|x| (2.0 * x).exp());
        let exact = 1.0_f64.sinh(); // int_{-1/2}^{1/2} e^{2a} da = sinh(1)
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_length() {
        let q = GaussLegendre::new(32, 1.0, 2.5);
        let s: f64 = q.weights.iter().sum();
        assert!((s - 1.5).abs() < 1e-13);
    }
}
