//! The special orthonormal basis of `L^2(-d, d)`.
//!
//! Gram–Schmidt applied to the linearly independent set `{alpha^n e^alpha}`
//! yields an orthonormal family `{Q_n}` whose derivative Gram matrix
//! `b[s][k] = [Q_k', Q_s]` is unit upper triangular: `Q_k'` equals `Q_k`
//! plus a combination of lower-index basis functions, so `[Q_k', Q_s] = 0`
//! for `s > k` and `[Q_k', Q_k] = 1`. Hence `det B_N = 1` for every `N` and
//! the matrix is invertible — the property that makes this basis usable
//! where polynomial or trigonometric bases fail (their first basis function
//! is constant, so the first row of the analogous matrix vanishes).
//!
//! Basis functions are kept as exact coefficient vectors over the scaled
//! frame `{(alpha/d)^k e^alpha}`, so derivatives are exact in the same
//! frame and the triangular structure of `B` is sharp. All basis inner
//! products use Gauss–Legendre quadrature; the composite trapezoid rule is
//! reserved for data that only exists at source-grid nodes.

use crate::error::{Error, Result};
use crate::grid::{trapezoid_alpha, SourceGrid};
use crate::quad::GaussLegendre;
use serde::Serialize;

/// Quadrature order for basis inner products.
const QUAD_ORDER: usize = 64;

/// Orthonormal basis `{Q_0, .., Q_{N-1}}` with exact derivatives and the
/// derivative Gram matrix `B`.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub n: usize,
    pub d: f64,
    pub quad: GaussLegendre,
    /// `coeffs[m][k]`: `Q_m = sum_k coeffs[m][k] (alpha/d)^k e^alpha`.
    coeffs: Vec<Vec<f64>>,
    /// Exact frame coefficients of `Q_m'`.
    dcoeffs: Vec<Vec<f64>>,
    /// `b[s][k] = [Q_k', Q_s]`; unit upper triangular.
    pub b: Vec<Vec<f64>>,
}

/// Frame evaluation: `sum_k c_k (alpha/d)^k e^alpha` by Horner.
#[inline]
fn frame_eval(c: &[f64], t: f64, ea: f64) -> f64 {
    let mut p = 0.0;
    for &ck in c.iter().rev() {
        p = p * t + ck;
    }
    p * ea
}

/// Exact frame derivative: `d/da (a/d)^k e^a = (k/d)(a/d)^{k-1} e^a + (a/d)^k e^a`.
fn frame_derivative(c: &[f64], d: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n];
    for k in 0..n {
        out[k] += c[k];
        if k + 1 < n {
            out[k] += (k + 1) as f64 / d * c[k + 1];
        }
    }
    out
}

impl BasisSet {
    /// Builds the basis by modified Gram–Schmidt in frame coordinates.
    ///
    /// `n > 12` is allowed but logged: orthonormalization degrades for
    /// large `n`. A second orthogonalization sweep is applied when
    /// `n > 5`.
    pub fn build(n: usize, d: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("basis size must be >= 1".into()));
        }
        if d <= 0.0 {
            return Err(Error::InvalidParameter("basis half-width must be > 0".into()));
        }
        if n > 12 {
            log::warn!("basis size {n} > 12: orthonormalization may be inaccurate");
        }
        let quad = GaussLegendre::new(QUAD_ORDER, -d, d);

        // Frame Gram matrix M[j][k] = int (a/d)^{j+k} e^{2a} da.
        let mut moments = vec![0.0; 2 * n - 1];
        for (p, m) in moments.iter_mut().enumerate() {
            *m = quad.integrate(|a| (a / d).powi(p as i32) * (2.0 * a).exp());
        }
        let ip = |u: &[f64], v: &[f64]| -> f64 {
            let mut s = 0.0;
            for (j, &uj) in u.iter().enumerate() {
                if uj == 0.0 {
                    continue;
                }
                for (k, &vk) in v.iter().enumerate() {
                    s += uj * vk * moments[j + k];
                }
            }
            s
        };

        let sweeps = if n > 5 { 2 } else { 1 };
        let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
        for m in 0..n {
            let mut u = vec![0.0; n];
            u[m] = 1.0;
            for _ in 0..sweeps {
                for q in coeffs.iter() {
                    let r = ip(&u, q);
                    for (uk, qk) in u.iter_mut().zip(q) {
                        *uk -= r * qk;
                    }
                }
            }
            let nrm = ip(&u, &u).sqrt();
            if !(nrm > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "frame degenerated at basis index {m}"
                )));
            }
            for uk in &mut u {
                *uk /= nrm;
            }
            coeffs.push(u);
        }

        let dcoeffs: Vec<Vec<f64>> = coeffs.iter().map(|c| frame_derivative(c, d)).collect();
        let mut b = vec![vec![0.0; n]; n];
        for s in 0..n {
            for k in 0..n {
                b[s][k] = ip(&dcoeffs[k], &coeffs[s]);
            }
        }
        Ok(BasisSet {
            n,
            d,
            quad,
            coeffs,
            dcoeffs,
            b,
        })
    }

    /// `Q_m(alpha)`.
    pub fn eval_q(&self, m: usize, alpha: f64) -> Result<f64> {
        if m >= self.n {
            return Err(Error::InvalidParameter(format!(
                "basis index {m} out of range (N = {})",
                self.n
            )));
        }
        Ok(frame_eval(&self.coeffs[m], alpha / self.d, alpha.exp()))
    }

    /// `Q_m'(alpha)` from the exact frame derivative.
    pub fn eval_qprime(&self, m: usize, alpha: f64) -> Result<f64> {
        if m >= self.n {
            return Err(Error::InvalidParameter(format!(
                "basis index {m} out of range (N = {})",
                self.n
            )));
        }
        Ok(frame_eval(&self.dcoeffs[m], alpha / self.d, alpha.exp()))
    }

    /// Table of `Q_m(alpha_j)` over the source grid, `[m][j]`.
    pub fn q_table(&self, sources: &SourceGrid) -> Result<Vec<Vec<f64>>> {
        self.check_source_grid(sources)?;
        (0..self.n)
            .map(|m| {
                sources
                    .alphas()
                    .iter()
                    .map(|&a| self.eval_q(m, a))
                    .collect()
            })
            .collect()
    }

    /// Table of `Q_m'(alpha_j)` over the source grid, `[m][j]`.
    pub fn qprime_table(&self, sources: &SourceGrid) -> Result<Vec<Vec<f64>>> {
        self.check_source_grid(sources)?;
        (0..self.n)
            .map(|m| {
                sources
                    .alphas()
                    .iter()
                    .map(|&a| self.eval_qprime(m, a))
                    .collect()
            })
            .collect()
    }

    pub fn check_source_grid(&self, sources: &SourceGrid) -> Result<()> {
        if (sources.d - self.d).abs() > 1e-12 * self.d {
            return Err(Error::BasisMismatch {
                basis_d: self.d,
                grid_d: sources.d,
            });
        }
        Ok(())
    }

    /// Projects node samples onto the basis by the trapezoid rule:
    /// `c_m = trapezoid(samples * Q_m)`.
    pub fn project(&self, sources: &SourceGrid, samples: &[f64]) -> Result<Vec<f64>> {
        let q = self.q_table(sources)?;
        (0..self.n)
            .map(|m| {
                let prod: Vec<f64> = samples.iter().zip(&q[m]).map(|(s, qv)| s * qv).collect();
                trapezoid_alpha(sources, &prod)
            })
            .collect()
    }

    /// `sum_m c_m Q_m(alpha)`.
    pub fn synth(&self, c: &[f64], alpha: f64) -> f64 {
        let t = alpha / self.d;
        let ea = alpha.exp();
        c.iter()
            .zip(&self.coeffs)
            .map(|(cm, q)| cm * frame_eval(q, t, ea))
            .sum()
    }

    /// Max orthonormality defect `max |[Q_s, Q_k] - delta_sk]|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.n {
            for k in 0..self.n {
                let g = self.quad.integrate(|a| {
                    let t = a / self.d;
                    let ea = a.exp();
                    frame_eval(&self.coeffs[s], t, ea) * frame_eval(&self.coeffs[k], t, ea)
                });
                let target = if s == k { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Diagnostics printed by the `basis-check` CLI subcommand.
    pub fn check_report(&self) -> BasisReport {
        let n = self.n;
        let mat = nalgebra::DMatrix::from_fn(n, n, |s, k| self.b[s][k]);
        let det = mat.clone().lu().determinant();
        let svd = mat.svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        // frame Gram condition number
        let gram = nalgebra::DMatrix::from_fn(n, n, |j, k| {
            self.quad
                .integrate(|a| (a / self.d).powi((j + k) as i32) * (2.0 * a).exp())
        });
        let gsvd = gram.svd(false, false);
        let gmax = gsvd.singular_values.iter().cloned().fold(0.0, f64::max);
        let gmin = gsvd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        let mut below = 0.0_f64;
        let mut diag = 0.0_f64;
        for s in 0..n {
            diag = diag.max((self.b[s][s] - 1.0).abs());
            for k in 0..s {
                below = below.max(self.b[s][k].abs());
            }
        }
        BasisReport {
            n,
            d: self.d,
            b: self.b.clone(),
            det_b: det,
            max_below_diagonal: below,
            max_diagonal_defect: diag,
            orthonormality_residual: self.orthonormality_residual(),
            sigma_min_b: smin,
            gram_condition: gmax / gmin,
        }
    }
}

/// Machine-readable basis diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct BasisReport {
    pub n: usize,
    pub d: f64,
    pub b: Vec<Vec<f64>>,
    pub det_b: f64,
    pub max_below_diagonal: f64,
    pub max_diagonal_defect: f64,
    pub orthonormality_residual: f64,
    pub sigma_min_b: f64,
    pub gram_condition: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_function_is_normalized_exponential() {
        // Q_0 = e^a / sqrt(sinh 1) on (-1/2, 1/2)
        let bs = BasisSet::build(1, 0.5).unwrap();
        let q0 = bs.eval_q(0, 0.0).unwrap();
        assert!((q0 - 1.0 / 1.1752011936438014_f64.sqrt()).abs() < 1e-12);
        // 1 / sqrt(sinh 1) = 0.922454...
        assert!((q0 - 0.92245).abs() < 1e-5);
        // Q_0' = Q_0, so b00 = [Q_0', Q_0] = 1
        assert!((bs.b[0][0] - 1.0).abs() < 1e-12);
        for a in [-0.45, -0.1, 0.3] {
            assert!((bs.eval_qprime(0, a).unwrap() - bs.eval_q(0, a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn b_is_unit_upper_triangular_with_unit_determinant() {
        let bs = BasisSet::build(3, 0.5).unwrap();
        let rep = bs.check_report();
        assert!(rep.max_below_diagonal < 1e-9, "below diag {}", rep.max_below_diagonal);
        assert!(rep.max_diagonal_defect < 1e-9);
        assert!((rep.det_b - 1.0).abs() < 1e-8);
        // the strict upper part is not zero (the matrix carries information)
        assert!(bs.b[0][1].abs() > 1e-3);
    }

    #[test]
    fn orthonormal_within_1e10() {
        for n in [1, 3, 5, 7] {
            let bs = BasisSet::build(n, 0.5).unwrap();
            assert!(
                bs.orthonormality_residual() < 1e-10,
                "N = {n}: {}",
                bs.orthonormality_residual()
            );
        }
    }

    #[test]
    fn qprime_matches_finite_differences() {
        let bs = BasisSet::build(5, 0.5).unwrap();
        let eps = 1e-5;
        for m in 0..5 {
            for a in [-0.4, -0.15, 0.0, 0.22, 0.4] {
                let fd = (bs.eval_q(m, a + eps).unwrap() - bs.eval_q(m, a - eps).unwrap())
                    / (2.0 * eps);
                let exact = bs.eval_qprime(m, a).unwrap();
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "m={m}, a={a}: {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn index_out_of_range_is_an_error() {
        let bs = BasisSet::build(2, 0.5).unwrap();
        assert!(bs.eval_q(2, 0.0).is_err());
        assert!(bs.eval_qprime(5, 0.0).is_err());
    }

    #[test]
    fn zero_or_negative_size_rejected() {
        assert!(BasisSet::build(0, 0.5).is_err());
    }

    #[test]
    fn oversized_basis_proceeds_with_warning() {
        let bs = BasisSet::build(13, 0.5).unwrap();
        assert_eq!(bs.n, 13);
    }

    #[test]
    fn project_recovers_a_basis_function() {
        let bs = BasisSet::build(4, 0.5).unwrap();
        let s = SourceGrid::new(0.5, 20);
        let samples: Vec<f64> = s.alphas().iter().map(|&a| bs.eval_q(2, a).unwrap()).collect();
        let c = bs.project(&s, &samples).unwrap();
        for (m, cm) in c.iter().enumerate() {
            let target = if m == 2 { 1.0 } else { 0.0 };
            assert!((cm - target).abs() < 5e-2, "c[{m}] = {cm}");
        }
        // the defect is trapezoid quadrature error, second order in the step
        let fine = SourceGrid::new(0.5, 80);
        let samples: Vec<f64> = fine.alphas().iter().map(|&a| bs.eval_q(2, a).unwrap()).collect();
        let c = bs.project(&fine, &samples).unwrap();
        for (m, cm) in c.iter().enumerate() {
            let target = if m == 2 { 1.0 } else { 0.0 };
            assert!((cm - target).abs() < 4e-3, "fine grid c[{m}] = {cm}");
        }
    }

    #[test]
    fn project_zero_is_zero() {
        let bs = BasisSet::build(4, 0.5).unwrap();
        let s = SourceGrid::new(0.5, 20);
        let c = bs.project(&s, &vec![0.0; 21]).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn synthesis_of_identity_function() {
        // project alpha and synthesize back; N = 5 truncation of
        // alpha = e^a * (a e^{-a}) has a factorially small tail
        let bs = BasisSet::build(5, 0.5).unwrap();
        let s = SourceGrid::new(0.5, 40);
        let samples = s.alphas();
        let c = bs.project(&s, &samples).unwrap();
        let mut worst = 0.0_f64;
        for &a in &samples {
            worst = worst.max((bs.synth(&c, a) - a).abs());
        }
        // dominated by trapezoid projection error at this step
        println!("identity synthesis residual: {worst:.3e}");
        assert!(worst < 2e-2, "residual {worst}");
    }

    #[test]
    fn source_grid_mismatch_rejected() {
        let bs = BasisSet::build(3, 0.5).unwrap();
        let s = SourceGrid::new(0.4, 20);
        assert!(matches!(
            bs.project(&s, &vec![0.0; 21]),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn smallest_singular_value_and_mgs_loss() {
        for n in [2, 3, 5] {
            let rep = BasisSet::build(n, 0.5).unwrap().check_report();
            assert!(rep.sigma_min_b > 1e-4, "N = {n}: sigma_min = {}", rep.sigma_min_b);
        }
        for n in [6, 7] {
            let bs = BasisSet::build(n, 0.5).unwrap();
            assert!(bs.orthonormality_residual() < 1e-9);
        }
    }

    #[test]
    fn completeness_trend() {
        // L2 residual of projecting a smooth non-frame function decreases in N
        let f = |a: f64| (3.0 * a).cos();
        let mut last = f64::MAX;
        for n in 1..=7 {
            let bs = BasisSet::build(n, 0.5).unwrap();
            let c: Vec<f64> = (0..n)
                .map(|m| bs.quad.integrate(|a| f(a) * bs.eval_q(m, a).unwrap()))
                .collect();
            let res = bs.quad.integrate(|a| {
                let e = f(a) - bs.synth(&c, a);
                e * e
            });
            assert!(res < last, "N = {n}: residual {res} vs previous {last}");
            last = res;
        }
    }
}
