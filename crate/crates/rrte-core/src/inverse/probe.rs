//! Numerical surrogates for the convexity and Carleman-estimate theory.
//!
//! The strict-convexity claim is probed by Bregman gaps
//! `D = J(V2) - J(V1) - <J'(V1), V2 - V1>` over random pairs with equal
//! boundary traces inside a radius-R ball, normalized by
//! `max(lambda^2, 1) e^{2 lambda a} |V2 - V1|_{H1}^2` (the factor the
//! theory puts in front of the squared norm; at `lambda = 0` where that
//! factor degenerates, the plain curvature ratio is reported). The
//! Carleman inequality for the transport part is probed by the quotient
//! of its two sides on random zero-boundary fields.

use super::functional::{gradient_j, transport_residual_at, ResidualWorkspace};
use super::system::SystemCoefficients;
use crate::error::Result;
use crate::exec::Exec;
use crate::galerkin::{dot, norm_h1h, GalerkinState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeSample {
    pub gap: f64,
    pub ratio: f64,
}

/// Summary of one probe run at a fixed weight parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub lambda: f64,
    pub radius: f64,
    pub trials: usize,
    /// Smallest Bregman gap observed.
    pub min_gap: f64,
    /// Smallest normalized convexity ratio.
    pub min_ratio: f64,
    /// How many trials had a nonnegative gap.
    pub nonneg_gaps: usize,
    /// Smallest quotient LHS/RHS of the transport Carleman inequality.
    pub carleman_quotient_min: f64,
    /// Largest relative defect of the gap symmetry identity
    /// `D(1->2) + D(2->1) = <J'(2) - J'(1), V2 - V1>`.
    pub symmetry_defect_max: f64,
}

fn random_interior_direction(
    rng: &mut ChaCha8Rng,
    grid: &crate::grid::Grid2D,
    n_basis: usize,
) -> GalerkinState {
    let mut u = GalerkinState::zeros(*grid, n_basis);
    for k in 1..grid.ny {
        for i in 1..grid.nx {
            for m in 0..n_basis {
                u.coeffs_mut(i, k)[m] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let nrm = norm_h1h(&u);
    for d in &mut u.data {
        *d /= nrm;
    }
    u
}

fn add_scaled(base: &GalerkinState, dir: &GalerkinState, r: f64) -> GalerkinState {
    let mut v = base.clone();
    for (a, b) in v.data.iter_mut().zip(&dir.data) {
        *a += r * b;
    }
    v
}

/// Evaluates the functional treating exponential overflow as infinity so a
/// wild trial pair is resampled rather than aborting the probe.
fn eval_or_inf(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    lambda: f64,
    mode: Exec,
) -> Result<f64> {
    match super::functional::evaluate_j(coeffs, v, lambda, mode) {
        Ok(j) => Ok(j),
        Err(crate::error::Error::Overflow { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Runs `trials` random Bregman-gap probes around `base` (whose boundary
/// trace every trial state shares) and the transport Carleman quotient on
/// as many random zero-boundary fields.
pub fn convexity_probe(
    coeffs: &SystemCoefficients,
    base: &GalerkinState,
    lambda: f64,
    radius: f64,
    trials: usize,
    seed: u64,
    mode: Exec,
) -> Result<ProbeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = coeffs.grid;
    let nu = lambda.powi(2).max(1.0) * (2.0 * lambda * grid.y0).exp();

    let mut min_gap = f64::MAX;
    let mut min_ratio = f64::MAX;
    let mut nonneg = 0;
    let mut symmetry_defect: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < trials && attempts < 10 * trials {
        attempts += 1;
        let u1 = random_interior_direction(&mut rng, &grid, coeffs.n_basis);
        let u2 = random_interior_direction(&mut rng, &grid, coeffs.n_basis);
        let r1 = rng.gen_range(0.0..radius);
        let r2 = rng.gen_range(0.0..radius);
        let v1 = add_scaled(base, &u1, r1);
        let v2 = add_scaled(base, &u2, r2);
        let j1 = eval_or_inf(coeffs, &v1, lambda, mode)?;
        let j2 = eval_or_inf(coeffs, &v2, lambda, mode)?;
        if !(j1.is_finite() && j2.is_finite()) {
            continue;
        }
        let g1 = gradient_j(coeffs, &v1, lambda, mode)?;
        let mut diff = v2.clone();
        for (d, b) in diff.data.iter_mut().zip(&v1.data) {
            *d -= b;
        }
        let gap = j2 - j1 - dot(&g1, &diff);
        let dn = norm_h1h(&diff);
        if dn < 1e-12 {
            continue;
        }
        let ratio = gap / (nu * dn * dn);
        min_gap = min_gap.min(gap);
        min_ratio = min_ratio.min(ratio);
        if gap >= 0.0 {
            nonneg += 1;
        }
        if done < 10 {
            // symmetry identity check on the first few pairs
            let g2 = gradient_j(coeffs, &v2, lambda, mode)?;
            let gap21 = j1 - j2 + dot(&g2, &diff);
            let mut gdiff = g2;
            for (d, b) in gdiff.data.iter_mut().zip(&g1.data) {
                *d -= b;
            }
            let rhs = dot(&gdiff, &diff);
            let scale = rhs.abs().max(gap.abs()).max(1e-30);
            symmetry_defect = symmetry_defect.max((gap + gap21 - rhs).abs() / scale);
        }
        done += 1;
    }

    // transport Carleman quotient on zero-boundary fields, evaluated on
    // the same half-level stencil as the functional
    let mut quotient_min = f64::MAX;
    let mut ws = ResidualWorkspace::new(coeffs);
    let mut res = vec![0.0; coeffs.n_basis];
    let nb = coeffs.n_basis;
    for _ in 0..trials.max(1) {
        let w = random_interior_direction(&mut rng, &grid, nb);
        let mut lhs = 0.0;
        let mut rhs_z = 0.0;
        let mut rhs_0 = 0.0;
        let mut bw = vec![0.0; nb];
        let mut bwy = vec![0.0; nb];
        for k in 0..grid.ny {
            let wt = super::functional::half_level_weight(&grid, k, lambda);
            for i in 1..grid.nx {
                transport_residual_at(coeffs, &w, i, k, &mut res, &mut ws)?;
                lhs += wt * res.iter().map(|r| r * r).sum::<f64>();
                let lo = w.coeffs(i, k);
                let hi = w.coeffs(i, k + 1);
                for n in 0..nb {
                    bw[n] = (0..nb)
                        .map(|s| coeffs.b[n][s] * 0.5 * (lo[s] + hi[s]))
                        .sum();
                    bwy[n] = (0..nb)
                        .map(|s| coeffs.b[n][s] * (hi[s] - lo[s]) / grid.hy)
                        .sum();
                }
                rhs_0 += wt * bw.iter().map(|r| r * r).sum::<f64>();
                rhs_z += wt * bwy.iter().map(|r| r * r).sum::<f64>();
            }
        }
        let rhs = 0.25 * rhs_z + lambda * lambda / 8.0 * rhs_0;
        if rhs > 0.0 {
            quotient_min = quotient_min.min(lhs / rhs);
        }
    }

    Ok(ProbeReport {
        lambda,
        radius,
        trials: done,
        min_gap,
        min_ratio,
        nonneg_gaps: nonneg,
        carleman_quotient_min: quotient_min,
        symmetry_defect_max: symmetry_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::forward::PhaseKernel;
    use crate::grid::{Domain2D, Grid2D, ScalarField2D, SourceGrid};

    fn coeffs(mu_s_level: f64) -> SystemCoefficients {
        let dom = Domain2D::reference();
        let grid = Grid2D::over_domain(&dom, 6, 6);
        let sources = SourceGrid::new(dom.source_half_width, 6);
        let basis = BasisSet::build(2, dom.source_half_width).unwrap();
        let boxg = Grid2D::new(-0.6, 0.0, 0.05, 0.05, 24, 44);
        let metric = crate::eikonal::MetricField::uniform(boxg, 1.0, 1.0).unwrap();
        let ns = sources.n_sources();
        let nn = grid.n_nodes();
        let tx = vec![0.1; nn * ns];
        let ty = vec![1.0; nn * ns];
        let mu_s = ScalarField2D::from_fn(grid, |_, _| mu_s_level);
        let kernel = PhaseKernel::new(0.5, dom.source_half_width).unwrap();
        SystemCoefficients::from_tau_values(
            tx, ty, &metric, &mu_s, &kernel, &basis, &sources, &grid,
        )
        .unwrap()
    }

    #[test]
    fn linear_case_has_nonnegative_gaps_at_lambda_zero() {
        // mu_s = 0: plain least squares of an affine operator is convex
        let c = coeffs(0.0);
        let base = GalerkinState::zeros(c.grid, 2);
        let rep = convexity_probe(&c, &base, 0.0, 1.0, 20, 42, Exec::Sequential).unwrap();
        assert_eq!(rep.nonneg_gaps, rep.trials);
        assert!(rep.min_gap >= -1e-10);
    }

    #[test]
    fn symmetry_identity_holds() {
        let c = coeffs(2.0);
        let base = GalerkinState::zeros(c.grid, 2);
        let rep = convexity_probe(&c, &base, 1.0, 0.5, 10, 7, Exec::Sequential).unwrap();
        assert!(rep.symmetry_defect_max < 1e-8, "defect {}", rep.symmetry_defect_max);
    }

    #[test]
    fn carleman_quotient_reported_positive() {
        let c = coeffs(1.0);
        let base = GalerkinState::zeros(c.grid, 2);
        let rep = convexity_probe(&c, &base, 5.0, 0.5, 5, 3, Exec::Sequential).unwrap();
        assert!(rep.carleman_quotient_min > 0.0);
    }
}
