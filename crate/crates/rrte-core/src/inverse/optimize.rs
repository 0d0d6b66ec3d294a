//! Minimization of the weighted functional over states with fixed boundary.
//!
//! Two modes: plain gradient descent with a fixed step and Armijo
//! backtracking fallback, and a limited-memory quasi-Newton method
//! (two-loop secant recursion) which is the default. Both stop when the
//! semidiscrete `H^1` norm of the gradient falls below `grad_tol`
//! (default 1e-2) or at `max_iters`.
//!
//! Internally the functional and gradient are rescaled by the constant
//! `e^{-2 lambda y_max}`, which bounds the depth weight by one; this keeps
//! line-search arithmetic and the stop threshold meaningful for large
//! weight parameters. Histories report the unscaled functional.

use super::functional::{evaluate_j, gradient_j};
use super::system::SystemCoefficients;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::galerkin::{dot, norm_h1h, GalerkinState};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Fixed-step gradient descent with backtracking fallback.
    Gd,
    /// Limited-memory quasi-Newton (default).
    Qn,
}

/// Weight parameter, stop rule and step control for the minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalConfig {
    pub lambda: f64,
    /// Stop threshold on the `H^1` norm of the (rescaled) gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Gradient-descent step.
    pub beta: f64,
    /// Admissible-ball radius; monitored, not enforced.
    pub radius: f64,
    pub optimizer: OptimizerKind,
    pub lbfgs_memory: usize,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig {
            lambda: 5.0,
            grad_tol: 1e-2,
            max_iters: 2000,
            beta: 0.5,
            radius: 1e3,
            optimizer: OptimizerKind::Qn,
            lbfgs_memory: 10,
        }
    }
}

impl FunctionalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::InvalidParameter("lambda must be >= 0".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

/// Minimization outcome: the final iterate plus per-iteration histories.
#[derive(Debug)]
pub struct MinimizeResult {
    pub v_final: GalerkinState,
    /// Unscaled functional values, one per accepted iterate (including the
    /// starting point).
    pub j_history: Vec<f64>,
    /// `H^1` norms of the rescaled gradient per iterate.
    pub grad_norm_history: Vec<f64>,
    /// Max-norms of the rescaled gradient per iterate.
    pub grad_max_history: Vec<f64>,
    pub stop: StopReason,
    pub iterations: usize,
    /// Whether any iterate left the monitored admissible ball.
    pub left_ball: bool,
}

fn axpy(y: &mut GalerkinState, a: f64, x: &GalerkinState) {
    for (yi, xi) in y.data.iter_mut().zip(&x.data) {
        *yi += a * xi;
    }
}

fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Probe {
    t: f64,
    v: GalerkinState,
    j: f64,
    grad: GalerkinState,
    slope: f64,
}

struct LineSearchFns<'a> {
    coeffs: &'a SystemCoefficients,
    lambda: f64,
    scale: f64,
    mode: Exec,
}

impl LineSearchFns<'_> {
    fn probe(&self, v0: &GalerkinState, dir: &GalerkinState, t: f64) -> Result<Probe> {
        let mut v = v0.clone();
        axpy(&mut v, t, dir);
        let j = eval_scaled(self.coeffs, &v, self.lambda, self.scale, self.mode)?;
        if !j.is_finite() {
            return Ok(Probe {
                t,
                v,
                j,
                grad: GalerkinState::zeros(v0.grid, v0.n_basis),
                slope: f64::INFINITY,
            });
        }
        let mut grad = gradient_j(self.coeffs, &v, self.lambda, self.mode)?;
        for gi in grad.data.iter_mut() {
            *gi *= self.scale;
        }
        let slope = dot(&grad, dir);
        Ok(Probe { t, v, j, grad, slope })
    }
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

/// Strong-Wolfe line search (bracketing plus bisection/interpolation zoom).
/// Returns `None` when no acceptable step exists at machine precision.
fn wolfe_search(
    fns: &LineSearchFns,
    v0: &GalerkinState,
    dir: &GalerkinState,
    j0: f64,
    slope0: f64,
    t_init: f64,
) -> Result<Option<Probe>> {
    let armijo = |p: &Probe| p.j <= j0 + WOLFE_C1 * p.t * slope0;
    let curvature = |p: &Probe| p.slope.abs() <= WOLFE_C2 * slope0.abs();

    let mut t_prev = 0.0;
    let mut j_prev = j0;
    let mut t = t_init;
    let mut lo: Option<Probe> = None;
    let mut hi: Option<Probe> = None;
    for _ in 0..20 {
        let p = fns.probe(v0, dir, t)?;
        if !p.j.is_finite() || !armijo(&p) || (t_prev > 0.0 && p.j >= j_prev) {
            hi = Some(p);
            break;
        }
        if curvature(&p) {
            return Ok(Some(p));
        }
        if p.slope >= 0.0 {
            hi = Some(p);
            break;
        }
        t_prev = p.t;
        j_prev = p.j;
        lo = Some(p);
        t *= 2.0;
    }
    let mut lo = match lo {
        Some(p) => p,
        None => fns.probe(v0, dir, 0.0)?,
    };
    let mut hi = match hi {
        Some(p) => p,
        None => return Ok(None),
    };
    // zoom
    for _ in 0..40 {
        // quadratic interpolation with a bisection safeguard
        let mut t = if hi.j.is_finite() && (hi.t - lo.t).abs() > 0.0 {
            let d = hi.t - lo.t;
            let q = lo.t - 0.5 * lo.slope * d * d / (hi.j - lo.j - lo.slope * d);
            if q.is_finite() && (q - lo.t) / d > 0.05 && (q - lo.t) / d < 0.95 {
                q
            } else {
                0.5 * (lo.t + hi.t)
            }
        } else {
            0.5 * (lo.t + hi.t)
        };
        if !t.is_finite() {
            t = 0.5 * (lo.t + hi.t);
        }
        let p = fns.probe(v0, dir, t)?;
        if !p.j.is_finite() || !armijo(&p) || p.j >= lo.j {
            hi = p;
        } else {
            if curvature(&p) {
                return Ok(Some(p));
            }
            if p.slope * (hi.t - lo.t) >= 0.0 {
                hi = Probe {
                    t: lo.t,
                    v: lo.v.clone(),
                    j: lo.j,
                    grad: lo.grad.clone(),
                    slope: lo.slope,
                };
            }
            lo = p;
        }
        if (hi.t - lo.t).abs() < 1e-16 * (1.0 + lo.t) {
            break;
        }
    }
    if lo.t > 0.0 && lo.j < j0 {
        return Ok(Some(lo));
    }
    Ok(None)
}

/// `J` rescaled by the constant weight bound; overflow means "reject this
/// iterate", reported as infinity so line searches back off.
fn eval_scaled(
    coeffs: &SystemCoefficients,
    v: &GalerkinState,
    lambda: f64,
    scale: f64,
    mode: Exec,
) -> Result<f64> {
    match evaluate_j(coeffs, v, lambda, mode) {
        Ok(j) => Ok(j * scale),
        Err(Error::Overflow { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Minimizes `J_lambda` starting from `v0`, keeping the boundary trace of
/// `v0` bit-for-bit fixed.
pub fn minimize(
    v0: &GalerkinState,
    coeffs: &SystemCoefficients,
    cfg: &FunctionalConfig,
    mode: Exec,
) -> Result<MinimizeResult> {
    cfg.validate()?;
    let lambda = cfg.lambda;
    let scale = (-2.0 * lambda * coeffs.grid.y_max()).exp();

    let mut v = v0.clone();
    let mut j = eval_scaled(coeffs, &v, lambda, scale, mode)?;
    if !j.is_finite() {
        return Err(Error::Overflow {
            context: "functional at the starting point",
            arg: f64::NAN,
        });
    }
    let mut grad = gradient_j(coeffs, &v, lambda, mode)?;
    for gi in grad.data.iter_mut() {
        *gi *= scale;
    }

    let mut j_history = vec![j / scale];
    let mut grad_norm_history = vec![norm_h1h(&grad)];
    let mut grad_max_history = vec![grad.data.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))];
    let mut left_ball = false;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    // quasi-Newton state: dense BFGS inverse Hessian for problem sizes
    // where the matrix fits comfortably, limited-memory secant pairs
    // otherwise
    let n_dof = v.data.len();
    let dense = n_dof <= 4000;
    let mut h_dense: Vec<f64> = if dense && cfg.optimizer == OptimizerKind::Qn {
        let mut h = vec![0.0; n_dof * n_dof];
        for idx in 0..n_dof {
            h[idx * n_dof + idx] = 1.0;
        }
        h
    } else {
        Vec::new()
    };
    let mut h_scaled = false;
    let mut mem: VecDeque<(GalerkinState, GalerkinState, f64)> = VecDeque::new();

    for it in 0..cfg.max_iters {
        if grad_norm_history[it] < cfg.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        let ball = norm_h1h(&v);
        if ball >= cfg.radius && !left_ball {
            left_ball = true;
            log::warn!("iterate left the admissible ball: |V| = {ball:.3} >= R = {}", cfg.radius);
        }

        // search direction
        let mut dir = match cfg.optimizer {
            OptimizerKind::Gd => {
                let mut d = grad.clone();
                for x in d.data.iter_mut() {
                    *x = -*x;
                }
                d
            }
            OptimizerKind::Qn if dense => {
                let mut d = grad.clone();
                for (row, slot) in d.data.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    let base = row * n_dof;
                    for (col, gval) in grad.data.iter().enumerate() {
                        acc += h_dense[base + col] * gval;
                    }
                    *slot = -acc;
                }
                d
            }
            OptimizerKind::Qn => {
                let mut q = grad.clone();
                let mut alphas = Vec::with_capacity(mem.len());
                for (s, yv, rho) in mem.iter().rev() {
                    let a = rho * dot(s, &q);
                    axpy(&mut q, -a, yv);
                    alphas.push(a);
                }
                let gamma = mem
                    .back()
                    .map(|(s, yv, _)| dot(s, yv) / dot(yv, yv))
                    .unwrap_or(1.0 / grad_norm_history[it].max(1e-30));
                for x in q.data.iter_mut() {
                    *x *= gamma;
                }
                for ((s, yv, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
                    let b = rho * dot(yv, &q);
                    axpy(&mut q, a - b, s);
                }
                for x in q.data.iter_mut() {
                    *x = -*x;
                }
                q
            }
        };

        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            // secant model lost descent; fall back to steepest descent
            mem.clear();
            dir = grad.clone();
            for x in dir.data.iter_mut() {
                *x = -*x;
            }
            slope = dot(&dir, &grad);
        }

        let fns = LineSearchFns {
            coeffs,
            lambda,
            scale,
            mode,
        };
        let (v_new, j_new, grad_new) = match cfg.optimizer {
            OptimizerKind::Gd => {
                // fixed step with plain backtracking fallback
                let mut t = cfg.beta;
                let mut accepted = None;
                for _ in 0..40 {
                    let mut trial = v.clone();
                    axpy(&mut trial, t, &dir);
                    let jt = eval_scaled(coeffs, &trial, lambda, scale, mode)?;
                    if jt.is_finite() && jt <= j + WOLFE_C1 * t * slope {
                        accepted = Some((trial, jt));
                        break;
                    }
                    t *= 0.5;
                }
                let Some((trial, jt)) = accepted else {
                    stop = StopReason::LineSearchFailed;
                    break;
                };
                let mut g = gradient_j(coeffs, &trial, lambda, mode)?;
                for gi in g.data.iter_mut() {
                    *gi *= scale;
                }
                (trial, jt, g)
            }
            OptimizerKind::Qn => match wolfe_search(&fns, &v, &dir, j, slope, 1.0)? {
                Some(p) => (p.v, p.j, p.grad),
                None => {
                    stop = StopReason::LineSearchFailed;
                    break;
                }
            },
        };

        if cfg.optimizer == OptimizerKind::Qn {
            let mut s = v_new.clone();
            axpy(&mut s, -1.0, &v);
            let mut yv = grad_new.clone();
            axpy(&mut yv, -1.0, &grad);
            let sy = dot(&s, &yv);
            if sy > 1e-14 * norm_h1h(&s).powi(2).max(1e-300) {
                if dense {
                    // BFGS inverse update:
                    // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
                    let rho = 1.0 / sy;
                    if !h_scaled {
                        // rescale the identity to the first curvature pair
                        let gamma = sy / dot(&yv, &yv);
                        for (idx, hval) in h_dense.iter_mut().enumerate() {
                            if idx % n_dof == idx / n_dof {
                                *hval = gamma;
                            }
                        }
                        h_scaled = true;
                    }
                    let mut hy = vec![0.0; n_dof];
                    for (row, slot) in hy.iter_mut().enumerate() {
                        let base = row * n_dof;
                        let mut acc = 0.0;
                        for (col, yval) in yv.data.iter().enumerate() {
                            acc += h_dense[base + col] * yval;
                        }
                        *slot = acc;
                    }
                    let yhy = dot_slice(&hy, &yv.data);
                    let c = rho * rho * yhy + rho;
                    for row in 0..n_dof {
                        let base = row * n_dof;
                        let sr = s.data[row];
                        let hr = hy[row];
                        for col in 0..n_dof {
                            h_dense[base + col] += c * sr * s.data[col]
                                - rho * (sr * hy[col] + hr * s.data[col]);
                        }
                    }
                } else {
                    if mem.len() == cfg.lbfgs_memory {
                        mem.pop_front();
                    }
                    mem.push_back((s, yv, 1.0 / sy));
                }
            }
        }

        v = v_new;
        j = j_new;
        grad = grad_new;
        iterations = it + 1;
        j_history.push(j / scale);
        grad_norm_history.push(norm_h1h(&grad));
        grad_max_history.push(grad.data.iter().fold(0.0_f64, |a, &b| a.max(b.abs())));
    }

    if stop == StopReason::MaxIterations && *grad_norm_history.last().unwrap() < cfg.grad_tol {
        stop = StopReason::GradientTolerance;
    }

    Ok(MinimizeResult {
        v_final: v,
        j_history,
        grad_norm_history,
        grad_max_history,
        stop,
        iterations,
        left_ball,
    })
}
