//! The PIRL1 main loop.
//!
//! Each iteration linearizes the concave penalty `Σ(|x_i| + ε_i)^p` at the
//! current iterate, takes one weighted soft-thresholding step on the resulting
//! weighted-ℓ1 model, and shrinks ε geometrically.

use crate::error::{check_dim, Error, Result};
use crate::prox::{subproblem_solve, weighted_soft_threshold};
use crate::types::{LpProblem, SolverConfig, SolverResult, Status, Trace, TraceRecord};
use crate::Vector;

/// Absolute slack on the per-iteration sufficient-decrease assertion.
pub const DESCENT_SLACK: f64 = 1e-10;

/// Reweighting coefficients `w_i = p(|x_i| + ε_i)^{p−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vector);

impl Weights {
    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn into_vector(self) -> Vector {
        self.0
    }
}

pub fn compute_weights(x: &Vector, eps: &Vector, p: f64) -> Result<Weights> {
    check_dim("eps", x.len(), eps.len())?;
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("eps", "must be componentwise positive"));
    }
    Ok(Weights(x.zip_map(eps, |xi, ei| weight(xi, ei, p))))
}

#[inline]
pub(crate) fn weight(xi: f64, ei: f64, p: f64) -> f64 {
    p * (xi.abs() + ei).powf(p - 1.0)
}

/// `max(μ ε_i, floor)` componentwise.
pub fn update_epsilon(eps: &Vector, mu: f64, floor: f64) -> Vector {
    eps.map(|e| (mu * e).max(floor))
}

/// `F(x, ε) = f(x) + λ Σ (|x_i| + ε_i)^p`.
pub fn smoothed_objective(problem: &LpProblem, x: &Vector, eps: &Vector) -> Result<f64> {
    check_dim("eps", x.len(), eps.len())?;
    let p = problem.p();
    let penalty: f64 = x.iter().zip(eps.iter()).map(|(xi, ei)| (xi.abs() + ei).powf(p)).sum();
    Ok(problem.loss().eval(x)? + problem.lambda() * penalty)
}

/// `max_{i ∈ supp(x)} |∇_i f(x) + λp|x_i|^{p−1} sign(x_i)|`, zero for `x = 0`.
pub fn stationarity_residual(problem: &LpProblem, x: &Vector) -> Result<f64> {
    let g = problem.loss().grad(x)?;
    Ok(residual_with_grad(problem, x, &g))
}

fn residual_with_grad(problem: &LpProblem, x: &Vector, g: &Vector) -> f64 {
    let (lambda, p) = (problem.lambda(), problem.p());
    x.iter()
        .zip(g.iter())
        .filter(|(xi, _)| **xi != 0.0)
        .map(|(&xi, &gi)| (gi + lambda * p * xi.abs().powf(p - 1.0) * xi.signum()).abs())
        .fold(0.0, f64::max)
}

/// Runs PIRL1 from `x0`.
///
/// Terminates with [`Status::Converged`] once `‖x^{k+1} − x^k‖₂ ≤ tol_step` and
/// `max ε^{k+1} ≤ tol_eps`. Every iteration is checked for the sufficient
/// decrease `F^{k+1} ≤ F^k − (β − L_f/2)‖Δx‖² + 1e-10`; a violation, or any
/// non-finite value, stops the run with [`Status::NumericalFailure`] and keeps
/// the trace recorded so far.
pub fn run(problem: &LpProblem, config: &SolverConfig, x0: &Vector) -> Result<SolverResult> {
    let n = problem.n();
    check_dim("x0", n, x0.len())?;
    let lipschitz = problem.loss().lipschitz();
    config.validate(n, lipschitz)?;
    let beta_hat = config.beta_hat(lipschitz);
    let (lambda, p) = (problem.lambda(), problem.p());

    let mut x = x0.clone();
    let mut eps = config.eps0.to_vector(n)?;
    let mut g = problem.loss().grad(&x)?;
    let f0 = problem.loss().eval(&x)?;
    let mut big_f = smoothed_objective(problem, &x, &eps)?;
    let mut trace = Trace::start(TraceRecord::new(
        0,
        x.clone(),
        eps.clone(),
        big_f,
        f0,
        0.0,
        residual_with_grad(problem, &x, &g),
    ));
    if !big_f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Ok(finish(x, Status::NumericalFailure, 0, trace));
    }

    for k in 0..config.max_iter {
        let w = compute_weights(&x, &eps, p)?;
        let x_next = subproblem_solve(&x, &g, config.beta, lambda, w.as_vector())?;
        let eps_next = update_epsilon(&eps, config.mu, config.eps_floor);
        let step = (&x_next - &x).norm();

        let g_next = problem.loss().grad(&x_next)?;
        let f_next = problem.loss().eval(&x_next)?;
        let big_f_next = smoothed_objective(problem, &x_next, &eps_next)?;
        let finite = big_f_next.is_finite() && step.is_finite() && g_next.iter().all(|v| v.is_finite());
        let descent_ok = big_f_next <= big_f - beta_hat * step * step + DESCENT_SLACK;
        if finite {
            trace.push(TraceRecord::new(
                k + 1,
                x_next.clone(),
                eps_next.clone(),
                big_f_next,
                f_next,
                step,
                residual_with_grad(problem, &x_next, &g_next),
            ));
        }
        if !finite || !descent_ok {
            let last = trace.last().x.clone();
            return Ok(finish(last, Status::NumericalFailure, k + 1, trace));
        }

        x = x_next;
        eps = eps_next;
        g = g_next;
        big_f = big_f_next;

        if step <= config.tol_step && eps.max() <= config.tol_eps {
            return Ok(finish(x, Status::Converged, k + 1, trace));
        }
    }
    Ok(finish(x, Status::MaxIterReached, config.max_iter, trace))
}

fn finish(x_final: Vector, status: Status, iterations: usize, trace: Trace) -> SolverResult {
    SolverResult {
        x_final,
        status,
        iterations,
        trace,
    }
}

/// Plain proximal gradient (ISTA) on `f(x) + λ‖x‖₁`, used as a benchmark baseline.
///
/// Step size `1/L_f`; stops when the step norm drops to `tol` or after `max_iter`
/// iterations. Returns the final iterate and the number of iterations taken.
pub fn proximal_gradient_l1(problem: &LpProblem, x0: &Vector, max_iter: usize, tol: f64) -> Result<(Vector, usize)> {
    check_dim("x0", problem.n(), x0.len())?;
    let lipschitz = problem.loss().lipschitz().max(f64::MIN_POSITIVE);
    let thresholds = Vector::from_element(problem.n(), problem.lambda() / lipschitz);
    let mut x = x0.clone();
    for k in 0..max_iter {
        let g = problem.loss().grad(&x)?;
        let next = weighted_soft_threshold(&(&x - g / lipschitz), &thresholds)?;
        let step = (&next - &x).norm();
        x = next;
        if step <= tol {
            return Ok((x, k + 1));
        }
    }
    Ok((x, max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::SmoothLoss;
    use crate::types::Eps0;
    use crate::Matrix;

    fn vecf(v: &[f64]) -> Vector {
        Vector::from_column_slice(v)
    }

    fn scalar_problem(b: f64, lambda: f64, p: f64) -> LpProblem {
        let loss = SmoothLoss::least_squares(Matrix::identity(1, 1), vecf(&[b])).unwrap();
        LpProblem::new(loss, lambda, p).unwrap()
    }

    /// Root of `x − 1.6 + 0.5 x^{−1/2}` on (1.1, 1.2) by bisection.
    fn bisect_root() -> f64 {
        let h = |x: f64| x - 1.6 + 0.5 / x.sqrt();
        let (mut lo, mut hi) = (1.1, 1.2);
        assert!(h(lo) < 0.0 && h(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn weight_examples() {
        let w = compute_weights(&vecf(&[0.0, 4.0, 0.99]), &vecf(&[0.01, 1e-30, 0.01]), 0.5).unwrap();
        let w = w.as_vector();
        assert!((w[0] - 5.0).abs() < 1e-12);
        assert!((w[1] - 0.25).abs() < 1e-12);
        assert!((w[2] - 0.5).abs() < 1e-12);
        assert!(compute_weights(&vecf(&[1.0]), &vecf(&[0.0]), 0.5).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(update_epsilon(&vecf(&[0.1]), 0.5, 1e-30), vecf(&[0.05]));
        assert_eq!(update_epsilon(&vecf(&[1e-30]), 0.5, 1e-30), vecf(&[1e-30]));
        assert_eq!(update_epsilon(&vecf(&[1.0, 4.0]), 0.25, 1e-30), vecf(&[0.25, 1.0]));
    }

    #[test]
    fn smoothed_objective_examples() {
        let prob = scalar_problem(1.6, 1.0, 0.5);
        assert!((smoothed_objective(&prob, &vecf(&[0.0]), &vecf(&[1.0])).unwrap() - 2.28).abs() < 1e-12);
        assert!((smoothed_objective(&prob, &vecf(&[0.0]), &vecf(&[0.0])).unwrap() - 1.28).abs() < 1e-12);
        assert!((smoothed_objective(&prob, &vecf(&[1.0]), &vecf(&[0.0])).unwrap() - 1.18).abs() < 1e-12);
    }

    #[test]
    fn stationarity_examples() {
        let prob = scalar_problem(1.5, 1.0, 0.5);
        assert!(stationarity_residual(&prob, &vecf(&[1.0])).unwrap() < 1e-15);
        assert_eq!(stationarity_residual(&prob, &vecf(&[0.0])).unwrap(), 0.0);
        let prob = scalar_problem(1.6, 1.0, 0.5);
        assert!(stationarity_residual(&prob, &vecf(&[bisect_root()])).unwrap() <= 1e-10);
    }

    #[test]
    fn one_dimensional_run_finds_global_minimizer() {
        let prob = scalar_problem(1.6, 1.0, 0.5);
        let cfg = SolverConfig {
            beta: 1.05,
            mu: 0.9,
            ..Default::default()
        };
        let res = run(&prob, &cfg, &vecf(&[2.0])).unwrap();
        assert_eq!(res.status, Status::Converged);
        let x = res.x_final[0];
        assert!(x > 1.1 && x < 1.2, "{x}");
        // grid oracle over [0, 3] for the unsmoothed objective
        let obj = |x: f64| 0.5 * (x - 1.6) * (x - 1.6) + x.abs().sqrt();
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for j in 0..=300_000 {
            let z = j as f64 * 1e-5;
            if obj(z) < best {
                best = obj(z);
                arg = z;
            }
        }
        assert!((x - arg).abs() < 2e-5, "{x} vs grid {arg}");
        assert!((x - bisect_root()).abs() < 1e-8);
        assert!(prob.objective(&res.x_final).unwrap() < 1.28);
        assert!((prob.objective(&res.x_final).unwrap() - best).abs() < 1e-9);
    }

    #[test]
    fn huge_lambda_keeps_origin() {
        let loss = SmoothLoss::least_squares(Matrix::identity(3, 3), vecf(&[1.0, -2.0, 0.5])).unwrap();
        let lambda = 100.0;
        let prob = LpProblem::new(loss.clone(), lambda, 0.5).unwrap();
        let cfg = SolverConfig::for_loss(&loss);
        let g0 = loss.grad(&Vector::zeros(3)).unwrap();
        // threshold at the origin: λ p ε0^{p−1} / β against ‖∇f(0)‖∞ / β
        assert!(lambda * 0.5 / cfg.beta > g0.amax() / cfg.beta);
        let res = run(&prob, &cfg, &Vector::zeros(3)).unwrap();
        assert_eq!(res.x_final, Vector::zeros(3));
        assert!(res.trace.iter().all(|r| r.support.is_empty()));
    }

    #[test]
    fn rejects_small_beta_and_bad_start() {
        let prob = scalar_problem(1.6, 1.0, 0.5);
        let cfg = SolverConfig {
            beta: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            run(&prob, &cfg, &vecf(&[0.0])),
            Err(Error::BetaTooSmall { .. })
        ));
        let cfg = SolverConfig::for_loss(prob.loss());
        assert!(run(&prob, &cfg, &vecf(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn max_iter_and_trace_shape() {
        let prob = scalar_problem(1.6, 1.0, 0.5);
        let cfg = SolverConfig {
            max_iter: 5,
            eps0: Eps0::Vector(vecf(&[0.5])),
            ..SolverConfig::for_loss(prob.loss())
        };
        let res = run(&prob, &cfg, &vecf(&[0.0])).unwrap();
        assert_eq!(res.status, Status::MaxIterReached);
        assert_eq!(res.iterations, 5);
        assert_eq!(res.trace.len(), 6);
        assert_eq!(res.trace.last().x, res.x_final);
        assert_eq!(res.trace.first().step_norm, 0.0);
        for (k, r) in res.trace.iter().enumerate() {
            assert_eq!(r.k, k);
            r.validate().unwrap();
        }
        for pair in res.trace.records().windows(2) {
            assert!(pair[1].objective <= pair[0].objective);
            for i in 0..1 {
                assert!(pair[1].eps[i] <= cfg.mu * pair[0].eps[i]);
            }
        }
    }

    #[test]
    fn baseline_solves_lasso_scalar() {
        // prox-gradient fixed point for ½(x − 2)² + 0.5|x| is x = 1.5
        let prob = scalar_problem(2.0, 0.5, 0.5);
        let (x, _) = proximal_gradient_l1(&prob, &vecf(&[0.0]), 1000, 1e-14).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-10);
    }
}
