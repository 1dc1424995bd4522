//! The `(x, δ)` parameterization with `δ = √ε`, in which `F` is smooth on any
//! orthant that keeps the support fixed.

use crate::error::{check_dim, Result};
use crate::solver::{smoothed_objective, weight};
use crate::types::{LpProblem, Trace};
use crate::Vector;

/// Per-iteration `δ^k = √ε^k` and `F(x^k, δ^k)` for a trace.
#[derive(Debug, Clone)]
pub struct DeltaTrace {
    pub deltas: Vec<Vector>,
    pub objectives: Vec<f64>,
}

impl DeltaTrace {
    pub fn from_trace(problem: &LpProblem, trace: &Trace) -> Result<Self> {
        let mut deltas = Vec::with_capacity(trace.len());
        let mut objectives = Vec::with_capacity(trace.len());
        for r in trace {
            let delta = r.eps.map(f64::sqrt);
            objectives.push(smoothed_objective(problem, &r.x, &delta.map(|d| d * d))?);
            deltas.push(delta);
        }
        Ok(Self { deltas, objectives })
    }

    /// `z^k = (x^k, δ^k)`.
    pub fn z(&self, trace: &Trace, k: usize) -> Vector {
        let x = &trace.records()[k].x;
        let d = &self.deltas[k];
        Vector::from_iterator(x.len() + d.len(), x.iter().chain(d.iter()).copied())
    }
}

/// `∇F(x, δ) = (∇f(x) + λ w∘sign(x), 2λ w∘δ)` with `w_i = p(|x_i| + δ_i²)^{p−1}`.
///
/// Coordinates with `x_i = 0` contribute zero to the x-block, and a coordinate
/// with `x_i = δ_i = 0` contributes zero to the δ-block.
pub fn grad_f_xdelta(problem: &LpProblem, x: &Vector, delta: &Vector) -> Result<Vector> {
    let n = x.len();
    check_dim("delta", n, delta.len())?;
    let g = problem.loss().grad(x)?;
    let (lambda, p) = (problem.lambda(), problem.p());
    let mut out = Vector::zeros(2 * n);
    for i in 0..n {
        let base = x[i].abs() + delta[i] * delta[i];
        if base == 0.0 {
            continue;
        }
        let w = weight(x[i], delta[i] * delta[i], p);
        if x[i] != 0.0 {
            out[i] = g[i] + lambda * w * x[i].signum();
        }
        out[n + i] = 2.0 * lambda * w * delta[i];
    }
    Ok(out)
}

/// `a^p − b^p` given `b > 0` and `d = a − b`, accurate when `|d| ≪ b`.
pub(crate) fn pow_diff(b: f64, d: f64, p: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    b.powf(p) * (p * (d / b).ln_1p()).exp_m1()
}

/// `F_S(x, ε) − F_S(y, η)` restricted to the penalty coordinates in `support`,
/// where every `i ∈ support` has `x_i` and `y_i` of the same nonzero sign.
pub(crate) fn restricted_decrease(
    problem: &LpProblem,
    support: &[usize],
    x: &Vector,
    eps_x: &Vector,
    y: &Vector,
    eps_y: &Vector,
) -> Result<f64> {
    let p = problem.p();
    let penalty: f64 = support
        .iter()
        .map(|&i| {
            let s = y[i].signum();
            let d = s * (x[i] - y[i]) + (eps_x[i] - eps_y[i]);
            pow_diff(y[i].abs() + eps_y[i], d, p)
        })
        .sum();
    Ok(problem.loss().decrease(x, y)? + problem.lambda() * penalty)
}
