//! Threshold constant `C`, support and sign stabilization, and the lower
//! bounds on the nonzeros that follow from `C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::solver::weight;
use crate::types::{LpProblem, SolverConfig, Trace};

/// Slack on the per-iterate magnitude bound.
pub const MAGNITUDE_SLACK: f64 = 1e-12;

/// How a value of `C` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// The supremum itself.
    Exact,
    /// A provable upper bound on the supremum; every consequence drawn from `C` stays valid.
    UpperBound,
    /// Built from the recorded iterates only; diagnostic, not a certificate.
    EmpiricalSurrogate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdConstant {
    pub value: f64,
    pub provenance: Provenance,
    /// Radius `R` of the ball assumed to contain the level set.
    pub radius: f64,
}

/// `C = sup_{‖x‖ ≤ R} ‖∇f(x)‖ + 2Rβ`.
///
/// For least squares with full column rank `R` comes from the level set
/// `½‖Ax − b‖² ≤ F^0`, giving `‖x‖ ≤ (‖b‖ + √(2F^0))/σ_min(A)`, and the supremum is
/// bounded by `‖Aᵀb‖ + σ_max(A)² R`. Every other case falls back to
/// `R = 1.1 max_k ‖x^k‖` and `C = max_k ‖∇f(x^k)‖ + 2Rβ`.
pub fn constant_c(problem: &LpProblem, config: &SolverConfig, trace: &Trace) -> Result<ThresholdConstant> {
    let beta = config.beta;
    if let LossKind::LeastSquares { a, b } = problem.loss().kind() {
        let sv = a.clone().svd(false, false).singular_values;
        let s_max = sv.max();
        let s_min = sv.min();
        let full_rank = a.nrows() >= a.ncols() && s_max > 0.0 && s_min > 1e-10 * s_max;
        if full_rank {
            let f0 = trace.first().objective;
            let radius = (b.norm() + (2.0 * f0).sqrt()) / s_min;
            let value = a.tr_mul(b).norm() + s_max * s_max * radius + 2.0 * radius * beta;
            return Ok(ThresholdConstant {
                value,
                provenance: Provenance::UpperBound,
                radius,
            });
        }
    }
    let radius = 1.1 * trace.iter().map(|r| r.x.norm()).fold(0.0, f64::max);
    let mut grad_max: f64 = 0.0;
    for r in trace {
        grad_max = grad_max.max(problem.loss().grad(&r.x)?.norm());
    }
    Ok(ThresholdConstant {
        value: grad_max + 2.0 * radius * beta,
        provenance: Provenance::EmpiricalSurrogate,
        radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stabilization {
    pub support_stable_at: Option<usize>,
    pub sign_stable_at: Option<usize>,
}

/// First index from which support (resp. sign vector) stays equal to its final value.
///
/// Reported as absent when only the final record of a multi-record trace has it,
/// since a single record carries no evidence of stability.
pub fn support_sign_stabilization(trace: &Trace) -> Stabilization {
    let recs = trace.records();
    let last = recs.len() - 1;
    let first_of_tail = |same: &dyn Fn(usize) -> bool| {
        let mut k = last;
        while k > 0 && same(k - 1) {
            k -= 1;
        }
        if k == last && last > 0 {
            None
        } else {
            Some(k)
        }
    };
    Stabilization {
        support_stable_at: first_of_tail(&|k| recs[k].support == recs[last].support),
        sign_stable_at: first_of_tail(&|k| recs[k].sign == recs[last].sign),
    }
}

pub(crate) fn stable_start(trace: &Trace) -> Result<usize> {
    support_sign_stabilization(trace)
        .support_stable_at
        .ok_or(Error::NotStabilized)
}

/// `(C/(pλ))^{1/(p−1)}`, the lower bound on `|x_i| + ε_i` for coordinates that
/// stay nonzero.
pub fn magnitude_threshold(c: f64, problem: &LpProblem) -> f64 {
    let p = problem.p();
    (c / (p * problem.lambda())).powf(1.0 / (p - 1.0))
}

/// Checks `|x_i^k| > (C/(pλ))^{1/(p−1)} − ε_i^k` on the stable support for every
/// `k ≥ k̄` that has a successor, and `|x_i| ≥ (C/(pλ))^{1/(p−1)} − tol_step` at the final point.
pub fn check_magnitude_bound(trace: &Trace, c: f64, problem: &LpProblem, tol_step: f64) -> Result<bool> {
    let start = stable_start(trace)?;
    let threshold = magnitude_threshold(c, problem);
    let recs = trace.records();
    let last = recs.len() - 1;
    let support = &recs[last].support;
    for r in &recs[start..last] {
        for &i in support {
            if !(r.x[i].abs() > threshold - r.eps[i] - MAGNITUDE_SLACK) {
                return Ok(false);
            }
        }
    }
    Ok(support.iter().all(|&i| recs[last].x[i].abs() >= threshold - tol_step))
}

/// Coordinates that became nonzero again after their weight exceeded `C/λ`.
///
/// Only meaningful for a `C` of [`Provenance::UpperBound`] or [`Provenance::Exact`].
pub fn zero_absorption_violations(trace: &Trace, c: f64, problem: &LpProblem) -> usize {
    let limit = c / problem.lambda();
    let n = problem.n();
    let recs = trace.records();
    (0..n)
        .filter(|&i| {
            let absorbed = recs.iter().position(|r| weight(r.x[i], r.eps[i], problem.p()) > limit);
            match absorbed {
                Some(k) => recs[k + 1..].iter().any(|r| r.x[i] != 0.0),
                None => false,
            }
        })
        .count()
}
