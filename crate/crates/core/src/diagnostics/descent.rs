use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::Trace;

/// Absolute slack on the sufficient-decrease inequality.
pub const DESCENT_SLACK: f64 = 1e-10;
/// Absolute slack on the squared-step summability bound.
pub const SUMMABILITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentCheck {
    pub violations: usize,
    /// Largest `F^{k+1} − F^k + β̂‖x^{k+1} − x^k‖²`; nonpositive when the inequality holds exactly.
    pub worst_margin: f64,
}

/// Counts iterations where `F(x^{k+1},ε^{k+1}) ≤ F(x^k,ε^k) − β̂‖x^{k+1} − x^k‖²`
/// fails by more than [`DESCENT_SLACK`].
pub fn check_descent(trace: &Trace, beta_hat: f64) -> Result<DescentCheck> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: 2,
        });
    }
    let mut out = DescentCheck {
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
    };
    for pair in trace.records().windows(2) {
        let step = (&pair[1].x - &pair[0].x).norm();
        let margin = pair[1].objective - pair[0].objective + beta_hat * step * step;
        if !(margin <= DESCENT_SLACK) {
            out.violations += 1;
        }
        out.worst_margin = out.worst_margin.max(margin);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummabilityCheck {
    pub sum_sq_steps: f64,
    /// `(F^0 − min_k F^k) / β̂`.
    pub bound: f64,
    pub holds: bool,
}

/// Compares `Σ‖x^{k+1} − x^k‖²` against `(F^0 − min_k F^k)/β̂`.
pub fn check_summability(trace: &Trace, beta_hat: f64) -> SummabilityCheck {
    let sum_sq_steps: f64 = trace
        .records()
        .windows(2)
        .map(|w| (&w[1].x - &w[0].x).norm_squared())
        .sum();
    let f_min = trace.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
    let bound = (trace.first().objective - f_min) / beta_hat;
    SummabilityCheck {
        sum_sq_steps,
        bound,
        holds: sum_sq_steps <= bound + SUMMABILITY_SLACK,
    }
}
