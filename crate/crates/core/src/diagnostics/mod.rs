//! Replays a finished solver run and measures the properties its convergence
//! analysis predicts.
//!
//! [`diagnose`] runs every check and collects the results in a flat
//! [`DiagnosticsReport`]. The individual checks are exported for direct use.

mod conditions;
mod delta;
mod descent;
mod rate;
mod support;

pub use conditions::{
    check_c_conditions, check_gradient_bound, d1_constant, d_bar, CConditions, GradientBoundCheck, GRADIENT_BOUND_SLACK,
};
pub use delta::{grad_f_xdelta, DeltaTrace};
pub use descent::{check_descent, check_summability, DescentCheck, SummabilityCheck, DESCENT_SLACK, SUMMABILITY_SLACK};
pub use rate::{estimate_rate, estimate_rate_from_errors, RateClass, RateEstimate, RateParams, MIN_TRACE_LEN};
pub use support::{
    check_magnitude_bound, constant_c, magnitude_threshold, support_sign_stabilization, zero_absorption_violations,
    Provenance, Stabilization, ThresholdConstant, MAGNITUDE_SLACK,
};

use serde::Serialize;

use crate::error::Result;
use crate::types::{LpProblem, SolverConfig, SolverResult, Status};
use crate::Vector;

/// Outcome of every diagnostic on one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct DiagnosticsReport {
    pub status: Status,
    pub iterations: usize,
    pub final_residual: f64,
    pub descent_violations: usize,
    pub descent_worst_margin: f64,
    pub summability_ok: bool,
    pub support_stable_at: Option<usize>,
    pub sign_stable_at: Option<usize>,
    pub C_value: f64,
    pub C_provenance: Provenance,
    pub magnitude_bound_ok: bool,
    pub zero_absorption_violations: usize,
    pub D1_value: Option<f64>,
    pub gradient_bound_violations: usize,
    pub c1_constant_a: Option<f64>,
    pub c1_constant_a_x: Option<f64>,
    pub c2_constant_b: Option<f64>,
    pub c_conditions_hold: bool,
    pub rate_class: RateClass,
    pub rate_params: Option<f64>,
    pub rate_goodness: Option<f64>,
    pub passed: bool,
}

impl DiagnosticsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs all diagnostics on `result`.
///
/// `passed` requires a run without numerical failure, no descent or
/// summability violation, stabilized support and sign, the magnitude bound,
/// no gradient-bound violation and the decrease / relative-error conditions.
/// Zero absorption is gated only when `C` is a certified bound. The rate
/// class is informational.
pub fn diagnose(
    problem: &LpProblem,
    config: &SolverConfig,
    result: &SolverResult,
    x_star: Option<&Vector>,
) -> Result<DiagnosticsReport> {
    let trace = &result.trace;
    let beta_hat = config.beta_hat(problem.loss().lipschitz());
    let descent = if trace.len() >= 2 {
        check_descent(trace, beta_hat)?
    } else {
        DescentCheck {
            violations: 0,
            worst_margin: f64::NEG_INFINITY,
        }
    };
    let summability = check_summability(trace, beta_hat);
    let stab = support_sign_stabilization(trace);
    let c = constant_c(problem, config, trace)?;
    let stabilized = stab.support_stable_at.is_some();

    let magnitude_bound_ok = stabilized && check_magnitude_bound(trace, c.value, problem, config.tol_step)?;
    let absorption = zero_absorption_violations(trace, c.value, problem);
    let gradient = stabilized
        .then(|| check_gradient_bound(trace, problem, config, c.value))
        .transpose()?;
    let cc = stabilized
        .then(|| check_c_conditions(trace, problem, config))
        .transpose()?;
    let rate = if trace.len() >= MIN_TRACE_LEN {
        Some(estimate_rate(trace, x_star)?)
    } else {
        None
    };

    let gradient_bound_violations = gradient.map_or(0, |g| g.violations);
    let c_conditions_hold = cc.is_some_and(|c| c.holds);
    let certified = c.provenance != Provenance::EmpiricalSurrogate;
    let passed = result.status != Status::NumericalFailure
        && descent.violations == 0
        && summability.holds
        && stabilized
        && stab.sign_stable_at.is_some()
        && magnitude_bound_ok
        && gradient.is_some()
        && gradient_bound_violations == 0
        && c_conditions_hold
        && (!certified || absorption == 0);

    Ok(DiagnosticsReport {
        status: result.status,
        iterations: result.iterations,
        final_residual: trace.last().residual,
        descent_violations: descent.violations,
        descent_worst_margin: descent.worst_margin,
        summability_ok: summability.holds,
        support_stable_at: stab.support_stable_at,
        sign_stable_at: stab.sign_stable_at,
        C_value: c.value,
        C_provenance: c.provenance,
        magnitude_bound_ok,
        zero_absorption_violations: absorption,
        D1_value: gradient.map(|g| g.d1),
        gradient_bound_violations,
        c1_constant_a: cc.and_then(|c| c.a),
        c1_constant_a_x: cc.and_then(|c| c.a_x),
        c2_constant_b: cc.and_then(|c| c.b),
        c_conditions_hold,
        rate_class: rate.map_or(RateClass::Inconclusive, |r| r.rate_class),
        rate_params: rate.and_then(|r| r.rate_params).map(|p| p.value),
        rate_goodness: rate.and_then(|r| r.rate_params).map(|p| p.r_squared),
        passed,
    })
}
