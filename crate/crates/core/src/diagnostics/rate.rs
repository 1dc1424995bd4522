//! Empirical local convergence rate of `e_k = ‖x^k − x*‖`.
//!
//! Two least-squares fits are made on the tail of the sequence: `log e_k`
//! against `k` (linear convergence, `e_k ≈ c γ^k`) and `log e_k` against
//! `log k` (sublinear, `e_k ≈ c k^s`).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::types::Trace;
use crate::Vector;

pub const MIN_TRACE_LEN: usize = 50;
/// Minimum coefficient of determination for a fit to be accepted.
pub const R_SQUARED_GATE: f64 = 0.99;
/// Errors below this multiple of `ε_mach ‖x*‖` are treated as converged.
const NOISE_MULTIPLE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateClass {
    Finite,
    Linear,
    Sublinear,
    Inconclusive,
}

/// Fitted parameter of the accepted model: `γ` for [`RateClass::Linear`], the
/// exponent `s` for [`RateClass::Sublinear`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub value: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate_class: RateClass,
    pub rate_params: Option<RateParams>,
    /// R² of the linear-in-k fit.
    pub linear_r_squared: Option<f64>,
    /// R² of the log-log fit.
    pub sublinear_r_squared: Option<f64>,
    pub tail_points: usize,
}

#[derive(Debug, Clone, Copy)]
struct Fit {
    slope: f64,
    r_squared: f64,
}

fn least_squares_fit(ts: &[f64], ys: &[f64]) -> Option<Fit> {
    let n = ts.len() as f64;
    if ts.len() < 3 {
        return None;
    }
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    if stt == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let ss_res = syy - slope * sty;
    Some(Fit {
        slope,
        r_squared: (1.0 - ss_res / syy).clamp(0.0, 1.0),
    })
}

/// Classifies an error sequence `(k, e_k)`.
///
/// The tail is the last half of the entries; entries with `e_k ≤ noise_floor`
/// are dropped from the fits. A sequence that reaches exactly zero before the
/// tail is [`RateClass::Finite`]. When both fits pass the R² gate the better
/// one wins.
pub fn estimate_rate_from_errors(ks: &[f64], errors: &[f64], noise_floor: f64) -> Result<RateEstimate> {
    check_dim("errors", ks.len(), errors.len())?;
    if errors.len() < MIN_TRACE_LEN {
        return Err(Error::TraceTooShort {
            len: errors.len(),
            min: MIN_TRACE_LEN,
        });
    }
    let tail_start = errors.len() / 2;
    if errors[..tail_start].contains(&0.0) {
        return Ok(RateEstimate {
            rate_class: RateClass::Finite,
            rate_params: None,
            linear_r_squared: None,
            sublinear_r_squared: None,
            tail_points: 0,
        });
    }
    let tail: Vec<(f64, f64)> = ks[tail_start..]
        .iter()
        .zip(&errors[tail_start..])
        .filter(|(_, &e)| e > noise_floor && e > 0.0)
        .map(|(&k, &e)| (k, e.ln()))
        .collect();
    let t: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let linear = least_squares_fit(&t, &y);

    let log_tail: Vec<(f64, f64)> = tail.iter().filter(|p| p.0 > 0.0).map(|p| (p.0.ln(), p.1)).collect();
    let lt: Vec<f64> = log_tail.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = log_tail.iter().map(|p| p.1).collect();
    let sublinear = least_squares_fit(&lt, &ly);

    let linear_ok = linear.filter(|f| f.r_squared >= R_SQUARED_GATE && f.slope < 0.0);
    let sublinear_ok = sublinear.filter(|f| f.r_squared >= R_SQUARED_GATE && f.slope < 0.0);
    let (rate_class, rate_params) = match (linear_ok, sublinear_ok) {
        (Some(l), Some(s)) if s.r_squared > l.r_squared => (RateClass::Sublinear, Some(s_params(s))),
        (Some(l), _) => (RateClass::Linear, Some(l_params(l))),
        (None, Some(s)) => (RateClass::Sublinear, Some(s_params(s))),
        (None, None) => (RateClass::Inconclusive, None),
    };
    Ok(RateEstimate {
        rate_class,
        rate_params,
        linear_r_squared: linear.map(|f| f.r_squared),
        sublinear_r_squared: sublinear.map(|f| f.r_squared),
        tail_points: tail.len(),
    })
}

fn l_params(f: Fit) -> RateParams {
    RateParams {
        value: f.slope.exp(),
        r_squared: f.r_squared,
    }
}

fn s_params(f: Fit) -> RateParams {
    RateParams {
        value: f.slope,
        r_squared: f.r_squared,
    }
}

/// Rate of `‖x^k − x*‖` along a trace; `x*` defaults to the final iterate.
pub fn estimate_rate(trace: &Trace, x_star: Option<&Vector>) -> Result<RateEstimate> {
    let x_star = x_star.unwrap_or(&trace.last().x);
    let ks: Vec<f64> = trace.iter().map(|r| r.k as f64).collect();
    let errors: Vec<f64> = trace.iter().map(|r| (&r.x - x_star).norm()).collect();
    estimate_rate_from_errors(&ks, &errors, NOISE_MULTIPLE * f64::EPSILON * x_star.norm())
}
