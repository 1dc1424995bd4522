//! Value types shared by the solver, the diagnostics and the I/O layer.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::losses::SmoothLoss;
use crate::Vector;

/// An instance of `min f(x) + λ ‖x‖_p^p`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    loss: SmoothLoss,
    lambda: f64,
    p: f64,
}

impl LpProblem {
    pub fn new(loss: SmoothLoss, lambda: f64, p: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")));
        }
        Ok(Self { loss, lambda, p })
    }

    pub fn loss(&self) -> &SmoothLoss {
        &self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.loss.dim()
    }

    /// `F(x) = f(x) + λ Σ |x_i|^p`, the unsmoothed objective.
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        let penalty: f64 = x.iter().map(|xi| xi.abs().powf(self.p)).sum();
        Ok(self.loss.eval(x)? + self.lambda * penalty)
    }
}

/// How ε is driven to zero between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `ε^{k+1} = max(μ ε^k, eps_floor)`.
    #[default]
    Geometric,
}

/// Initial smoothing vector, either one value for every coordinate or one per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Eps0 {
    Scalar(f64),
    Vector(Vector),
}

impl Eps0 {
    pub fn to_vector(&self, n: usize) -> Result<Vector> {
        match self {
            Eps0::Scalar(v) => Ok(Vector::from_element(n, *v)),
            Eps0::Vector(v) => {
                check_dim("eps0", n, v.len())?;
                Ok(v.clone())
            }
        }
    }

    fn min(&self) -> f64 {
        match self {
            Eps0::Scalar(v) => *v,
            Eps0::Vector(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub beta: f64,
    pub mu: f64,
    pub eps0: Eps0,
    pub max_iter: usize,
    pub tol_step: f64,
    pub tol_eps: f64,
    pub eps_floor: f64,
    pub schedule: Schedule,
}

impl SolverConfig {
    /// Defaults with `β = L_f` taken from the loss.
    pub fn for_loss(loss: &SmoothLoss) -> Self {
        Self {
            beta: loss.lipschitz(),
            ..Self::default()
        }
    }

    /// `β − L_f/2`, the guaranteed per-step decrease coefficient.
    pub fn beta_hat(&self, lipschitz: f64) -> f64 {
        self.beta - 0.5 * lipschitz
    }

    /// Checks every constraint, including `β > L_f/2` against the given bound.
    pub fn validate(&self, n: usize, lipschitz: f64) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be positive, got {}", self.beta)));
        }
        if self.beta <= 0.5 * lipschitz {
            return Err(Error::BetaTooSmall {
                beta: self.beta,
                half_lipschitz: 0.5 * lipschitz,
            });
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::invalid("mu", format!("must lie in (0, 1), got {}", self.mu)));
        }
        let eps0 = self.eps0.to_vector(n)?;
        if eps0.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("eps0", "every component must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if !(self.tol_step >= 0.0) {
            return Err(Error::invalid("tol_step", "must be nonnegative"));
        }
        if !(self.tol_eps >= 0.0) {
            return Err(Error::invalid("tol_eps", "must be nonnegative"));
        }
        if !(self.eps_floor > 0.0) {
            return Err(Error::invalid("eps_floor", "must be positive"));
        }
        if self.eps_floor > self.eps0.min() {
            return Err(Error::invalid("eps_floor", "must not exceed min(eps0)"));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mu: 0.9,
            eps0: Eps0::Scalar(1.0),
            max_iter: 100_000,
            tol_step: 1e-10,
            tol_eps: 1e-12,
            eps_floor: 1e-30,
            schedule: Schedule::Geometric,
        }
    }
}

/// Sign of a coordinate; `sign(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Sign {
    Negative = -1,
    Zero = 0,
    Positive = 1,
}

impl Sign {
    pub fn of(v: f64) -> Self {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_f64(self) -> f64 {
        self as i8 as f64
    }
}

/// Snapshot of iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vector,
    pub eps: Vector,
    /// `F(x^k, ε^k)`.
    pub objective: f64,
    /// `f(x^k)`.
    pub loss: f64,
    /// `‖x^k − x^{k−1}‖₂`, zero for the first record.
    pub step_norm: f64,
    /// Stationarity residual of `x^k` for the unsmoothed problem.
    pub residual: f64,
    pub support: Vec<usize>,
    pub sign: Vec<Sign>,
}

impl TraceRecord {
    /// Builds a record, deriving support and sign from `x`.
    pub fn new(k: usize, x: Vector, eps: Vector, objective: f64, loss: f64, step_norm: f64, residual: f64) -> Self {
        let sign: Vec<Sign> = x.iter().map(|&v| Sign::of(v)).collect();
        let support = support_of(&x);
        Self {
            k,
            x,
            eps,
            objective,
            loss,
            step_norm,
            residual,
            support,
            sign,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InconsistentRecord { k: self.k, reason };
        if self.eps.len() != self.x.len() || self.sign.len() != self.x.len() {
            return Err(bad("x, eps and sign lengths differ".into()));
        }
        if self.support != support_of(&self.x) {
            return Err(bad("support is not the nonzero set of x".into()));
        }
        for (i, (&s, &xi)) in self.sign.iter().zip(self.x.iter()).enumerate() {
            if s != Sign::of(xi) {
                return Err(bad(format!("sign[{i}] disagrees with x[{i}]")));
            }
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(bad("eps must be componentwise positive".into()));
        }
        if !(self.step_norm >= 0.0) || !(self.residual >= 0.0) {
            return Err(bad("step_norm and residual must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn eps_max(&self) -> f64 {
        self.eps.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn support_of(x: &Vector) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Ordered, nonempty sequence of trace records.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new(records: Vec<TraceRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyTrace);
        }
        for r in &records {
            r.validate()?;
        }
        Ok(Self { records })
    }

    pub(crate) fn start(first: TraceRecord) -> Self {
        Self { records: vec![first] }
    }

    pub(crate) fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &TraceRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace is nonempty")
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceRecord> {
        self.records.iter()
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a TraceRecord;
    type IntoIter = std::slice::Iter<'a, TraceRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIterReached,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x_final: Vector,
    pub status: Status,
    pub iterations: usize,
    pub trace: Trace,
}
