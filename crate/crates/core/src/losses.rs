//! Smooth losses `f` with value, gradient and a Lipschitz bound on `∇f`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::{Matrix, Vector};

const POWER_MAX_ITER: usize = 1000;
const POWER_REL_TOL: f64 = 1e-10;
const POWER_SEED: u64 = 0x005e_ed1f;
/// Inflation applied to power-iteration eigenvalue estimates.
const LIPSCHITZ_INFLATION: f64 = 1.01;

#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    /// `½‖Ax − b‖²`.
    LeastSquares { a: Matrix, b: Vector },
    /// `Σ log(1 + exp(−y_i a_iᵀx)) + (ridge/2)‖x‖²` with labels in `{−1, +1}`.
    Logistic { a: Matrix, y: Vector, ridge: f64 },
    /// `½xᵀQx + cᵀx` with `Q` symmetric positive semidefinite.
    Quadratic { q: Matrix, c: Vector },
}

/// A smooth loss together with its certified gradient Lipschitz bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothLoss {
    kind: LossKind,
    lipschitz: f64,
    lower_bound_hint: Option<f64>,
}

impl SmoothLoss {
    pub fn least_squares(a: Matrix, b: Vector) -> Result<Self> {
        check_dim("b", a.nrows(), b.len())?;
        ensure_finite("A", a.iter())?;
        ensure_finite("b", b.iter())?;
        let lipschitz = LIPSCHITZ_INFLATION * gram_sigma_max_sq(&a)?;
        Ok(Self {
            kind: LossKind::LeastSquares { a, b },
            lipschitz,
            lower_bound_hint: Some(0.0),
        })
    }

    /// Logistic loss. Without a positive `ridge` the loss is not coercive, so the
    /// level sets of the regularized objective may be unbounded along separating
    /// directions.
    pub fn logistic(a: Matrix, y: Vector, ridge: f64) -> Result<Self> {
        check_dim("y", a.nrows(), y.len())?;
        ensure_finite("A", a.iter())?;
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::invalid("y", "labels must be -1 or +1"));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(Error::invalid("ridge", format!("must be nonnegative, got {ridge}")));
        }
        let lipschitz = 0.25 * LIPSCHITZ_INFLATION * gram_sigma_max_sq(&a)? + ridge;
        Ok(Self {
            kind: LossKind::Logistic { a, y, ridge },
            lipschitz,
            lower_bound_hint: Some(0.0),
        })
    }

    pub fn quadratic(q: Matrix, c: Vector) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::invalid("Q", "must be square"));
        }
        check_dim("c", q.nrows(), c.len())?;
        ensure_finite("Q", q.iter())?;
        ensure_finite("c", c.iter())?;
        let scale = q.amax();
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::invalid("Q", format!("not symmetric (max asymmetry {asym:e})")));
        }
        let min_eig = q.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-12 * scale.max(1.0) {
            return Err(Error::invalid(
                "Q",
                format!("not positive semidefinite (eigenvalue {min_eig:e})"),
            ));
        }
        let lower_bound_hint = match q.clone().cholesky() {
            Some(chol) => Some(-0.5 * c.dot(&chol.solve(&c))),
            None if c.iter().all(|&v| v == 0.0) => Some(0.0),
            None => None,
        };
        let lipschitz = LIPSCHITZ_INFLATION * power_iteration(q.nrows(), |v| &q * (&q * v))?.sqrt();
        Ok(Self {
            kind: LossKind::Quadratic { q, c },
            lipschitz,
            lower_bound_hint,
        })
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            LossKind::LeastSquares { a, .. } | LossKind::Logistic { a, .. } => a.ncols(),
            LossKind::Quadratic { q, .. } => q.ncols(),
        }
    }

    /// Certified upper bound on the Lipschitz constant of `∇f`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// A known lower bound `f̲ ≤ inf f`, when one is available.
    pub fn lower_bound_hint(&self) -> Option<f64> {
        self.lower_bound_hint
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        check_dim("x", self.dim(), x.len())?;
        Ok(match &self.kind {
            LossKind::LeastSquares { a, b } => 0.5 * (a * x - b).norm_squared(),
            LossKind::Logistic { a, y, ridge } => {
                let margins = (a * x).component_mul(y);
                margins.iter().map(|&m| softplus(-m)).sum::<f64>() + 0.5 * ridge * x.norm_squared()
            }
            LossKind::Quadratic { q, c } => 0.5 * x.dot(&(q * x)) + c.dot(x),
        })
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        check_dim("x", self.dim(), x.len())?;
        Ok(match &self.kind {
            LossKind::LeastSquares { a, b } => a.tr_mul(&(a * x - b)),
            LossKind::Logistic { a, y, ridge } => {
                let margins = (a * x).component_mul(y);
                let coef =
                    Vector::from_iterator(y.len(), margins.iter().zip(y.iter()).map(|(&m, &yi)| -yi * sigmoid(-m)));
                a.tr_mul(&coef) + x * *ridge
            }
            LossKind::Quadratic { q, c } => q * x + c,
        })
    }

    /// `f(x) − f(y)`, evaluated without forming the two values separately so
    /// nearby points keep their significant digits.
    pub fn decrease(&self, x: &Vector, y: &Vector) -> Result<f64> {
        check_dim("x", self.dim(), x.len())?;
        check_dim("y", self.dim(), y.len())?;
        let d = x - y;
        let s = x + y;
        Ok(match &self.kind {
            LossKind::LeastSquares { a, b } => 0.5 * (a * &d).dot(&(a * &s - b * 2.0)),
            LossKind::Quadratic { q, c } => 0.5 * d.dot(&(q * &s)) + c.dot(&d),
            LossKind::Logistic { a, y: labels, ridge } => {
                let my = (a * y).component_mul(labels);
                let shift = (a * &d).component_mul(labels);
                let logs: f64 = my.iter().zip(shift.iter()).map(|(&m, &t)| softplus_diff(-m, -t)).sum();
                logs + 0.5 * ridge * d.dot(&s)
            }
        })
    }
}

/// Largest relative error between the analytic gradient and central differences
/// `(f(x + h e_i) − f(x − h e_i)) / 2h`, each error scaled by `max(1, |g_i|, |fd_i|)`.
pub fn fd_grad_check(loss: &SmoothLoss, x: &Vector, h: f64) -> Result<f64> {
    let g = loss.grad(x)?;
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = loss.eval(&probe)?;
        probe[i] = x[i] - h;
        let down = loss.eval(&probe)?;
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        let scale = 1f64.max(g[i].abs()).max(fd.abs());
        worst = worst.max((g[i] - fd).abs() / scale);
    }
    Ok(worst)
}

/// Dominant eigenvalue of a symmetric positive semidefinite operator.
///
/// Starts from a fixed-seed Gaussian vector and stops once the estimate `‖Mv‖`
/// changes by less than `1e-10` relative.
pub fn power_iteration(n: usize, apply: impl Fn(&Vector) -> Vector) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    v.normalize_mut();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mv = apply(&v);
        let next = mv.norm();
        if !next.is_finite() {
            break;
        }
        if next == 0.0 {
            return Ok(0.0);
        }
        let change = (next - estimate).abs();
        estimate = next;
        v = mv / next;
        if change <= POWER_REL_TOL * next {
            return Ok(estimate);
        }
    }
    Err(Error::PowerIterationDiverged {
        iterations: POWER_MAX_ITER,
    })
}

fn gram_sigma_max_sq(a: &Matrix) -> Result<f64> {
    power_iteration(a.ncols(), |v| a.tr_mul(&(a * v)))
}

fn ensure_finite<'a>(field: &'static str, mut values: impl Iterator<Item = &'a f64>) -> Result<()> {
    if values.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(field, "contains non-finite entries"))
    }
}

/// `log(1 + e^t)`.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{−t})`.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `softplus(v + t) − softplus(v)`.
fn softplus_diff(v: f64, t: f64) -> f64 {
    // log(1 + σ(v)·(e^t − 1)) is exact but overflows for large t.
    if t.abs() <= 1.0 {
        (sigmoid(v) * t.exp_m1()).ln_1p()
    } else {
        softplus(v + t) - softplus(v)
    }
}
