//! Fixed benchmark fixtures, shared by the criterion benches.

use pirl_core::synth::sparse_least_squares;
use pirl_core::{LpProblem, SmoothLoss, SolverConfig, Vector};

/// Seeded sparse least-squares problem of size `m × n` with `n / 5` nonzeros.
pub fn least_squares_problem(m: usize, n: usize, lambda: f64, p: f64) -> LpProblem {
    let inst = sparse_least_squares(m, n, (n / 5).max(1), 0.01, 7).expect("valid sizes");
    let loss = SmoothLoss::least_squares(inst.a, inst.b).expect("consistent instance");
    LpProblem::new(loss, lambda, p).expect("valid parameters")
}

pub fn config_for(problem: &LpProblem, max_iter: usize) -> SolverConfig {
    SolverConfig {
        max_iter,
        ..SolverConfig::for_loss(problem.loss())
    }
}

pub fn zeros(problem: &LpProblem) -> Vector {
    Vector::zeros(problem.n())
}
