//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails.

use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pirl_core::diagnostics::{
    check_c_conditions, check_descent, check_gradient_bound, check_magnitude_bound, check_summability, constant_c,
    estimate_rate, estimate_rate_from_errors, grad_f_xdelta, support_sign_stabilization, Provenance, RateClass,
};
use pirl_core::io::{format_trace, parse_trace, read_instance, trace_rows, write_instance};
use pirl_core::losses::fd_grad_check;
use pirl_core::prox::subproblem_solve;
use pirl_core::solver::smoothed_objective;
use pirl_core::synth::sparse_least_squares;
use pirl_core::{run, LpProblem, Matrix, SmoothLoss, SolverConfig, SolverResult, Status, Vector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Case {
    problem: LpProblem,
    config: SolverConfig,
    result: SolverResult,
    full_rank: bool,
    label: String,
}

fn is_full_rank(a: &Matrix) -> bool {
    if a.nrows() < a.ncols() {
        return false;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    lo > 1e-10 * hi
}

/// 100 seeded least-squares instances with `m ≤ 60`, `n ≤ 30`.
fn suite(tol_step: f64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    (0..100)
        .map(|i| {
            let n = rng.random_range(2..=30);
            let m = rng.random_range(2..=60);
            let lambda = [0.01, 0.1, 1.0][rng.random_range(0..3)];
            let p = [0.3, 0.5, 0.7][rng.random_range(0..3)];
            let seed = rng.random::<u64>();
            let inst = sparse_least_squares(m, n, (n / 5).max(1), 0.01, seed).unwrap();
            let full_rank = is_full_rank(&inst.a);
            let loss = SmoothLoss::least_squares(inst.a, inst.b).unwrap();
            let problem = LpProblem::new(loss, lambda, p).unwrap();
            let config = SolverConfig {
                tol_step,
                ..SolverConfig::for_loss(problem.loss())
            };
            let result = run(&problem, &config, &Vector::zeros(n)).unwrap();
            Case {
                problem,
                config,
                result,
                full_rank,
                label: format!("#{i} ({m}x{n}, λ={lambda}, p={p})"),
            }
        })
        .collect()
}

fn converged(cases: &[Case]) -> impl Iterator<Item = &Case> {
    cases.iter().filter(|c| c.result.status == Status::Converged)
}

fn first_failures(fails: &[String]) -> String {
    fails.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
}

/// Minimizer of `g(z − x) + (β/2)(z − x)² + c|z|` by a 1e-4 grid over [−10, 10]
/// and ternary refinement of the best cell.
fn brute_force_1d(x: f64, g: f64, beta: f64, c: f64) -> f64 {
    let phi = |z: f64| g * (z - x) + 0.5 * beta * (z - x) * (z - x) + c * z.abs();
    // φ(u) − φ(v) expanded, so the comparison keeps full relative precision
    let diff = |u: f64, v: f64| (u - v) * (g + 0.5 * beta * ((u - x) + (v - x))) + c * (u.abs() - v.abs());
    let h = 1e-4;
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..=200_000 {
        let z = -10.0 + j as f64 * h;
        let v = phi(z);
        if v < best.0 {
            best = (v, z);
        }
    }
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if diff(m1, m2) <= 0.0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let z = 0.5 * (lo + hi);
    if diff(0.0, z) <= 0.0 {
        0.0
    } else {
        z
    }
}

fn c1_subproblem() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.random_range(-2.0..2.0);
        let g: f64 = rng.random_range(-3.0..3.0);
        let beta: f64 = rng.random_range(0.5..4.0);
        let lambda: f64 = rng.random_range(0.01..2.0);
        let w: f64 = rng.random_range(0.01..3.0);
        let one = |v: f64| Vector::from_element(1, v);
        let got = subproblem_solve(&one(x), &one(g), beta, lambda, &one(w)).unwrap()[0];
        worst = worst.max((got - brute_force_1d(x, g, beta, lambda * w)).abs());
    }
    outcome(
        worst <= 1e-8,
        format!("max |error| = {worst:.3e} over 1000 coordinates"),
    )
}

fn c2_descent(cases: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    let mut total = 0;
    for c in cases {
        let bh = c.config.beta_hat(c.problem.loss().lipschitz());
        let d = check_descent(&c.result.trace, bh).unwrap();
        total += d.violations;
        if d.violations > 0 {
            fails.push(format!("{} margin {:.3e}", c.label, d.worst_margin));
        }
    }
    outcome(
        total == 0,
        format!("{total} violations in {} runs {}", cases.len(), first_failures(&fails)),
    )
}

fn c3_summability(cases: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    for c in cases {
        let bh = c.config.beta_hat(c.problem.loss().lipschitz());
        let s = check_summability(&c.result.trace, bh);
        if !s.holds {
            fails.push(format!(
                "{} sum {:.6e} > bound {:.6e}",
                c.label, s.sum_sq_steps, s.bound
            ));
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "{} of {} runs exceed the bound {}",
            fails.len(),
            cases.len(),
            first_failures(&fails)
        ),
    )
}

fn c4_stabilization(cases: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    let mut n = 0;
    for c in converged(cases) {
        n += 1;
        let s = support_sign_stabilization(&c.result.trace);
        let cutoff = (0.9 * (c.result.trace.len() - 1) as f64).floor() as usize;
        let ok = matches!((s.support_stable_at, s.sign_stable_at), (Some(a), Some(b)) if a < cutoff && b < cutoff);
        if !ok {
            fails.push(format!(
                "{} {:?}/{:?} of {}",
                c.label, s.support_stable_at, s.sign_stable_at, c.result.iterations
            ));
        }
    }
    outcome(
        fails.is_empty() && n > 0,
        format!(
            "{} failures among {n} converged runs {}",
            fails.len(),
            first_failures(&fails)
        ),
    )
}

fn c5_magnitude(cases: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    let mut n = 0;
    for c in converged(cases).filter(|c| c.full_rank) {
        let cc = constant_c(&c.problem, &c.config, &c.result.trace).unwrap();
        if cc.provenance != Provenance::UpperBound {
            fails.push(format!("{} provenance {:?}", c.label, cc.provenance));
            continue;
        }
        n += 1;
        if !check_magnitude_bound(&c.result.trace, cc.value, &c.problem, c.config.tol_step).unwrap() {
            fails.push(c.label.clone());
        }
    }
    outcome(
        fails.is_empty() && n > 0,
        format!(
            "{} failures among {n} full-rank runs {}",
            fails.len(),
            first_failures(&fails)
        ),
    )
}

fn c6_gradient_bound(cases: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    let (mut n, mut checked, mut worst) = (0, 0, 0.0f64);
    for c in converged(cases) {
        n += 1;
        let cc = constant_c(&c.problem, &c.config, &c.result.trace).unwrap();
        let g = check_gradient_bound(&c.result.trace, &c.problem, &c.config, cc.value).unwrap();
        checked += g.checked;
        worst = worst.max(g.worst_ratio);
        if g.violations > 0 {
            fails.push(format!("{} {} violations", c.label, g.violations));
        }
    }
    outcome(
        fails.is_empty() && n > 0,
        format!(
            "{} failing runs among {n}; {checked} iterations checked, worst ratio {worst:.3e} {}",
            fails.len(),
            first_failures(&fails)
        ),
    )
}

fn c7_c_conditions(cases: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    let (mut n, mut min_a, mut max_b, mut worst_ax_gap) = (0, f64::INFINITY, 0.0f64, f64::INFINITY);
    for c in converged(cases) {
        n += 1;
        let bh = c.config.beta_hat(c.problem.loss().lipschitz());
        let cc = check_c_conditions(&c.result.trace, &c.problem, &c.config).unwrap();
        let a_ok = cc.a.is_some_and(|a| a > 0.0);
        let b_ok = cc.b.is_some_and(f64::is_finite);
        let ax_ok = cc.a_x.is_none_or(|ax| ax >= bh - 1e-8);
        if let Some(a) = cc.a {
            min_a = min_a.min(a);
        }
        if let Some(b) = cc.b {
            max_b = max_b.max(b);
        }
        if let Some(ax) = cc.a_x {
            worst_ax_gap = worst_ax_gap.min(ax - bh);
        }
        if !(a_ok && b_ok && ax_ok) {
            fails.push(format!(
                "{} a={:?} a_x={:?} (β̂={bh:.4}) b={:?} evaluated={}",
                c.label, cc.a, cc.a_x, cc.b, cc.evaluated
            ));
        }
    }
    outcome(
        fails.is_empty() && n > 0,
        format!(
            "{} failures among {n}; min a {min_a:.3e}, max b {max_b:.3e}, min(a_x − β̂) {worst_ax_gap:.3e} {}",
            fails.len(),
            first_failures(&fails)
        ),
    )
}

fn c8_stationarity(tight: &[Case]) -> Outcome {
    let mut fails = Vec::new();
    let (mut n, mut worst) = (0, 0.0f64);
    for c in tight.iter().filter(|c| c.full_rank) {
        n += 1;
        let r = c.result.trace.last().residual;
        worst = worst.max(r);
        if c.result.status != Status::Converged || r.is_nan() || r > 1e-6 {
            fails.push(format!("{} {:?} residual {r:.3e}", c.label, c.result.status));
        }
    }
    outcome(
        fails.is_empty() && n > 0,
        format!(
            "max residual {worst:.3e} over {n} full-rank runs {}",
            first_failures(&fails)
        ),
    )
}

/// Fixed point reached by iterating well past the recorded run.
fn reference_point(c: &Case) -> Vector {
    let config = SolverConfig {
        tol_step: 0.0,
        max_iter: 2 * c.result.iterations + 500,
        ..c.config.clone()
    };
    run(&c.problem, &config, &Vector::zeros(c.problem.n())).unwrap().x_final
}

fn c9_rate(cases: &[Case]) -> Outcome {
    let ks: Vec<f64> = (0..100).map(f64::from).collect();
    let geo: Vec<f64> = ks.iter().map(|&k| 0.5f64.powf(k)).collect();
    let pow: Vec<f64> = ks.iter().map(|&k| if k == 0.0 { 1.0 } else { k.powi(-2) }).collect();
    let g = estimate_rate_from_errors(&ks, &geo, 0.0).unwrap();
    let s = estimate_rate_from_errors(&ks, &pow, 0.0).unwrap();
    let synthetic_ok = g.rate_class == RateClass::Linear
        && g.rate_params.is_some_and(|p| (p.value - 0.5).abs() <= 1e-6)
        && s.rate_class == RateClass::Sublinear
        && s.rate_params.is_some_and(|p| (p.value + 2.0).abs() <= 1e-3);

    let (mut n, mut linear) = (0, 0);
    let mut others = Vec::new();
    for c in converged(cases).filter(|c| c.full_rank && c.result.trace.len() >= 50) {
        n += 1;
        let x_star = reference_point(c);
        let r = estimate_rate(&c.result.trace, Some(&x_star)).unwrap();
        let gamma_ok = r.rate_params.is_some_and(|p| p.value > 0.0 && p.value < 1.0);
        if r.rate_class == RateClass::Linear && gamma_ok {
            linear += 1;
        } else {
            others.push(format!(
                "{} {:?} R²={:?}/{:?}",
                c.label, r.rate_class, r.linear_r_squared, r.sublinear_r_squared
            ));
        }
    }
    let share = if n > 0 { linear as f64 / n as f64 } else { 0.0 };
    outcome(
        synthetic_ok && n > 0 && share >= 0.9,
        format!(
            "synthetic {}; {linear}/{n} full-rank traces Linear ({:.1}%) {}",
            if synthetic_ok { "ok" } else { "WRONG" },
            100.0 * share,
            first_failures(&others)
        ),
    )
}

fn c10_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (m, n) = (15, 8);
    let gauss = |rng: &mut ChaCha8Rng, r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let a = gauss(&mut rng, m, n);
    let b = Vector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
    let y = Vector::from_fn(m, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let r = gauss(&mut rng, n, n);
    let q = r.transpose() * &r + Matrix::identity(n, n) * 0.1;
    let c = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let losses = [
        ("least_squares", SmoothLoss::least_squares(a.clone(), b).unwrap()),
        ("logistic", SmoothLoss::logistic(a, y, 0.05).unwrap()),
        ("quadratic", SmoothLoss::quadratic(q, c).unwrap()),
    ];
    let mut worst_loss: f64 = 0.0;
    for (_, loss) in &losses {
        for _ in 0..100 {
            let x = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            worst_loss = worst_loss.max(fd_grad_check(loss, &x, 1e-5).unwrap());
        }
    }

    // ∇F(x, δ) against central differences of F(x, δ²), staying off the axes
    let mut worst_f: f64 = 0.0;
    for (_, loss) in losses {
        let problem = LpProblem::new(loss, 0.3, 0.5).unwrap();
        for _ in 0..100 {
            let x = Vector::from_fn(n, |_, _| {
                let v: f64 = rng.random_range(0.2..2.0);
                if rng.random_bool(0.5) {
                    v
                } else {
                    -v
                }
            });
            let delta = Vector::from_fn(n, |_, _| rng.random_range(0.2..1.0));
            let big_f = |x: &Vector, d: &Vector| smoothed_objective(&problem, x, &d.map(|v| v * v)).unwrap();
            let grad = grad_f_xdelta(&problem, &x, &delta).unwrap();
            let h = 1e-5;
            for i in 0..2 * n {
                let (mut xp, mut xm, mut dp, mut dm) = (x.clone(), x.clone(), delta.clone(), delta.clone());
                if i < n {
                    xp[i] += h;
                    xm[i] -= h;
                } else {
                    dp[i - n] += h;
                    dm[i - n] -= h;
                }
                let fd = (big_f(&xp, &dp) - big_f(&xm, &dm)) / (2.0 * h);
                let scale = 1f64.max(fd.abs()).max(grad[i].abs());
                worst_f = worst_f.max((fd - grad[i]).abs() / scale);
            }
        }
    }
    outcome(
        worst_loss <= 1e-6 && worst_f <= 1e-6,
        format!("losses {worst_loss:.3e}, ∇F(x,δ) {worst_f:.3e}"),
    )
}

fn golden() -> (LpProblem, SolverConfig, SolverResult) {
    let inst = sparse_least_squares(40, 20, 4, 0.01, 7).unwrap();
    let loss = SmoothLoss::least_squares(inst.a, inst.b).unwrap();
    let problem = LpProblem::new(loss, 0.1, 0.5).unwrap();
    let config = SolverConfig::for_loss(problem.loss());
    let result = run(&problem, &config, &Vector::zeros(20)).unwrap();
    (problem, config, result)
}

fn c11_determinism() -> Outcome {
    let (_, _, one) = golden();
    let (_, _, two) = golden();
    let csv_one = format_trace(&one.trace);
    let traces_identical = csv_one == format_trace(&two.trace);
    let trace_round_trip = parse_trace(&csv_one, "golden").unwrap() == trace_rows(&one.trace);

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let inst = sparse_least_squares(40, 20, 4, 0.01, 7).unwrap();
    write_instance(dir_a.path(), &inst, 0.1, 0.5, 7).unwrap();
    write_instance(
        dir_b.path(),
        &sparse_least_squares(40, 20, 4, 0.01, 7).unwrap(),
        0.1,
        0.5,
        7,
    )
    .unwrap();
    let files_identical = ["A.mtx", "b.txt", "x_true.txt", "config.json"]
        .iter()
        .all(|f| std::fs::read(dir_a.path().join(f)).unwrap() == std::fs::read(dir_b.path().join(f)).unwrap());
    let instance_round_trip = read_instance(dir_a.path()).unwrap() == inst;
    outcome(
        traces_identical && trace_round_trip && files_identical && instance_round_trip,
        format!(
            "traces identical {traces_identical}, trace round trip {trace_round_trip}, \
             instance files identical {files_identical}, instance round trip {instance_round_trip} ({} records)",
            one.trace.len()
        ),
    )
}

fn main() -> ExitCode {
    let cases = suite(SolverConfig::default().tol_step);
    let tight = suite(1e-12);
    let n_conv = converged(&cases).count();
    let n_full = cases.iter().filter(|c| c.full_rank).count();
    println!(
        "suite: {} instances, {n_conv} converged, {n_full} full column rank",
        cases.len()
    );

    let results = [
        ("1 subproblem oracle", c1_subproblem()),
        ("2 sufficient decrease", c2_descent(&cases)),
        ("3 summability", c3_summability(&cases)),
        ("4 support/sign stabilization", c4_stabilization(&cases)),
        ("5 magnitude bound", c5_magnitude(&cases)),
        ("6 gradient bound", c6_gradient_bound(&cases)),
        ("7 decrease/relative-error constants", c7_c_conditions(&cases)),
        ("8 stationarity", c8_stationarity(&tight)),
        ("9 rate classification", c9_rate(&cases)),
        ("10 gradient correctness", c10_gradients()),
        ("11 determinism and round trip", c11_determinism()),
    ];
    let mut all = true;
    for (name, o) in &results {
        all &= o.pass;
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
