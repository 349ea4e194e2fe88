//! Accelerated extragradient for `f = f1 + (f - f1)`, where the server owns
//! `f1` and solves a proximal subproblem on it each outer iteration while the
//! rest of the network only contributes gradients.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::data::{RidgeProblem, ShardSet};
use crate::error::{Error, Result};
use crate::model::ProblemConstants;

/// Step parameters of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgParams {
    /// Interpolation weight between `x` and `x_f`, in `(0, 1)`.
    pub momentum: f64,
    pub eta: f64,
    /// Proximal step of the subproblem.
    pub theta: f64,
    pub alpha_reg: f64,
    pub max_outer: usize,
}

impl AlgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.momentum > 0.0 && self.momentum < 1.0) {
            return Err(Error::Domain(format!(
                "momentum must be in (0,1), got {}",
                self.momentum
            )));
        }
        for (name, v) in [("eta", self.eta), ("theta", self.theta), ("alpha_reg", self.alpha_reg)] {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Parameters for a network whose Hessian dissimilarity is `delta`:
/// `theta = 1/(2 delta)`, `alpha_reg = mu`,
/// `momentum = min(1, sqrt(mu/delta)/2)` and
/// `eta = min(1/(2 mu), 1/(2 sqrt(mu delta)))`.
pub fn default_params(consts: &ProblemConstants, delta: f64) -> Result<AlgParams> {
    let mu = consts.mu;
    let slack = 1e-12 * consts.l_smooth;
    if !(delta >= mu - slack && delta <= consts.l_smooth + slack) {
        return Err(Error::Domain(format!("delta = {delta} outside [mu, L]")));
    }
    let delta = delta.max(mu);
    Ok(AlgParams {
        momentum: (0.5 * (mu / delta).sqrt()).min(1.0),
        eta: (0.5 / mu).min(0.5 / (mu * delta).sqrt()),
        theta: 0.5 / delta,
        alpha_reg: mu,
        max_outer: 100_000,
    })
}

/// The split objective seen by the outer loop.
pub trait CompositeObjective {
    fn dim(&self) -> usize;
    /// `∇f`.
    fn full_grad(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `∇f1`.
    fn server_grad(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Smoothness constant of `f1`.
    fn server_smoothness(&self) -> f64;
    /// `(H, c)` when `f1(x) = x^T H x / 2 - c^T x + const`, enabling the
    /// exact subproblem solve.
    fn server_quadratic(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        None
    }
}

/// Ridge regression split between a server shard and everyone else. Both
/// parts are quadratics, kept in dense form.
#[derive(Debug, Clone)]
pub struct RidgeComposite {
    full_h: DMatrix<f64>,
    full_c: DVector<f64>,
    server_h: DMatrix<f64>,
    server_c: DVector<f64>,
    server_l: f64,
}

impl RidgeComposite {
    /// `f` is the ridge objective over all shards, `f1` the one over
    /// `shards[0]` (same `lambda`).
    pub fn new(shards: &ShardSet, lambda: f64) -> Result<Self> {
        let server = shards.shards.first().ok_or_else(|| Error::Domain("no shards".into()))?;
        if server.is_empty() {
            return Err(Error::Domain("server shard is empty".into()));
        }
        let d = server.dim;
        let total: usize = shards.shards.iter().map(|s| s.len()).sum();
        let mut gram = DMatrix::zeros(d, d);
        let mut xty = DVector::zeros(d);
        for s in &shards.shards {
            gram += s.gram();
            xty += s.xty();
        }
        let eye = DMatrix::<f64>::identity(d, d);
        let b1 = server.len() as f64;
        let server_h = server.gram() / b1 + &eye * lambda;
        let server_l = SymmetricEigen::new(server_h.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        Ok(RidgeComposite {
            full_h: gram / total as f64 + eye * lambda,
            full_c: xty / total as f64,
            server_c: server.xty() / b1,
            server_h,
            server_l,
        })
    }

    /// Minimizer of the full objective.
    pub fn solution(&self) -> Result<DVector<f64>> {
        self.full_h
            .clone()
            .cholesky()
            .map(|c| c.solve(&self.full_c))
            .ok_or_else(|| Error::Singular("full ridge Hessian".into()))
    }
}

impl CompositeObjective for RidgeComposite {
    fn dim(&self) -> usize {
        self.full_c.len()
    }

    fn full_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.full_h * x - &self.full_c
    }

    fn server_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.server_h * x - &self.server_c
    }

    fn server_smoothness(&self) -> f64 {
        self.server_l
    }

    fn server_quadratic(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        Some((&self.server_h, &self.server_c))
    }
}

/// Cached factorization of `I/theta + H` for the exact subproblem solve
/// `(I/theta + H) x = x_g/theta + c - ∇(f - f1)(x_g)`.
pub struct ExactProx {
    chol: Cholesky<f64, Dyn>,
    c: DVector<f64>,
    inv_theta: f64,
}

impl ExactProx {
    pub fn new(h: &DMatrix<f64>, c: &DVector<f64>, theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::Domain(format!("theta must be positive, got {theta}")));
        }
        let inv_theta = 1.0 / theta;
        let m = h + DMatrix::identity(h.nrows(), h.ncols()) * inv_theta;
        let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Singular("I/theta + H is not positive definite".into()))?;
        let pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v * v));
        if pivot <= 1e-13 * scale {
            return Err(Error::Singular("I/theta + H is numerically singular".into()));
        }
        Ok(ExactProx {
            chol,
            c: c.clone(),
            inv_theta,
        })
    }

    pub fn solve(&self, x_g: &DVector<f64>, grad_rest: &DVector<f64>) -> DVector<f64> {
        let rhs = x_g * self.inv_theta + &self.c - grad_rest;
        self.chol.solve(&rhs)
    }
}

/// Exact minimizer of
/// `<grad_rest, x - x_g> + ||x - x_g||^2 / (2 theta) + f1(x)` where `f1` is
/// the ridge objective on `shard`.
pub fn subproblem_exact_ridge(
    x_g: &DVector<f64>,
    grad_rest: &DVector<f64>,
    theta: f64,
    shard: &RidgeProblem,
) -> Result<DVector<f64>> {
    if shard.data.is_empty() {
        return Err(Error::Domain("server shard is empty".into()));
    }
    let b = shard.data.len() as f64;
    let prox = ExactProx::new(&shard.hessian(), &(shard.data.xty() / b), theta)?;
    Ok(prox.solve(x_g, grad_rest))
}

/// OGM-G: `iters` steps of the optimized gradient method for decreasing
/// the gradient norm of an `smoothness`-smooth convex function.
pub fn subproblem_ogmg<G>(grad: G, smoothness: f64, x_start: &DVector<f64>, iters: usize) -> Result<DVector<f64>>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    if iters == 0 {
        return Err(Error::Domain("OGM-G needs at least one iteration".into()));
    }
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(Error::Domain(format!("smoothness must be positive, got {smoothness}")));
    }
    // theta~_N = 1, theta~_i from the back, with the special i = 0 step
    let mut t = vec![1.0_f64; iters + 1];
    for i in (1..iters).rev() {
        t[i] = 0.5 * (1.0 + (1.0 + 4.0 * t[i + 1] * t[i + 1]).sqrt());
    }
    t[0] = 0.5 * (1.0 + (1.0 + 8.0 * t[1] * t[1]).sqrt());

    let mut x = x_start.clone();
    let mut y = x_start.clone();
    for i in 0..iters {
        let g = grad(&x);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("OGM-G gradient at step {i}")));
        }
        let y_next = &x - g / smoothness;
        let w_y = (t[i] - 1.0) * (2.0 * t[i + 1] - 1.0) / (t[i] * (2.0 * t[i] - 1.0));
        let w_x = (2.0 * t[i + 1] - 1.0) / (2.0 * t[i] - 1.0);
        x = &y_next + (&y_next - &y) * w_y + (&y_next - &x) * w_x;
        y = y_next;
    }
    Ok(x)
}

/// Line-5 subproblem solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolver {
    /// Direct linear solve; each solve is booked as `work_units` inner
    /// iterations of server compute.
    Exact { work_units: u64 },
    /// OGM-G with a fixed number of steps, each booked as one inner iteration.
    Ogmg { iters: usize },
}

impl Default for InnerSolver {
    fn default() -> Self {
        InnerSolver::Exact { work_units: 1 }
    }
}

/// When to stop the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub grad_tol: f64,
    /// Interpret `grad_tol` relative to `||∇f(x0)||`.
    pub relative: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            grad_tol: 1e-6,
            relative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub x: DVector<f64>,
    pub x_f: DVector<f64>,
    pub k: usize,
    pub inner_iters_total: u64,
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// `||∇f(x_f^{k+1})||`.
    pub grad_norm: f64,
    pub inner_iters: u64,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub state: OptState,
    pub trace: Vec<IterRecord>,
    pub converged: bool,
    pub initial_grad_norm: f64,
}

impl Outcome {
    /// `x^K`, the output of the outer loop.
    pub fn x(&self) -> &DVector<f64> {
        &self.state.x
    }

    /// `x_f^K`, the point whose gradient norm the stop rule checks.
    pub fn x_f(&self) -> &DVector<f64> {
        &self.state.x_f
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.trace.last().map_or(self.initial_grad_norm, |r| r.grad_norm)
    }
}

/// Runs the accelerated extragradient loop:
///
/// ```text
/// x_g   = m x + (1 - m) x_f
/// x_f+  = argmin <∇(f - f1)(x_g), z - x_g> + ||z - x_g||^2/(2 theta) + f1(z)
/// x+    = x + eta alpha (x_f+ - x) - eta ∇f(x_f+)
/// ```
///
/// `observer` sees every iteration record as it is produced.
pub fn accel_extragradient<O, F>(
    obj: &O,
    params: &AlgParams,
    x0: &DVector<f64>,
    stop: &StopRule,
    inner: &InnerSolver,
    mut observer: F,
) -> Result<Outcome>
where
    O: CompositeObjective + ?Sized,
    F: FnMut(&IterRecord),
{
    params.validate()?;
    if x0.len() != obj.dim() {
        return Err(Error::Dimension {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("starting point".into()));
    }
    let exact = match inner {
        InnerSolver::Exact { .. } => {
            let (h, c) = obj
                .server_quadratic()
                .ok_or_else(|| Error::Precondition("exact inner solve needs a quadratic server part".into()))?;
            Some(ExactProx::new(h, c, params.theta)?)
        }
        InnerSolver::Ogmg { .. } => None,
    };
    let inner_smoothness = 1.0 / params.theta + obj.server_smoothness();

    let initial_grad_norm = obj.full_grad(x0).norm();
    let threshold = if stop.relative {
        stop.grad_tol * initial_grad_norm
    } else {
        stop.grad_tol
    };
    let mut state = OptState {
        x: x0.clone(),
        x_f: x0.clone(),
        k: 0,
        inner_iters_total: 0,
    };
    let mut trace = Vec::new();
    let mut converged = initial_grad_norm <= threshold;
    let m = params.momentum;

    while !converged && state.k < params.max_outer {
        let k = state.k;
        let x_g = &state.x * m + &state.x_f * (1.0 - m);
        let grad_rest = obj.full_grad(&x_g) - obj.server_grad(&x_g);
        let (x_f, inner_iters) = match (inner, &exact) {
            (InnerSolver::Exact { work_units }, Some(prox)) => (prox.solve(&x_g, &grad_rest), *work_units),
            (InnerSolver::Ogmg { iters }, _) => {
                let model = |z: &DVector<f64>| &grad_rest + (z - &x_g) / params.theta + obj.server_grad(z);
                (subproblem_ogmg(model, inner_smoothness, &x_g, *iters)?, *iters as u64)
            }
            _ => unreachable!("exact solver prepared above"),
        };
        let g = obj.full_grad(&x_f);
        let x = &state.x + (&x_f - &state.x) * (params.eta * params.alpha_reg) - &g * params.eta;
        let grad_norm = g.norm();
        if !(grad_norm.is_finite() && x.iter().chain(x_f.iter()).all(|v| v.is_finite())) {
            return Err(Error::Divergence { iteration: k });
        }
        let record = IterRecord {
            k,
            grad_norm,
            inner_iters,
        };
        state = OptState {
            x,
            x_f,
            k: k + 1,
            inner_iters_total: state.inner_iters_total + inner_iters,
        };
        observer(&record);
        trace.push(record);
        converged = record.grad_norm <= threshold;
    }
    Ok(Outcome {
        state,
        trace,
        converged,
        initial_grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, hessian_similarity, parse_libsvm_str, shard, spectral_constants};
    use crate::model::{Allocation, Gamma};

    fn vector(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn synthetic_run(inner: InnerSolver) -> (Outcome, DVector<f64>) {
        let data = gen_synthetic(100, 5, 0.1, 11).unwrap();
        let problem = RidgeProblem::new(data.clone(), 0.1).unwrap();
        let alloc = Allocation::new(vec![40, 20, 20, 20]).unwrap();
        let shards = shard(&data, &alloc, 1).unwrap();
        let obj = RidgeComposite::new(&shards, 0.1).unwrap();
        let (l, mu) = spectral_constants(&problem).unwrap();
        let consts = ProblemConstants::new(l, mu, 1e-6, Gamma::Half).unwrap();
        let delta = hessian_similarity(&data, &shards.shards[0]).clamp(mu, l);
        let params = default_params(&consts, delta).unwrap();
        let stop = StopRule {
            grad_tol: 1e-8,
            relative: false,
        };
        let out = accel_extragradient(&obj, &params, &DVector::zeros(5), &stop, &inner, |_| {}).unwrap();
        (out, problem.solve_direct().unwrap())
    }

    #[test]
    fn exact_prox_example() {
        let shard = RidgeProblem::new(parse_libsvm_str("1 1:1\n1 2:1").unwrap(), 0.0).unwrap();
        let x = subproblem_exact_ridge(&vector(&[0.0, 0.0]), &vector(&[0.0, 0.0]), 1.0, &shard).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14 && (x[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_prox_fixed_points() {
        let shard = RidgeProblem::new(gen_synthetic(12, 3, 0.2, 4).unwrap(), 0.3).unwrap();
        let w = shard.solve_direct().unwrap();
        let x = subproblem_exact_ridge(&w, &DVector::zeros(3), 0.7, &shard).unwrap();
        assert!((x - &w).norm() < 1e-12);

        let zero = RidgeProblem::new(parse_libsvm_str("1\n2").unwrap(), 0.0).unwrap();
        let zero = RidgeProblem::new(crate::data::Dataset { dim: 2, ..zero.data }, 0.0).unwrap();
        let g = vector(&[0.4, -2.0]);
        let x = subproblem_exact_ridge(&g, &DVector::zeros(2), 3.0, &zero).unwrap();
        assert!((x - g).norm() < 1e-14);
    }

    #[test]
    fn exact_prox_singular_without_proximal_term() {
        let rank_one = RidgeProblem::new(parse_libsvm_str("1 1:1 2:1\n2 1:2 2:2").unwrap(), 0.0).unwrap();
        let r = subproblem_exact_ridge(&DVector::zeros(2), &DVector::zeros(2), f64::INFINITY, &rank_one);
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn exact_prox_is_stationary() {
        let shard = RidgeProblem::new(gen_synthetic(30, 4, 0.2, 5).unwrap(), 0.05).unwrap();
        let x_g = vector(&[0.3, -0.1, 2.0, 1.0]);
        let rest = vector(&[0.5, 0.2, -0.3, 0.0]);
        let theta = 0.8;
        let x = subproblem_exact_ridge(&x_g, &rest, theta, &shard).unwrap();
        let b = shard.data.len() as f64;
        let grad = &rest + (&x - &x_g) / theta + shard.hessian() * &x - shard.data.xty() / b;
        let rhs_norm = (&x_g / theta + shard.data.xty() / b - &rest).norm();
        assert!(grad.norm() <= 1e-8 * (1.0 + rhs_norm));
    }

    #[test]
    fn ogmg_one_dimensional_quadratic() {
        // g(x) = x^2/2 with L = 1 attains the worst-case guarantee
        // |g'(x_N)| <= sqrt(2 L (g(x0) - g*)) / theta~_0 with equality
        for iters in [1usize, 2, 50] {
            let mut t = 1.0_f64;
            for _ in 1..iters {
                t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            }
            let t0 = 0.5 * (1.0 + (1.0 + 8.0 * t * t).sqrt());
            let out = subproblem_ogmg(|x| x.clone(), 1.0, &vector(&[1.0]), iters).unwrap();
            assert!(
                (out[0].abs() - 1.0 / t0).abs() < 1e-12,
                "{iters}: {} vs {}",
                out[0],
                1.0 / t0
            );
        }
        let out = subproblem_ogmg(|x| x.clone(), 1.0, &vector(&[1.0]), 20_000).unwrap();
        assert!(out[0].abs() < 1e-4);
        let out = subproblem_ogmg(|x| x.clone(), 1.0, &vector(&[0.0]), 50).unwrap();
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn ogmg_beats_gradient_descent_budget() {
        let h = DMatrix::from_diagonal(&vector(&[1.0, 0.1, 0.01, 0.001]));
        let c = vector(&[1.0, 1.0, 1.0, 1.0]);
        let grad = |x: &DVector<f64>| &h * x - &c;
        for iters in [5, 20, 80] {
            let out = subproblem_ogmg(grad, 1.0, &DVector::zeros(4), iters).unwrap();
            let mut x = DVector::zeros(4);
            let mut best_gd = grad(&x).norm();
            for _ in 0..iters {
                x = &x - grad(&x);
                best_gd = best_gd.min(grad(&x).norm());
            }
            assert!(
                grad(&out).norm() <= best_gd,
                "{iters}: {} > {best_gd}",
                grad(&out).norm()
            );
        }
    }

    #[test]
    fn ogmg_matches_exact_prox() {
        let shard = RidgeProblem::new(gen_synthetic(30, 4, 0.2, 5).unwrap(), 0.05).unwrap();
        let x_g = vector(&[0.3, -0.1, 2.0, 1.0]);
        let rest = vector(&[0.5, 0.2, -0.3, 0.0]);
        let theta = 0.05;
        let exact = subproblem_exact_ridge(&x_g, &rest, theta, &shard).unwrap();
        let h = shard.hessian();
        let c = shard.data.xty() / 30.0;
        let l = SymmetricEigen::new(h.clone()).eigenvalues.amax() + 1.0 / theta;
        let model = |z: &DVector<f64>| &rest + (z - &x_g) / theta + &h * z - &c;
        // no restarts, so the gradient only decays like 1/iters
        let approx = subproblem_ogmg(model, l, &x_g, 200_000).unwrap();
        let gap = (approx - exact).norm();
        assert!(gap <= 1e-6, "{gap}");
    }

    #[test]
    fn default_params_are_valid() {
        let consts = ProblemConstants::new(4.0, 0.5, 1e-3, Gamma::One).unwrap();
        for delta in [0.5, 1.0, 2.0, 4.0] {
            default_params(&consts, delta).unwrap().validate().unwrap();
        }
        let flat = ProblemConstants::new(1.0, 1.0, 1e-3, Gamma::One).unwrap();
        let p = default_params(&flat, 1.0).unwrap();
        assert!(p.momentum > 0.0 && p.momentum < 1.0);
        assert!(default_params(&consts, 5.0).is_err());
    }

    #[test]
    fn solves_synthetic_ridge() {
        let (out, direct) = synthetic_run(InnerSolver::Exact { work_units: 1 });
        assert!(out.converged);
        assert!(out.final_grad_norm() <= 1e-6);
        assert!((out.x_f() - &direct).amax() <= 1e-5);
    }

    #[test]
    fn ogmg_inner_reaches_same_fixed_point() {
        let (exact, _) = synthetic_run(InnerSolver::Exact { work_units: 1 });
        let (ogmg, _) = synthetic_run(InnerSolver::Ogmg { iters: 200 });
        assert!(ogmg.converged);
        assert!((exact.x_f() - ogmg.x_f()).amax() <= 1e-4);
        assert_eq!(ogmg.state.inner_iters_total, 200 * ogmg.trace.len() as u64);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let data = gen_synthetic(60, 3, 0.1, 2).unwrap();
        let shards = shard(&data, &Allocation::new(vec![20, 20, 20]).unwrap(), 3).unwrap();
        let obj = RidgeComposite::new(&shards, 0.1).unwrap();
        let w = obj.solution().unwrap();
        assert!(obj.full_grad(&w).norm() < 1e-12);
        let consts = ProblemConstants::new(5.0, 0.1, 1e-3, Gamma::One).unwrap();
        let params = AlgParams {
            max_outer: 20,
            ..default_params(&consts, 1.0).unwrap()
        };
        let stop = StopRule {
            grad_tol: 0.0,
            relative: false,
        };
        let out = accel_extragradient(&obj, &params, &w, &stop, &InnerSolver::default(), |_| {}).unwrap();
        assert!((out.x() - &w).amax() < 1e-10);
        assert!((out.x_f() - &w).amax() < 1e-10);
    }

    #[test]
    fn gradient_norm_keeps_improving() {
        let (out, _) = synthetic_run(InnerSolver::Exact { work_units: 1 });
        let norms: Vec<f64> = out.trace.iter().map(|r| r.grad_norm).collect();
        for w in (20..norms.len()).step_by(20) {
            let prev = norms[w - 20..w].iter().cloned().fold(f64::INFINITY, f64::min);
            let best_so_far = norms[..w - 20].iter().cloned().fold(out.initial_grad_norm, f64::min);
            assert!(prev < best_so_far, "window ending at {w}");
        }
    }

    #[test]
    fn divergence_is_reported() {
        let data = gen_synthetic(40, 3, 0.1, 2).unwrap();
        let shards = shard(&data, &Allocation::new(vec![4, 36]).unwrap(), 3).unwrap();
        let obj = RidgeComposite::new(&shards, 1e-3).unwrap();
        // wildly oversized steps
        let params = AlgParams {
            momentum: 0.5,
            eta: 1e6,
            theta: 1e6,
            alpha_reg: 1e3,
            max_outer: 10_000,
        };
        let stop = StopRule {
            grad_tol: 0.0,
            relative: false,
        };
        let r = accel_extragradient(
            &obj,
            &params,
            &DVector::from_element(3, 1.0),
            &stop,
            &InnerSolver::default(),
            |_| {},
        );
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }
}
