//! Choosing the server shard size `b1` that minimizes the predicted
//! running time, with workers sharing the remaining samples so that they
//! all finish a local pass at the same moment.
//!
//! With `s = (sum_{i>=2} 1/tau_i)^-1`, `p = gamma / 2` and the rates
//! `alpha`, `beta`, the objective in the single variable `b1` is
//!
//! ```text
//! F(b1) = (max{tau_1 b1, (N - b1) s} + tau_comm) * alpha * b1^-p + tau_1 * b1 * beta
//! ```
//!
//! The two arguments of the max coincide at the breakpoint `b1_0`. Left of
//! it the workers are the bottleneck (`F1`), right of it the server is
//! (`F2`). Each branch has at most one stationary point, found either by a
//! safeguarded Newton iteration or, for `gamma = 1`, from a cubic.

use crate::error::{Error, Result};
use crate::model::{Allocation, DerivedRates, Gamma, ProblemConstants, TimingModel};
use crate::roots::{cardano_positive_roots, newton_root};

/// Everything the planner needs about one network and problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerInput {
    pub n_total: usize,
    pub timing: TimingModel,
    pub consts: ProblemConstants,
    pub rates: DerivedRates,
}

impl PlannerInput {
    pub fn new(n_total: usize, timing: TimingModel, consts: ProblemConstants) -> Result<Self> {
        let rates = consts.rates();
        Self::with_rates(n_total, timing, consts, rates)
    }

    /// Input with explicitly chosen `alpha`, `beta` (the calibration
    /// constants in `consts` are then ignored by the planner).
    pub fn with_rates(
        n_total: usize,
        timing: TimingModel,
        consts: ProblemConstants,
        rates: DerivedRates,
    ) -> Result<Self> {
        if timing.tau_local.is_empty() {
            return Err(Error::Domain("timing model has no devices".into()));
        }
        for (i, &t) in timing.tau_local.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("tau_local[{i}] must be positive, got {t}")));
            }
        }
        if !(timing.tau_comm >= 0.0 && timing.tau_comm.is_finite()) {
            return Err(Error::Domain(format!(
                "tau_comm must be nonnegative, got {}",
                timing.tau_comm
            )));
        }
        if n_total < timing.n_devices() {
            return Err(Error::Domain(format!(
                "N = {n_total} is smaller than the number of devices {}",
                timing.n_devices()
            )));
        }
        if !(rates.alpha > 0.0 && rates.beta > 0.0) {
            return Err(Error::Domain("alpha and beta must be positive".into()));
        }
        Ok(PlannerInput {
            n_total,
            timing,
            consts,
            rates,
        })
    }

    fn exponent(&self) -> f64 {
        self.consts.gamma.rate_exponent()
    }

    fn n(&self) -> f64 {
        self.n_total as f64
    }

    fn tau1(&self) -> f64 {
        self.timing.tau_server()
    }
}

/// Which back-end produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanMethod {
    Newton,
    Cardano,
    SmallComm,
    LargeComm,
    Boundary,
    BruteForce,
}

impl PlanMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanMethod::Newton => "newton",
            PlanMethod::Cardano => "cardano",
            PlanMethod::SmallComm => "small_comm",
            PlanMethod::LargeComm => "large_comm",
            PlanMethod::Boundary => "boundary",
            PlanMethod::BruteForce => "brute_force",
        }
    }
}

impl std::fmt::Display for PlanMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub allocation: Allocation,
    /// Real-valued minimizer before rounding.
    pub b1_continuous: f64,
    /// Objective at `b1_continuous`.
    pub objective_value: f64,
    pub method: PlanMethod,
    /// For the closed forms: how deep inside its regime the input is
    /// (`tau_comm / (N tau)` for large communication, `tau_comm / min tau_i`
    /// for small). `None` for the general planners.
    pub regime_ratio: Option<f64>,
}

/// How interior stationary points are located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    /// Cardano for `gamma = 1`, Newton otherwise.
    Auto,
    Newton,
    /// Only valid for `gamma = 1`.
    Cardano,
}

/// Splits `n_rest` samples over workers so that the slowest one finishes
/// as early as possible.
///
/// Starts from the floors of the continuous solution `b_i ∝ 1/tau_i` and
/// hands out the leftover samples one at a time to the worker that would
/// finish earliest with one more sample (lowest index on ties). The result
/// is an exact minimizer of `max_i tau_i b_i` over integer allocations.
pub fn equalize_workers(n_rest: usize, tau_workers: &[f64]) -> Vec<usize> {
    if tau_workers.is_empty() {
        return Vec::new();
    }
    let inv_sum: f64 = tau_workers.iter().map(|t| 1.0 / t).sum();
    let mut b: Vec<usize> = tau_workers
        .iter()
        .map(|t| (n_rest as f64 / (t * inv_sum)).floor() as usize)
        .collect();
    let mut assigned: usize = b.iter().sum();
    // rounding in the division can push a floor one too high
    while assigned > n_rest {
        let worst = (0..b.len())
            .filter(|&i| b[i] > 0)
            .max_by(|&i, &j| (tau_workers[i] * b[i] as f64).total_cmp(&(tau_workers[j] * b[j] as f64)))
            .expect("positive total implies a nonempty worker");
        b[worst] -= 1;
        assigned -= 1;
    }
    while assigned < n_rest {
        let mut best = 0;
        for i in 1..b.len() {
            let cand = tau_workers[i] * (b[i] + 1) as f64;
            if cand < tau_workers[best] * (b[best] + 1) as f64 {
                best = i;
            }
        }
        b[best] += 1;
        assigned += 1;
    }
    b
}

/// Server shard size at which server and equalized-worker compute times
/// coincide: `b1_0 = N s / (tau_1 + s)`.
pub fn breakpoint_b10(n_total: usize, timing: &TimingModel) -> Result<f64> {
    let s = timing
        .worker_harmonic()
        .ok_or_else(|| Error::Domain("breakpoint needs at least one worker".into()))?;
    Ok(n_total as f64 * s / (timing.tau_server() + s))
}

/// Terms of one branch of `F`: `(c0 + c1 b1) * alpha * b1^-p + tau_1 beta b1`.
/// On the worker branch `c0 = N s + tau_comm, c1 = -s`; on the server
/// branch `c0 = tau_comm, c1 = tau_1`.
#[derive(Debug, Clone, Copy)]
struct Branch {
    c0: f64,
    c1: f64,
    alpha: f64,
    lin: f64,
    p: f64,
}

impl Branch {
    fn value(&self, b: f64) -> f64 {
        (self.c0 + self.c1 * b) * self.alpha * b.powf(-self.p) + self.lin * b
    }

    fn slope(&self, b: f64) -> f64 {
        let p = self.p;
        self.alpha * (-p * self.c0 * b.powf(-p - 1.0) + (1.0 - p) * self.c1 * b.powf(-p)) + self.lin
    }

    fn curvature(&self, b: f64) -> f64 {
        let p = self.p;
        self.alpha * (p * (p + 1.0) * self.c0 * b.powf(-p - 2.0) - p * (1.0 - p) * self.c1 * b.powf(-p - 1.0))
    }
}

fn branches(input: &PlannerInput) -> (Option<Branch>, Branch) {
    let p = input.exponent();
    let DerivedRates { alpha, beta } = input.rates;
    let tau1 = input.tau1();
    let tau_comm = input.timing.tau_comm;
    let server = Branch {
        c0: tau_comm,
        c1: tau1,
        alpha,
        lin: tau1 * beta,
        p,
    };
    let worker = input.timing.worker_harmonic().map(|s| Branch {
        c0: input.n() * s + tau_comm,
        c1: -s,
        alpha,
        lin: tau1 * beta,
        p,
    });
    (worker, server)
}

fn active_branch(b1: f64, input: &PlannerInput) -> Result<Branch> {
    if !(b1 > 0.0 && b1 <= input.n()) {
        return Err(Error::Domain(format!("b1 = {b1} outside (0, {}]", input.n_total)));
    }
    let (worker, server) = branches(input);
    match worker {
        Some(w) if b1 <= breakpoint_b10(input.n_total, &input.timing)? => Ok(w),
        _ => Ok(server),
    }
}

/// Predicted running time as a function of the server shard size.
pub fn objective_f(b1: f64, input: &PlannerInput) -> Result<f64> {
    Ok(active_branch(b1, input)?.value(b1))
}

/// Derivative of [`objective_f`] on the branch that contains `b1`.
pub fn d_objective_f(b1: f64, input: &PlannerInput) -> Result<f64> {
    Ok(active_branch(b1, input)?.slope(b1))
}

/// Predicted running time of an arbitrary integer allocation under the
/// same continuous rates used by [`objective_f`].
pub fn predicted_time(alloc: &Allocation, input: &PlannerInput) -> Result<f64> {
    let b1 = alloc.server() as f64;
    let two_k = input.rates.alpha * b1.powf(-input.exponent());
    let max_compute = alloc.max_compute(&input.timing)?;
    Ok(two_k * (max_compute + input.timing.tau_comm) + input.tau1() * b1 * input.rates.beta)
}

fn allocation_for(b1: usize, input: &PlannerInput) -> Result<Allocation> {
    let mut b = Vec::with_capacity(input.timing.n_devices());
    b.push(b1);
    b.extend(equalize_workers(input.n_total - b1, input.timing.tau_workers()));
    Allocation::new(b)
}

/// Rounds a real `b1` to the better of its integer neighbours in `[1, N]`.
fn round_b1(b1: f64, input: &PlannerInput, value: impl Fn(f64) -> Result<f64>) -> Result<usize> {
    let n = input.n_total;
    let lo = (b1.floor() as usize).clamp(1, n);
    let hi = (b1.ceil() as usize).clamp(1, n);
    if lo == hi {
        return Ok(lo);
    }
    Ok(if value(hi as f64)? < value(lo as f64)? { hi } else { lo })
}

fn single_device(input: &PlannerInput, method: PlanMethod) -> Result<PlanResult> {
    let n = input.n();
    Ok(PlanResult {
        allocation: Allocation::new(vec![input.n_total])?,
        b1_continuous: n,
        objective_value: (input.tau1() * n + input.timing.tau_comm) * input.rates.alpha * n.powf(-input.exponent())
            + input.tau1() * n * input.rates.beta,
        method,
        regime_ratio: None,
    })
}

fn branch_roots(branch: &Branch, lo: f64, hi: f64, finder: RootMethod) -> Result<Vec<(f64, PlanMethod)>> {
    if !(lo < hi) {
        return Ok(Vec::new());
    }
    match finder {
        RootMethod::Cardano => {
            // slope = -p alpha c0 b^-3/2 + (1-p) alpha c1 b^-1/2 + lin with p = 1/2
            let roots = cardano_positive_roots(
                0.5 * branch.alpha * branch.c1,
                -0.5 * branch.alpha * branch.c0,
                branch.lin,
            )?;
            Ok(roots
                .into_iter()
                .filter(|&x| x >= lo && x <= hi)
                .map(|x| (x, PlanMethod::Cardano))
                .collect())
        }
        _ => {
            let tol = 1e-10 * (branch.slope(lo).abs() + branch.slope(hi).abs());
            let root = newton_root(|b| branch.slope(b), |b| branch.curvature(b), lo, hi, tol)?;
            Ok(root.into_iter().map(|x| (x, PlanMethod::Newton)).collect())
        }
    }
}

/// Optimal allocation using the default root finder.
pub fn plan(input: &PlannerInput) -> Result<PlanResult> {
    plan_with(input, RootMethod::Auto)
}

/// Optimal allocation: stationary points of both branches plus the points
/// `1`, `b1_0` and `N` are compared, the best becomes `b1`, and the workers
/// share the rest by [`equalize_workers`].
pub fn plan_with(input: &PlannerInput, finder: RootMethod) -> Result<PlanResult> {
    if input.timing.n_devices() == 1 {
        return single_device(input, PlanMethod::Boundary);
    }
    let finder = match (finder, input.consts.gamma) {
        (RootMethod::Auto, Gamma::One) => RootMethod::Cardano,
        (RootMethod::Auto, Gamma::Half) => RootMethod::Newton,
        (RootMethod::Cardano, Gamma::Half) => {
            return Err(Error::Precondition(
                "the cubic reduction only applies to gamma = 1".into(),
            ))
        }
        (f, _) => f,
    };
    let n = input.n();
    let b10 = breakpoint_b10(input.n_total, &input.timing)?;
    let (worker, server) = branches(input);
    let worker = worker.expect("n >= 2 has workers");

    let mut candidates = vec![(1.0, PlanMethod::Boundary), (n, PlanMethod::Boundary)];
    if b10 >= 1.0 {
        candidates.push((b10, PlanMethod::Boundary));
    }
    candidates.extend(branch_roots(&worker, 1.0, b10.min(n), finder)?);
    candidates.extend(branch_roots(&server, b10.max(1.0), n, finder)?);

    let mut best: Option<(f64, f64, PlanMethod)> = None;
    for (b, method) in candidates {
        let v = objective_f(b, input)?;
        if best.is_none_or(|(_, bv, _)| v < bv) {
            best = Some((b, v, method));
        }
    }
    let (b_star, value, method) = best.expect("candidate set is nonempty");
    let b1 = round_b1(b_star, input, |b| objective_f(b, input))?;
    Ok(PlanResult {
        allocation: allocation_for(b1, input)?,
        b1_continuous: b_star,
        objective_value: value,
        method,
        regime_ratio: None,
    })
}

/// Exhaustive search over every integer `b1` in `[1, N]`. Test oracle;
/// refuses `N > 10^4`.
pub fn brute_force_plan(input: &PlannerInput) -> Result<PlanResult> {
    if input.n_total > 10_000 {
        return Err(Error::Precondition(format!(
            "N = {} too large for brute force",
            input.n_total
        )));
    }
    if input.timing.n_devices() == 1 {
        return single_device(input, PlanMethod::BruteForce);
    }
    let mut best = (1usize, f64::INFINITY);
    for b in 1..=input.n_total {
        let v = objective_f(b as f64, input)?;
        if v < best.1 {
            best = (b, v);
        }
    }
    Ok(PlanResult {
        allocation: allocation_for(best.0, input)?,
        b1_continuous: best.0 as f64,
        objective_value: best.1,
        method: PlanMethod::BruteForce,
        regime_ratio: None,
    })
}

/// `4^(1/5) + 4^(-4/5)`.
pub fn large_comm_constant() -> f64 {
    4f64.powf(0.2) + 4f64.powf(-0.8)
}

/// Minimum of the communication-dominated objective
/// `alpha tau_comm b1^-1/4 + beta tau b1` over `b1 > 0`, ignoring the
/// upper bound `N`: `(alpha tau_comm)^(4/5) (beta tau)^(1/5) (4^(1/5) + 4^(-4/5))`.
pub fn large_comm_optimum_value(rates: &DerivedRates, tau_comm: f64, tau: f64) -> f64 {
    (rates.alpha * tau_comm).powf(0.8) * (rates.beta * tau).powf(0.2) * large_comm_constant()
}

fn homogeneous_tau(timing: &TimingModel) -> Result<f64> {
    let workers = timing.tau_workers();
    let Some(&first) = workers.first() else {
        return Ok(timing.tau_server());
    };
    for &t in workers {
        if (t - first).abs() > 1e-9 * first.abs() {
            return Err(Error::Precondition(
                "the large-communication closed form needs identical worker costs".into(),
            ));
        }
    }
    Ok(first)
}

/// Closed form for communication-dominated networks with identical workers.
///
/// Drops the compute term under the max, so `F ≈ alpha tau_comm b1^-p +
/// beta tau b1`, minimized at `b1 = (p alpha tau_comm / (beta tau))^(1/(1+p))`;
/// for `gamma = 1/2` this is `(tau_comm alpha / (4 beta tau))^(4/5)`. A
/// minimizer outside `[1, N]` is clamped to the nearer end.
pub fn closed_form_large_comm(input: &PlannerInput) -> Result<PlanResult> {
    let tau_workers = homogeneous_tau(&input.timing)?;
    let tau = input.tau1();
    let p = input.exponent();
    let n = input.n();
    let DerivedRates { alpha, beta } = input.rates;
    let tau_comm = input.timing.tau_comm;
    let approx = |b: f64| alpha * tau_comm * b.powf(-p) + beta * tau * b;

    let interior = (p * alpha * tau_comm / (beta * tau)).powf(1.0 / (1.0 + p));
    let (b_star, value) = if interior >= 1.0 && interior < n {
        let v = match input.consts.gamma {
            Gamma::Half => large_comm_optimum_value(&input.rates, tau_comm, tau),
            Gamma::One => approx(interior),
        };
        (interior, v)
    } else {
        let edge = interior.clamp(1.0, n);
        (edge, approx(edge))
    };
    let b1 = round_b1(b_star, input, |b| Ok(approx(b)))?;
    Ok(PlanResult {
        allocation: allocation_for(b1, input)?,
        b1_continuous: b_star,
        objective_value: value,
        method: PlanMethod::LargeComm,
        regime_ratio: Some(tau_comm / (n * tau.max(tau_workers))),
    })
}

/// Approximate planner for negligible communication cost.
///
/// Searches only the worker-bound half `[1, b1_0]` (the server-bound branch
/// is increasing there) and minimizes the simplified branch
/// `alpha s b1^-p (N - b1) + tau_1 beta b1`, i.e. with `tau_comm` dropped.
/// Without an interior stationary point the endpoint indicated by the
/// derivative's sign is returned.
pub fn closed_form_small_comm(input: &PlannerInput) -> Result<PlanResult> {
    if input.timing.n_devices() == 1 {
        return single_device(input, PlanMethod::SmallComm);
    }
    let min_tau = input.timing.tau_local.iter().copied().fold(f64::INFINITY, f64::min);
    let regime_ratio = Some(input.timing.tau_comm / min_tau);
    let s = input.timing.worker_harmonic().expect("n >= 2");
    let n = input.n();
    let b10 = breakpoint_b10(input.n_total, &input.timing)?;
    let simplified = Branch {
        c0: n * s,
        c1: -s,
        alpha: input.rates.alpha,
        lin: input.tau1() * input.rates.beta,
        p: input.exponent(),
    };
    let b_star = if b10 <= 1.0 {
        1.0
    } else {
        let tol = 1e-10 * (simplified.slope(1.0).abs() + simplified.slope(b10).abs());
        match newton_root(|b| simplified.slope(b), |b| simplified.curvature(b), 1.0, b10, tol)? {
            Some(b) => b,
            None if simplified.slope(1.0) > 0.0 => 1.0,
            None => b10,
        }
    };
    let b1 = round_b1(b_star, input, |b| Ok(simplified.value(b)))?;
    Ok(PlanResult {
        allocation: allocation_for(b1, input)?,
        b1_continuous: b_star,
        objective_value: objective_f(b_star, input)?,
        method: PlanMethod::SmallComm,
        regime_ratio,
    })
}
