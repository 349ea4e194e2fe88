//! Cost model of one run of the accelerated extragradient method on a
//! star network: a server (device 1) that solves the local subproblem and
//! `n - 1` workers that only supply gradients.
//!
//! All functions here are pure and operate on small value types.

use crate::error::{Error, Result};

/// Per-device compute cost per sample and per-round communication cost.
///
/// Index 0 of `tau_local` is the server.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingModel {
    pub tau_local: Vec<f64>,
    pub tau_comm: f64,
}

impl TimingModel {
    pub fn new(tau_local: Vec<f64>, tau_comm: f64) -> Result<Self> {
        let t = TimingModel { tau_local, tau_comm };
        t.validate()?;
        Ok(t)
    }

    /// Checks invariants. Zero costs are rejected here; the degenerate
    /// all-zero network is only reachable through direct construction.
    pub fn validate(&self) -> Result<()> {
        if self.tau_local.is_empty() {
            return Err(Error::Domain("timing model needs at least one device".into()));
        }
        for (i, &t) in self.tau_local.iter().enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Domain(format!(
                    "tau_local[{i}] = {t} must be positive and finite"
                )));
            }
        }
        if !(self.tau_comm.is_finite() && self.tau_comm > 0.0) {
            return Err(Error::Domain(format!(
                "tau_comm = {} must be positive and finite",
                self.tau_comm
            )));
        }
        Ok(())
    }

    pub fn n_devices(&self) -> usize {
        self.tau_local.len()
    }

    pub fn tau_server(&self) -> f64 {
        self.tau_local[0]
    }

    pub fn tau_workers(&self) -> &[f64] {
        &self.tau_local[1..]
    }

    /// Harmonic aggregate `(sum_{i>=2} 1/tau_i)^-1` of the workers: the time
    /// the equalized workers need per sample of the non-server data.
    /// `None` when there are no workers.
    pub fn worker_harmonic(&self) -> Option<f64> {
        let w = self.tau_workers();
        if w.is_empty() {
            None
        } else {
            Some(1.0 / w.iter().map(|t| 1.0 / t).sum::<f64>())
        }
    }

    /// Same model with a different communication cost.
    pub fn with_comm(&self, tau_comm: f64) -> Self {
        TimingModel {
            tau_local: self.tau_local.clone(),
            tau_comm,
        }
    }
}

/// How the server's shard size improves Hessian similarity: `delta = L / b1^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gamma {
    Half,
    One,
}

impl Gamma {
    pub fn value(self) -> f64 {
        match self {
            Gamma::Half => 0.5,
            Gamma::One => 1.0,
        }
    }

    /// Exponent `p` with `2K ∝ b1^-p`, i.e. `gamma / 2`.
    pub fn rate_exponent(self) -> f64 {
        self.value() / 2.0
    }

    pub fn from_value(g: f64) -> Result<Self> {
        if g == 0.5 {
            Ok(Gamma::Half)
        } else if g == 1.0 {
            Ok(Gamma::One)
        } else {
            Err(Error::Domain(format!("gamma must be 0.5 or 1, got {g}")))
        }
    }
}

/// Smoothness, strong convexity, target accuracy, similarity exponent and
/// the multiplicative constants that stand in for the big-O factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub l_smooth: f64,
    pub mu: f64,
    pub eps: f64,
    pub gamma: Gamma,
    pub c1: f64,
    pub c2: f64,
}

impl ProblemConstants {
    /// Constants with `c1 = c2 = 1`.
    pub fn new(l_smooth: f64, mu: f64, eps: f64, gamma: Gamma) -> Result<Self> {
        Self::with_calibration(l_smooth, mu, eps, gamma, 1.0, 1.0)
    }

    pub fn with_calibration(l_smooth: f64, mu: f64, eps: f64, gamma: Gamma, c1: f64, c2: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= l_smooth && l_smooth.is_finite()) {
            return Err(Error::Domain(format!("need 0 < mu <= L, got mu={mu}, L={l_smooth}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
        }
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::Domain(format!("c1, c2 must be positive, got {c1}, {c2}")));
        }
        Ok(ProblemConstants {
            l_smooth,
            mu,
            eps,
            gamma,
            c1,
            c2,
        })
    }

    /// Natural log of `1/eps`.
    pub fn log_inv_eps(&self) -> f64 {
        (1.0 / self.eps).ln()
    }

    pub fn kappa(&self) -> f64 {
        self.l_smooth / self.mu
    }

    pub fn rates(&self) -> DerivedRates {
        let base = self.kappa().sqrt() * self.log_inv_eps();
        DerivedRates {
            alpha: self.c1 * base,
            beta: self.c2 * base,
        }
    }
}

/// `alpha = c1 sqrt(L/mu) ln(1/eps)`, `beta = c2 sqrt(L/mu) ln(1/eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub alpha: f64,
    pub beta: f64,
}

/// Per-device sample counts. `b[0]` is the server shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    b: Vec<usize>,
}

impl Allocation {
    pub fn new(b: Vec<usize>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::Domain("allocation needs at least one device".into()));
        }
        if b[0] < 1 {
            return Err(Error::Domain("the server must hold at least one sample".into()));
        }
        Ok(Allocation { b })
    }

    /// `N / n` per device, the remainder going to the lowest indices.
    pub fn uniform(total: usize, n_devices: usize) -> Result<Self> {
        if n_devices == 0 || total < n_devices {
            return Err(Error::Domain(format!(
                "cannot split {total} samples uniformly over {n_devices} devices"
            )));
        }
        let base = total / n_devices;
        let extra = total % n_devices;
        Self::new((0..n_devices).map(|i| base + usize::from(i < extra)).collect())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.b
    }

    pub fn server(&self) -> usize {
        self.b[0]
    }

    pub fn total(&self) -> usize {
        self.b.iter().sum()
    }

    pub fn n_devices(&self) -> usize {
        self.b.len()
    }

    /// Largest per-device compute time `max_i tau_i * b_i`.
    pub fn max_compute(&self, timing: &TimingModel) -> Result<f64> {
        check_dims(self, timing)?;
        Ok(self
            .b
            .iter()
            .zip(&timing.tau_local)
            .map(|(&b, &t)| t * b as f64)
            .fold(0.0, f64::max))
    }
}

pub(crate) fn check_dims(alloc: &Allocation, timing: &TimingModel) -> Result<()> {
    if alloc.n_devices() != timing.n_devices() {
        return Err(Error::Dimension {
            expected: timing.n_devices(),
            got: alloc.n_devices(),
        });
    }
    Ok(())
}

/// Iteration counts of one run. `comm_rounds` is `2K` (two communication
/// rounds per outer iteration); `inner` is the total server-side work
/// `k_some`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationEstimates {
    pub comm_rounds: u64,
    pub inner: u64,
}

impl IterationEstimates {
    pub fn from_outer(outer: u64, inner: u64) -> Self {
        IterationEstimates {
            comm_rounds: 2 * outer,
            inner,
        }
    }

    /// `K`, possibly half-integer when produced by [`rate_estimates`].
    pub fn outer(&self) -> f64 {
        self.comm_rounds as f64 / 2.0
    }
}

/// Similarity `delta = L / b1^gamma`, clamped to `[mu, L]`. The flag is
/// `true` when clamping was applied.
pub fn delta_of(b1: f64, consts: &ProblemConstants) -> Result<(f64, bool)> {
    if !(b1 >= 1.0) {
        return Err(Error::Domain(format!("server shard size must be >= 1, got {b1}")));
    }
    let raw = consts.l_smooth / b1.powf(consts.gamma.value());
    let clamped = raw.clamp(consts.mu, consts.l_smooth);
    Ok((clamped, clamped != raw))
}

fn check_delta(consts: &ProblemConstants, delta: f64) -> Result<()> {
    // relative slack so that values produced by delta_of always pass
    let slack = 1e-12 * consts.l_smooth;
    if !(delta >= consts.mu - slack && delta <= consts.l_smooth + slack) {
        return Err(Error::Domain(format!(
            "delta = {delta} outside [mu, L] = [{}, {}]",
            consts.mu, consts.l_smooth
        )));
    }
    Ok(())
}

/// `2K = ceil(c1 max{1, sqrt(delta/mu)} ln(1/eps))` and
/// `k_some = ceil(c2 max{1, sqrt(L/delta), sqrt(delta/mu), sqrt(L/mu)} ln(1/eps))`.
pub fn rate_estimates(consts: &ProblemConstants, delta: f64) -> Result<IterationEstimates> {
    check_delta(consts, delta)?;
    let log = consts.log_inv_eps();
    let outer_term = 1f64.max((delta / consts.mu).sqrt());
    let inner_term = [
        1.0,
        (consts.l_smooth / delta).sqrt(),
        (delta / consts.mu).sqrt(),
        consts.kappa().sqrt(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let two_k = (consts.c1 * outer_term * log).ceil().max(1.0);
    let inner = (consts.c2 * inner_term * log).ceil().max(1.0);
    Ok(IterationEstimates {
        comm_rounds: two_k as u64,
        inner: inner as u64,
    })
}

/// `T_sum = 2K max_i(tau_i b_i) + 2K tau_comm + tau_1 b_1 k_some`.
pub fn total_time(alloc: &Allocation, timing: &TimingModel, est: &IterationEstimates) -> Result<f64> {
    let max_compute = alloc.max_compute(timing)?;
    let rounds = est.comm_rounds as f64;
    Ok(
        rounds * max_compute
            + rounds * timing.tau_comm
            + timing.tau_local[0] * alloc.server() as f64 * est.inner as f64,
    )
}

/// Inverts [`rate_estimates`] for `(c1, c2)` given observed counts. The
/// calibration constants stored in `consts` are ignored.
pub fn calibrate(observed: &IterationEstimates, consts: &ProblemConstants, delta: f64) -> Result<(f64, f64)> {
    check_delta(consts, delta)?;
    let log = consts.log_inv_eps();
    if !(log > 0.0) {
        return Err(Error::Domain("ln(1/eps) must be positive".into()));
    }
    if observed.comm_rounds == 0 || observed.inner == 0 {
        return Err(Error::Domain("observed iteration counts must be >= 1".into()));
    }
    let c1 = observed.comm_rounds as f64 / (1f64.max((delta / consts.mu).sqrt()) * log);
    let c2 = observed.inner as f64 / (consts.kappa().sqrt() * log);
    Ok((c1, c2))
}
