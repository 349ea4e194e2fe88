//! Simulated-clock execution over a [`TimingModel`], timing noise, and the
//! Monte Carlo machinery used to check the variance formulas.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{shard, RidgeProblem};
use crate::error::{Error, Result};
use crate::model::{check_dims, Allocation, DerivedRates, TimingModel};
use crate::planner::large_comm_constant;
use crate::solver::{accel_extragradient, AlgParams, InnerSolver, RidgeComposite, StopRule};

/// Which timings are perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    Comm,
    Local,
    #[default]
    Both,
}

/// When noisy timings are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// A fresh draw for every communication round and every device
    /// computation.
    #[default]
    PerEvent,
    /// One draw of the whole timing model per run.
    PerRun,
}

/// Uniform multiplicative noise: each affected timing `v` is replaced by a
/// draw from `[v (1 - p), v (1 + p)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub rel_amplitude: f64,
    pub applies_to: NoiseTarget,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(rel_amplitude: f64, applies_to: NoiseTarget, mode: NoiseMode, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rel_amplitude) {
            return Err(Error::Domain(format!(
                "noise amplitude must be in [0, 1], got {rel_amplitude}"
            )));
        }
        Ok(NoiseModel {
            rel_amplitude,
            applies_to,
            mode,
            seed,
        })
    }

    fn hits_comm(&self) -> bool {
        self.applies_to != NoiseTarget::Local
    }

    fn hits_local(&self) -> bool {
        self.applies_to != NoiseTarget::Comm
    }

    /// One draw around `nominal`. Uses `hi - (hi - lo) u` with `u ∈ [0, 1)`
    /// so the value stays positive even at `p = 1`.
    fn perturb<R: Rng>(&self, nominal: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let lo = nominal * (1.0 - self.rel_amplitude);
        let hi = nominal * (1.0 + self.rel_amplitude);
        hi - (hi - lo) * u
    }
}

/// Independent random stream for draw `index` of `seed`.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Redraws every affected timing once; fully determined by
/// `(noise.seed, draw_index)`.
pub fn sample_timing(nominal: &TimingModel, noise: &NoiseModel, draw_index: u64) -> TimingModel {
    let mut rng = draw_rng(noise.seed, draw_index);
    sample_timing_with(nominal, noise, &mut rng)
}

/// [`sample_timing`] drawing from a caller-supplied generator.
pub fn sample_timing_with<R: Rng>(nominal: &TimingModel, noise: &NoiseModel, rng: &mut R) -> TimingModel {
    // always consume the same number of values so streams line up across targets
    let comm = noise.perturb(nominal.tau_comm, rng);
    let local: Vec<f64> = nominal.tau_local.iter().map(|&t| noise.perturb(t, rng)).collect();
    TimingModel {
        tau_comm: if noise.hits_comm() { comm } else { nominal.tau_comm },
        tau_local: if noise.hits_local() {
            local
        } else {
            nominal.tau_local.clone()
        },
    }
}

/// Solver settings for a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub stop: StopRule,
    pub inner: InnerSolver,
    /// Seed of the sample-to-device permutation.
    pub shard_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub sim_time: f64,
    pub outer_iters: u64,
    pub inner_iters: u64,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub allocation: Allocation,
    /// Inner iterations booked in each outer iteration.
    pub inner_per_outer: Vec<u64>,
}

impl SimResult {
    /// Re-times the recorded iteration counts on another timing model or
    /// noise draw. The optimizer's trajectory does not depend on timings,
    /// so this equals a full rerun.
    pub fn replay(&self, timing: &TimingModel, noise: Option<(&NoiseModel, u64)>) -> Result<f64> {
        clock_time(&self.allocation, timing, &self.inner_per_outer, noise)
    }
}

/// Simulated wall-clock time of a run whose outer iteration `k` booked
/// `inner_per_outer[k]` inner iterations. Each outer iteration costs two
/// rounds of parallel computation (`max_i tau_i b_i`), two communications,
/// and `tau_1 b_1` per inner iteration.
pub fn clock_time(
    alloc: &Allocation,
    timing: &TimingModel,
    inner_per_outer: &[u64],
    noise: Option<(&NoiseModel, u64)>,
) -> Result<f64> {
    check_dims(alloc, timing)?;
    let b: Vec<f64> = alloc.sizes().iter().map(|&v| v as f64).collect();
    let b1 = b[0];
    let mut clock = 0.0;
    match noise {
        None => {
            let compute = alloc.max_compute(timing)?;
            let server = timing.tau_local[0] * b1;
            for &inner in inner_per_outer {
                clock += 2.0 * compute + 2.0 * timing.tau_comm + server * inner as f64;
            }
        }
        Some((model, index)) if model.mode == NoiseMode::PerRun => {
            let drawn = sample_timing(timing, model, index);
            return clock_time(alloc, &drawn, inner_per_outer, None);
        }
        Some((model, index)) => {
            let mut rng = draw_rng(model.seed, index);
            let local = |i: usize, rng: &mut ChaCha8Rng| {
                let v = model.perturb(timing.tau_local[i], rng);
                if model.hits_local() {
                    v
                } else {
                    timing.tau_local[i]
                }
            };
            let comm = |rng: &mut ChaCha8Rng| {
                let v = model.perturb(timing.tau_comm, rng);
                if model.hits_comm() {
                    v
                } else {
                    timing.tau_comm
                }
            };
            for &inner in inner_per_outer {
                for _ in 0..2 {
                    let mut round = 0.0_f64;
                    for (i, &bi) in b.iter().enumerate() {
                        round = round.max(local(i, &mut rng) * bi);
                    }
                    clock += round + comm(&mut rng);
                }
                for _ in 0..inner {
                    clock += local(0, &mut rng) * b1;
                }
            }
        }
    }
    Ok(clock)
}

/// Runs the solver on `problem` split by `alloc` and books the time each
/// step would take on `timing`.
pub fn simulate_run(
    problem: &RidgeProblem,
    alloc: &Allocation,
    timing: &TimingModel,
    params: &AlgParams,
    noise: Option<&NoiseModel>,
    opts: &SimOptions,
) -> Result<SimResult> {
    check_dims(alloc, timing)?;
    let shards = shard(&problem.data, alloc, opts.shard_seed)?;
    let objective = RidgeComposite::new(&shards, problem.lambda)?;
    let x0 = DVector::zeros(problem.dim());
    let outcome = accel_extragradient(&objective, params, &x0, &opts.stop, &opts.inner, |_| {})?;
    let inner_per_outer: Vec<u64> = outcome.trace.iter().map(|r| r.inner_iters).collect();
    let sim_time = clock_time(alloc, timing, &inner_per_outer, noise.map(|n| (n, 0)))?;
    Ok(SimResult {
        sim_time,
        outer_iters: outcome.trace.len() as u64,
        inner_iters: outcome.state.inner_iters_total,
        final_grad_norm: outcome.final_grad_norm(),
        converged: outcome.converged,
        allocation: alloc.clone(),
        inner_per_outer,
    })
}

/// `baseline.sim_time / candidate.sim_time`.
pub fn speedup(baseline: &SimResult, candidate: &SimResult) -> Result<f64> {
    if candidate.sim_time <= 0.0 {
        return Err(Error::Domain("candidate run took zero time".into()));
    }
    Ok(baseline.sim_time / candidate.sim_time)
}

/// Sample mean and unbiased variance; `ci_halfwidth` is the 95% normal
/// half-width for the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub n_samples: usize,
    pub ci_halfwidth: f64,
}

const Z95: f64 = 1.959963984540054;

impl MomentEstimate {
    /// Exact moments with no sampling error.
    pub fn exact(mean: f64, variance: f64) -> Self {
        MomentEstimate {
            mean,
            variance,
            n_samples: 0,
            ci_halfwidth: 0.0,
        }
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {bad}")));
        }
        let (mean, variance) = mean_var(samples);
        Ok(MomentEstimate {
            mean,
            variance,
            n_samples: n,
            ci_halfwidth: Z95 * (variance / n as f64).sqrt(),
        })
    }
}

/// Mean and unbiased variance, two-pass. Constant input gives exactly
/// zero variance and its own value as the mean.
fn mean_var(samples: &[f64]) -> (f64, f64) {
    let first = samples[0];
    if samples.iter().all(|&v| v == first) {
        return (first, 0.0);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, variance)
}

/// Evaluates `run` on `n_draws` independent streams derived from `seed`.
/// Results come back in draw order whatever the scheduling.
pub fn monte_carlo_samples<F>(run: F, n_draws: usize, seed: u64) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (0..n_draws as u64)
        .into_par_iter()
        .map(|i| run(&mut draw_rng(seed, i)))
        .collect()
}

pub fn monte_carlo<F>(run: F, n_draws: usize, seed: u64) -> Result<MomentEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if n_draws < 2 {
        return Err(Error::Domain(format!("need at least 2 draws, got {n_draws}")));
    }
    MomentEstimate::from_samples(&monte_carlo_samples(run, n_draws, seed))
}

/// Percentile bootstrap confidence interval for the variance of `samples`.
pub fn bootstrap_variance_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    if samples.len() < 2 || resamples < 2 {
        return Err(Error::Domain(
            "bootstrap needs at least 2 samples and 2 resamples".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let n = samples.len();
    let mut variances: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = draw_rng(seed, r);
            let pick: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            mean_var(&pick).1
        })
        .collect();
    variances.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| variances[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok((at(tail), at(1.0 - tail)))
}

/// `D[XY] = D[X] D[Y] + D[X] E[Y]^2 + D[Y] E[X]^2` for independent `X`, `Y`.
pub fn var_product(var_x: f64, mean_x: f64, var_y: f64, mean_y: f64) -> Result<f64> {
    if var_x < 0.0 || var_y < 0.0 {
        return Err(Error::Domain("variances must be nonnegative".into()));
    }
    Ok(var_x * var_y + var_x * mean_y * mean_y + var_y * mean_x * mean_x)
}

/// Mean and variance of `X^a` for `X` uniform on `[lo, hi]`, from
/// `E[X^a] = (hi^(a+1) - lo^(a+1)) / ((a + 1)(hi - lo))`.
pub fn uniform_power_moments(lo: f64, hi: f64, exponent: f64) -> Result<MomentEstimate> {
    if !(lo >= 0.0 && hi >= lo) {
        return Err(Error::Domain(format!("bad support [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok(MomentEstimate::exact(lo.powf(exponent), 0.0));
    }
    let raw = |a: f64| (hi.powf(a + 1.0) - lo.powf(a + 1.0)) / ((a + 1.0) * (hi - lo));
    let mean = raw(exponent);
    let variance = (raw(2.0 * exponent) - mean * mean).max(0.0);
    Ok(MomentEstimate::exact(mean, variance))
}

/// Moments of `v^exponent` when `v` carries uniform relative noise `p`.
pub fn noisy_power_moments(nominal: f64, rel_amplitude: f64, exponent: f64) -> Result<MomentEstimate> {
    uniform_power_moments(
        nominal * (1.0 - rel_amplitude),
        nominal * (1.0 + rel_amplitude),
        exponent,
    )
}

/// Variance of the communication-dominated optimum
/// `(alpha tau_comm)^(4/5) (beta tau_1)^(1/5) (4^(1/5) + 4^(-4/5))` with
/// independent random `tau_comm^(4/5)` and `tau_1^(1/5)`.
pub fn theoretical_var_large_comm(
    rates: &DerivedRates,
    m_comm: &MomentEstimate,
    m_loc: &MomentEstimate,
) -> Result<f64> {
    let coeff = rates.alpha.powf(0.8) * rates.beta.powf(0.2) * large_comm_constant();
    Ok(coeff * coeff * var_product(m_comm.variance, m_comm.mean, m_loc.variance, m_loc.mean)?)
}

/// Variance of the objective at `b1_0 = N s / (tau_1 + s)` when only
/// `tau_comm` is random (`gamma = 1/2`):
/// `[alpha (tau_1 + s)^(1/4) / (N s)^(1/4)]^2 D[tau_comm]`.
pub fn theoretical_var_small_comm(
    rates: &DerivedRates,
    timing: &TimingModel,
    var_comm: f64,
    n_total: usize,
) -> Result<f64> {
    if var_comm < 0.0 {
        return Err(Error::Domain("variance must be nonnegative".into()));
    }
    let s = timing
        .worker_harmonic()
        .ok_or_else(|| Error::Precondition("needs at least one worker".into()))?;
    let coeff = rates.alpha * (timing.tau_server() + s).powf(0.25) / (n_total as f64 * s).powf(0.25);
    Ok(coeff * coeff * var_comm)
}
