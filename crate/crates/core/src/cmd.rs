//! Batch experiments behind the command-line front-end. Every function here
//! is deterministic given the config: parallel work is collected in index
//! order before anything is written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{DeltaSource, RunConfig};
use crate::data::{hessian_similarity, shard, spectral_constants_with, RidgeProblem};
use crate::error::{Error, Result};
use crate::model::{calibrate, delta_of, Allocation, Gamma, IterationEstimates, ProblemConstants, TimingModel};
use crate::planner::{
    closed_form_large_comm, closed_form_small_comm, large_comm_optimum_value, plan, plan_with, predicted_time,
    PlanResult, PlannerInput, RootMethod,
};
use crate::sim::{
    bootstrap_variance_ci, noisy_power_moments, sample_timing, simulate_run, MomentEstimate, NoiseModel, SimOptions,
    SimResult,
};
use crate::solver::default_params;
use crate::svg::{render_svg, ChartSpec, Series};

/// Communication is "small" below this fraction of the fastest device.
pub const SMALL_COMM_RATIO: f64 = 1e-3;

/// Formats a float with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

/// Outcome of fitting `(c1, c2)` at a probe allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub c1: f64,
    pub c2: f64,
    pub probe: Allocation,
    pub observed: IterationEstimates,
}

/// Data, constants and solver settings shared by all commands.
pub struct Experiment {
    pub config: RunConfig,
    pub problem: RidgeProblem,
    pub consts: ProblemConstants,
    pub calibration: Option<Calibration>,
}

impl Experiment {
    /// Loads the data and resolves `c1`, `c2`, running the calibration
    /// probe if either is set to `"calibrate"`.
    pub fn new(config: RunConfig) -> Result<Self> {
        let data = config.dataset()?;
        if data.len() < config.network.n_devices {
            return Err(Error::config("data", "fewer samples than devices"));
        }
        let problem = RidgeProblem::new(data, config.problem.lambda)?;
        let (l_smooth, mu) = spectral_constants_with(&problem, config.problem.mu_source)?;
        let base = ProblemConstants::new(l_smooth, mu, config.problem.eps, config.gamma())?;
        let mut exp = Experiment {
            config,
            problem,
            consts: base,
            calibration: None,
        };
        let (c1, c2) = (exp.config.problem.c1.value(), exp.config.problem.c2.value());
        let (c1, c2) = match (c1, c2) {
            (Some(c1), Some(c2)) => (c1, c2),
            _ => {
                let cal = exp.calibrate_at(exp.probe_allocation()?)?;
                let fitted = (c1.unwrap_or(cal.c1), c2.unwrap_or(cal.c2));
                exp.calibration = Some(cal);
                fitted
            }
        };
        exp.consts = ProblemConstants::with_calibration(l_smooth, mu, base.eps, base.gamma, c1, c2)?;
        Ok(exp)
    }

    pub fn n_total(&self) -> usize {
        self.problem.data.len()
    }

    pub fn timing(&self, tau_comm: f64) -> Result<TimingModel> {
        self.config.timing(tau_comm)
    }

    pub fn planner_input(&self, timing: TimingModel) -> Result<PlannerInput> {
        PlannerInput::new(self.n_total(), timing, self.consts)
    }

    pub fn uniform(&self) -> Result<Allocation> {
        Allocation::uniform(self.n_total(), self.config.network.n_devices)
    }

    fn probe_allocation(&self) -> Result<Allocation> {
        match self.config.calibration.probe_b1 {
            None => self.uniform(),
            Some(b1) => allocation_with_server(b1, self.n_total(), &self.timing(self.config.network.tau_comm)?),
        }
    }

    /// Runs the solver at `probe` and inverts the iteration model.
    pub fn calibrate_at(&self, probe: Allocation) -> Result<Calibration> {
        let run = self.simulate(&probe, &self.timing(self.config.network.tau_comm)?, None)?;
        if !run.converged {
            return Err(Error::NotConverged {
                outer: run.outer_iters,
                grad_norm: run.final_grad_norm,
            });
        }
        let observed = IterationEstimates::from_outer(run.outer_iters, run.inner_iters);
        let (delta, _) = delta_of(probe.server() as f64, &self.consts)?;
        let (c1, c2) = calibrate(&observed, &self.consts, delta)?;
        Ok(Calibration {
            c1,
            c2,
            probe,
            observed,
        })
    }

    /// Similarity constant used for the step sizes at `alloc`.
    pub fn step_delta(&self, alloc: &Allocation) -> Result<f64> {
        let c = &self.consts;
        Ok(match self.config.solver.delta {
            DeltaSource::Model => delta_of(alloc.server() as f64, c)?.0,
            DeltaSource::Measured => {
                let shards = shard(&self.problem.data, alloc, self.config.seed)?;
                hessian_similarity(&self.problem.data, &shards.shards[0]).clamp(c.mu, c.l_smooth)
            }
        })
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            stop: self.config.solver.stop_rule(self.config.problem.eps),
            inner: self.config.solver.inner_solver(),
            shard_seed: self.config.seed,
        }
    }

    pub fn simulate(&self, alloc: &Allocation, timing: &TimingModel, noise: Option<&NoiseModel>) -> Result<SimResult> {
        let params = self
            .config
            .solver
            .params(default_params(&self.consts, self.step_delta(alloc)?)?);
        simulate_run(&self.problem, alloc, timing, &params, noise, &self.sim_options())
    }

    /// Runs every distinct allocation once, in parallel, keyed by sizes.
    fn run_all<'a>(&self, allocs: impl IntoIterator<Item = &'a Allocation>) -> BTreeMap<Vec<usize>, Result<SimResult>> {
        let unique: BTreeMap<Vec<usize>, &Allocation> = allocs.into_iter().map(|a| (a.sizes().to_vec(), a)).collect();
        let runs: Vec<(Vec<usize>, Result<SimResult>)> = unique
            .into_par_iter()
            .map(|(key, alloc)| {
                let res = self.timing(1.0).and_then(|t| self.simulate(alloc, &t, None));
                (key, res)
            })
            .collect();
        runs.into_iter().collect()
    }
}

/// Server gets `b1`; the rest is equalized over the workers.
pub fn allocation_with_server(b1: usize, n_total: usize, timing: &TimingModel) -> Result<Allocation> {
    if b1 == 0 || b1 > n_total {
        return Err(Error::Domain(format!("server share {b1} outside [1, {n_total}]")));
    }
    let mut sizes = vec![b1];
    sizes.extend(crate::planner::equalize_workers(n_total - b1, timing.tau_workers()));
    Allocation::new(sizes)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, csv_string(header, rows)?)?;
    Ok(())
}

/// CSV text with a header line.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(row).map_err(to_io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Allocation report for the configured network.
#[derive(Debug, Clone)]
pub struct PlanReport {
    pub plan: PlanResult,
    pub uniform: Allocation,
    pub predicted_planned: f64,
    pub predicted_uniform: f64,
}

impl PlanReport {
    pub fn predicted_speedup(&self) -> f64 {
        self.predicted_uniform / self.predicted_planned
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let sizes = self.plan.allocation.sizes();
        let _ = writeln!(s, "method: {}", self.plan.method);
        let _ = writeln!(s, "b1: {}", sizes[0]);
        let _ = writeln!(s, "b1 (continuous): {}", fmt_num(self.plan.b1_continuous));
        let workers: Vec<String> = sizes[1..].iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "workers: [{}]", workers.join(", "));
        let _ = writeln!(s, "predicted time (planned): {}", fmt_num(self.predicted_planned));
        let _ = writeln!(s, "predicted time (uniform): {}", fmt_num(self.predicted_uniform));
        let _ = writeln!(s, "predicted speedup: {}", fmt_num(self.predicted_speedup()));
        s
    }

    pub const HEADER: [&'static str; 3] = ["device", "planned", "uniform"];

    pub fn rows(&self) -> Vec<Vec<String>> {
        self.plan
            .allocation
            .sizes()
            .iter()
            .zip(self.uniform.sizes())
            .enumerate()
            .map(|(i, (p, u))| vec![i.to_string(), p.to_string(), u.to_string()])
            .collect()
    }
}

pub fn cmd_plan(exp: &Experiment) -> Result<PlanReport> {
    let input = exp.planner_input(exp.timing(exp.config.network.tau_comm)?)?;
    let plan = plan(&input)?;
    let uniform = exp.uniform()?;
    let report = PlanReport {
        predicted_planned: predicted_time(&plan.allocation, &input)?,
        predicted_uniform: predicted_time(&uniform, &input)?,
        plan,
        uniform,
    };
    let out = &exp.config.out_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join("plan.txt"), report.text())?;
    write_csv(&out.join("plan.csv"), &PlanReport::HEADER, &report.rows())?;
    Ok(report)
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l: i32,
    pub tau_comm: f64,
    pub b1_newton: Option<usize>,
    pub b1_cardano: Option<usize>,
    pub b1_small_comm: Option<usize>,
    pub b1_large_comm: Option<usize>,
    pub b1_planned: Option<usize>,
    pub b1_uniform: usize,
    pub method: String,
    pub b1_newton_continuous: Option<f64>,
    pub b1_cardano_continuous: Option<f64>,
    pub predicted_planned: Option<f64>,
    pub predicted_uniform: Option<f64>,
    pub sim_planned: Option<f64>,
    pub sim_uniform: Option<f64>,
    pub outer_planned: Option<u64>,
    pub outer_uniform: Option<u64>,
    pub speedup: Option<f64>,
    pub error: String,
}

impl SweepRow {
    pub const HEADER: [&'static str; 19] = [
        "l",
        "tau_comm",
        "b1_newton",
        "b1_cardano",
        "b1_small_comm",
        "b1_large_comm",
        "b1_planned",
        "b1_uniform",
        "method",
        "b1_newton_continuous",
        "b1_cardano_continuous",
        "predicted_planned",
        "predicted_uniform",
        "sim_planned",
        "sim_uniform",
        "outer_planned",
        "outer_uniform",
        "speedup",
        "error",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.l.to_string(),
            fmt_num(self.tau_comm),
            fmt_opt_usize(self.b1_newton),
            fmt_opt_usize(self.b1_cardano),
            fmt_opt_usize(self.b1_small_comm),
            fmt_opt_usize(self.b1_large_comm),
            fmt_opt_usize(self.b1_planned),
            self.b1_uniform.to_string(),
            self.method.clone(),
            fmt_opt(self.b1_newton_continuous),
            fmt_opt(self.b1_cardano_continuous),
            fmt_opt(self.predicted_planned),
            fmt_opt(self.predicted_uniform),
            fmt_opt(self.sim_planned),
            fmt_opt(self.sim_uniform),
            self.outer_planned.map(|v| v.to_string()).unwrap_or_default(),
            self.outer_uniform.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(self.speedup),
            self.error.clone(),
        ]
    }
}

struct PlannedPoint {
    l: i32,
    timing: TimingModel,
    input: Option<PlannerInput>,
    newton: Option<PlanResult>,
    cardano: Option<PlanResult>,
    small: Option<PlanResult>,
    large: Option<PlanResult>,
    errors: Vec<String>,
}

fn plan_point(exp: &Experiment, l: i32) -> PlannedPoint {
    let tau_comm = 10f64.powi(l) * exp.config.network.tau_server;
    let mut point = PlannedPoint {
        l,
        timing: TimingModel {
            tau_local: vec![],
            tau_comm,
        },
        input: None,
        newton: None,
        cardano: None,
        small: None,
        large: None,
        errors: vec![],
    };
    let input = match exp.timing(tau_comm).and_then(|t| {
        point.timing = t.clone();
        exp.planner_input(t)
    }) {
        Ok(i) => i,
        Err(e) => {
            point.errors.push(e.to_string());
            return point;
        }
    };
    let mut note = |label: &str, r: Result<PlanResult>| match r {
        Ok(p) => Some(p),
        Err(e) => {
            point.errors.push(format!("{label}: {e}"));
            None
        }
    };
    point.newton = note("newton", plan_with(&input, RootMethod::Newton));
    if exp.consts.gamma == Gamma::One {
        point.cardano = note("cardano", plan_with(&input, RootMethod::Cardano));
    }
    let min_tau = input.timing.tau_local.iter().copied().fold(f64::INFINITY, f64::min);
    if tau_comm <= SMALL_COMM_RATIO * min_tau {
        point.small = note("small_comm", closed_form_small_comm(&input));
    }
    // the closed form assumes identical workers; skip silently otherwise
    if let Ok(p) = closed_form_large_comm(&input) {
        if p.regime_ratio.is_some_and(|r| r >= 1.0) {
            point.large = Some(p);
        }
    }
    point.input = Some(input);
    point
}

/// Planned vs. uniform allocation over `tau_comm = 10^l tau_server`.
pub fn cmd_sweep(exp: &Experiment) -> Result<Vec<SweepRow>> {
    let rows = sweep_rows(exp)?;
    let records: Vec<Vec<String>> = rows.iter().map(SweepRow::record).collect();
    write_csv(&exp.config.out_dir.join("results.csv"), &SweepRow::HEADER, &records)?;
    Ok(rows)
}

/// The sweep without writing anything.
pub fn sweep_rows(exp: &Experiment) -> Result<Vec<SweepRow>> {
    let uniform = exp.uniform()?;
    let points: Vec<PlannedPoint> = exp
        .config
        .sweep
        .exponents()
        .into_par_iter()
        .map(|l| plan_point(exp, l))
        .collect();
    let planned: Vec<&Allocation> = points
        .iter()
        .filter_map(|p| p.newton.as_ref().map(|r| &r.allocation))
        .collect();
    let runs = exp.run_all(planned.into_iter().chain(std::iter::once(&uniform)));

    let rows = points
        .into_iter()
        .map(|p| {
            let mut errors = p.errors;
            let mut row = SweepRow {
                l: p.l,
                tau_comm: p.timing.tau_comm,
                b1_newton: p.newton.as_ref().map(|r| r.allocation.server()),
                b1_cardano: p.cardano.as_ref().map(|r| r.allocation.server()),
                b1_small_comm: p.small.as_ref().map(|r| r.allocation.server()),
                b1_large_comm: p.large.as_ref().map(|r| r.allocation.server()),
                b1_planned: p.newton.as_ref().map(|r| r.allocation.server()),
                b1_uniform: uniform.server(),
                method: p.newton.as_ref().map(|r| r.method.to_string()).unwrap_or_default(),
                b1_newton_continuous: p.newton.as_ref().map(|r| r.b1_continuous),
                b1_cardano_continuous: p.cardano.as_ref().map(|r| r.b1_continuous),
                predicted_planned: None,
                predicted_uniform: None,
                sim_planned: None,
                sim_uniform: None,
                outer_planned: None,
                outer_uniform: None,
                speedup: None,
                error: String::new(),
            };
            if let (Some(input), Some(newton)) = (&p.input, &p.newton) {
                row.predicted_planned = predicted_time(&newton.allocation, input).ok();
                row.predicted_uniform = predicted_time(&uniform, input).ok();
                let mut timed = |alloc: &Allocation, label: &str| -> Option<(f64, u64)> {
                    match &runs[alloc.sizes()] {
                        Ok(run) => match run.replay(&p.timing, None) {
                            Ok(t) => Some((t, run.outer_iters)),
                            Err(e) => {
                                errors.push(format!("{label}: {e}"));
                                None
                            }
                        },
                        Err(e) => {
                            errors.push(format!("{label}: {e}"));
                            None
                        }
                    }
                };
                let planned = timed(&newton.allocation, "planned run");
                let base = timed(&uniform, "uniform run");
                row.sim_planned = planned.map(|v| v.0);
                row.outer_planned = planned.map(|v| v.1);
                row.sim_uniform = base.map(|v| v.0);
                row.outer_uniform = base.map(|v| v.1);
                if let (Some((tp, _)), Some((tu, _))) = (planned, base) {
                    if tp > 0.0 {
                        row.speedup = Some(tu / tp);
                    }
                }
            }
            row.error = errors.join("; ");
            row
        })
        .collect();
    Ok(rows)
}

/// One (noise level, sweep point) cell of the noise experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub level: f64,
    pub l: i32,
    pub tau_comm: f64,
    /// Mean of noisy acceleration over noise-free acceleration.
    pub ratio_mean: f64,
    pub ratio_ci_lo: f64,
    pub ratio_ci_hi: f64,
    /// Empirical variance of the communication-dominated optimum value.
    pub f_var_empirical: f64,
    pub f_var_ci_lo: f64,
    pub f_var_ci_hi: f64,
    pub f_var_theory: f64,
    pub within_ci: bool,
    pub error: String,
}

impl NoiseRow {
    pub const HEADER: [&'static str; 12] = [
        "level",
        "l",
        "tau_comm",
        "ratio_mean",
        "ratio_ci_lo",
        "ratio_ci_hi",
        "f_var_empirical",
        "f_var_ci_lo",
        "f_var_ci_hi",
        "f_var_theory",
        "within_ci",
        "error",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            fmt_num(self.level),
            self.l.to_string(),
            fmt_num(self.tau_comm),
            fmt_num(self.ratio_mean),
            fmt_num(self.ratio_ci_lo),
            fmt_num(self.ratio_ci_hi),
            fmt_num(self.f_var_empirical),
            fmt_num(self.f_var_ci_lo),
            fmt_num(self.f_var_ci_hi),
            fmt_num(self.f_var_theory),
            self.within_ci.to_string(),
            self.error.clone(),
        ]
    }

    fn failed(level: f64, l: i32, tau_comm: f64, error: String) -> Self {
        NoiseRow {
            level,
            l,
            tau_comm,
            ratio_mean: f64::NAN,
            ratio_ci_lo: f64::NAN,
            ratio_ci_hi: f64::NAN,
            f_var_empirical: f64::NAN,
            f_var_ci_lo: f64::NAN,
            f_var_ci_hi: f64::NAN,
            f_var_theory: f64::NAN,
            within_ci: false,
            error,
        }
    }
}

/// Acceleration under timing noise, and the variance of the
/// communication-dominated optimum against its closed form.
pub fn cmd_noise(exp: &Experiment) -> Result<Vec<NoiseRow>> {
    let rows = noise_rows(exp)?;
    let records: Vec<Vec<String>> = rows.iter().map(NoiseRow::record).collect();
    write_csv(&exp.config.out_dir.join("noise.csv"), &NoiseRow::HEADER, &records)?;
    Ok(rows)
}

pub fn noise_rows(exp: &Experiment) -> Result<Vec<NoiseRow>> {
    let cfg = &exp.config.noise;
    let uniform = exp.uniform()?;
    let points: Vec<PlannedPoint> = cfg.l_values.iter().map(|&l| plan_point(exp, l)).collect();
    let planned: Vec<&Allocation> = points
        .iter()
        .filter_map(|p| p.newton.as_ref().map(|r| &r.allocation))
        .collect();
    let runs = exp.run_all(planned.into_iter().chain(std::iter::once(&uniform)));
    let rates = exp.consts.rates();

    let mut rows = Vec::new();
    for (li, &level) in cfg.levels.iter().enumerate() {
        for (pi, p) in points.iter().enumerate() {
            let cell_seed = exp.config.seed ^ ((li as u64) << 32 | pi as u64);
            let row = noise_cell(exp, p, level, cell_seed, &uniform, &runs, rates)
                .unwrap_or_else(|e| NoiseRow::failed(level, p.l, p.timing.tau_comm, e.to_string()));
            rows.push(row);
        }
    }
    Ok(rows)
}

fn noise_cell(
    exp: &Experiment,
    p: &PlannedPoint,
    level: f64,
    seed: u64,
    uniform: &Allocation,
    runs: &BTreeMap<Vec<usize>, Result<SimResult>>,
    rates: crate::model::DerivedRates,
) -> Result<NoiseRow> {
    let cfg = &exp.config.noise;
    if let Some(e) = p.errors.iter().find(|e| e.starts_with("newton")) {
        return Err(Error::Precondition(e.clone()));
    }
    let newton = p
        .newton
        .as_ref()
        .ok_or_else(|| Error::Precondition(p.errors.join("; ")))?;
    let pick = |a: &Allocation| -> Result<&SimResult> {
        runs[a.sizes()]
            .as_ref()
            .map_err(|e| Error::Precondition(format!("run failed: {e}")))
    };
    let planned = pick(&newton.allocation)?;
    let base = pick(uniform)?;
    let nominal = base.replay(&p.timing, None)? / planned.replay(&p.timing, None)?;
    let noise = NoiseModel::new(level, cfg.target, cfg.mode, seed)?;

    let samples: Vec<(f64, f64)> = (0..cfg.draws as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let accel = base.replay(&p.timing, Some((&noise, i)))? / planned.replay(&p.timing, Some((&noise, i)))?;
            let drawn = sample_timing(&p.timing, &noise, i);
            let f = large_comm_optimum_value(&rates, drawn.tau_comm, drawn.tau_server());
            Ok((accel / nominal, f))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let ratio = MomentEstimate::from_samples(&ratios)?;
    let f_moments = MomentEstimate::from_samples(&values)?;
    let (lo, hi) = bootstrap_variance_ci(&values, cfg.bootstrap, 0.95, seed.wrapping_add(1))?;
    let hits_comm = cfg.target != crate::sim::NoiseTarget::Local;
    let hits_local = cfg.target != crate::sim::NoiseTarget::Comm;
    let m_comm = noisy_power_moments(p.timing.tau_comm, if hits_comm { level } else { 0.0 }, 0.8)?;
    let m_loc = noisy_power_moments(p.timing.tau_server(), if hits_local { level } else { 0.0 }, 0.2)?;
    let theory = crate::sim::theoretical_var_large_comm(&rates, &m_comm, &m_loc)?;
    Ok(NoiseRow {
        level,
        l: p.l,
        tau_comm: p.timing.tau_comm,
        ratio_mean: ratio.mean,
        ratio_ci_lo: ratio.mean - ratio.ci_halfwidth,
        ratio_ci_hi: ratio.mean + ratio.ci_halfwidth,
        f_var_empirical: f_moments.variance,
        f_var_ci_lo: lo,
        f_var_ci_hi: hi,
        f_var_theory: theory,
        within_ci: lo <= theory && theory <= hi,
        error: String::new(),
    })
}

/// Fits `(c1, c2)` at the configured probe and writes
/// `calibration.toml`, an overlay for the next runs.
pub fn cmd_calibrate(exp: &Experiment) -> Result<Calibration> {
    let cal = match &exp.calibration {
        Some(c) => c.clone(),
        None => exp.calibrate_at(exp.probe_allocation()?)?,
    };
    let out = &exp.config.out_dir;
    fs::create_dir_all(out)?;
    fs::write(
        out.join("calibration.toml"),
        RunConfig::calibration_overlay(cal.c1, cal.c2),
    )?;
    Ok(cal)
}

/// Columns of a CSV file keyed by header name, as strings.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec.iter().map(str::to_owned).collect()));
        }
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("missing column `{name}`"),
        })
    }

    /// Value at `col`, or `None` for an empty cell.
    fn num(&self, row: &(usize, Vec<String>), col: usize) -> Result<Option<f64>> {
        let cell = row.1[col].trim();
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse().map(Some).map_err(|_| Error::Parse {
            line: row.0,
            msg: format!("`{cell}` is not a number"),
        })
    }
}

/// Speedup of the planned allocation against the uniform one, simulated and
/// predicted, over the communication ratio. Reads `results.csv` text.
pub fn sweep_chart(results_csv: &str) -> Result<String> {
    let t = Table::parse(results_csv)?;
    let (l, speedup) = (t.column("l")?, t.column("speedup")?);
    let (pp, pu) = (t.column("predicted_planned")?, t.column("predicted_uniform")?);
    let mut simulated = Vec::new();
    let mut predicted = Vec::new();
    for row in &t.rows {
        let Some(l) = t.num(row, l)? else { continue };
        let x = 10f64.powf(l);
        if let Some(s) = t.num(row, speedup)? {
            simulated.push((x, s));
        }
        if let (Some(a), Some(b)) = (t.num(row, pp)?, t.num(row, pu)?) {
            predicted.push((x, b / a));
        }
    }
    let spec = ChartSpec {
        title: "Planned vs uniform allocation".into(),
        x_label: "tau_comm / tau_1".into(),
        y_label: "speedup".into(),
        ..ChartSpec::default()
    };
    render_svg(
        &[Series::new("simulated", simulated), Series::new("model", predicted)],
        &spec,
    )
}

/// Noisy over nominal acceleration per noise level, with the bootstrap
/// interval as a band. Reads `noise.csv` text.
pub fn noise_chart(noise_csv: &str) -> Result<String> {
    let t = Table::parse(noise_csv)?;
    let (level, l) = (t.column("level")?, t.column("l")?);
    let (mean, lo, hi) = (
        t.column("ratio_mean")?,
        t.column("ratio_ci_lo")?,
        t.column("ratio_ci_hi")?,
    );
    // keyed by the level's text so grouping does not depend on float equality
    type Curve = (Vec<(f64, f64)>, Vec<(f64, f64)>);
    let mut groups: BTreeMap<(u64, String), Curve> = BTreeMap::new();
    for row in &t.rows {
        let (Some(p), Some(l), Some(m), Some(a), Some(b)) = (
            t.num(row, level)?,
            t.num(row, l)?,
            t.num(row, mean)?,
            t.num(row, lo)?,
            t.num(row, hi)?,
        ) else {
            continue;
        };
        if !(m.is_finite() && a.is_finite() && b.is_finite()) {
            continue;
        }
        let entry = groups.entry((p.to_bits(), row.1[level].clone())).or_default();
        entry.0.push((10f64.powf(l), m));
        entry.1.push((a.min(m), b.max(m)));
    }
    let series: Vec<Series> = groups
        .into_iter()
        .map(|((bits, _), (points, band))| Series::new(format!("p = {}", f64::from_bits(bits)), points).with_band(band))
        .collect();
    let spec = ChartSpec {
        title: "Acceleration under timing noise".into(),
        x_label: "tau_comm / tau_1".into(),
        y_label: "noisy / nominal acceleration".into(),
        ..ChartSpec::default()
    };
    render_svg(&series, &spec)
}

/// Writes `speedup.svg` and `noise.svg` next to whichever of `results.csv`
/// and `noise.csv` exist in `dir`. Returns the paths written.
pub fn cmd_render(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    type Chart = fn(&str) -> Result<String>;
    let jobs: [(&str, &str, Chart); 2] = [
        ("results.csv", "speedup.svg", sweep_chart),
        ("noise.csv", "noise.svg", noise_chart),
    ];
    let mut written = Vec::new();
    for (input, output, chart) in jobs {
        let path = dir.join(input);
        if !path.exists() {
            continue;
        }
        let svg = chart(&fs::read_to_string(&path)?)?;
        let target = dir.join(output);
        fs::write(&target, svg)?;
        written.push(target);
    }
    if written.is_empty() {
        return Err(Error::config(
            "out",
            format!("no results.csv or noise.csv in {}", dir.display()),
        ));
    }
    Ok(written)
}
