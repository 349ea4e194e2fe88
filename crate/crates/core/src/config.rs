//! Experiment configuration: TOML files with sections, later files
//! overlaying earlier ones one section at a time.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{gen_synthetic, parse_libsvm, Dataset, MuSource};
use crate::error::{Error, Result};
use crate::model::{Gamma, TimingModel};
use crate::sim::{NoiseMode, NoiseTarget};
use crate::solver::{AlgParams, InnerSolver, StopRule};

/// A calibration constant: a number, or `"calibrate"` to fit it from a
/// probe run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstantSpec {
    Value(f64),
    Keyword(Calibrate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibrate {
    Calibrate,
}

impl ConstantSpec {
    pub fn value(self) -> Option<f64> {
        match self {
            ConstantSpec::Value(v) => Some(v),
            ConstantSpec::Keyword(_) => None,
        }
    }
}

impl Default for ConstantSpec {
    fn default() -> Self {
        ConstantSpec::Keyword(Calibrate::Calibrate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// LIBSVM file; when absent a synthetic set is generated.
    pub path: Option<PathBuf>,
    pub n_samples: usize,
    pub dim: usize,
    pub noise_sd: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            n_samples: 2000,
            dim: 20,
            noise_sd: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_devices: usize,
    pub tau_server: f64,
    /// Explicit worker costs; overrides `worker_range`.
    pub tau_workers: Option<Vec<f64>>,
    /// Worker costs drawn uniformly from this range with the master seed.
    pub worker_range: [f64; 2],
    /// Communication cost for `plan` and `calibrate`.
    pub tau_comm: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n_devices: 21,
            tau_server: 1.0,
            tau_workers: None,
            worker_range: [3.0, 7.0],
            tau_comm: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub lambda: f64,
    pub eps: f64,
    /// `0.5` or `1`.
    pub gamma: f64,
    pub c1: ConstantSpec,
    pub c2: ConstantSpec,
    pub mu_source: MuSource,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            lambda: 1e-2,
            eps: 1e-6,
            gamma: 0.5,
            c1: ConstantSpec::default(),
            c2: ConstantSpec::default(),
            mu_source: MuSource::default(),
        }
    }
}

/// `tau_comm / tau_server = 10^l` for every integer `l` in range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub l_min: i32,
    pub l_max: i32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { l_min: -6, l_max: 12 }
    }
}

impl SweepConfig {
    pub fn exponents(&self) -> Vec<i32> {
        (self.l_min..=self.l_max).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerKind {
    #[default]
    Exact,
    Ogmg,
}

/// Where the similarity constant used for step sizes comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaSource {
    /// `||X^T X / N - X_1^T X_1 / b_1||` of the actual shards.
    #[default]
    Measured,
    /// `L / b_1^gamma`.
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub inner: InnerKind,
    /// Inner iterations booked per exact solve.
    pub work_units: u64,
    pub ogmg_iters: usize,
    pub max_outer: usize,
    /// Relative gradient tolerance; defaults to `problem.eps`.
    pub grad_tol: Option<f64>,
    pub delta: DeltaSource,
    pub momentum: Option<f64>,
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub alpha_reg: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            inner: InnerKind::Exact,
            work_units: 1,
            ogmg_iters: 50,
            max_outer: 100_000,
            grad_tol: None,
            delta: DeltaSource::Measured,
            momentum: None,
            eta: None,
            theta: None,
            alpha_reg: None,
        }
    }
}

impl SolverConfig {
    pub fn inner_solver(&self) -> InnerSolver {
        match self.inner {
            InnerKind::Exact => InnerSolver::Exact {
                work_units: self.work_units,
            },
            InnerKind::Ogmg => InnerSolver::Ogmg { iters: self.ogmg_iters },
        }
    }

    pub fn stop_rule(&self, eps: f64) -> StopRule {
        StopRule {
            grad_tol: self.grad_tol.unwrap_or(eps),
            relative: true,
        }
    }

    /// Applies the explicit overrides on top of `defaults`.
    pub fn params(&self, defaults: AlgParams) -> AlgParams {
        AlgParams {
            momentum: self.momentum.unwrap_or(defaults.momentum),
            eta: self.eta.unwrap_or(defaults.eta),
            theta: self.theta.unwrap_or(defaults.theta),
            alpha_reg: self.alpha_reg.unwrap_or(defaults.alpha_reg),
            max_outer: self.max_outer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub levels: Vec<f64>,
    pub draws: usize,
    pub bootstrap: usize,
    pub target: NoiseTarget,
    pub mode: NoiseMode,
    /// Sweep exponents evaluated under noise.
    pub l_values: Vec<i32>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            levels: vec![0.1, 0.2, 0.3, 0.5, 1.0],
            draws: 10_000,
            bootstrap: 1000,
            target: NoiseTarget::Both,
            mode: NoiseMode::PerRun,
            l_values: (6..=12).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Server shard size of the probe run; the uniform split when absent.
    pub probe_b1: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub network: NetworkConfig,
    pub problem: ProblemConfig,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub noise: NoiseConfig,
    pub calibration: CalibrationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            network: NetworkConfig::default(),
            problem: ProblemConfig::default(),
            sweep: SweepConfig::default(),
            solver: SolverConfig::default(),
            noise: NoiseConfig::default(),
            calibration: CalibrationConfig::default(),
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Error::config(origin, e.message().to_string()))
}

/// Merges `overlay` into `base`: top-level values are replaced, sections
/// are merged key by key.
pub fn merge_overlay(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(section)), toml::Value::Table(patch)) => {
                for (k, v) in patch {
                    section.insert(k, v);
                }
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

impl RunConfig {
    /// Parses a single document. Relative data paths stay relative.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text, "<input>")?)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let field = e.path().to_string();
            Error::config(field, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Loads `paths` in order, each overlaying the previous one. Relative
    /// data paths are resolved against the directory of the file that set
    /// them.
    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut merged = toml::Table::new();
        for path in paths {
            let path = path.as_ref();
            let text =
                fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
            let mut table = parse_table(&text, &path.display().to_string())?;
            resolve_data_path(&mut table, path.parent().unwrap_or(Path::new(".")));
            merge_overlay(&mut merged, table);
        }
        let config = Self::from_table(merged)?;
        if let Some(p) = &config.data.path {
            if !p.is_file() {
                return Err(Error::config("data.path", format!("{} does not exist", p.display())));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        };
        let net = &self.network;
        if net.n_devices == 0 {
            return Err(Error::config("network.n_devices", "must be at least 1"));
        }
        positive("network.tau_server", net.tau_server)?;
        if !(net.tau_comm >= 0.0 && net.tau_comm.is_finite()) {
            return Err(Error::config("network.tau_comm", "must be nonnegative"));
        }
        match &net.tau_workers {
            Some(list) => {
                if list.len() + 1 != net.n_devices {
                    return Err(Error::config(
                        "network.tau_workers",
                        format!("expected {} entries, got {}", net.n_devices - 1, list.len()),
                    ));
                }
                for &t in list {
                    positive("network.tau_workers", t)?;
                }
            }
            None => {
                let [lo, hi] = net.worker_range;
                positive("network.worker_range", lo)?;
                if !(hi >= lo && hi.is_finite()) {
                    return Err(Error::config("network.worker_range", "needs lo <= hi"));
                }
            }
        }
        if self.data.path.is_none() {
            if self.data.n_samples < net.n_devices {
                return Err(Error::config("data.n_samples", "fewer samples than devices"));
            }
            if self.data.dim == 0 {
                return Err(Error::config("data.dim", "must be at least 1"));
            }
            if !(self.data.noise_sd >= 0.0) {
                return Err(Error::config("data.noise_sd", "must be nonnegative"));
            }
        }
        let pr = &self.problem;
        if !(pr.lambda >= 0.0 && pr.lambda.is_finite()) {
            return Err(Error::config("problem.lambda", "must be nonnegative"));
        }
        if !(pr.eps > 0.0 && pr.eps < 1.0) {
            return Err(Error::config("problem.eps", "must be in (0, 1)"));
        }
        Gamma::from_value(pr.gamma).map_err(|e| Error::config("problem.gamma", e.to_string()))?;
        for (field, spec) in [("problem.c1", pr.c1), ("problem.c2", pr.c2)] {
            if let Some(v) = spec.value() {
                positive(field, v)?;
            }
        }
        if self.sweep.l_min > self.sweep.l_max {
            return Err(Error::config("sweep.l_min", "must not exceed sweep.l_max"));
        }
        let s = &self.solver;
        if s.work_units == 0 {
            return Err(Error::config("solver.work_units", "must be at least 1"));
        }
        if s.ogmg_iters == 0 {
            return Err(Error::config("solver.ogmg_iters", "must be at least 1"));
        }
        if s.max_outer == 0 {
            return Err(Error::config("solver.max_outer", "must be at least 1"));
        }
        if let Some(t) = s.grad_tol {
            positive("solver.grad_tol", t)?;
        }
        for (field, v) in [
            ("solver.momentum", s.momentum),
            ("solver.eta", s.eta),
            ("solver.theta", s.theta),
            ("solver.alpha_reg", s.alpha_reg),
        ] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }
        if let Some(m) = s.momentum {
            if m >= 1.0 {
                return Err(Error::config("solver.momentum", "must be below 1"));
            }
        }
        let nz = &self.noise;
        if let Some(&p) = nz.levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::config("noise.levels", format!("{p} is outside [0, 1]")));
        }
        if nz.draws < 2 {
            return Err(Error::config("noise.draws", "must be at least 2"));
        }
        if nz.bootstrap < 2 {
            return Err(Error::config("noise.bootstrap", "must be at least 2"));
        }
        if let Some(b) = self.calibration.probe_b1 {
            if b == 0 {
                return Err(Error::config("calibration.probe_b1", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> Gamma {
        Gamma::from_value(self.problem.gamma).expect("validated")
    }

    /// Per-device costs at communication cost `tau_comm`.
    pub fn timing(&self, tau_comm: f64) -> Result<TimingModel> {
        let net = &self.network;
        let workers = match &net.tau_workers {
            Some(list) => list.clone(),
            None => {
                let [lo, hi] = net.worker_range;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(1);
                (1..net.n_devices)
                    .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                    .collect()
            }
        };
        let mut tau_local = Vec::with_capacity(net.n_devices);
        tau_local.push(net.tau_server);
        tau_local.extend(workers);
        TimingModel::new(tau_local, tau_comm)
    }

    /// The dataset named by `[data]`.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.data.path {
            Some(path) => {
                let file = fs::File::open(path)?;
                parse_libsvm(std::io::BufReader::new(file))
            }
            None => gen_synthetic(self.data.n_samples, self.data.dim, self.data.noise_sd, self.seed),
        }
    }

    /// A TOML overlay that pins `c1` and `c2`.
    pub fn calibration_overlay(c1: f64, c2: f64) -> String {
        let mut problem = toml::Table::new();
        problem.insert("c1".into(), toml::Value::Float(c1));
        problem.insert("c2".into(), toml::Value::Float(c2));
        let mut root = toml::Table::new();
        root.insert("problem".into(), toml::Value::Table(problem));
        toml::to_string(&root).expect("plain table serializes")
    }
}

fn resolve_data_path(table: &mut toml::Table, base: &Path) {
    if let Some(toml::Value::Table(data)) = table.get_mut("data") {
        if let Some(toml::Value::String(p)) = data.get_mut("path") {
            let path = Path::new(p.as_str());
            if path.is_relative() {
                *p = base.join(path).display().to_string();
            }
        }
    }
}
