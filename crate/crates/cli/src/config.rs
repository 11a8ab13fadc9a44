//! Experiment configuration: flat `key=value` files overridden by
//! command-line flags, with every default documented on
//! [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};

use entropic_spectra::ScheduleKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// Seven-player MIMO throughput game on the fixed cell geometry.
    Mimo,
    /// Finite sum of random linear objectives `tr(A_i X)` with a
    /// closed-form optimum.
    LinearSum,
    /// Sparse inverse-covariance demo (finite sum of log-det objectives).
    Covariance,
    /// Single-block affine monotone VI `F(X) = X - A`.
    AffineVi,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Mimo => "mimo",
            Problem::LinearSum => "linear_sum",
            Problem::Covariance => "covariance",
            Problem::AffineVi => "affine_vi",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "mimo" => Some(Problem::Mimo),
            "linear_sum" => Some(Problem::LinearSum),
            "covariance" => Some(Problem::Covariance),
            "affine_vi" => Some(Problem::AffineVi),
            _ => None,
        }
    }

    pub fn is_finite_sum(self) -> bool {
        matches!(self, Problem::LinearSum | Problem::Covariance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Amsmd,
    Msmd,
    Mel,
    Mdis,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Amsmd => "amsmd",
            Algorithm::Msmd => "msmd",
            Algorithm::Mel => "mel",
            Algorithm::Mdis => "mdis",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "amsmd" => Some(Algorithm::Amsmd),
            "msmd" => Some(Algorithm::Msmd),
            "mel" => Some(Algorithm::Mel),
            "mdis" => Some(Algorithm::Mdis),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    /// Trace budget `10^{0.1}` (1 dBm on the linear milliwatt scale).
    Dbm,
    /// Trace budget 1.
    Unit,
}

impl PowerMode {
    pub fn name(self) -> &'static str {
        match self {
            PowerMode::Dbm => "dbm",
            PowerMode::Unit => "unit",
        }
    }
}

/// A fully resolved experiment description.
///
/// Defaults: `problem=mimo`, `algorithm=amsmd`, `n=4`, `m=4`, `sigma=1`,
/// `T=4000`, `paths=10`, `seed=1`, `schedule=harmonic_sqrt` (`harmonic` when
/// the algorithm is `mel`), `schedule_scale=1`, `mel_lambda=0.1`,
/// `gap_stride=10`, `power_mode=dbm`, `warm_start_iters=0`, `c_bound` unset
/// (sampled estimate), `cov_lambda=0.1`, `cov_samples=50`, and
/// `output_path=<problem>_<algorithm>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub algorithm: Algorithm,
    /// Transmit antennas per player; matrix dimension for the synthetic
    /// problems.
    pub n: usize,
    /// Receive antennas per player; agent count for the finite-sum problems.
    pub m: usize,
    /// Feedback-noise variance per complex entry.
    pub sigma: f64,
    /// Iteration count `T`.
    pub iterations: usize,
    /// Independent sample paths.
    pub paths: usize,
    /// Master seed; see [`crate::runner::path_seed`] for the derivation of
    /// per-path seeds.
    pub seed: u64,
    pub schedule: ScheduleKind,
    /// Multiplier on the schedule's scale constant.
    pub schedule_scale: f64,
    /// Regularization weight of the exponential-learning baseline.
    pub mel_lambda: f64,
    /// Checkpoint stride for gap evaluation and trace rows.
    pub gap_stride: usize,
    pub power_mode: PowerMode,
    pub output_path: Option<PathBuf>,
    /// Throwaway iterations whose best-gap iterate (and dual) seed the run.
    pub warm_start_iters: usize,
    /// Per-player noise bound `C_i` override; sampled when unset.
    pub c_bound: Option<f64>,
    /// Lasso weight of the covariance demo.
    pub cov_lambda: f64,
    /// Samples per agent when generating the covariance demo instance.
    pub cov_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Mimo,
            algorithm: Algorithm::Amsmd,
            n: 4,
            m: 4,
            sigma: 1.0,
            iterations: 4000,
            paths: 10,
            seed: 1,
            schedule: ScheduleKind::HarmonicSqrt,
            schedule_scale: 1.0,
            mel_lambda: 0.1,
            gap_stride: 10,
            power_mode: PowerMode::Dbm,
            output_path: None,
            warm_start_iters: 0,
            c_bound: None,
            cov_lambda: 0.1,
            cov_samples: 50,
        }
    }
}

impl ExperimentConfig {
    /// Resolved CSV destination.
    pub fn output_path(&self) -> PathBuf {
        self.output_path.clone().unwrap_or_else(|| {
            PathBuf::from(format!("{}_{}.csv", self.problem.name(), self.algorithm.name()))
        })
    }

    /// Human-readable label used by `compare`.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::Mel => format!("mel(lambda={})/{}", self.mel_lambda, self.schedule.name()),
            a => format!("{}/{}", a.name(), self.schedule.name()),
        }
    }

    fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.iterations < 1 {
            violations.push("T must be at least 1".into());
        }
        if self.paths < 1 {
            violations.push("paths must be at least 1".into());
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            violations.push("sigma must be nonnegative".into());
        }
        if self.mel_lambda < 0.0 || !self.mel_lambda.is_finite() {
            violations.push("mel_lambda must be nonnegative".into());
        }
        if self.gap_stride < 1 {
            violations.push("gap_stride must be at least 1".into());
        }
        if self.n < 1 {
            violations.push("n must be at least 1".into());
        }
        if self.m < 1 {
            violations.push("m must be at least 1".into());
        }
        if self.schedule_scale <= 0.0 || !self.schedule_scale.is_finite() {
            violations.push("schedule_scale must be positive".into());
        }
        if let Some(c) = self.c_bound {
            if c <= 0.0 || !c.is_finite() {
                violations.push("c_bound must be positive".into());
            }
        }
        if self.cov_lambda < 0.0 || !self.cov_lambda.is_finite() {
            violations.push("cov_lambda must be nonnegative".into());
        }
        if self.cov_samples < 2 {
            violations.push("cov_samples must be at least 2".into());
        }
        let finite_sum = self.problem.is_finite_sum();
        let mdis = self.algorithm == Algorithm::Mdis;
        if finite_sum != mdis {
            violations.push(format!(
                "algorithm {} does not apply to problem {}",
                self.algorithm.name(),
                self.problem.name()
            ));
        }
        violations
    }
}

/// Configuration errors: every violated constraint or unparsable line, so a
/// bad file is reported in one pass.
#[derive(Debug)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Builder {
    config: ExperimentConfig,
    schedule_explicit: bool,
    errors: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        Self { config: ExperimentConfig::default(), schedule_explicit: false, errors: Vec::new() }
    }

    fn apply(&mut self, key: &str, value: &str, source: &str) {
        macro_rules! parse_num {
            ($field:ident, $ty:ty, $what:expr) => {
                match value.parse::<$ty>() {
                    Ok(v) => self.config.$field = v,
                    Err(_) => self.errors.push(format!(
                        "{source}: key {key} expects {}, got `{value}`",
                        $what
                    )),
                }
            };
        }
        match key {
            "problem" => match Problem::parse(value) {
                Some(p) => self.config.problem = p,
                None => self.errors.push(format!(
                    "{source}: key problem must be one of mimo, linear_sum, covariance, affine_vi; got `{value}`"
                )),
            },
            "algorithm" => match Algorithm::parse(value) {
                Some(a) => self.config.algorithm = a,
                None => self.errors.push(format!(
                    "{source}: key algorithm must be one of amsmd, msmd, mel, mdis; got `{value}`"
                )),
            },
            "n" => parse_num!(n, usize, "a positive integer"),
            "m" => parse_num!(m, usize, "a positive integer"),
            "sigma" => parse_num!(sigma, f64, "a number"),
            "T" => parse_num!(iterations, usize, "a positive integer"),
            "paths" => parse_num!(paths, usize, "a positive integer"),
            "seed" => parse_num!(seed, u64, "a 64-bit unsigned integer"),
            "schedule" => {
                let kind = match value {
                    "constant_horizon" => Some(ScheduleKind::ConstantHorizon),
                    "harmonic_sqrt" => Some(ScheduleKind::HarmonicSqrt),
                    "harmonic" => Some(ScheduleKind::Harmonic),
                    _ => None,
                };
                match kind {
                    Some(k) => {
                        self.config.schedule = k;
                        self.schedule_explicit = true;
                    }
                    None => self.errors.push(format!(
                        "{source}: key schedule must be one of constant_horizon, harmonic_sqrt, harmonic; got `{value}`"
                    )),
                }
            }
            "schedule_scale" => parse_num!(schedule_scale, f64, "a number"),
            "mel_lambda" => parse_num!(mel_lambda, f64, "a number"),
            "gap_stride" => parse_num!(gap_stride, usize, "a positive integer"),
            "power_mode" => match value {
                "dbm" => self.config.power_mode = PowerMode::Dbm,
                "unit" => self.config.power_mode = PowerMode::Unit,
                _ => self.errors.push(format!(
                    "{source}: key power_mode must be dbm or unit; got `{value}`"
                )),
            },
            "output_path" => self.config.output_path = Some(PathBuf::from(value)),
            "warm_start_iters" => parse_num!(warm_start_iters, usize, "a nonnegative integer"),
            "c_bound" => match value.parse::<f64>() {
                Ok(v) => self.config.c_bound = Some(v),
                Err(_) => self.errors.push(format!("{source}: key c_bound expects a number, got `{value}`")),
            },
            "cov_lambda" => parse_num!(cov_lambda, f64, "a number"),
            "cov_samples" => parse_num!(cov_samples, usize, "a positive integer"),
            _ => self.errors.push(format!("{source}: unknown key `{key}`")),
        }
    }

    fn finish(mut self) -> Result<ExperimentConfig, ConfigError> {
        if !self.schedule_explicit && self.config.algorithm == Algorithm::Mel {
            // The exponential-learning baseline defaults to eta_t = 1/t.
            self.config.schedule = ScheduleKind::Harmonic;
        }
        self.errors.extend(self.config.validate());
        if self.errors.is_empty() {
            Ok(self.config)
        } else {
            Err(ConfigError { violations: self.errors })
        }
    }
}

/// Parses an optional flat `key=value` file and applies flag overrides on
/// top (flags win). Unknown keys, unparsable values, and constraint
/// violations are all reported together.
pub fn parse_config(
    file: Option<&Path>,
    flags: &[(String, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let mut builder = Builder::new();
    if let Some(path) = file {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                return Err(ConfigError {
                    violations: vec![format!("cannot read config {}: {e}", path.display())],
                })
            }
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let source = format!("{}:{}", path.display(), idx + 1);
            match line.split_once('=') {
                Some((k, v)) => builder.apply(k.trim(), v.trim(), &source),
                None => builder
                    .errors
                    .push(format!("{source}: expected key=value, got `{line}`")),
            }
        }
    }
    for (key, value) in flags {
        builder.apply(key, value, "flag");
    }
    builder.finish()
}
