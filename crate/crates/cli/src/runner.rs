//! Sample-path orchestration and CSV persistence.
//!
//! A run executes `paths` independent solver trajectories. Path `k` draws its
//! randomness from a ChaCha stream seeded with `path_seed(seed, k)`, where
//! the derivation is the splitmix64 finalizer applied to `seed + k`; instance
//! generation (channels, targets, sample covariances) uses a ChaCha stream
//! seeded with the master seed directly. Everything downstream of the seeds
//! is deterministic, so a `(config, seed)` pair maps to one CSV byte string.

use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use entropic_spectra::finite_sum::{
    self, make_covariance_objectives, mdis_solve, random_covariance_instance, ComponentObjective,
};
use entropic_spectra::linalg::HermitianMatrix;
use entropic_spectra::mimo::{build_seven_cell_network, payoffs, MimoOracle};
use entropic_spectra::mirror::SpectraPoint;
use entropic_spectra::trace::RunTrace;
use entropic_spectra::vi::{
    self, amsmd_step, amsmd_solve, AffineOracle, AveragedState, BlockState, CsviInit,
    MetricsFn, SolverVariant, ViOracle,
};
use entropic_spectra::{ScheduleKind, StepSchedule};

use crate::config::{Algorithm, ExperimentConfig, PowerMode, Problem};

/// Environment variable capping the number of worker threads used for
/// parallel sample paths.
pub const THREADS_ENV: &str = "ENTROPIC_SPECTRA_THREADS";

/// Gap values are floored here before taking log10.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("solver failure: {0}")]
    Solver(#[from] entropic_spectra::Error),
}

impl CliError {
    /// Process exit status: 1 for configuration problems, 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }
}

/// splitmix64 finalizer; the fixed 64-bit mixing function behind per-path
/// seed derivation.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed of sample path `k`: `mix64(master + k)`.
pub fn path_seed(master: u64, path: usize) -> u64 {
    mix64(master.wrapping_add(path as u64))
}

/// One sample path's trace plus its derived seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path: usize,
    pub seed: u64,
    pub trace: RunTrace,
}

/// Per-checkpoint mean over paths of the gap and of its log10.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mean_gap: f64,
    pub mean_log10_gap: f64,
}

/// Everything a run produces before serialization.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub value_headers: Vec<String>,
    pub paths: Vec<PathRecord>,
    pub aggregate: Vec<AggregateRow>,
}

fn log10_floored(gap: f64) -> f64 {
    if gap.is_nan() {
        f64::NAN
    } else {
        gap.max(LOG_FLOOR).log10()
    }
}

impl ExperimentResult {
    pub fn final_mean_gap(&self) -> f64 {
        self.aggregate.last().map_or(f64::NAN, |r| r.mean_gap)
    }

    /// Fraction of aggregate checkpoints at which the mean gap sits below the
    /// theoretical reference bound.
    pub fn bound_ok_fraction(&self) -> f64 {
        if self.aggregate.is_empty() {
            return f64::NAN;
        }
        let bounds = &self.paths[0].trace;
        let ok = self
            .aggregate
            .iter()
            .zip(&bounds.rows)
            .filter(|(agg, row)| agg.mean_gap <= row.bound)
            .count();
        ok as f64 / self.aggregate.len() as f64
    }

    /// Serializes the run: a `#schema=1` header, one row per (path, t) in
    /// that order, then an aggregate section of per-t means.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("#schema=1\n");
        out.push_str("algorithm,seed,path,t,gap,log10_gap");
        for h in &self.value_headers {
            out.push(',');
            out.push_str(h);
        }
        out.push_str(",theory_bound\n");
        let name = self.config.algorithm.name();
        for record in &self.paths {
            for row in &record.trace.rows {
                out.push_str(name);
                out.push_str(&format!(",{},{},{}", record.seed, record.path, row.t));
                out.push_str(&format!(",{},{}", row.gap, log10_floored(row.gap)));
                for v in &row.values {
                    out.push_str(&format!(",{v}"));
                }
                out.push_str(&format!(",{}\n", row.bound));
            }
        }
        out.push_str("#aggregate\n");
        out.push_str("t,mean_gap,mean_log10_gap\n");
        for row in &self.aggregate {
            out.push_str(&format!("{},{},{}\n", row.t, row.mean_gap, row.mean_log10_gap));
        }
        out
    }
}

fn aggregate(paths: &[PathRecord]) -> Vec<AggregateRow> {
    if paths.is_empty() || paths[0].trace.rows.is_empty() {
        return Vec::new();
    }
    let checkpoints = paths[0].trace.rows.len();
    let mut rows = Vec::with_capacity(checkpoints);
    for idx in 0..checkpoints {
        let t = paths[0].trace.rows[idx].t;
        let mut gap_sum = 0.0;
        let mut log_sum = 0.0;
        for p in paths {
            let row = &p.trace.rows[idx];
            debug_assert_eq!(row.t, t);
            gap_sum += row.gap;
            log_sum += log10_floored(row.gap);
        }
        rows.push(AggregateRow {
            t,
            mean_gap: gap_sum / paths.len() as f64,
            mean_log10_gap: log_sum / paths.len() as f64,
        });
    }
    rows
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => {
                return Err(CliError::Config(crate::config::ConfigError {
                    violations: vec![format!(
                        "{THREADS_ENV} must be a positive integer, got `{raw}`"
                    )],
                }))
            }
        },
        Err(_) => 0, // rayon default
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| {
            CliError::Config(crate::config::ConfigError {
                violations: vec![format!("cannot build thread pool: {e}")],
            })
        })
}

fn variant_for(config: &ExperimentConfig) -> SolverVariant {
    match config.algorithm {
        Algorithm::Amsmd => SolverVariant::Averaged,
        Algorithm::Msmd => SolverVariant::NonAveraged,
        Algorithm::Mel => SolverVariant::Mel { lambda: config.mel_lambda },
        Algorithm::Mdis => unreachable!("mdis runs through the finite-sum path"),
    }
}

fn vi_schedule(config: &ExperimentConfig, oracle: &dyn ViOracle) -> StepSchedule {
    let scale = match config.schedule {
        ScheduleKind::ConstantHorizon => {
            let c_total: f64 = oracle.noise_bounds().iter().sum();
            StepSchedule::vi_scale(c_total, &oracle.block_dims()) * config.schedule_scale
        }
        _ => config.schedule_scale,
    };
    StepSchedule::new(config.schedule, scale)
}

/// Warm start: run `iters` throwaway iterations and return the best-gap
/// iterate together with its dual as the true starting point.
fn warm_start(
    oracle: &dyn ViOracle,
    schedule: &StepSchedule,
    iters: usize,
    variant: SolverVariant,
    seed: u64,
) -> Result<CsviInit, CliError> {
    let init = CsviInit::for_oracle(oracle);
    if iters == 0 {
        return Ok(init);
    }
    let mel_lambda = match variant {
        SolverVariant::Mel { lambda } => lambda,
        _ => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x5741524d)); // "WARM"
    let mut state = AveragedState::start(init, schedule.eta(0, iters));
    let mut best_gap = vi::gap(state.iterate(), oracle)?;
    let mut best = CsviInit { x: state.iterate().clone(), duals: state.duals().to_vec() };
    for t in 0..iters {
        amsmd_step(
            &mut state,
            oracle,
            schedule.eta(t, iters),
            schedule.eta(t + 1, iters),
            &mut rng,
            false,
            mel_lambda,
        )?;
        let g = vi::gap(state.iterate(), oracle)?;
        if g < best_gap {
            best_gap = g;
            best = CsviInit { x: state.iterate().clone(), duals: state.duals().to_vec() };
        }
    }
    Ok(best)
}

/// Metrics callbacks shared across worker threads.
type SyncMetricsFn<'a> = dyn Fn(&BlockState) -> Vec<f64> + Sync + 'a;

fn run_vi_paths(
    config: &ExperimentConfig,
    oracle: &(dyn ViOracle + Sync),
    extra: Option<&SyncMetricsFn<'_>>,
) -> Result<Vec<PathRecord>, CliError> {
    let schedule = vi_schedule(config, oracle);
    let variant = variant_for(config);
    let pool = thread_pool()?;
    pool.install(|| {
        (0..config.paths)
            .into_par_iter()
            .map(|k| {
                let seed = path_seed(config.seed, k);
                let init =
                    warm_start(oracle, &schedule, config.warm_start_iters, variant, seed)?;
                let run = amsmd_solve(
                    oracle,
                    &schedule,
                    config.iterations,
                    init,
                    variant,
                    seed,
                    config.gap_stride,
                    extra.map(|f| f as &MetricsFn<'_>),
                )?;
                Ok(PathRecord { path: k, seed, trace: run.trace })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })
}

fn execute_vi(config: &ExperimentConfig) -> Result<ExperimentResult, CliError> {
    let mut setup_rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.problem {
        Problem::Mimo => {
            let mut net = build_seven_cell_network(config.n, config.m, config.sigma, &mut setup_rng)?;
            if config.power_mode == PowerMode::Unit {
                net = net.with_power(1.0);
            }
            let players = net.num_players();
            let mut oracle = MimoOracle::new(net, &mut setup_rng)?;
            if let Some(c) = config.c_bound {
                oracle = oracle.with_noise_bounds(vec![c; players]);
            }
            let metrics = |x: &BlockState| {
                payoffs(x, oracle.network()).unwrap_or_else(|_| vec![f64::NAN; players])
            };
            let paths = run_vi_paths(config, &oracle, Some(&metrics))?;
            let value_headers = (1..=players).map(|i| format!("R{i}")).collect();
            let aggregate = aggregate(&paths);
            Ok(ExperimentResult { config: config.clone(), value_headers, paths, aggregate })
        }
        Problem::AffineVi => {
            let target = HermitianMatrix::random_gaussian(config.n, &mut setup_rng);
            let mut oracle = AffineOracle::new(vec![target], vec![1.0], config.sigma)?;
            if let Some(c) = config.c_bound {
                oracle = oracle.with_noise_bounds(vec![c]);
            }
            let paths = run_vi_paths(config, &oracle, None)?;
            let aggregate = aggregate(&paths);
            Ok(ExperimentResult {
                config: config.clone(),
                value_headers: Vec::new(),
                paths,
                aggregate,
            })
        }
        _ => unreachable!("finite-sum problems run through execute_finite_sum"),
    }
}

fn execute_finite_sum(config: &ExperimentConfig) -> Result<ExperimentResult, CliError> {
    let mut setup_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.n;
    let (objectives, f_star): (Vec<ComponentObjective>, Option<f64>) = match config.problem {
        Problem::LinearSum => {
            let mut objectives = Vec::with_capacity(config.m);
            let mut total = HermitianMatrix::zeros(dim);
            for _ in 0..config.m {
                let g = entropic_spectra::linalg::ComplexMatrix::random_gaussian(
                    dim,
                    dim,
                    1.0,
                    &mut setup_rng,
                );
                let a = HermitianMatrix::symmetrize(&g.mul(&g.adjoint()))?.scale(1.0 / dim as f64);
                total = total.add(&a);
                objectives.push(ComponentObjective::linear(a)?);
            }
            let f_star = total.eig()?.min_eigenvalue();
            (objectives, Some(f_star))
        }
        Problem::Covariance => {
            let samples =
                random_covariance_instance(dim, config.m, config.cov_samples, &mut setup_rng);
            // All-ones penalty with a free diagonal, the usual lasso choice.
            let penalty =
                HermitianMatrix::from_real_upper(dim, |u, v| if u == v { 0.0 } else { 1.0 });
            (make_covariance_objectives(samples, config.cov_lambda, penalty)?, None)
        }
        _ => unreachable!("VI problems run through execute_vi"),
    };

    let x0 = SpectraPoint::uniform(dim, 1.0);
    let schedule = match config.schedule {
        ScheduleKind::ConstantHorizon => {
            let l_total = finite_sum::total_lipschitz(&objectives);
            let scale = StepSchedule::finite_sum_scale(l_total, (dim as f64).ln(), dim)
                * config.schedule_scale;
            StepSchedule::new(config.schedule, scale)
        }
        kind => {
            // The log-det objectives blow up at the spectrahedron boundary;
            // harmonic schedules are normalized by the subgradient scale at
            // the barycenter so early steps cannot pin iterates at corners.
            let scale = if config.problem == Problem::Covariance {
                let mut l_ref = 0.0f64;
                for obj in &objectives {
                    l_ref = l_ref.max(obj.subgradient(&x0)?.spectral_norm()?);
                }
                config.schedule_scale / l_ref.max(1e-12)
            } else {
                config.schedule_scale
            };
            StepSchedule::new(kind, scale)
        }
    };

    // The solver is deterministic: every path produces the same trajectory.
    let reference = mdis_solve(
        &objectives,
        &schedule,
        config.iterations,
        x0,
        f_star,
        config.gap_stride,
    )?;
    let mut rows = reference.trace;
    if f_star.is_none() {
        // Without a known optimum the gap column reports progress toward the
        // best value this run achieved: f_min(t) - f_min(T).
        let final_best = rows.rows.last().map_or(f64::NAN, |r| r.values[1]);
        for row in rows.rows.iter_mut() {
            row.gap = (row.values[1] - final_best).max(0.0);
        }
    }
    let paths: Vec<PathRecord> = (0..config.paths)
        .map(|k| PathRecord { path: k, seed: path_seed(config.seed, k), trace: rows.clone() })
        .collect();
    let aggregate = aggregate(&paths);
    Ok(ExperimentResult {
        config: config.clone(),
        value_headers: vec!["f_value".into(), "f_min".into()],
        paths,
        aggregate,
    })
}

/// Executes the configured experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentResult, CliError> {
    if config.problem.is_finite_sum() {
        execute_finite_sum(config)
    } else {
        execute_vi(config)
    }
}

/// Executes and writes the CSV to the configured output path.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult, CliError> {
    let result = execute(config)?;
    let path = config.output_path();
    let csv = result.to_csv();
    let mut file = std::fs::File::create(&path)
        .map_err(|source| CliError::Io { path: path.clone(), source })?;
    file.write_all(csv.as_bytes())
        .map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(result)
}

/// One row of the comparison summary.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub label: String,
    pub final_mean_gap: f64,
    pub bound_ok_fraction: f64,
}

/// Comparison across configurations sharing a problem and horizon.
#[derive(Debug, Clone)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

impl std::fmt::Display for CompareTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(9).max(9);
        writeln!(f, "{:<width$}  {:>16}  {:>9}", "algorithm", "final_mean_gap", "bound_ok")?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<width$}  {:>16.9e}  {:>9.3}",
                row.label, row.final_mean_gap, row.bound_ok_fraction
            )?;
        }
        Ok(())
    }
}

/// Runs every configuration (writing each CSV) and summarizes final mean
/// gaps plus the fraction of checkpoints at which the theoretical bound
/// held. The configurations must agree on the problem and the horizon.
pub fn compare(configs: &[ExperimentConfig]) -> Result<CompareTable, CliError> {
    if configs.is_empty() {
        return Err(CliError::Config(crate::config::ConfigError {
            violations: vec!["compare needs at least one configuration".into()],
        }));
    }
    let (problem, iterations) = (configs[0].problem, configs[0].iterations);
    for cfg in configs.iter().skip(1) {
        if cfg.problem != problem || cfg.iterations != iterations {
            return Err(CliError::Config(crate::config::ConfigError {
                violations: vec![format!(
                    "compare requires a shared problem and T; `{}`/T={} differs from `{}`/T={}",
                    cfg.problem.name(),
                    cfg.iterations,
                    problem.name(),
                    iterations
                )],
            }));
        }
    }
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let result = run(cfg)?;
        rows.push(CompareRow {
            label: cfg.label(),
            final_mean_gap: result.final_mean_gap(),
            bound_ok_fraction: result.bound_ok_fraction(),
        });
    }
    Ok(CompareTable { rows })
}
