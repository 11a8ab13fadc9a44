//! Stochastic variational inequalities on products of spectrahedra.
//!
//! A Cartesian VI is specified through a [`ViOracle`]: a stochastic mapping
//! sample per player block and, when available, the exact expected mapping.
//! The averaged solver updates every player's dual with one noisy mapping
//! evaluation, projects through the Gibbs map, and maintains a
//! stepsize-weighted running average of the iterates; the non-averaged and
//! exponential-learning baselines reuse the same stepping kernel.
//!
//! Progress is measured by the gap function
//! `Gap(X) = sup_{Z feasible} tr((X - Z) F(X))`, which is zero exactly at
//! strong solutions and has a closed form on spectrahedra: the supremum over
//! each block is attained at the projector onto the minimum eigenvector of
//! `F_i(X)` scaled by the trace budget.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::mirror::{gibbs, SpectraPoint};
use crate::schedule::StepSchedule;
use crate::trace::{RunTrace, TraceRow};

/// Ordered list of per-player feasible points, the block-diagonal state
/// `X = diag(X_1, ..., X_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    blocks: Vec<SpectraPoint>,
}

impl BlockState {
    pub fn new(blocks: Vec<SpectraPoint>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("a block state needs at least one block".into()));
        }
        Ok(Self { blocks })
    }

    /// Every block at its barycenter `p_i I / n_i`.
    pub fn uniform(dims: &[usize], budgets: &[f64]) -> Self {
        let blocks = dims
            .iter()
            .zip(budgets)
            .map(|(&n, &p)| SpectraPoint::uniform(n, p))
            .collect();
        Self { blocks }
    }

    /// Independent random full-rank feasible blocks.
    pub fn random(dims: &[usize], budgets: &[f64], rng: &mut dyn RngCore) -> Self {
        let blocks = dims
            .iter()
            .zip(budgets)
            .map(|(&n, &p)| SpectraPoint::random(n, p, rng))
            .collect();
        Self { blocks }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[SpectraPoint] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &SpectraPoint {
        &self.blocks[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    pub fn budgets(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace_budget()).collect()
    }
}

/// A (possibly stochastic) block mapping. `sample` draws one realization of
/// the mapping at the given state; `exact` is the expected mapping when it is
/// available in closed form. `noise_bounds` are per-player constants `C_i`
/// with `E ||Phi_i||_2^2 <= C_i^2` over the feasible set.
pub trait ViOracle {
    fn num_players(&self) -> usize;
    fn block_dims(&self) -> Vec<usize>;
    fn trace_budgets(&self) -> Vec<f64>;
    fn sample(&self, x: &BlockState, rng: &mut dyn RngCore) -> Result<Vec<HermitianMatrix>>;
    fn has_exact(&self) -> bool {
        false
    }
    fn exact(&self, _x: &BlockState) -> Result<Vec<HermitianMatrix>> {
        Err(Error::ExactUnavailable)
    }
    fn noise_bounds(&self) -> Vec<f64>;
}

/// Per-checkpoint problem-specific metrics (payoffs, say) evaluated at the
/// reported state.
pub type MetricsFn<'a> = dyn Fn(&BlockState) -> Vec<f64> + 'a;

/// Primal/dual starting point of a solve.
#[derive(Debug, Clone)]
pub struct CsviInit {
    pub x: BlockState,
    pub duals: Vec<HermitianMatrix>,
}

impl CsviInit {
    /// The documented initialization: duals `Y_i = I / n_i`, primal blocks
    /// their Gibbs images `p_i I / n_i`.
    pub fn uniform(dims: &[usize], budgets: &[f64]) -> Self {
        let duals: Vec<HermitianMatrix> = dims
            .iter()
            .map(|&n| HermitianMatrix::scaled_identity(n, 1.0 / n as f64))
            .collect();
        let blocks = duals
            .iter()
            .zip(budgets)
            .map(|(y, &p)| gibbs(y, p).expect("identity dual"))
            .collect::<Vec<_>>();
        Self { x: BlockState { blocks }, duals }
    }

    pub fn for_oracle(oracle: &dyn ViOracle) -> Self {
        Self::uniform(&oracle.block_dims(), &oracle.trace_budgets())
    }
}

/// Iteration state: current blocks, their stepsize-weighted average, the
/// accumulated stepsize mass, and the dual trajectory.
#[derive(Debug, Clone)]
pub struct AveragedState {
    x: BlockState,
    x_bar: BlockState,
    gamma: f64,
    duals: Vec<HermitianMatrix>,
    t: usize,
}

impl AveragedState {
    /// `gamma_0 = eta_0` and the average starts at the initial point.
    pub fn start(init: CsviInit, eta0: f64) -> Self {
        Self { x_bar: init.x.clone(), x: init.x, gamma: eta0, duals: init.duals, t: 0 }
    }

    pub fn iterate(&self) -> &BlockState {
        &self.x
    }

    pub fn average(&self) -> &BlockState {
        &self.x_bar
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn duals(&self) -> &[HermitianMatrix] {
        &self.duals
    }

    pub fn iteration(&self) -> usize {
        self.t
    }
}

/// One solver iteration: draw a mapping sample at `X_t`, move every dual
/// against it (plus `mel_lambda * X_i` when the exponential-learning
/// regularization is active), Gibbs-project each block, and fold the new
/// iterate into the running average when `averaging` is set.
///
/// `eta_next` is the stepsize of the *next* iteration; the averaging
/// recursion `gamma_{t+1} = gamma_t + eta_{t+1}` weights iterate `X_k` by
/// `eta_k`, so the update needs one stepsize of lookahead.
pub fn amsmd_step(
    state: &mut AveragedState,
    oracle: &dyn ViOracle,
    eta: f64,
    eta_next: f64,
    rng: &mut dyn RngCore,
    averaging: bool,
    mel_lambda: f64,
) -> Result<()> {
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("stepsize must be positive, got {eta}")));
    }
    if mel_lambda < 0.0 {
        return Err(Error::InvalidArgument("regularization weight must be nonnegative".into()));
    }
    let n = state.x.num_blocks();
    let phi = oracle.sample(&state.x, rng)?;
    if phi.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "oracle returned {} blocks for {n} players",
            phi.len()
        )));
    }
    let mut new_blocks = Vec::with_capacity(n);
    for (i, sample) in phi.iter().enumerate() {
        let block = state.x.block(i);
        if sample.dim() != block.dim() {
            return Err(Error::DimensionMismatch(format!(
                "oracle block {i} has dimension {} instead of {}",
                sample.dim(),
                block.dim()
            )));
        }
        let step_dir = if mel_lambda == 0.0 {
            sample.clone()
        } else {
            sample.add_scaled(block.matrix(), mel_lambda)
        };
        state.duals[i] = state.duals[i].add_scaled(&step_dir, -eta);
        new_blocks.push(gibbs(&state.duals[i], block.trace_budget())?);
    }
    state.x = BlockState { blocks: new_blocks };
    state.t += 1;
    if averaging {
        let gamma_next = state.gamma + eta_next;
        let w_old = state.gamma / gamma_next;
        let w_new = eta_next / gamma_next;
        let blocks = state
            .x_bar
            .blocks
            .iter()
            .zip(&state.x.blocks)
            .map(|(bar, cur)| {
                let m = bar.matrix().scale(w_old).add_scaled(cur.matrix(), w_new);
                SpectraPoint::new_unchecked(m, cur.trace_budget())
            })
            .collect();
        state.x_bar = BlockState { blocks };
        state.gamma = gamma_next;
    }
    Ok(())
}

/// Which iterate sequence a solve reports and returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverVariant {
    /// Stepsize-weighted averaging; reports the average.
    Averaged,
    /// Plain stochastic mirror descent; reports the last iterate.
    NonAveraged,
    /// Exponential learning: the mapping is regularized to `F + lambda X`;
    /// reports the last iterate. `lambda = 0` reproduces `NonAveraged`
    /// bitwise under the same schedule and seed.
    Mel { lambda: f64 },
}

impl SolverVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SolverVariant::Averaged => "amsmd",
            SolverVariant::NonAveraged => "msmd",
            SolverVariant::Mel { .. } => "mel",
        }
    }

    fn averaging(&self) -> bool {
        matches!(self, SolverVariant::Averaged)
    }

    fn mel_lambda(&self) -> f64 {
        match self {
            SolverVariant::Mel { lambda } => *lambda,
            _ => 0.0,
        }
    }
}

/// Result of a solve: the reported state (average or last iterate) and the
/// checkpoint trace.
#[derive(Debug, Clone)]
pub struct CsviRun {
    pub output: BlockState,
    pub trace: RunTrace,
}

/// Runs `iterations` steps of the chosen variant from `init`, drawing all
/// randomness from a ChaCha stream seeded with `seed`. The gap (when the
/// oracle has an exact mapping) and the O(1/sqrt(t)) reference bound are
/// logged every `gap_stride` iterations and at the end; `extra_metrics` can
/// append problem-specific columns (payoffs, say) evaluated at the reported
/// state.
#[allow(clippy::too_many_arguments)]
pub fn amsmd_solve(
    oracle: &dyn ViOracle,
    schedule: &StepSchedule,
    iterations: usize,
    init: CsviInit,
    variant: SolverVariant,
    seed: u64,
    gap_stride: usize,
    extra_metrics: Option<&MetricsFn<'_>>,
) -> Result<CsviRun> {
    let stride = gap_stride.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let averaging = variant.averaging();
    let mel_lambda = variant.mel_lambda();
    let c_total: f64 = oracle.noise_bounds().iter().sum();
    let dims = oracle.block_dims();

    let mut state = AveragedState::start(init, schedule.eta(0, iterations));
    let mut trace = RunTrace::default();
    for t in 0..iterations {
        let eta = schedule.eta(t, iterations);
        let eta_next = schedule.eta(t + 1, iterations);
        amsmd_step(&mut state, oracle, eta, eta_next, &mut rng, averaging, mel_lambda)?;
        let done = t + 1;
        if done % stride == 0 || done == iterations {
            let reported = if averaging { state.average() } else { state.iterate() };
            let gap_value = if oracle.has_exact() { gap(reported, oracle)? } else { f64::NAN };
            let values = extra_metrics.map_or_else(Vec::new, |f| f(reported));
            trace.rows.push(TraceRow {
                t: done,
                gap: gap_value,
                values,
                bound: rate_bound(c_total, &dims, done),
            });
        }
    }
    let output = if averaging { state.average().clone() } else { state.iterate().clone() };
    Ok(CsviRun { output, trace })
}

/// Strong gap function in closed form:
/// `Gap(X) = sum_i [ tr(X_i F_i(X)) - p_i lambda_min(F_i(X)) ]`.
/// Requires the oracle's exact mapping; nonnegative, clamped at zero.
pub fn gap(x: &BlockState, oracle: &dyn ViOracle) -> Result<f64> {
    let mapping = oracle.exact(x)?;
    if mapping.len() != x.num_blocks() {
        return Err(Error::DimensionMismatch("mapping block count mismatch".into()));
    }
    let mut total = 0.0;
    for (xi, fi) in x.blocks().iter().zip(&mapping) {
        let lambda_min = fi.eig()?.min_eigenvalue();
        total += xi.matrix().trace_inner(fi) - xi.trace_budget() * lambda_min;
    }
    Ok(total.max(0.0))
}

/// The O(1/sqrt(T)) gap bound for the horizon-tuned constant stepsize:
/// `3 C_total sqrt(sum_i log(n_i + 1) / T)`.
pub fn rate_bound(c_total: f64, dims: &[usize], iterations: usize) -> f64 {
    assert!(c_total > 0.0 && !dims.is_empty() && iterations >= 1, "positive arguments");
    let log_sum: f64 = dims.iter().map(|&n| (n as f64 + 1.0).ln()).sum();
    3.0 * c_total * (log_sum / iterations as f64).sqrt()
}

/// The matching constant stepsize:
/// `eta = (1 / C_total) sqrt(sum_i log(n_i + 1) / T)`.
pub fn horizon_stepsize(c_total: f64, dims: &[usize], iterations: usize) -> f64 {
    StepSchedule::vi_scale(c_total, dims) / (iterations as f64).sqrt()
}

/// Samples `trials` state pairs and returns the smallest observed value of
/// `tr((X - Y)(F(X) - F(Y)))`; a result below `-1e-8` flags a non-monotone
/// mapping.
pub fn check_monotone(
    oracle: &dyn ViOracle,
    sampler: &mut dyn FnMut(&mut dyn RngCore) -> BlockState,
    trials: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let x = sampler(rng);
        let y = sampler(rng);
        let fx = oracle.exact(&x)?;
        let fy = oracle.exact(&y)?;
        let mut value = 0.0;
        for i in 0..x.num_blocks() {
            let dx = x.block(i).matrix().sub(y.block(i).matrix());
            let df = fx[i].sub(&fy[i]);
            value += dx.trace_inner(&df);
        }
        worst = worst.min(value);
    }
    Ok(worst)
}

/// Per-player sampled sup of `||Phi_i||_2` over random feasible states; the
/// practical route to the `C_i` constants when no closed form exists.
pub fn measured_sup_norms(
    sample: impl Fn(&BlockState, &mut dyn RngCore) -> Result<Vec<HermitianMatrix>>,
    dims: &[usize],
    budgets: &[f64],
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    let mut worst = vec![0.0f64; dims.len()];
    for _ in 0..samples {
        let x = BlockState::random(dims, budgets, rng);
        let phi = sample(&x, rng)?;
        for (w, block) in worst.iter_mut().zip(&phi) {
            *w = w.max(block.spectral_norm()?);
        }
    }
    Ok(worst)
}

/// Deterministic constant mapping `F(X) = A` (blockwise).
pub struct ConstantOracle {
    blocks: Vec<HermitianMatrix>,
    budgets: Vec<f64>,
    bounds: Vec<f64>,
}

impl ConstantOracle {
    pub fn new(blocks: Vec<HermitianMatrix>, budgets: Vec<f64>) -> Result<Self> {
        if blocks.len() != budgets.len() || blocks.is_empty() {
            return Err(Error::InvalidArgument("need matching, nonempty blocks/budgets".into()));
        }
        let bounds = blocks
            .iter()
            .map(|b| b.spectral_norm().map(|s| s.max(1e-12)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks, budgets, bounds })
    }
}

impl ViOracle for ConstantOracle {
    fn num_players(&self) -> usize {
        self.blocks.len()
    }

    fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    fn trace_budgets(&self) -> Vec<f64> {
        self.budgets.clone()
    }

    fn sample(&self, _x: &BlockState, _rng: &mut dyn RngCore) -> Result<Vec<HermitianMatrix>> {
        Ok(self.blocks.clone())
    }

    fn has_exact(&self) -> bool {
        true
    }

    fn exact(&self, _x: &BlockState) -> Result<Vec<HermitianMatrix>> {
        Ok(self.blocks.clone())
    }

    fn noise_bounds(&self) -> Vec<f64> {
        self.bounds.clone()
    }
}

/// Affine monotone mapping `F_i(X) = X_i - A_i`, optionally corrupted by
/// symmetrized complex Gaussian noise of entrywise variance `sigma`.
pub struct AffineOracle {
    targets: Vec<HermitianMatrix>,
    budgets: Vec<f64>,
    sigma: f64,
    bounds: Vec<f64>,
}

impl AffineOracle {
    pub fn new(targets: Vec<HermitianMatrix>, budgets: Vec<f64>, sigma: f64) -> Result<Self> {
        if targets.len() != budgets.len() || targets.is_empty() {
            return Err(Error::InvalidArgument("need matching, nonempty targets/budgets".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidArgument("noise variance must be nonnegative".into()));
        }
        // Deterministic sampled bound with headroom; override for tighter
        // constants via `with_noise_bounds`.
        let dims: Vec<usize> = targets.iter().map(|t| t.dim()).collect();
        let mut oracle = Self { targets, budgets, sigma, bounds: vec![] };
        let mut rng = ChaCha8Rng::seed_from_u64(0x414646494e45);
        let measured = measured_sup_norms(
            |x, r| oracle.sample(x, r),
            &dims,
            &oracle.budgets,
            64,
            &mut rng,
        )?;
        oracle.bounds = measured.into_iter().map(|c| 1.5 * c.max(1e-12)).collect();
        Ok(oracle)
    }

    pub fn with_noise_bounds(mut self, bounds: Vec<f64>) -> Self {
        assert_eq!(bounds.len(), self.targets.len());
        self.bounds = bounds;
        self
    }
}

impl ViOracle for AffineOracle {
    fn num_players(&self) -> usize {
        self.targets.len()
    }

    fn block_dims(&self) -> Vec<usize> {
        self.targets.iter().map(|t| t.dim()).collect()
    }

    fn trace_budgets(&self) -> Vec<f64> {
        self.budgets.clone()
    }

    fn sample(&self, x: &BlockState, rng: &mut dyn RngCore) -> Result<Vec<HermitianMatrix>> {
        let mut exact = self.exact(x)?;
        if self.sigma > 0.0 {
            for block in exact.iter_mut() {
                let raw = crate::linalg::ComplexMatrix::random_gaussian(
                    block.dim(),
                    block.dim(),
                    self.sigma,
                    rng,
                );
                let noise = HermitianMatrix::symmetrize(&raw)?;
                *block = block.add(&noise);
            }
        }
        Ok(exact)
    }

    fn has_exact(&self) -> bool {
        true
    }

    fn exact(&self, x: &BlockState) -> Result<Vec<HermitianMatrix>> {
        Ok(x.blocks()
            .iter()
            .zip(&self.targets)
            .map(|(xi, a)| xi.matrix().sub(a))
            .collect())
    }

    fn noise_bounds(&self) -> Vec<f64> {
        self.bounds.clone()
    }
}
