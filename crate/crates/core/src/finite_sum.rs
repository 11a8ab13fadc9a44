//! Incremental subgradient mirror descent for finite-sum minimization over
//! the spectrahedron.
//!
//! The solver minimizes `sum_i f_i(X)` over PSD matrices with a fixed trace
//! by visiting the component objectives cyclically: each visit moves the dual
//! iterate along one subgradient and projects back through the Gibbs map.
//! The dual iterate is carried across outer iterations, so the whole run is
//! one long dual trajectory.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::mirror::{gibbs, SpectraPoint};
use crate::schedule::StepSchedule;
use crate::trace::{RunTrace, TraceRow};

/// Eigenvalue floor for the log-det branch of the covariance objective.
pub const EPS_PD: f64 = 1e-8;

type ValueFn = dyn Fn(&SpectraPoint) -> Result<f64> + Send + Sync;
type SubgradientFn = dyn Fn(&SpectraPoint) -> Result<HermitianMatrix> + Send + Sync;

/// One agent's convex objective: a value, a subgradient selection, and a
/// bound on the subgradient spectral norm over the feasible set.
pub struct ComponentObjective {
    value: Box<ValueFn>,
    subgradient: Box<SubgradientFn>,
    lipschitz_bound: f64,
}

impl ComponentObjective {
    pub fn new(
        value: impl Fn(&SpectraPoint) -> Result<f64> + Send + Sync + 'static,
        subgradient: impl Fn(&SpectraPoint) -> Result<HermitianMatrix> + Send + Sync + 'static,
        lipschitz_bound: f64,
    ) -> Self {
        Self { value: Box::new(value), subgradient: Box::new(subgradient), lipschitz_bound }
    }

    /// Linear objective `f(X) = tr(A X)` with constant subgradient `A` and
    /// Lipschitz bound `||A||_2`.
    pub fn linear(a: HermitianMatrix) -> Result<Self> {
        let bound = a.spectral_norm()?;
        let grad = a.clone();
        Ok(Self::new(
            move |x| Ok(a.trace_inner(x.matrix())),
            move |_| Ok(grad.clone()),
            bound,
        ))
    }

    pub fn value(&self, x: &SpectraPoint) -> Result<f64> {
        (self.value)(x)
    }

    pub fn subgradient(&self, x: &SpectraPoint) -> Result<HermitianMatrix> {
        (self.subgradient)(x)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }
}

/// Sum of the component values at `x`.
pub fn total_value(objectives: &[ComponentObjective], x: &SpectraPoint) -> Result<f64> {
    let mut sum = 0.0;
    for obj in objectives {
        sum += obj.value(x)?;
    }
    Ok(sum)
}

/// Sum of the per-component Lipschitz bounds.
pub fn total_lipschitz(objectives: &[ComponentObjective]) -> f64 {
    objectives.iter().map(|o| o.lipschitz_bound()).sum()
}

/// Solver state: primal iterate, carried dual, and the best value seen.
#[derive(Debug, Clone)]
pub struct MdisState {
    x: SpectraPoint,
    dual: HermitianMatrix,
    t: usize,
    last_value: f64,
    best_value: f64,
    best: SpectraPoint,
}

impl MdisState {
    /// Starts from `x0` with the matching dual `log X0` (eigenvalues floored
    /// away from zero so the Gibbs projection reproduces `x0`).
    pub fn start(x0: SpectraPoint, objectives: &[ComponentObjective]) -> Result<Self> {
        let dual = x0.matrix().matrix_fn(|l| l.max(1e-300).ln())?;
        Self::with_dual(x0, dual, objectives)
    }

    /// Starts from an explicit primal/dual pair.
    pub fn with_dual(
        x0: SpectraPoint,
        dual: HermitianMatrix,
        objectives: &[ComponentObjective],
    ) -> Result<Self> {
        if dual.dim() != x0.dim() {
            return Err(Error::DimensionMismatch(
                "dual dimension differs from the primal".into(),
            ));
        }
        let f0 = total_value(objectives, &x0)?;
        Ok(Self { best: x0.clone(), x: x0, dual, t: 0, last_value: f0, best_value: f0 })
    }

    pub fn iterate(&self) -> &SpectraPoint {
        &self.x
    }

    pub fn dual(&self) -> &HermitianMatrix {
        &self.dual
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    /// Objective value at the current iterate.
    pub fn last_value(&self) -> f64 {
        self.last_value
    }

    /// Best objective value over all iterates so far (non-increasing in `t`).
    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn best(&self) -> &SpectraPoint {
        &self.best
    }
}

/// One outer iteration: a full cyclic sweep over the agents. Agent `i` is
/// visited at the intermediate point `U_{i-1}`, the dual moves along its
/// subgradient, and the Gibbs projection produces `U_i`; the sweep's final
/// point becomes the next iterate and the dual is carried over.
pub fn mdis_step(
    state: &mut MdisState,
    objectives: &[ComponentObjective],
    eta: f64,
) -> Result<()> {
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("stepsize must be positive, got {eta}")));
    }
    let budget = state.x.trace_budget();
    let mut u = state.x.clone();
    let mut dual = state.dual.clone();
    for obj in objectives {
        let g = obj.subgradient(&u)?;
        dual = dual.add_scaled(&g, -eta);
        u = gibbs(&dual, budget)?;
    }
    state.x = u;
    state.dual = dual;
    state.t += 1;
    state.last_value = total_value(objectives, &state.x)?;
    // Strict improvement keeps the earlier iterate on ties.
    if state.last_value < state.best_value {
        state.best_value = state.last_value;
        state.best = state.x.clone();
    }
    Ok(())
}

/// Result of a full solve.
#[derive(Debug, Clone)]
pub struct MdisRun {
    pub best: SpectraPoint,
    pub best_value: f64,
    pub trace: RunTrace,
}

/// Runs `iterations` outer sweeps from `x0` (pass `SpectraPoint::uniform` for
/// the barycenter default). The trace logs `f(X_t)` and the running minimum
/// every `log_stride` iterations plus the final one; when `f_star` is known
/// the gap column carries `f_min - f_star` and is guaranteed nonnegative.
pub fn mdis_solve(
    objectives: &[ComponentObjective],
    schedule: &StepSchedule,
    iterations: usize,
    x0: SpectraPoint,
    f_star: Option<f64>,
    log_stride: usize,
) -> Result<MdisRun> {
    let stride = log_stride.max(1);
    let dim = x0.dim();
    let l_total = total_lipschitz(objectives);
    let d0 = (dim as f64).ln();
    let mut state = MdisState::start(x0, objectives)?;
    let mut trace = RunTrace::default();
    for t in 0..iterations {
        let eta = schedule.eta(t, iterations);
        mdis_step(&mut state, objectives, eta)?;
        let done = t + 1;
        if done % stride == 0 || done == iterations {
            let gap = f_star.map_or(f64::NAN, |fs| (state.best_value() - fs).max(0.0));
            trace.rows.push(TraceRow {
                t: done,
                gap,
                values: vec![state.last_value(), state.best_value()],
                bound: rate_bound(l_total, d0, dim, done),
            });
        }
    }
    Ok(MdisRun { best: state.best().clone(), best_value: state.best_value(), trace })
}

/// The O(1/sqrt(T)) suboptimality bound for the horizon-tuned constant
/// stepsize: `2 L_total sqrt(D0 (n + 1) / T)`, where `D0` bounds the
/// divergence from the start to the optimum (`log n` from the barycenter).
pub fn rate_bound(l_total: f64, d0: f64, dim: usize, iterations: usize) -> f64 {
    assert!(l_total > 0.0 && d0 > 0.0 && dim >= 1 && iterations >= 1, "positive arguments");
    2.0 * l_total * (d0 * (dim as f64 + 1.0) / iterations as f64).sqrt()
}

fn complex_sign(z: num_complex::Complex64) -> num_complex::Complex64 {
    let r = z.norm();
    if r == 0.0 {
        num_complex::Complex64::new(0.0, 0.0)
    } else {
        z / r
    }
}

/// Per-agent sparse inverse-covariance objectives:
/// `f_i(X) = -log det X + tr(S_i X) + (lambda / m) * sum_{uv} P_uv |X_uv|`,
/// with subgradient `-X^{-1} + S_i + (lambda / m) P * sign(X)` (elementwise
/// product, `sign(0) = 0`). Eigenvalues below [`EPS_PD`] are floored in the
/// log-det and inverse branches. Lipschitz bounds are estimated by sampling.
pub fn make_covariance_objectives(
    sample_covariances: Vec<HermitianMatrix>,
    lambda: f64,
    penalty: HermitianMatrix,
) -> Result<Vec<ComponentObjective>> {
    if sample_covariances.is_empty() {
        return Err(Error::InvalidArgument("need at least one agent".into()));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument("penalty weight must be nonnegative".into()));
    }
    let dim = sample_covariances[0].dim();
    for s in &sample_covariances {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch("sample matrices of unequal size".into()));
        }
        for u in 0..dim {
            for v in 0..dim {
                if s.entry(u, v).im != 0.0 {
                    return Err(Error::InvalidArgument(
                        "sample covariance matrices must be real symmetric".into(),
                    ));
                }
            }
        }
    }
    if penalty.dim() != dim {
        return Err(Error::DimensionMismatch("penalty matrix size mismatch".into()));
    }
    for u in 0..dim {
        for v in 0..dim {
            let z = penalty.entry(u, v);
            if z.im != 0.0 || z.re < 0.0 {
                return Err(Error::InvalidArgument(
                    "penalty matrix must have nonnegative real entries".into(),
                ));
            }
        }
    }

    let m = sample_covariances.len() as f64;
    let mut objectives = Vec::with_capacity(sample_covariances.len());
    for s in sample_covariances {
        // The floored inverse keeps the subgradient bounded everywhere:
        // ||g|| <= 1/EPS_PD + ||S_i||_2 + (lambda/m) ||P||_F.
        let bound = 1.0 / EPS_PD + s.spectral_norm()? + lambda / m * penalty.frobenius_norm();
        let s_val = s.clone();
        let p_val = penalty.clone();
        let p_grad = penalty.clone();
        let value = move |x: &SpectraPoint| -> Result<f64> {
            let eig = x.matrix().eig()?;
            let logdet: f64 = eig.eigenvalues().iter().map(|l| l.max(EPS_PD).ln()).sum();
            let l1: f64 = (0..dim)
                .flat_map(|u| (0..dim).map(move |v| (u, v)))
                .map(|(u, v)| p_val.entry(u, v).re * x.matrix().entry(u, v).norm())
                .sum();
            Ok(-logdet + s_val.trace_inner(x.matrix()) + lambda / m * l1)
        };
        let subgradient = move |x: &SpectraPoint| -> Result<HermitianMatrix> {
            let inverse = x.matrix().eig()?.apply_fn(|l| 1.0 / l.max(EPS_PD));
            let sign = HermitianMatrix::from_upper(dim, |u, v| {
                complex_sign(x.matrix().entry(u, v)) * p_grad.entry(u, v).re
            });
            Ok(inverse.scale(-1.0).add(&s).add(&sign.scale(lambda / m)))
        };

        objectives.push(ComponentObjective::new(value, subgradient, bound));
    }
    Ok(objectives)
}

/// Seeded demo instance for the covariance problem: draws `agents` sample
/// covariance matrices from a common random SPD population covariance, then
/// rescales them so the unpenalized optimum has unit trace (which keeps the
/// trace-1 constraint from binding in spirit).
pub fn random_covariance_instance(
    dim: usize,
    agents: usize,
    samples_per_agent: usize,
    rng: &mut dyn RngCore,
) -> Vec<HermitianMatrix> {
    let g = HermitianMatrix::random_gaussian_real(dim, rng);
    let population = HermitianMatrix::symmetrize(
        &g.to_general().mul(&g.to_general().adjoint()),
    )
    .expect("square")
    .scale(1.0 / dim as f64)
    .add_identity(0.5);
    let sqrt = population.eig().expect("eig").apply_fn(|l| l.max(0.0).sqrt());

    let sample = |rng: &mut dyn RngCore| -> Vec<f64> {
        let z: Vec<f64> = (0..dim)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng))
            .collect();
        (0..dim)
            .map(|u| (0..dim).map(|v| sqrt.entry(u, v).re * z[v]).sum())
            .collect()
    };

    let mut covs: Vec<HermitianMatrix> = Vec::with_capacity(agents);
    for _ in 0..agents {
        let draws: Vec<Vec<f64>> = (0..samples_per_agent).map(|_| sample(rng)).collect();
        let mean: Vec<f64> = (0..dim)
            .map(|u| draws.iter().map(|z| z[u]).sum::<f64>() / samples_per_agent as f64)
            .collect();
        let s = HermitianMatrix::from_real_upper(dim, |u, v| {
            draws
                .iter()
                .map(|z| (z[u] - mean[u]) * (z[v] - mean[v]))
                .sum::<f64>()
                / samples_per_agent as f64
        });
        covs.push(s);
    }

    // Rescale so that tr((mean S)^{-1}) = 1.
    let mut mean_s = HermitianMatrix::zeros(dim);
    for s in &covs {
        mean_s = mean_s.add(s);
    }
    mean_s = mean_s.scale(1.0 / agents as f64);
    let inv_trace: f64 = mean_s
        .eig()
        .expect("eig")
        .eigenvalues()
        .iter()
        .map(|l| 1.0 / l.max(EPS_PD))
        .sum();
    covs.into_iter().map(|s| s.scale(inv_trace)).collect()
}
