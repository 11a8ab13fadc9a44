//! The quantum-entropy mirror map on the spectrahedron.
//!
//! The distance-generating function is `tr(X log X - X)` on the set of PSD
//! matrices with fixed trace. Its conjugate and the gradient of the conjugate
//! (the Gibbs projection) have closed forms, which is what makes both solvers
//! single-loop: no inner semidefinite projection problem is ever solved.
//!
//! All exponentials are evaluated shift-stably (the largest eigenvalue is
//! subtracted first); dual iterates grow linearly with the iteration count and
//! a naive `exp` overflows long before the solvers are done.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};

/// Relative tolerance for the feasibility invariants of [`SpectraPoint`].
const FEAS_TOL: f64 = 1e-8;

/// Weight above which support outside the reference state's range makes the
/// divergence infinite rather than negligible.
const SUPPORT_TOL: f64 = 1e-9;

/// Unconstrained dual iterate; any Hermitian matrix qualifies.
pub type DualPoint = HermitianMatrix;

/// A point of the spectrahedron: Hermitian, positive semidefinite within
/// tolerance, with trace pinned to the budget `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraPoint {
    matrix: HermitianMatrix,
    trace_budget: f64,
}

impl SpectraPoint {
    /// Validating constructor: requires `lambda_min >= -1e-8 p` and
    /// `|tr - p| <= 1e-8 p`.
    pub fn new(matrix: HermitianMatrix, trace_budget: f64) -> Result<Self> {
        if trace_budget <= 0.0 || !trace_budget.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "trace budget must be positive and finite, got {trace_budget}"
            )));
        }
        let trace = matrix.trace();
        if (trace - trace_budget).abs() > FEAS_TOL * trace_budget {
            return Err(Error::Domain(format!(
                "trace {trace} is off the budget {trace_budget}"
            )));
        }
        let lambda_min = matrix.eig()?.min_eigenvalue();
        if lambda_min < -FEAS_TOL * trace_budget {
            return Err(Error::Domain(format!(
                "matrix is not PSD within tolerance: lambda_min = {lambda_min:e}"
            )));
        }
        Ok(Self { matrix, trace_budget })
    }

    /// Skips the feasibility checks. For producers whose output is feasible
    /// by construction (Gibbs projections, convex combinations) and for
    /// evaluating objectives at slightly perturbed points, e.g. in
    /// finite-difference checks; feasibility is the caller's responsibility.
    pub fn new_unchecked(matrix: HermitianMatrix, trace_budget: f64) -> Self {
        Self { matrix, trace_budget }
    }

    /// The barycenter `p I / n`.
    pub fn uniform(dim: usize, trace_budget: f64) -> Self {
        let m = HermitianMatrix::scaled_identity(dim, trace_budget / dim as f64);
        Self { matrix: m, trace_budget }
    }

    /// Random full-rank feasible point: `G G^dagger` for a complex Gaussian
    /// `G`, rescaled to the trace budget.
    pub fn random(dim: usize, trace_budget: f64, rng: &mut dyn RngCore) -> Self {
        let g = ComplexMatrix::random_gaussian(dim, dim, 1.0, rng);
        let w = HermitianMatrix::symmetrize(&g.mul(&g.adjoint()))
            .expect("Gram matrix is square");
        let m = w.scale(trace_budget / w.trace());
        Self { matrix: m, trace_budget }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn trace_budget(&self) -> f64 {
        self.trace_budget
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// The same direction rescaled to trace one.
    pub fn normalized(&self) -> SpectraPoint {
        SpectraPoint {
            matrix: self.matrix.scale(1.0 / self.trace_budget),
            trace_budget: 1.0,
        }
    }
}

fn require_unit_budget(x: &SpectraPoint, what: &str) -> Result<()> {
    if (x.trace_budget() - 1.0).abs() > FEAS_TOL {
        return Err(Error::InvalidArgument(format!(
            "{what} is defined on trace-1 points; normalize a budget of {} first",
            x.trace_budget()
        )));
    }
    Ok(())
}

/// Quantum entropy `tr(X log X) - tr(X)` with the `0 log 0 = 0` convention.
/// Ranges over `[-log n - 1, -1]` on the trace-1 spectrahedron.
pub fn entropy(x: &SpectraPoint) -> Result<f64> {
    require_unit_budget(x, "entropy")?;
    let log_x = x.matrix().matrix_log()?;
    Ok(x.matrix().trace_inner(&log_x) - x.matrix().trace())
}

/// Von Neumann divergence `tr(X log X - X log Y)`.
///
/// Nonnegative, zero only at `X = Y`. When `X` has support outside the range
/// of `Y` the divergence is infinite and `f64::INFINITY` is returned;
/// genuinely infeasible inputs (negative spectrum beyond tolerance) error.
pub fn divergence(x: &SpectraPoint, y: &SpectraPoint) -> Result<f64> {
    require_unit_budget(x, "divergence")?;
    require_unit_budget(y, "divergence")?;
    let log_x = x.matrix().matrix_log()?;
    let x_part = x.matrix().trace_inner(&log_x);

    let eig_y = y.matrix().eig()?;
    let scale = eig_y
        .eigenvalues()
        .iter()
        .fold(0.0f64, |a, l| a.max(l.abs()));
    let n = y.dim();
    let mut cross = 0.0;
    for k in 0..n {
        let lambda = eig_y.eigenvalues()[k];
        if lambda < -1e-8 * scale {
            return Err(Error::Domain(format!(
                "divergence reference has eigenvalue {lambda:e} below tolerance"
            )));
        }
        // Weight of X along the k-th eigendirection of Y.
        let mut w = num_complex::Complex64::new(0.0, 0.0);
        for u in 0..n {
            for v in 0..n {
                w += eig_y.eigenvectors().entry(u, k).conj()
                    * x.matrix().entry(u, v)
                    * eig_y.eigenvectors().entry(v, k);
            }
        }
        let w = w.re.max(0.0);
        if lambda <= 1e-12 {
            if w > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
        } else {
            cross += w * lambda.ln();
        }
    }
    Ok((x_part - cross).max(0.0))
}

/// Conjugate of the entropy, `log tr exp(Y + I)`, evaluated shift-stably as
/// `lambda_max + 1 + log sum exp(lambda_k - lambda_max)`. Finite for every
/// Hermitian input.
pub fn conjugate(y: &DualPoint) -> Result<f64> {
    let eig = y.eig()?;
    let top = eig.max_eigenvalue();
    let sum: f64 = eig.eigenvalues().iter().map(|l| (l - top).exp()).sum();
    Ok(top + 1.0 + sum.ln())
}

/// Gibbs projection of a dual point onto the spectrahedron of budget `p`:
/// `p exp(Y) / tr exp(Y)` (the `+I` of the gradient formula cancels in the
/// ratio). The output trace is renormalized post hoc, so the feasibility
/// invariants hold to machine precision even for duals with huge norms.
pub fn gibbs(y: &DualPoint, trace_budget: f64) -> Result<SpectraPoint> {
    if trace_budget <= 0.0 || !trace_budget.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "trace budget must be positive and finite, got {trace_budget}"
        )));
    }
    let eig = y.eig()?;
    let top = eig.max_eigenvalue();
    let z: f64 = eig.eigenvalues().iter().map(|l| (l - top).exp()).sum();
    let m = eig.apply_fn(|l| (l - top).exp() / z * trace_budget);
    let m = m.scale(trace_budget / m.trace());
    Ok(SpectraPoint::new_unchecked(m, trace_budget))
}

/// Fenchel coupling `H(Q, Y) = entropy(Q) + conjugate(Y) - tr(Q Y)`: the
/// proximity between a primal point and the Gibbs projection of a dual point.
/// Nonnegative by Fenchel's inequality; zero exactly when `Q = gibbs(Y, 1)`,
/// and equal to `divergence(Q, gibbs(Y, 1))`.
pub fn fenchel_coupling(q: &SpectraPoint, y: &DualPoint) -> Result<f64> {
    require_unit_budget(q, "fenchel_coupling")?;
    let h = entropy(q)? + conjugate(y)? - q.matrix().trace_inner(y);
    Ok(h.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn entropy_at_barycenter() {
        for n in [2usize, 4, 8] {
            let x = SpectraPoint::uniform(n, 1.0);
            let expected = -(n as f64).ln() - 1.0;
            assert!((entropy(&x).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_of_rank_one_projector() {
        // vv^dagger for a unit vector v: tr(X log X) = 0, entropy = -1.
        let v = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let m = HermitianMatrix::from_upper(2, |u, w| v[u] * v[w].conj());
        let x = SpectraPoint::new(m, 1.0).unwrap();
        assert!((entropy(&x).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_matches_eigenvalue_sum() {
        let mut r = rng(2);
        for _ in 0..20 {
            let x = SpectraPoint::random(4, 1.0, &mut r);
            let eig = x.matrix().eig().unwrap();
            let direct: f64 = eig
                .eigenvalues()
                .iter()
                .map(|&l| if l <= 1e-12 { 0.0 } else { l * l.ln() })
                .sum::<f64>()
                - 1.0;
            assert!((entropy(&x).unwrap() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_bounds_sampled() {
        let mut r = rng(3);
        for n in [2usize, 4, 8] {
            for _ in 0..100 {
                let x = SpectraPoint::random(n, 1.0, &mut r);
                let h = entropy(&x).unwrap();
                assert!(h >= -(n as f64).ln() - 1.0 - 1e-9);
                assert!(h <= -1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn divergence_of_point_with_itself_is_zero() {
        let mut r = rng(4);
        let x = SpectraPoint::random(3, 1.0, &mut r);
        assert!(divergence(&x, &x).unwrap() < 1e-10);
    }

    #[test]
    fn divergence_against_barycenter() {
        let mut r = rng(5);
        let n = 4usize;
        let x = SpectraPoint::random(n, 1.0, &mut r);
        let u = SpectraPoint::uniform(n, 1.0);
        let expected = entropy(&x).unwrap() + 1.0 + (n as f64).ln();
        assert!((divergence(&x, &u).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn divergence_pinsker_lower_bound() {
        let mut r = rng(6);
        for _ in 0..1000 {
            let x = SpectraPoint::random(3, 1.0, &mut r);
            let y = SpectraPoint::random(3, 1.0, &mut r);
            let d = divergence(&x, &y).unwrap();
            let tn = x.matrix().sub(y.matrix()).trace_norm().unwrap();
            assert!(d >= 0.5 * tn * tn - 1e-9, "d {d} vs {}", 0.5 * tn * tn);
        }
    }

    #[test]
    fn divergence_unsupported_reference_is_infinite() {
        let x = SpectraPoint::uniform(2, 1.0);
        let y = SpectraPoint::new(HermitianMatrix::diagonal(&[1.0, 0.0]), 1.0).unwrap();
        assert!(divergence(&x, &y).unwrap().is_infinite());
        // But a state supported inside the reference's range is fine.
        let x_in = SpectraPoint::new(HermitianMatrix::diagonal(&[1.0, 0.0]), 1.0).unwrap();
        assert!(divergence(&x_in, &y).unwrap() < 1e-10);
    }

    #[test]
    fn conjugate_closed_forms() {
        for n in [2usize, 5] {
            let zero = HermitianMatrix::zeros(n);
            let expected = 1.0 + (n as f64).ln();
            assert!((conjugate(&zero).unwrap() - expected).abs() < 1e-12);

            let a = -3.25;
            let shifted = HermitianMatrix::scaled_identity(n, a);
            assert!((conjugate(&shifted).unwrap() - (a + expected)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_matches_unshifted_route_at_moderate_norm() {
        let mut r = rng(7);
        for _ in 0..10 {
            let y = HermitianMatrix::random_gaussian(4, &mut r);
            let direct = y.add_identity(1.0).matrix_exp().unwrap().trace().ln();
            assert!((conjugate(&y).unwrap() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn gibbs_closed_forms() {
        let n = 3usize;
        let g = gibbs(&HermitianMatrix::zeros(n), 1.0).unwrap();
        for u in 0..n {
            assert!((g.matrix().entry(u, u).re - 1.0 / n as f64).abs() < 1e-14);
        }

        let y = HermitianMatrix::diagonal(&[0.0, 3.0f64.ln()]);
        let g = gibbs(&y, 1.0).unwrap();
        assert!((g.matrix().entry(0, 0).re - 0.25).abs() < 1e-12);
        assert!((g.matrix().entry(1, 1).re - 0.75).abs() < 1e-12);
    }

    #[test]
    fn gibbs_shift_invariance() {
        let mut r = rng(8);
        let y = HermitianMatrix::random_gaussian(4, &mut r);
        let base = gibbs(&y, 1.0).unwrap();
        for c in [-50.0, 50.0] {
            let shifted = gibbs(&y.add_identity(c), 1.0).unwrap();
            let diff = shifted.matrix().sub(base.matrix()).frobenius_norm();
            assert!(diff <= 1e-10, "c={c}: diff {diff}");
        }
    }

    #[test]
    fn gibbs_feasible_under_extreme_duals() {
        let mut r = rng(9);
        for scale in [1.0, 1e2, 1e4] {
            let y = HermitianMatrix::random_gaussian(4, &mut r).scale(scale);
            for p in [1.0, 10f64.powf(0.1)] {
                let g = gibbs(&y, p).unwrap();
                assert!((g.matrix().trace() - p).abs() <= 1e-10 * p);
                assert!(g.matrix().is_psd(1e-12 * p).unwrap());
            }
        }
    }

    #[test]
    fn fenchel_coupling_vanishes_at_the_projection() {
        let mut r = rng(10);
        for _ in 0..50 {
            let y = HermitianMatrix::random_gaussian(3, &mut r);
            let q = gibbs(&y, 1.0).unwrap();
            assert!(fenchel_coupling(&q, &y).unwrap() <= 1e-8);
        }
        let q = SpectraPoint::uniform(4, 1.0);
        let h = fenchel_coupling(&q, &HermitianMatrix::zeros(4)).unwrap();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn fenchel_coupling_equals_divergence_to_projection() {
        let mut r = rng(11);
        for _ in 0..100 {
            let q = SpectraPoint::random(3, 1.0, &mut r);
            let y = HermitianMatrix::random_gaussian(3, &mut r);
            let h = fenchel_coupling(&q, &y).unwrap();
            let d = divergence(&q, &gibbs(&y, 1.0).unwrap()).unwrap();
            assert!((h - d).abs() <= 1e-8, "H {h} vs D {d}");
        }
    }

    #[test]
    fn fenchel_coupling_dual_smoothness_sampled() {
        // H(X, Y+Z) <= H(X, Y) + tr(Z (gibbs(Y) - X)) + ||Z||_2^2.
        let mut r = rng(12);
        for n in [2usize, 4] {
            for _ in 0..100 {
                let x = SpectraPoint::random(n, 1.0, &mut r);
                let y = HermitianMatrix::random_gaussian(n, &mut r);
                let z = HermitianMatrix::random_gaussian(n, &mut r);
                let lhs = fenchel_coupling(&x, &y.add(&z)).unwrap();
                let gy = gibbs(&y, 1.0).unwrap();
                let cross = z.trace_inner(&gy.matrix().sub(x.matrix()));
                let zn = z.spectral_norm().unwrap();
                let rhs = fenchel_coupling(&x, &y).unwrap() + cross + zn * zn;
                assert!(lhs <= rhs + 1e-9, "lhs {lhs} rhs {rhs}");
            }
        }
    }

    #[test]
    fn spectra_point_validation() {
        assert!(SpectraPoint::new(HermitianMatrix::diagonal(&[0.5, 0.6]), 1.0).is_err());
        assert!(SpectraPoint::new(HermitianMatrix::diagonal(&[1.2, -0.2]), 1.0).is_err());
        let p = 10f64.powf(0.1);
        let ok = SpectraPoint::new(HermitianMatrix::scaled_identity(3, p / 3.0), p);
        assert!(ok.is_ok());
    }

    #[test]
    fn normalized_rescales_budget() {
        let mut r = rng(13);
        let x = SpectraPoint::random(3, 2.5, &mut r);
        let n = x.normalized();
        assert!((n.trace_budget() - 1.0).abs() < 1e-15);
        assert!((n.matrix().trace() - 1.0).abs() < 1e-9);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_dual(n: usize) -> impl Strategy<Value = HermitianMatrix> {
            prop::collection::vec(-50.0f64..50.0, n * n * 2).prop_map(move |vals| {
                let mut it = vals.into_iter();
                HermitianMatrix::from_upper(n, |_, _| {
                    Complex64::new(it.next().unwrap(), it.next().unwrap())
                })
            })
        }

        proptest! {
            #[test]
            fn gibbs_output_is_always_feasible(y in arb_dual(3), p in 0.1f64..10.0) {
                let g = gibbs(&y, p).unwrap();
                prop_assert!((g.matrix().trace() - p).abs() <= 1e-10 * p);
                prop_assert!(g.matrix().is_psd(1e-12 * p).unwrap());
            }

            #[test]
            fn fenchel_coupling_is_nonnegative(y in arb_dual(2), z in arb_dual(2)) {
                let q = gibbs(&z, 1.0).unwrap();
                prop_assert!(fenchel_coupling(&q, &y).unwrap() >= 0.0);
            }
        }
    }
}
