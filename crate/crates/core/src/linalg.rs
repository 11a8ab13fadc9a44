//! Dense complex linear algebra on Hermitian matrices.
//!
//! Everything downstream (the mirror map, both solvers, the network model)
//! reduces to a handful of kernels collected here: an eigendecomposition for
//! Hermitian matrices, matrix functions built on top of it, trace/spectral
//! norms, and the trace inner product. Real symmetric matrices are the
//! zero-imaginary special case; there is a single code path.

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Sweep budget factor for the Jacobi eigensolver: the cap is `100 * n * n`
/// full sweeps. Reaching it signals pathological input; well-conditioned
/// Hermitian matrices converge in well under twenty sweeps.
pub const JACOBI_SWEEP_FACTOR: usize = 100;

/// Relative off-diagonal mass at which the Jacobi iteration is converged.
const JACOBI_TOL: f64 = 1e-13;

fn gaussian(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

/// General rectangular complex matrix, row-major. Used for channel matrices,
/// eigenvector bases and intermediate products; no structure is assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    /// Matrix with independent standard complex Gaussian entries scaled so
    /// that each entry has total complex variance `variance`.
    pub fn random_gaussian(rows: usize, cols: usize, variance: f64, rng: &mut dyn RngCore) -> Self {
        let sd = (variance / 2.0).sqrt();
        let mut m = Self::zeros(rows, cols);
        for z in m.data.iter_mut() {
            *z = Complex64::new(sd * gaussian(rng), sd * gaussian(rng));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, u: usize, v: usize) -> Complex64 {
        self.data[u * self.cols + v]
    }

    pub fn set(&mut self, u: usize, v: usize, z: Complex64) {
        self.data[u * self.cols + v] = z;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for u in 0..self.rows {
            for v in 0..self.cols {
                out.data[v * self.rows + u] = self.entry(u, v).conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for u in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[u * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for v in 0..other.cols {
                    out.data[u * other.cols + v] += a * other.data[k * other.cols + v];
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for z in out.data.iter_mut() {
            *z *= factor;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z += w;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Square complex matrix with exact Hermitian storage: for every constructor
/// and every operation on this type, `entry(u, v) == conj(entry(v, u))` holds
/// bitwise and diagonal imaginary parts are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = Complex64::new(value, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (k, &v) in values.iter().enumerate() {
            m.data[k * values.len() + k] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Builds from the upper triangle: `f(u, v)` is consulted only for
    /// `u <= v`; the strict lower triangle is the conjugate mirror and the
    /// diagonal keeps its real part only.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let mut m = Self::zeros(dim);
        for u in 0..dim {
            let d = f(u, u);
            m.data[u * dim + u] = Complex64::new(d.re, 0.0);
            for v in (u + 1)..dim {
                let z = f(u, v);
                m.data[u * dim + v] = z;
                m.data[v * dim + u] = z.conj();
            }
        }
        m
    }

    /// Validates that `data` (row-major, `dim * dim`) is exactly Hermitian
    /// with finite entries.
    pub fn from_raw(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        for u in 0..dim {
            for v in 0..dim {
                let z = data[u * dim + v];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite(u, v));
                }
            }
        }
        for u in 0..dim {
            if data[u * dim + u].im != 0.0 {
                return Err(Error::NotHermitian { u, v: u });
            }
            for v in (u + 1)..dim {
                if data[u * dim + v] != data[v * dim + u].conj() {
                    return Err(Error::NotHermitian { u, v });
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch("rows of unequal length".into()));
            }
            data.extend_from_slice(row);
        }
        Self::from_raw(dim, data)
    }

    /// Real symmetric constructor; `f(u, v)` consulted for `u <= v`.
    pub fn from_real_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_upper(dim, |u, v| Complex64::new(f(u, v), 0.0))
    }

    /// Hermitian part `(A + A^dagger) / 2` of a square complex matrix.
    /// Returns the input unchanged when it is already exactly Hermitian.
    pub fn symmetrize(raw: &ComplexMatrix) -> Result<Self> {
        if raw.rows() != raw.cols() {
            return Err(Error::DimensionMismatch(format!(
                "cannot symmetrize a {}x{} matrix",
                raw.rows(),
                raw.cols()
            )));
        }
        Ok(Self::from_upper(raw.rows(), |u, v| {
            (raw.entry(u, v) + raw.entry(v, u).conj()) * 0.5
        }))
    }

    /// Random Hermitian matrix: off-diagonal entries are standard complex
    /// Gaussian (unit total variance), diagonal entries standard real Gaussian.
    pub fn random_gaussian(dim: usize, rng: &mut dyn RngCore) -> Self {
        let sd = 0.5f64.sqrt();
        Self::from_upper(dim, |u, v| {
            if u == v {
                Complex64::new(gaussian(rng), 0.0)
            } else {
                Complex64::new(sd * gaussian(rng), sd * gaussian(rng))
            }
        })
    }

    /// Random real symmetric matrix with standard Gaussian entries.
    pub fn random_gaussian_real(dim: usize, rng: &mut dyn RngCore) -> Self {
        Self::from_real_upper(dim, |_, _| gaussian(rng))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, u: usize, v: usize) -> Complex64 {
        self.data[u * self.dim + v]
    }

    pub fn to_general(&self) -> ComplexMatrix {
        ComplexMatrix { rows: self.dim, cols: self.dim, data: self.data.clone() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.data[k * self.dim + k].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from exact Hermitian symmetry; zero by construction
    /// for every matrix produced by this type.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for u in 0..self.dim {
            for v in 0..self.dim {
                let d = (self.entry(u, v) - self.entry(v, u).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z += w;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z -= w;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for z in out.data.iter_mut() {
            *z *= factor;
        }
        out
    }

    /// `self + weight * other`, the shape of every dual update.
    pub fn add_scaled(&self, other: &Self, weight: f64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z += w * weight;
        }
        out
    }

    /// `self + shift * I`.
    pub fn add_identity(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for k in 0..self.dim {
            out.data[k * self.dim + k].re += shift;
        }
        out
    }

    /// Real trace inner product `tr(A^dagger B) = tr(A B)` for Hermitian
    /// pairs. Computed as the entrywise sum of `Re(conj(a) b)`, whose
    /// imaginary counterpart vanishes identically for exact Hermitian storage.
    pub fn trace_inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Trace norm: sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.eig()?.eigenvalues().iter().map(|l| l.abs()).sum())
    }

    /// Spectral norm: largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self
            .eig()?
            .eigenvalues()
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l.abs())))
    }

    /// Whether the smallest eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.eig()?.min_eigenvalue() >= -tol)
    }

    /// Applies a scalar function to the spectrum: `V diag(f(lambda)) V^dagger`.
    pub fn matrix_fn(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Ok(self.eig()?.apply_fn(f))
    }

    pub fn matrix_exp(&self) -> Result<Self> {
        self.matrix_fn(f64::exp)
    }

    /// Matrix logarithm with the extended `0 log 0 = 0` convention:
    /// eigenvalues in `[-1e-8 * ||A||_2, 1e-12]` are treated as exactly zero
    /// and mapped to zero; eigenvalues below that band are a domain error.
    pub fn matrix_log(&self) -> Result<Self> {
        let eig = self.eig()?;
        let scale = eig.eigenvalues().iter().fold(0.0f64, |a, l| a.max(l.abs()));
        let neg_tol = 1e-8 * scale;
        for &l in eig.eigenvalues() {
            if l < -neg_tol {
                return Err(Error::Domain(format!(
                    "log of a matrix with eigenvalue {l:e} below -1e-8 * ||A||_2"
                )));
            }
        }
        Ok(eig.apply_fn(|l| if l <= 1e-12 { 0.0 } else { l.ln() }))
    }

    /// Eigendecomposition with the default sweep budget.
    pub fn eig(&self) -> Result<EigenDecomposition> {
        self.eig_bounded(JACOBI_SWEEP_FACTOR * self.dim * self.dim)
    }

    /// Cyclic Jacobi eigensolver for Hermitian matrices using 2x2 unitary
    /// rotations. Converges when the off-diagonal Frobenius mass drops below
    /// `1e-13 * ||A||_F`; errors out after `max_sweeps` full sweeps.
    pub fn eig_bounded(&self, max_sweeps: usize) -> Result<EigenDecomposition> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut v = ComplexMatrix::identity(n);
        let target = JACOBI_TOL * self.frobenius_norm();

        let mut sweeps = 0;
        loop {
            let off = off_diagonal_norm(&a, n);
            if off <= target {
                break;
            }
            if sweeps >= max_sweeps {
                return Err(Error::NoConvergence { sweeps, off });
            }
            sweeps += 1;
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, n, p, q);
                }
            }
        }

        // Sort ascending; the stable sort keeps ties deterministic.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[i * n + i].re.partial_cmp(&a[j * n + j].re).expect("finite eigenvalues")
        });

        let eigenvalues: Vec<f64> = order.iter().map(|&k| a[k * n + k].re).collect();
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            for u in 0..n {
                vectors.set(u, col, v.entry(u, k));
            }
        }

        // Phase convention: the first nonzero component of each eigenvector
        // is made real positive.
        for col in 0..n {
            for u in 0..n {
                let z = vectors.entry(u, col);
                let r = z.norm();
                if r > 0.0 {
                    let phase = z.conj() / r;
                    for w in 0..n {
                        let y = vectors.entry(w, col) * phase;
                        vectors.set(w, col, y);
                    }
                    vectors.set(u, col, Complex64::new(r, 0.0));
                    break;
                }
            }
        }

        Ok(EigenDecomposition { eigenvalues, eigenvectors: vectors })
    }
}

fn off_diagonal_norm(a: &[Complex64], n: usize) -> f64 {
    let mut sum = 0.0;
    for u in 0..n {
        for v in 0..n {
            if u != v {
                sum += a[u * n + v].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation annihilating the (p, q) entry.
fn jacobi_rotate(a: &mut [Complex64], v: &mut ComplexMatrix, n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    // Skip rotations too small to matter; also guards the tau division.
    if r == 0.0 || r <= 1e-18 * (app.abs() + aqq.abs()) {
        return;
    }
    let phase = apq / r; // e^{i phi}
    let tau = (aqq - app) / (2.0 * r);
    let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
    let t = -sign / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    a[p * n + p] = Complex64::new(app + t * r, 0.0);
    a[q * n + q] = Complex64::new(aqq - t * r, 0.0);
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);

    let s_conj_phase = phase.conj() * s;
    let s_phase = phase * s;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = akp * c + akq * s_conj_phase;
        let new_kq = akq * c - akp * s_phase;
        a[k * n + p] = new_kp;
        a[p * n + k] = new_kp.conj();
        a[k * n + q] = new_kq;
        a[q * n + k] = new_kq.conj();
    }
    for k in 0..n {
        let vkp = v.entry(k, p);
        let vkq = v.entry(k, q);
        v.set(k, p, vkp * c + vkq * s_conj_phase);
        v.set(k, q, vkq * c - vkp * s_phase);
    }
}

/// Spectral factorization `A = V diag(lambda) V^dagger` with eigenvalues
/// ascending and unitary `V` (column k pairs with eigenvalue k).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Column of `V` paired with the smallest eigenvalue.
    pub fn min_eigenvector(&self) -> Vec<Complex64> {
        let n = self.eigenvalues.len();
        (0..n).map(|u| self.eigenvectors.entry(u, 0)).collect()
    }

    /// `V diag(f(lambda)) V^dagger`, Hermitian by construction.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let images: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        HermitianMatrix::from_upper(n, |u, v| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &image) in images.iter().enumerate() {
                acc += self.eigenvectors.entry(u, k)
                    * self.eigenvectors.entry(v, k).conj()
                    * image;
            }
            acc
        })
    }

    /// `V diag(lambda) V^dagger`; reproduces the input up to roundoff.
    pub fn reconstruct(&self) -> HermitianMatrix {
        self.apply_fn(|l| l)
    }

    /// `||V^dagger V - I||_F`, a unitarity check.
    pub fn unitarity_defect(&self) -> f64 {
        let vtv = self.eigenvectors.adjoint().mul(&self.eigenvectors);
        let n = self.eigenvalues.len();
        let mut sum = 0.0;
        for u in 0..n {
            for v in 0..n {
                let expected = if u == v { 1.0 } else { 0.0 };
                sum += (vtv.entry(u, v) - expected).norm_sqr();
            }
        }
        sum.sqrt()
    }
}
