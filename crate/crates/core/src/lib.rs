//! Entropic mirror descent on semidefinite matrix spaces.
//!
//! This crate implements two first-order, single-loop solvers over products
//! of spectrahedra (Hermitian PSD matrices with a fixed trace budget), both
//! driven by the quantum-entropy mirror map and its closed-form Gibbs
//! projection:
//!
//! * [`finite_sum`] — an incremental subgradient method for cooperatively
//!   minimizing a finite sum of convex objectives over the spectrahedron,
//!   with an O(1/sqrt(T)) suboptimality guarantee.
//! * [`vi`] — an averaged stochastic mirror-descent method for Cartesian
//!   stochastic variational inequalities with merely monotone mappings,
//!   with an O(1/sqrt(T)) bound on a computable gap function. Non-averaged
//!   and exponential-learning baselines share the same stepping kernel.
//!
//! The [`mimo`] module instantiates the VI machinery on a multi-cell MIMO
//! throughput game: seven transmitter/receiver pairs with Rayleigh channels
//! drawn from a fixed cell geometry, competing over transmit covariances.
//!
//! The [`guide`] module mirrors the mdbook under `book/`; its chapters are
//! compiled as doctests so the narrative and the code cannot drift apart.

pub mod error;
pub mod finite_sum;
pub mod guide;
pub mod linalg;
pub mod mimo;
pub mod mirror;
pub mod schedule;
pub mod trace;
pub mod vi;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, HermitianMatrix};
pub use mirror::{conjugate, divergence, entropy, fenchel_coupling, gibbs, DualPoint, SpectraPoint};
pub use schedule::{ScheduleKind, StepSchedule};
pub use trace::{RunTrace, TraceRow};
