//! The narrative guide, shared verbatim with the mdbook under `book/`.
//!
//! Each chapter is included as the documentation of an empty module, so
//! `cargo test --doc` compiles and runs every code block in the book; the
//! text and the library cannot drift apart. Render the same sources with
//! `mdbook build book` for the standalone version.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/hermitian-matrices.md")]
pub mod hermitian_matrices {}

#[doc = include_str!("../../../book/src/mirror-map.md")]
pub mod mirror_map {}

#[doc = include_str!("../../../book/src/finite-sum.md")]
pub mod finite_sum_minimization {}

#[doc = include_str!("../../../book/src/stochastic-vi.md")]
pub mod stochastic_variational_inequalities {}

#[doc = include_str!("../../../book/src/mimo-game.md")]
pub mod mimo_game {}
