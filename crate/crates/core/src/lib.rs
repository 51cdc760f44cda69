//! Exact-arithmetic engine for generalized harmonic functions on rooted trees.
//!
//! A function `f` on the vertices of a rooted tree is *generalized harmonic*
//! when `f(x) = Σ_{y ∈ S(x)} w(x,y)·f(y)` at every internal vertex `x`, with
//! edge weights `w` drawn from a pluggable field. On top of that single
//! equation this crate builds:
//!
//! * exact field arithmetic (prime fields, arbitrary-precision rationals,
//!   a tolerance-equipped real field) — [`field`],
//! * truncated weighted trees with exact sector measures and the
//!   collapsed-tree transform — [`tree`],
//! * finite-dimensional value spaces with translation-invariant metrics and
//!   dense-subset enumerators — [`space`],
//! * boundary step functions, the convergence-in-probability distance, and
//!   dense target enumeration — [`boundary`],
//! * harmonicity checks, the free-slot extension solver, and brute-force
//!   oracles — [`harmonic`],
//! * certificate-producing builders for universal functions, spanning
//!   families, frequent hits on an arithmetic schedule, and long constant
//!   holds with upper-density evidence — [`universal`] and [`frequency`].
//!
//! All probability and metric arithmetic over exact fields is carried out in
//! arbitrary-precision rationals, so every certificate in this crate is an
//! exact statement about a finite-depth tree, not a floating-point estimate.

pub mod boundary;
pub mod error;
pub(crate) mod enumerate;
pub mod field;
pub mod frequency;
pub mod harmonic;
pub mod space;
pub mod tree;
pub mod universal;

pub use error::{Error, Result};
