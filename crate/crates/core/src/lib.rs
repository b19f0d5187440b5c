//! Verification laboratory for the curvature of direct-image bundles
//! `p_*(L + K_{X/Y})` over a one-dimensional base.
//!
//! Two pipelines live here:
//!
//! * an untwisted pipeline on hyperelliptic families `y^2 = f0(z) + t g(z)`,
//!   comparing the Chern curvature of the L^2 metric on holomorphic 1-forms
//!   (finite differences of period-derived Gram matrices) with the squared
//!   harmonic norm of the Kodaira-Spencer action extracted from the flat
//!   Gauss-Manin frame, plus exact multiplication-map certificates
//!   ([`noether`]) explaining when that curvature degenerates;
//! * a twisted pipeline on the trivial torus fibration with a degree-k line
//!   bundle ([`torus`]), comparing the curvature of the theta-basis Gram
//!   matrix with `∫ c(φ)|u|^2 e^{-φ} + <(□'+1)^{-1} η, η>`.
//!
//! Heavy loops go through [`par`], which runs on rayon when the `parallel`
//! feature is enabled and falls back to plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exact;
pub mod family;
pub mod fd;
pub mod linalg;
pub mod noether;
pub mod par;
pub mod periods;
pub mod poly;
pub mod torus;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use par::Execution;

/// Version tag mixed into cache keys; bump when loop orientation, branch
/// conventions or the symplectic reduction change.
pub const HOMOLOGY_CONVENTION_VERSION: u32 = 1;
