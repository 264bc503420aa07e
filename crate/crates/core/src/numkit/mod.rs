//! Numerically robust special functions, matrix primitives, and
//! one-dimensional quadrature that every other module builds on.
//!
//! All operations here are pure and reentrant: no shared mutable state
//! beyond lazily computed quadrature node tables.

pub mod matrix;
pub mod quad;
pub mod special;

pub use matrix::{quad_form, PdFactors, Spectral, SymMatrix};
pub use quad::{
    integrate_adaptive, integrate_adaptive_log, integrate_scale, log_sum_exp,
    weighted_moments_adaptive, weighted_moments_mapped, QuadratureRule, SupportKind,
    WeightedMoments,
};
pub use special::{bessel_k, ln_bessel_k, log_std_normal_cdf, mills_w, std_normal_cdf, student_t_cdf};
