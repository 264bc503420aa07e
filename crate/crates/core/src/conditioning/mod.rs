//! Everything the missing-data mechanism requires: parameter partitioning,
//! the conditional distributions of the missing block, and the
//! expectation-step hat quantities.
//!
//! `estep_row` is pure given an immutable model snapshot; rows may be
//! processed by any number of concurrent workers against shared read-only
//! `PatternContext` caches.

pub mod blocks;
pub mod conditional;
pub mod estep;
pub mod pattern;

pub use blocks::{partition, ParamBlocks};
pub use conditional::{
    conditional_normal, conditional_sn, t_posterior, ConditionalNormal, ConditionalSN,
    PatternContext, TPosterior,
};
pub use estep::{
    estep_row, estep_row_with_contexts, impute_row, posterior_scale_moments, responsibilities,
    EStepEntry, EStepRow, ScaleMomentsCore, ScaleMomentsHat,
};
pub use pattern::{MissingPattern, ObservationSet};
