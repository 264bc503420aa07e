//! Synthetic-data experiments: the two-component bivariate generating
//! models, missing-value injection, clustering and recovery metrics, and
//! replicate sweeps over a scenario grid.

pub mod grid;
pub mod mar;
pub mod metrics;
pub mod truth;

pub use grid::{run_grid, CellResult, ExperimentGrid, MetricsRow};
pub use mar::inject_mar;
pub use metrics::{ab_rmse, ari, BlockMetric, RecoveryMetrics};
pub use truth::{make_truth, Overlap};
