//! The fitting engine: initialization, expectation/conditional-maximization
//! iteration, Aitken convergence, and BIC model selection.

pub mod config;
pub mod fit;
pub mod init;
pub mod kmeans;
pub mod mstep;

pub use config::{FitConfig, FitReport, InitStrategy, OmegaUpdate};
pub use fit::{aitken_check, bic, estep_dataset, fit, observed_loglik, row_logliks};
pub use init::initialize;
pub use mstep::{accumulate, cm_step, q_value, ComponentSums};
