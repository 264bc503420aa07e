//! Fit configuration and the fit report.

use crate::error::{Error, Result};
use crate::family::{FamilyKind, MixtureModel};
use nalgebra::DMatrix;

/// Initialization strategy for the fitting engine.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// k-means on a column-mean-imputed working copy (10 seeded restarts).
    KMeans,
    /// Uniform random partition of the rows.
    RandomPartition,
    /// Caller-supplied starting model.
    Given(MixtureModel),
}

/// Which mean iterate enters the residual-scale update's cross term.
///
/// `Printed` uses the fresh mean inside the t-cross term and the previous
/// mean elsewhere, matching the update equations as published. `Lagged` uses
/// the previous mean everywhere, which makes the step an exact conditional
/// maximization and is therefore the default: the mixed form can (and in
/// testing does) produce small log-likelihood decreases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaUpdate {
    Printed,
    Lagged,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub n_components: usize,
    pub family: FamilyKind,
    /// Aitken convergence tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitStrategy,
    pub seed: u64,
    /// Relative ridge added to near-singular scale matrices.
    pub ridge: f64,
    /// Freeze the skewness at zero (symmetric fits).
    pub fix_lambda_zero: bool,
    pub omega_update: OmegaUpdate,
    /// Record the model after initialization and after every CM pass.
    pub record_trace: bool,
}

impl FitConfig {
    pub fn new(n_components: usize, family: FamilyKind) -> Self {
        FitConfig {
            n_components,
            family,
            tol: 1e-5,
            max_iter: 500,
            init: InitStrategy::KMeans,
            seed: 0,
            ridge: 1e-8,
            fix_lambda_zero: false,
            omega_update: OmegaUpdate::Lagged,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(Error::InvalidParameter(
                "need at least one component".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(
                "convergence tolerance must be positive".into(),
            ));
        }
        if self.max_iter < 3 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 3 (the convergence check needs three consecutive values)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Everything a finished fit reports.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: MixtureModel,
    /// n x G responsibilities under the final model.
    pub responsibilities: DMatrix<f64>,
    /// argmax responsibilities, ties broken by lowest component index.
    pub labels: Vec<usize>,
    /// The dataset with missing cells replaced by conditional means.
    pub imputed: DMatrix<f64>,
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    /// Number of CM passes performed.
    pub n_iter: usize,
    /// 2 ln L - P ln n, maximized for model selection.
    pub bic: f64,
    pub free_parameters: usize,
    pub warnings: Vec<String>,
    /// Model snapshots (initial, then one per CM pass) when requested.
    pub model_trace: Option<Vec<MixtureModel>>,
}

impl FitReport {
    /// Hard labels from a responsibilities matrix.
    pub fn hard_labels(resp: &DMatrix<f64>) -> Vec<usize> {
        (0..resp.nrows())
            .map(|i| {
                let mut best = 0;
                for g in 1..resp.ncols() {
                    if resp[(i, g)] > resp[(i, best)] {
                        best = g;
                    }
                }
                best
            })
            .collect()
    }
}
