//! Observed/missing partitioning of component parameters.

use crate::conditioning::MissingPattern;
use crate::error::{Error, Result};
use crate::family::ComponentParams;
use nalgebra::{DMatrix, DVector};

/// The m/o sub-vectors and block sub-matrices of one component's parameters
/// under one missingness pattern.
#[derive(Debug, Clone)]
pub struct ParamBlocks {
    pub mu_o: DVector<f64>,
    pub mu_m: DVector<f64>,
    pub lambda_o: DVector<f64>,
    pub lambda_m: DVector<f64>,
    pub delta_o: DVector<f64>,
    pub delta_m: DVector<f64>,
    pub sigma_oo: DMatrix<f64>,
    pub sigma_mm: DMatrix<f64>,
    pub sigma_mo: DMatrix<f64>,
    pub omega_oo: DMatrix<f64>,
    pub omega_mm: DMatrix<f64>,
    pub omega_mo: DMatrix<f64>,
}

fn gather_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&j| v[j]))
}

fn gather_mat(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Splits mu, Sigma, Omega, Delta, and lambda into observed/missing blocks.
pub fn partition(params: &ComponentParams, pattern: &MissingPattern) -> Result<ParamBlocks> {
    if pattern.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            context: "partition",
            expected: params.dim(),
            got: pattern.dim(),
        });
    }
    let o = pattern.observed();
    let m = pattern.missing();
    if o.is_empty() {
        return Err(Error::EmptyObservedSet);
    }
    let sigma = params.sigma().as_matrix();
    let omega = params.omega();
    Ok(ParamBlocks {
        mu_o: gather_vec(params.mu(), o),
        mu_m: gather_vec(params.mu(), m),
        lambda_o: gather_vec(params.lambda(), o),
        lambda_m: gather_vec(params.lambda(), m),
        delta_o: gather_vec(params.delta(), o),
        delta_m: gather_vec(params.delta(), m),
        sigma_oo: gather_mat(sigma, o, o),
        sigma_mm: gather_mat(sigma, m, m),
        sigma_mo: gather_mat(sigma, m, o),
        omega_oo: gather_mat(omega, o, o),
        omega_mm: gather_mat(omega, m, m),
        omega_mo: gather_mat(omega, m, o),
    })
}
