//! Component parameters and the mixture model container.

use crate::error::{Error, Result};
use crate::family::ScaleLaw;
use crate::numkit::{PdFactors, SymMatrix};
use nalgebra::{DMatrix, DVector};

/// One mixture component: location mu, positive-definite scale Sigma,
/// skewness lambda, and threshold lambda0 (zero everywhere except the plain
/// skew-normal density).
///
/// Construction precomputes the derived quantities used throughout:
/// delta = lambda / sqrt(1 + lambda'lambda), the scale-coupled skewness
/// Delta = Sigma^{1/2} delta, the residual scale Omega = Sigma - Delta Delta',
/// and the spectral factors of Sigma. Sigma^{1/2} is always the symmetric
/// PSD root.
#[derive(Debug, Clone)]
pub struct ComponentParams {
    mu: DVector<f64>,
    sigma: SymMatrix,
    lambda: DVector<f64>,
    lambda0: f64,
    small_delta: DVector<f64>,
    delta: DVector<f64>,
    omega: DMatrix<f64>,
    factors: PdFactors,
}

impl ComponentParams {
    pub fn new(mu: DVector<f64>, sigma: SymMatrix, lambda: DVector<f64>) -> Result<Self> {
        Self::with_threshold(mu, sigma, lambda, 0.0)
    }

    pub fn with_threshold(
        mu: DVector<f64>,
        sigma: SymMatrix,
        lambda: DVector<f64>,
        lambda0: f64,
    ) -> Result<Self> {
        let p = mu.len();
        if sigma.order() != p {
            return Err(Error::DimensionMismatch {
                context: "ComponentParams scale",
                expected: p,
                got: sigma.order(),
            });
        }
        if lambda.len() != p {
            return Err(Error::DimensionMismatch {
                context: "ComponentParams skewness",
                expected: p,
                got: lambda.len(),
            });
        }
        if mu.iter().chain(lambda.iter()).any(|v| !v.is_finite()) || !lambda0.is_finite() {
            return Err(Error::NonFinite {
                context: "ComponentParams",
            });
        }
        let factors = PdFactors::new(sigma.as_matrix())?;
        let norm = (1.0 + lambda.norm_squared()).sqrt();
        let small_delta = &lambda / norm;
        let delta = &factors.sqrt * &small_delta;
        let omega = sigma.as_matrix() - &delta * delta.transpose();
        Ok(ComponentParams {
            mu,
            sigma,
            lambda,
            lambda0,
            small_delta,
            delta,
            omega,
            factors,
        })
    }

    /// Rebuilds a component from the moment-side parameterization
    /// (mu, Omega, Delta): Sigma = Omega + Delta Delta' and
    /// lambda = Sigma^{-1/2} Delta / sqrt(1 - Delta' Sigma^{-1} Delta).
    pub fn from_moment_form(
        mu: DVector<f64>,
        omega: &DMatrix<f64>,
        delta: &DVector<f64>,
    ) -> Result<Self> {
        let sigma_m = omega + delta * delta.transpose();
        let sigma = SymMatrix::new(sigma_m)?;
        let factors = PdFactors::new(sigma.as_matrix())?;
        let q = (&factors.inv * delta).dot(delta);
        // q = Delta' Sigma^{-1} Delta < 1 holds whenever Omega is PD
        let q = q.clamp(0.0, 1.0 - 1e-12);
        let lambda = (&factors.inv_sqrt * delta) / (1.0 - q).sqrt();
        Self::new(mu, sigma, lambda)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// delta = lambda / sqrt(1 + lambda'lambda); norm strictly below 1.
    pub fn small_delta(&self) -> &DVector<f64> {
        &self.small_delta
    }

    /// Delta = Sigma^{1/2} delta.
    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    /// Omega = Sigma - Delta Delta'.
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.factors.inv
    }

    pub fn sigma_sqrt(&self) -> &DMatrix<f64> {
        &self.factors.sqrt
    }

    pub fn sigma_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.factors.inv_sqrt
    }

    pub fn log_det_sigma(&self) -> f64 {
        self.factors.log_det
    }

    /// delta0 = lambda0 / sqrt(1 + lambda'lambda).
    pub fn delta0(&self) -> f64 {
        self.lambda0 / (1.0 + self.lambda.norm_squared()).sqrt()
    }

    /// Delta' Sigma^{-1} Delta = lambda'lambda / (1 + lambda'lambda).
    pub fn delta_quad(&self) -> f64 {
        let n2 = self.lambda.norm_squared();
        n2 / (1.0 + n2)
    }
}

/// A finite mixture: strictly positive weights summing to one, and per
/// component a parameter set plus its scaling law. All components share the
/// dimension and the law kind; hyperparameters may differ per component.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Vec<(ComponentParams, ScaleLaw)>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<(ComponentParams, ScaleLaw)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "a mixture needs at least one component".into(),
            ));
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch {
                context: "MixtureModel weights",
                expected: components.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "mixing weights must be strictly positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixing weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        let p = components[0].0.dim();
        let kind = components[0].1.kind();
        for (c, law) in &components {
            if c.dim() != p {
                return Err(Error::DimensionMismatch {
                    context: "MixtureModel component dimension",
                    expected: p,
                    got: c.dim(),
                });
            }
            if law.kind() != kind {
                return Err(Error::InvalidParameter(format!(
                    "all components must share the scaling-law kind; found {} and {}",
                    kind.name(),
                    law.kind().name()
                )));
            }
            law.validate(p)?;
        }
        Ok(MixtureModel {
            weights,
            components,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].0.dim()
    }

    pub fn kind(&self) -> crate::family::FamilyKind {
        self.components[0].1.kind()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn component(&self, g: usize) -> &ComponentParams {
        &self.components[g].0
    }

    pub fn law(&self, g: usize) -> &ScaleLaw {
        &self.components[g].1
    }

    pub fn components(&self) -> &[(ComponentParams, ScaleLaw)] {
        &self.components
    }

    /// Free-parameter count: (G-1) weights plus per component p location,
    /// p skewness, p(p+1)/2 scale entries, and the law hyperparameter.
    pub fn free_parameters(&self) -> usize {
        let g = self.n_components();
        let p = self.dim();
        let per = 2 * p + p * (p + 1) / 2 + self.kind().theta_dim();
        (g - 1) + g * per
    }
}
