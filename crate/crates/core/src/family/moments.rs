//! First and second moments of the scale-mixture family and of the
//! lower-truncated normal distribution.

use crate::error::{Error, Result};
use crate::family::{ComponentParams, ScaleLaw};
use crate::numkit::special::mills_raw;
use crate::numkit::SymMatrix;
use nalgebra::DVector;

/// mean = mu + sqrt(2/pi) omega_1 Delta and
/// cov = omega_2 Sigma - (2/pi) omega_1^2 Delta Delta',
/// with omega_r = E[K^{r/2}] of the scaling link.
pub fn smsn_moments(params: &ComponentParams, law: &ScaleLaw) -> Result<(DVector<f64>, SymMatrix)> {
    let w1 = law.omega1()?;
    let w2 = law.omega2()?;
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let mean = params.mu() + params.delta() * (c * w1);
    let cov = params.sigma().as_matrix() * w2
        - params.delta() * params.delta().transpose() * (c * c * w1 * w1);
    let cov = SymMatrix::new(cov)?;
    if cov.as_matrix().clone().cholesky().is_none() {
        return Err(Error::NotPd { min_eig: f64::NAN });
    }
    Ok((mean, cov))
}

/// Variance convention for the lower-truncated normal on (0, inf).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncNormVariance {
    /// sigma^2 (1 - W^2(mu/sigma)): the convention this crate's fitting
    /// derivations are written against. It drops the (mu/sigma) W(mu/sigma)
    /// cross term and therefore overstates the variance away from mu = 0.
    Simplified,
    /// sigma^2 (1 - (mu/sigma) W(mu/sigma) - W^2(mu/sigma)): the exact
    /// variance of the truncated distribution.
    Exact,
}

/// Mean and variance of T ~ N(mu, sigma^2) truncated to (0, inf).
/// The mean is mu + sigma W(mu/sigma) under either convention.
pub fn truncnorm_moments(mu: f64, sigma2: f64, variance: TruncNormVariance) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0) || !mu.is_finite() || !sigma2.is_finite() {
        return Err(Error::Domain {
            context: "truncnorm_moments",
            message: format!("need finite mu and sigma2 > 0, got mu={mu}, sigma2={sigma2}"),
        });
    }
    let sigma = sigma2.sqrt();
    let beta = mu / sigma;
    let w = mills_raw(beta);
    let mean = mu + sigma * w;
    let var = match variance {
        TruncNormVariance::Simplified => sigma2 * (1.0 - w * w),
        TruncNormVariance::Exact => sigma2 * (1.0 - beta * w - w * w),
    };
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SymMatrix;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn degenerate_zero_skew_is_exact() {
        let c = ComponentParams::new(
            DVector::from_row_slice(&[1.0, -2.0]),
            SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap(),
            DVector::zeros(2),
        )
        .unwrap();
        let (mean, cov) = smsn_moments(&c, &ScaleLaw::Degenerate).unwrap();
        assert_relative_eq!(&mean, c.mu(), epsilon = 1e-14);
        assert_relative_eq!(cov.as_matrix(), c.sigma().as_matrix(), epsilon = 1e-14);
    }

    #[test]
    fn skew_t_nu4_mean_offset_equals_delta() {
        let c = ComponentParams::new(
            DVector::from_row_slice(&[0.0]),
            SymMatrix::identity(1),
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap();
        let (mean, _) = smsn_moments(&c, &ScaleLaw::GammaInverse { nu: 4.0 }).unwrap();
        assert_relative_eq!(mean[0], 1.0 / 2.0f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(mean[0], c.delta()[0], epsilon = 1e-12);
    }

    #[test]
    fn moment_existence_propagates() {
        let c = ComponentParams::new(
            DVector::from_row_slice(&[0.0]),
            SymMatrix::identity(1),
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap();
        assert!(smsn_moments(&c, &ScaleLaw::GammaInverse { nu: 1.8 }).is_err());
        assert!(smsn_moments(&c, &ScaleLaw::BetaInverse { alpha: 0.9 }).is_err());
    }

    #[test]
    fn truncnorm_standard_case() {
        let (mean, var) = truncnorm_moments(0.0, 1.0, TruncNormVariance::Simplified).unwrap();
        assert_relative_eq!(mean, 0.797_884_560_802_865_4, epsilon = 1e-12);
        assert_relative_eq!(var, 0.363_380_227_632_418_66, epsilon = 1e-12);
        // at mu = 0 the conventions coincide
        let (_, var_exact) = truncnorm_moments(0.0, 1.0, TruncNormVariance::Exact).unwrap();
        assert_relative_eq!(var, var_exact, epsilon = 1e-14);
    }

    #[test]
    fn truncnorm_far_from_boundary() {
        let (mean, _) = truncnorm_moments(10.0, 1.0, TruncNormVariance::Exact).unwrap();
        assert_relative_eq!(mean, 10.0, epsilon = 1e-6);
    }
}
