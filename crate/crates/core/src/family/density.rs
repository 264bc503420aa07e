//! Log densities of the skew-normal, its scale mixtures, and the mixture
//! model itself. Everything is computed in log scale; probabilities are
//! exponentiated only at the last step.

use crate::error::{Error, Result};
use crate::family::{ComponentParams, MixtureModel, ScaleLaw};
use crate::numkit::special::log_phi_raw;
use crate::numkit::{
    integrate_adaptive_log, ln_bessel_k, log_sum_exp, student_t_cdf, SupportKind,
};
use nalgebra::DVector;
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Sufficient statistics of one evaluation point under one (possibly
/// marginal) parameter block: dimension, ln|Sigma|, the Mahalanobis form
/// d = (x-mu)' Sigma^{-1} (x-mu), and the skewing scalar
/// a = lambda' Sigma^{-1/2} (x-mu).
#[derive(Debug, Clone, Copy)]
pub(crate) struct DensityPoint {
    pub dim: usize,
    pub log_det: f64,
    pub maha: f64,
    pub skew: f64,
}

/// Log pdf of the multivariate skew-normal with threshold:
/// -ln Phi(delta0) + ln phi_p(x; mu, Sigma) + ln Phi(lambda0 + a).
pub fn sn_logpdf(x: &DVector<f64>, params: &ComponentParams) -> Result<f64> {
    let p = params.dim();
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            context: "sn_logpdf",
            expected: p,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "sn_logpdf" });
    }
    let centered = x - params.mu();
    let maha = (params.sigma_inv() * &centered).dot(&centered);
    let skew = (params.sigma_inv_sqrt() * &centered).dot(params.lambda());
    let log_norm = -0.5 * (p as f64 * LN_2PI + params.log_det_sigma() + maha);
    Ok(log_norm + log_phi_raw(params.lambda0() + skew) - log_phi_raw(params.delta0()))
}

/// Log pdf of the scale mixture of skew-normal for the given law.
/// The threshold must be zero unless the law is degenerate.
pub fn smsn_logpdf(x: &DVector<f64>, params: &ComponentParams, law: &ScaleLaw) -> Result<f64> {
    if params.lambda0() != 0.0 && !matches!(law, ScaleLaw::Degenerate) {
        return Err(Error::InvalidParameter(
            "nonzero threshold is only supported for the degenerate law".into(),
        ));
    }
    if matches!(law, ScaleLaw::Degenerate) {
        return sn_logpdf(x, params);
    }
    let p = params.dim();
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            context: "smsn_logpdf",
            expected: p,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "smsn_logpdf",
        });
    }
    let centered = x - params.mu();
    let point = DensityPoint {
        dim: p,
        log_det: params.log_det_sigma(),
        maha: (params.sigma_inv() * &centered).dot(&centered),
        skew: (params.sigma_inv_sqrt() * &centered).dot(params.lambda()),
    };
    smsn_logpdf_point(&point, law)
}

/// Family dispatch on the sufficient statistics; shared with the
/// observed-marginal evaluations of the conditioning module.
pub(crate) fn smsn_logpdf_point(point: &DensityPoint, law: &ScaleLaw) -> Result<f64> {
    match *law {
        ScaleLaw::Degenerate => Ok(sn_logpdf_point(point)),
        ScaleLaw::GammaInverse { nu } => skew_t_logpdf_point(point, nu),
        ScaleLaw::BetaInverse { .. } | ScaleLaw::Gamma { .. } => {
            if matches!(law, ScaleLaw::Gamma { .. }) {
                skew_vgamma_logpdf_point(point, law)
            } else {
                smsn_logpdf_by_quadrature(point, law)
            }
        }
    }
}

pub(crate) fn sn_logpdf_point(point: &DensityPoint) -> f64 {
    std::f64::consts::LN_2
        - 0.5 * (point.dim as f64 * LN_2PI + point.log_det + point.maha)
        + log_phi_raw(point.skew)
}

/// Closed form of the skew-t log pdf:
/// ln 2 + ln t_p(x) + ln T_1(sqrt(nu+p) a / sqrt(d+nu); nu+p).
fn skew_t_logpdf_point(point: &DensityPoint, nu: f64) -> Result<f64> {
    let p = point.dim as f64;
    let log_t = ln_gamma((nu + p) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * p * (nu * std::f64::consts::PI).ln()
        - 0.5 * point.log_det
        - 0.5 * (nu + p) * (point.maha / nu).ln_1p();
    let arg = (nu + p).sqrt() * point.skew / (point.maha + nu).sqrt();
    let cdf = student_t_cdf(arg, nu + p)?;
    // the t cdf itself underflows only far beyond any usable argument
    let log_cdf = cdf.max(1e-320).ln();
    Ok(std::f64::consts::LN_2 + log_t + log_cdf)
}

/// Generic one-dimensional quadrature of the scale-mixture integral in log
/// scale; used for the skew-slash density.
fn smsn_logpdf_by_quadrature(point: &DensityPoint, law: &ScaleLaw) -> Result<f64> {
    let kind = law
        .support_kind()
        .expect("non-degenerate law has a support");
    let p = point.dim as f64;
    let base = -0.5 * (p * LN_2PI + point.log_det);
    let (maha, skew) = (point.maha, point.skew);
    let inverse = law.inverse_link();
    let integral = integrate_adaptive_log(
        |u| {
            // kappa = 1/u (inverse links) or u; ln phi_p picks up kappa^{-p/2}
            let kinv = if inverse { u } else { 1.0 / u };
            0.5 * p * kinv.ln() - 0.5 * kinv * maha
                + log_phi_raw(kinv.sqrt() * skew)
                + law.log_density(u)
        },
        kind,
    )?;
    Ok(std::f64::consts::LN_2 + base + integral)
}

/// Skew-variance-gamma log pdf via the Bessel-K closed form times the
/// generalised hyperbolic cdf.
fn skew_vgamma_logpdf_point(point: &DensityPoint, law: &ScaleLaw) -> Result<f64> {
    let eta = match *law {
        ScaleLaw::Gamma { eta } => eta,
        _ => unreachable!(),
    };
    let p = point.dim as f64;
    let gamma = (2.0 * eta).sqrt();
    let nu_star = eta - p / 2.0;
    let d = point.maha.max(0.0);
    let psi = d.sqrt();

    // (sqrt d)^{nu*} K_{nu*}(gamma sqrt d), in logs, with the d -> 0 limit
    let radial = if psi < 1e-90 {
        if nu_star <= 0.0 {
            return Err(Error::Domain {
                context: "skew_vgamma_logpdf",
                message: format!(
                    "density diverges at the location for eta <= p/2 (eta={eta}, p={p})"
                ),
            });
        }
        -std::f64::consts::LN_2 + ln_gamma(nu_star) + nu_star * (2.0 / gamma).ln()
    } else {
        nu_star * psi.ln() + ln_bessel_k(nu_star, gamma * psi)?
    };

    let prefactor = std::f64::consts::LN_2 + 0.5 * p * (gamma.ln() - LN_2PI)
        + eta * gamma.ln()
        - ln_gamma(eta)
        - (eta - 1.0) * std::f64::consts::LN_2
        - 0.5 * point.log_det;

    let log_cdf = ln_gh_cdf(point.skew, nu_star, psi, gamma)?;
    Ok(prefactor + radial + log_cdf)
}

/// ln of the cdf at `a` of the generalised hyperbolic distribution with
/// location 0, scale 1, index nu_star, shift psi, and rate gamma, obtained by
/// normalizing and integrating its density kernel
/// q(s) = (psi^2+s^2)^{(nu*-1/2)/2} K_{nu*-1/2}(gamma sqrt(psi^2+s^2)).
pub(crate) fn ln_gh_cdf(a: f64, nu_star: f64, psi: f64, gamma: f64) -> Result<f64> {
    let order = nu_star - 0.5;
    let psi2 = psi * psi;
    let ln_q = |s: f64| -> f64 {
        let r2 = psi2 + s * s;
        let z = (gamma * r2.sqrt()).max(1e-100);
        0.5 * order * r2.ln().max(-750.0)
            + ln_bessel_k(order, z).unwrap_or(f64::NEG_INFINITY)
    };
    // full mass over (0, inf), with s = z^2 to soften the small-s behaviour
    let ln_half = integrate_adaptive_log(
        |z| ln_q(z * z) + (2.0 * z).ln(),
        SupportKind::PositiveHalfLine,
    )?;
    let ln_den = std::f64::consts::LN_2 + ln_half;
    if a == 0.0 {
        return Ok(-std::f64::consts::LN_2);
    }
    // tail mass over (|a|, inf); the kernel is smooth there
    let c = a.abs();
    let ln_tail = integrate_adaptive_log(|y| ln_q(c + y), SupportKind::PositiveHalfLine)?;
    if a < 0.0 {
        Ok((ln_tail - ln_den).min(0.0))
    } else {
        let ratio = (ln_tail - ln_den).exp().min(1.0 - 1e-16);
        Ok((-ratio).ln_1p())
    }
}

/// Log of the mixture density via log-sum-exp over components.
pub fn mixture_logpdf(x: &DVector<f64>, model: &MixtureModel) -> Result<f64> {
    let mut terms = Vec::with_capacity(model.n_components());
    for (g, (params, law)) in model.components().iter().enumerate() {
        terms.push(model.weights()[g].ln() + smsn_logpdf(x, params, law)?);
    }
    Ok(log_sum_exp(&terms))
}
