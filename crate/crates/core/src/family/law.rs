//! The scaling variable: its distribution family, link, density, moments of
//! the link K(U), and sampling.

use crate::error::{Error, Result};
use crate::numkit::SupportKind;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// The four mixture families, named by their fitted distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    SkewNormal,
    SkewT,
    SkewSlash,
    SkewVGamma,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::SkewNormal,
        FamilyKind::SkewT,
        FamilyKind::SkewSlash,
        FamilyKind::SkewVGamma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::SkewNormal => "skew-normal",
            FamilyKind::SkewT => "skew-t",
            FamilyKind::SkewSlash => "skew-slash",
            FamilyKind::SkewVGamma => "skew-vgamma",
        }
    }

    /// Number of free hyperparameters carried by the scaling law.
    pub fn theta_dim(&self) -> usize {
        match self {
            FamilyKind::SkewNormal => 0,
            _ => 1,
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skew-normal" => Ok(FamilyKind::SkewNormal),
            "skew-t" => Ok(FamilyKind::SkewT),
            "skew-slash" => Ok(FamilyKind::SkewSlash),
            "skew-vgamma" => Ok(FamilyKind::SkewVGamma),
            other => Err(Error::InvalidParameter(format!(
                "unknown family '{other}' (expected skew-normal|skew-t|skew-slash|skew-vgamma)"
            ))),
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Distribution of the scaling variable U together with the link K(U).
///
/// The link is kappa = u for `Degenerate` and `Gamma`, and kappa = 1/u for
/// `GammaInverse` and `BetaInverse`. The `Gamma` law ties its rate to the
/// shape (rate = eta, i.e. gamma^2 = 2 eta) so E[U] = 1; this removes the
/// scale non-identifiability of the variance-gamma family, and makes eta the
/// single free hyperparameter. eta = 1 is the Laplace-tailed special case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleLaw {
    /// U == 1: plain skew-normal.
    Degenerate,
    /// U ~ Gam(nu/2, nu/2), kappa = 1/u: skew-t with nu degrees of freedom.
    GammaInverse { nu: f64 },
    /// U ~ Beta(alpha, 1), kappa = 1/u: skew-slash.
    BetaInverse { alpha: f64 },
    /// U ~ Gam(eta, eta), kappa = u: skew-variance-gamma with gamma^2 = 2 eta.
    Gamma { eta: f64 },
}

impl ScaleLaw {
    pub fn kind(&self) -> FamilyKind {
        match self {
            ScaleLaw::Degenerate => FamilyKind::SkewNormal,
            ScaleLaw::GammaInverse { .. } => FamilyKind::SkewT,
            ScaleLaw::BetaInverse { .. } => FamilyKind::SkewSlash,
            ScaleLaw::Gamma { .. } => FamilyKind::SkewVGamma,
        }
    }

    pub fn default_for(kind: FamilyKind, p: usize) -> ScaleLaw {
        match kind {
            FamilyKind::SkewNormal => ScaleLaw::Degenerate,
            FamilyKind::SkewT => ScaleLaw::GammaInverse { nu: 10.0 },
            FamilyKind::SkewSlash => ScaleLaw::BetaInverse { alpha: 5.0 },
            FamilyKind::SkewVGamma => ScaleLaw::Gamma {
                eta: p as f64 / 2.0 + 1.0,
            },
        }
    }

    /// Search bracket for the hyperparameter update, dimension-aware for the
    /// variance-gamma lower bound eta > p/2.
    pub fn bracket(kind: FamilyKind, p: usize) -> Option<(f64, f64)> {
        match kind {
            FamilyKind::SkewNormal => None,
            FamilyKind::SkewT => Some((2.1, 200.0)),
            FamilyKind::SkewSlash => Some((1.0 + 1e-4, 100.0)),
            FamilyKind::SkewVGamma => Some((p as f64 / 2.0 + 0.01, 100.0)),
        }
    }

    pub fn hyper(&self) -> Option<f64> {
        match *self {
            ScaleLaw::Degenerate => None,
            ScaleLaw::GammaInverse { nu } => Some(nu),
            ScaleLaw::BetaInverse { alpha } => Some(alpha),
            ScaleLaw::Gamma { eta } => Some(eta),
        }
    }

    pub fn with_hyper(&self, theta: f64) -> ScaleLaw {
        match self {
            ScaleLaw::Degenerate => ScaleLaw::Degenerate,
            ScaleLaw::GammaInverse { .. } => ScaleLaw::GammaInverse { nu: theta },
            ScaleLaw::BetaInverse { .. } => ScaleLaw::BetaInverse { alpha: theta },
            ScaleLaw::Gamma { .. } => ScaleLaw::Gamma { eta: theta },
        }
    }

    /// gamma^2 of the variance-gamma law, tied at 2 eta.
    pub fn gamma_sq(&self) -> Option<f64> {
        match *self {
            ScaleLaw::Gamma { eta } => Some(2.0 * eta),
            _ => None,
        }
    }

    /// Checks the hyperparameter against its admissible range for dimension p.
    pub fn validate(&self, p: usize) -> Result<()> {
        match *self {
            ScaleLaw::Degenerate => Ok(()),
            ScaleLaw::GammaInverse { nu } => {
                if !(nu.is_finite() && nu >= 2.1 && nu <= 200.0) {
                    return Err(Error::InvalidParameter(format!(
                        "skew-t degrees of freedom must lie in [2.1, 200], got {nu}"
                    )));
                }
                Ok(())
            }
            ScaleLaw::BetaInverse { alpha } => {
                if !(alpha.is_finite() && alpha > 1.0 && alpha <= 100.0) {
                    return Err(Error::InvalidParameter(format!(
                        "skew-slash tail parameter must lie in (1, 100], got {alpha}"
                    )));
                }
                Ok(())
            }
            ScaleLaw::Gamma { eta } => {
                let lo = p as f64 / 2.0 + 0.01;
                if !(eta.is_finite() && eta >= lo && eta <= 100.0) {
                    return Err(Error::InvalidParameter(format!(
                        "skew-vgamma shape must lie in [{lo}, 100] for dimension {p}, got {eta}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// kappa = K(u).
    pub fn kappa(&self, u: f64) -> f64 {
        match self {
            ScaleLaw::Degenerate | ScaleLaw::Gamma { .. } => u,
            ScaleLaw::GammaInverse { .. } | ScaleLaw::BetaInverse { .. } => 1.0 / u,
        }
    }

    /// Whether ln(kappa^{-1}) = ln u (inverse links) or -ln u (direct links).
    pub fn inverse_link(&self) -> bool {
        matches!(
            self,
            ScaleLaw::GammaInverse { .. } | ScaleLaw::BetaInverse { .. }
        )
    }

    pub fn support_kind(&self) -> Option<SupportKind> {
        match self {
            ScaleLaw::Degenerate => None,
            ScaleLaw::BetaInverse { .. } => Some(SupportKind::UnitInterval),
            ScaleLaw::GammaInverse { .. } | ScaleLaw::Gamma { .. } => {
                Some(SupportKind::PositiveHalfLine)
            }
        }
    }

    /// ln h(u; theta) of the mixing density.
    pub fn log_density(&self, u: f64) -> f64 {
        match *self {
            ScaleLaw::Degenerate => {
                if u == 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            ScaleLaw::GammaInverse { nu } => {
                let a = nu / 2.0;
                a * a.ln() - ln_gamma(a) + (a - 1.0) * u.ln() - a * u
            }
            ScaleLaw::BetaInverse { alpha } => {
                if u <= 0.0 || u >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    alpha.ln() + (alpha - 1.0) * u.ln()
                }
            }
            ScaleLaw::Gamma { eta } => eta * eta.ln() - ln_gamma(eta) + (eta - 1.0) * u.ln() - eta * u,
        }
    }

    /// E_q[ln h(U; theta)] given the posterior sufficient statistics
    /// E_q[ln U] and E_q[U]; this is the per-row hyperparameter objective.
    pub fn expected_log_density(kind: FamilyKind, theta: f64, e_ln_u: f64, e_u: f64) -> f64 {
        match kind {
            FamilyKind::SkewNormal => 0.0,
            FamilyKind::SkewT => {
                let a = theta / 2.0;
                a * a.ln() - ln_gamma(a) + (a - 1.0) * e_ln_u - a * e_u
            }
            FamilyKind::SkewSlash => theta.ln() + (theta - 1.0) * e_ln_u,
            FamilyKind::SkewVGamma => {
                theta * theta.ln() - ln_gamma(theta) + (theta - 1.0) * e_ln_u - theta * e_u
            }
        }
    }

    /// omega_1 = E[K^{1/2}].
    pub fn omega1(&self) -> Result<f64> {
        match *self {
            ScaleLaw::Degenerate => Ok(1.0),
            ScaleLaw::GammaInverse { nu } => {
                if nu <= 1.0 {
                    return Err(Error::MomentUndefined {
                        family: "skew-t",
                        which: "mean",
                        condition: "nu > 1".into(),
                    });
                }
                Ok((nu / 2.0).sqrt() * (ln_gamma((nu - 1.0) / 2.0) - ln_gamma(nu / 2.0)).exp())
            }
            ScaleLaw::BetaInverse { alpha } => {
                if alpha <= 0.5 {
                    return Err(Error::MomentUndefined {
                        family: "skew-slash",
                        which: "mean",
                        condition: "alpha > 1/2".into(),
                    });
                }
                Ok(2.0 * alpha / (2.0 * alpha - 1.0))
            }
            ScaleLaw::Gamma { eta } => {
                Ok((ln_gamma(eta + 0.5) - ln_gamma(eta)).exp() / eta.sqrt())
            }
        }
    }

    /// omega_2 = E[K].
    pub fn omega2(&self) -> Result<f64> {
        match *self {
            ScaleLaw::Degenerate => Ok(1.0),
            ScaleLaw::GammaInverse { nu } => {
                if nu <= 2.0 {
                    return Err(Error::MomentUndefined {
                        family: "skew-t",
                        which: "covariance",
                        condition: "nu > 2".into(),
                    });
                }
                Ok(nu / (nu - 2.0))
            }
            ScaleLaw::BetaInverse { alpha } => {
                if alpha <= 1.0 {
                    return Err(Error::MomentUndefined {
                        family: "skew-slash",
                        which: "covariance",
                        condition: "alpha > 1".into(),
                    });
                }
                Ok(alpha / (alpha - 1.0))
            }
            ScaleLaw::Gamma { .. } => Ok(1.0),
        }
    }

    /// Draws one realization of U.
    pub fn sample_u<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use rand_distr::Distribution;
        match *self {
            ScaleLaw::Degenerate => 1.0,
            ScaleLaw::GammaInverse { nu } => {
                let d = rand_distr::Gamma::new(nu / 2.0, 2.0 / nu).expect("valid gamma");
                d.sample(rng)
            }
            ScaleLaw::BetaInverse { alpha } => {
                let d = rand_distr::Beta::new(alpha, 1.0).expect("valid beta");
                d.sample(rng)
            }
            ScaleLaw::Gamma { eta } => {
                let d = rand_distr::Gamma::new(eta, 1.0 / eta).expect("valid gamma");
                d.sample(rng)
            }
        }
    }
}
