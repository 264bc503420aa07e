//! Conditional distributions of the missing block given the observed one:
//! the skew-normal conditional (with threshold), the normal conditional given
//! the latent truncated variable, and the posterior of that variable.
//!
//! All observed-block factorizations live in `PatternContext`, built once per
//! (component, missingness pattern) and shared read-only across rows.

use crate::conditioning::{partition, MissingPattern};
use crate::error::{Error, Result};
use crate::family::ComponentParams;
use crate::numkit::{PdFactors, SymMatrix};
use nalgebra::{DMatrix, DVector};

/// Cached per-(component, pattern) quantities. Everything that does not
/// depend on the row's observed values is precomputed here.
#[derive(Debug, Clone)]
pub struct PatternContext {
    pub n_obs: usize,
    pub n_mis: usize,
    pub mu_o: DVector<f64>,
    pub mu_m: DVector<f64>,
    pub delta_o: DVector<f64>,
    pub delta_m: DVector<f64>,
    /// Sigma_oo^{-1}
    pub sigma_oo_inv: DMatrix<f64>,
    /// Sigma_oo^{-1/2} (symmetric root)
    pub sigma_oo_inv_sqrt: DMatrix<f64>,
    pub log_det_sigma_oo: f64,
    /// Sigma_mo Sigma_oo^{-1}
    pub b_sigma: DMatrix<f64>,
    /// Sigma_mm - Sigma_mo Sigma_oo^{-1} Sigma_om
    pub sigma_c: DMatrix<f64>,
    /// 1 - Delta_o' Sigma_oo^{-1} Delta_o
    pub s_obs: f64,
    /// 1 - Delta' Sigma^{-1} Delta (full-parameter quantity)
    pub s_full: f64,
    /// lambda-dot of the observed marginal
    pub lambda_dot_o: DVector<f64>,
    /// Delta_c = (Delta_m - B_sigma Delta_o) / sqrt(s_obs)
    pub delta_c: DVector<f64>,
    /// Omega_mo Omega_oo^{-1}
    pub b_omega: DMatrix<f64>,
    /// Omega_mm - Omega_mo Omega_oo^{-1} Omega_om
    pub omega_c: DMatrix<f64>,
    /// psi_c = Delta_m - B_omega Delta_o
    pub psi_c: DVector<f64>,
    /// sigma_T^2 = (1 + Delta_o' Omega_oo^{-1} Delta_o)^{-1}
    pub sigma2_t: f64,
    /// sigma_T^2 Omega_oo^{-1} Delta_o; mu_T = t_coeff . (x_o - mu_o)
    pub t_coeff: DVector<f64>,
}

impl PatternContext {
    pub fn new(params: &ComponentParams, pattern: &MissingPattern) -> Result<Self> {
        let blocks = partition(params, pattern)?;
        let oo = PdFactors::new(&blocks.sigma_oo)?;
        let omega_oo_inv = PdFactors::new(&blocks.omega_oo)?.inv;

        let b_sigma = &blocks.sigma_mo * &oo.inv;
        let sigma_c = &blocks.sigma_mm - &b_sigma * blocks.sigma_mo.transpose();
        let b_omega = &blocks.omega_mo * &omega_oo_inv;
        let omega_c = &blocks.omega_mm - &b_omega * blocks.omega_mo.transpose();
        let psi_c = &blocks.delta_m - &b_omega * &blocks.delta_o;

        let q_obs = (&oo.inv * &blocks.delta_o).dot(&blocks.delta_o);
        let s_obs = (1.0 - q_obs).max(1e-14);
        let s_full = (1.0 - params.delta_quad()).max(1e-14);
        let lambda_dot_o = (&oo.inv_sqrt * &blocks.delta_o) / s_obs.sqrt();
        let delta_c = (&blocks.delta_m - &b_sigma * &blocks.delta_o) / s_obs.sqrt();

        let q_omega = (&omega_oo_inv * &blocks.delta_o).dot(&blocks.delta_o);
        let sigma2_t = 1.0 / (1.0 + q_omega);
        let t_coeff = (&omega_oo_inv * &blocks.delta_o) * sigma2_t;

        Ok(PatternContext {
            n_obs: pattern.n_observed(),
            n_mis: pattern.n_missing(),
            mu_o: blocks.mu_o,
            mu_m: blocks.mu_m,
            delta_o: blocks.delta_o,
            delta_m: blocks.delta_m,
            sigma_oo_inv: oo.inv,
            sigma_oo_inv_sqrt: oo.inv_sqrt,
            log_det_sigma_oo: oo.log_det,
            b_sigma,
            sigma_c,
            s_obs,
            s_full,
            lambda_dot_o,
            delta_c,
            b_omega,
            omega_c,
            psi_c,
            sigma2_t,
            t_coeff,
        })
    }

    /// x_o - mu_o for a full-length row (gathers observed coordinates).
    pub fn centered_observed(&self, x: &DVector<f64>, pattern: &MissingPattern) -> DVector<f64> {
        let mut v = DVector::zeros(self.n_obs);
        for (k, &j) in pattern.observed().iter().enumerate() {
            v[k] = x[j] - self.mu_o[k];
        }
        v
    }

    /// Mahalanobis form of the observed block.
    pub fn maha_observed(&self, centered: &DVector<f64>) -> f64 {
        (&self.sigma_oo_inv * centered).dot(centered)
    }

    /// A_o = lambda-dot' Sigma_oo^{-1/2} (x_o - mu_o).
    pub fn skew_scalar(&self, centered: &DVector<f64>) -> f64 {
        (&self.sigma_oo_inv_sqrt * centered).dot(&self.lambda_dot_o)
    }

    /// mu_c = mu_m + Sigma_mo Sigma_oo^{-1} (x_o - mu_o).
    pub fn mu_c(&self, centered: &DVector<f64>) -> DVector<f64> {
        &self.mu_m + &self.b_sigma * centered
    }

    /// m_c = mu_m + Omega_mo Omega_oo^{-1} (x_o - mu_o).
    pub fn m_c(&self, centered: &DVector<f64>) -> DVector<f64> {
        &self.mu_m + &self.b_omega * centered
    }

    pub fn mu_t(&self, centered: &DVector<f64>) -> f64 {
        self.t_coeff.dot(centered)
    }
}

/// The skew-normal conditional of the missing block given x_o and the
/// scaling value kappa: SN(mu_c, kappa Sigma_c, lambda_c, kappa^{-1/2} lambda0_c).
/// Fields hold the unscaled quantities plus kappa.
#[derive(Debug, Clone)]
pub struct ConditionalSN {
    pub kappa: f64,
    pub mu_c: DVector<f64>,
    pub sigma_c: SymMatrix,
    pub lambda_c: DVector<f64>,
    pub lambda0_c: f64,
    /// delta0 of the conditional; equals `a_o` (tested identity).
    pub delta0_c: f64,
    pub lambda_dot_o: DVector<f64>,
    pub a_o: f64,
    pub delta_c: DVector<f64>,
}

impl ConditionalSN {
    /// Materializes the kappa-scaled conditional as component parameters,
    /// for density evaluation.
    pub fn to_component(&self) -> Result<ComponentParams> {
        let scaled = SymMatrix::new(self.sigma_c.as_matrix() * self.kappa)?;
        ComponentParams::with_threshold(
            self.mu_c.clone(),
            scaled,
            self.lambda_c.clone(),
            self.lambda0_c / self.kappa.sqrt(),
        )
    }
}

/// Conditional distribution of the missing block given x_o, the latent
/// truncated-normal draw, and kappa (Theorem-style normal conditional):
/// N(m_c + t psi_c, kappa Omega_c).
#[derive(Debug, Clone)]
pub struct ConditionalNormal {
    pub m_c: DVector<f64>,
    pub psi_c: DVector<f64>,
    pub omega_c: SymMatrix,
}

/// Posterior of the latent truncated-normal variable given the observed
/// block: TN(mu_t, kappa sigma2_t).
#[derive(Debug, Clone, Copy)]
pub struct TPosterior {
    pub mu_t: f64,
    pub sigma2_t: f64,
}

fn check_xo(pattern: &MissingPattern, x_o: &DVector<f64>) -> Result<()> {
    if x_o.len() != pattern.n_observed() {
        return Err(Error::DimensionMismatch {
            context: "observed vector",
            expected: pattern.n_observed(),
            got: x_o.len(),
        });
    }
    if x_o.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "observed vector",
        });
    }
    Ok(())
}

/// Skew-normal conditional of the missing block (requires at least one
/// missing and one observed coordinate).
pub fn conditional_sn(
    params: &ComponentParams,
    kappa: f64,
    pattern: &MissingPattern,
    x_o: &DVector<f64>,
) -> Result<ConditionalSN> {
    if pattern.n_missing() == 0 {
        return Err(Error::InvalidParameter(
            "conditional_sn needs at least one missing coordinate".into(),
        ));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain {
            context: "conditional_sn",
            message: format!("kappa must be positive, got {kappa}"),
        });
    }
    check_xo(pattern, x_o)?;
    let ctx = PatternContext::new(params, pattern)?;
    let centered = x_o - &ctx.mu_o;

    let mu_c = ctx.mu_c(&centered);
    let sigma_c = SymMatrix::new(ctx.sigma_c.clone())?;
    let sigma_c_factors = PdFactors::new(sigma_c.as_matrix())?;
    let lambda0_c = (&ctx.sigma_oo_inv * &centered).dot(&ctx.delta_o) / ctx.s_full.sqrt();
    let lambda_c = (&sigma_c_factors.inv_sqrt
        * (&ctx.delta_m - &ctx.b_sigma * &ctx.delta_o))
        / ctx.s_full.sqrt();

    // delta0 two ways: the definition and the block identity via lambda-dot
    let delta0_def = lambda0_c / (1.0 + lambda_c.norm_squared()).sqrt();
    let a_o = ctx.skew_scalar(&centered);
    debug_assert!(
        (delta0_def - a_o).abs() <= 1e-10 * (1.0 + a_o.abs()),
        "conditional threshold identity violated: {delta0_def} vs {a_o}"
    );

    Ok(ConditionalSN {
        kappa,
        mu_c,
        sigma_c,
        lambda_c,
        lambda0_c,
        delta0_c: delta0_def,
        lambda_dot_o: ctx.lambda_dot_o.clone(),
        a_o,
        delta_c: ctx.delta_c.clone(),
    })
}

/// Normal conditional of the missing block given the latent draw.
pub fn conditional_normal(
    params: &ComponentParams,
    pattern: &MissingPattern,
    x_o: &DVector<f64>,
) -> Result<ConditionalNormal> {
    if pattern.n_missing() == 0 {
        return Err(Error::InvalidParameter(
            "conditional_normal needs at least one missing coordinate".into(),
        ));
    }
    check_xo(pattern, x_o)?;
    let ctx = PatternContext::new(params, pattern)?;
    let centered = x_o - &ctx.mu_o;
    Ok(ConditionalNormal {
        m_c: ctx.m_c(&centered),
        psi_c: ctx.psi_c.clone(),
        omega_c: SymMatrix::new(ctx.omega_c.clone())?,
    })
}

/// Posterior of the latent truncated-normal variable. The pattern may be
/// complete, in which case the observed blocks are the full parameters.
pub fn t_posterior(
    params: &ComponentParams,
    pattern: &MissingPattern,
    x_o: &DVector<f64>,
) -> Result<TPosterior> {
    check_xo(pattern, x_o)?;
    let ctx = PatternContext::new(params, pattern)?;
    let centered = x_o - &ctx.mu_o;
    let mu_t = ctx.mu_t(&centered);
    let sigma2_t = ctx.sigma2_t;
    debug_assert!({
        let a_o = ctx.skew_scalar(&centered);
        (mu_t / sigma2_t.sqrt() - a_o).abs() <= 1e-10 * (1.0 + a_o.abs())
    });
    Ok(TPosterior { mu_t, sigma2_t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SymMatrix;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_params(rng: &mut StdRng, p: usize) -> ComponentParams {
        let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
        let sigma = &a * a.transpose() + DMatrix::identity(p, p) * (0.4 + rng.gen_range(0.0..0.5));
        ComponentParams::new(
            DVector::from_fn(p, |_, _| rng.gen_range(-3.0..3.0)),
            SymMatrix::new(sigma).unwrap(),
            DVector::from_fn(p, |_, _| rng.gen_range(-2.5..2.5)),
        )
        .unwrap()
    }

    fn random_pattern(rng: &mut StdRng, p: usize, allow_complete: bool) -> MissingPattern {
        loop {
            let mask: Vec<bool> = (0..p).map(|_| rng.gen_bool(0.6)).collect();
            let n_obs = mask.iter().filter(|&&b| b).count();
            if n_obs == 0 {
                continue;
            }
            if !allow_complete && n_obs == p {
                continue;
            }
            return MissingPattern::from_observed_mask(&mask).unwrap();
        }
    }

    #[test]
    fn gaussian_independence_case() {
        // lambda = 0, Sigma = I, mu = 0, p = 2, first coordinate missing
        let params = ComponentParams::new(
            DVector::zeros(2),
            SymMatrix::identity(2),
            DVector::zeros(2),
        )
        .unwrap();
        let pattern = MissingPattern::from_observed_mask(&[false, true]).unwrap();
        let x_o = DVector::from_row_slice(&[1.0]);
        let c = conditional_sn(&params, 1.0, &pattern, &x_o).unwrap();
        assert_relative_eq!(c.mu_c[0], 0.0);
        assert_relative_eq!(c.sigma_c.as_matrix()[(0, 0)], 1.0);
        assert_relative_eq!(c.lambda_c[0], 0.0);
        assert_relative_eq!(c.lambda0_c, 0.0);
    }

    #[test]
    fn zero_skewness_reduces_to_gaussian_conditional() {
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..20 {
            let p = rng.gen_range(2..6);
            let mut params = random_params(&mut rng, p);
            params = ComponentParams::new(
                params.mu().clone(),
                params.sigma().clone(),
                DVector::zeros(p),
            )
            .unwrap();
            let pattern = random_pattern(&mut rng, p, false);
            let x_o = DVector::from_fn(pattern.n_observed(), |_, _| rng.gen_range(-3.0..3.0));
            let c = conditional_sn(&params, 1.0, &pattern, &x_o).unwrap();

            // classical Gaussian conditional by direct solve
            let b = crate::conditioning::partition(&params, &pattern).unwrap();
            let sol = b.sigma_oo.clone().lu().solve(&(&x_o - &b.mu_o)).unwrap();
            let mu_cond = &b.mu_m + &b.sigma_mo * &sol;
            assert_relative_eq!(&c.mu_c, &mu_cond, epsilon = 1e-10);
            assert_relative_eq!(c.lambda_c.norm(), 0.0, epsilon = 1e-12);

            let n = conditional_normal(&params, &pattern, &x_o).unwrap();
            assert_relative_eq!(&n.m_c, &mu_cond, epsilon = 1e-10);
            assert_relative_eq!(n.psi_c.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_omega_cross_block_vanishes() {
        let params = ComponentParams::new(
            DVector::from_row_slice(&[1.0, -1.0]),
            SymMatrix::from_diagonal(&[2.0, 3.0]),
            DVector::zeros(2),
        )
        .unwrap();
        let pattern = MissingPattern::from_observed_mask(&[false, true]).unwrap();
        let x_o = DVector::from_row_slice(&[0.5]);
        let n = conditional_normal(&params, &pattern, &x_o).unwrap();
        assert_relative_eq!(n.m_c[0], 1.0);
        assert_relative_eq!(n.omega_c.as_matrix()[(0, 0)], 2.0);
        assert_relative_eq!(n.psi_c[0], params.delta()[0]);
    }

    #[test]
    fn t_posterior_zero_skewness() {
        let params = ComponentParams::new(
            DVector::zeros(3),
            SymMatrix::identity(3),
            DVector::zeros(3),
        )
        .unwrap();
        let pattern = MissingPattern::complete(3);
        let x_o = DVector::from_row_slice(&[0.4, -1.0, 2.0]);
        let t = t_posterior(&params, &pattern, &x_o).unwrap();
        assert_relative_eq!(t.mu_t, 0.0);
        assert_relative_eq!(t.sigma2_t, 1.0);
    }

    #[test]
    fn t_posterior_scalar_algebra() {
        // p = 1 complete, Sigma = 1, lambda = 1: Delta = 1/sqrt(2),
        // Omega = 1/2, sigma_T^2 = (1 + (1/2)/(1/2))^{-1} = 1/2
        let params = ComponentParams::new(
            DVector::zeros(1),
            SymMatrix::identity(1),
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap();
        let pattern = MissingPattern::complete(1);
        let t = t_posterior(&params, &pattern, &DVector::from_row_slice(&[0.7])).unwrap();
        assert_relative_eq!(t.sigma2_t, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn identity_corpus_lemma_a2_a3() {
        // delta0_c = lambda-dot' Sigma_oo^{-1/2}(x_o - mu_o) and
        // mu_T / sigma_T = A_o over 1000 random configurations
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..1000 {
            let p = rng.gen_range(2..7);
            let params = random_params(&mut rng, p);
            let pattern = random_pattern(&mut rng, p, false);
            let x_o = DVector::from_fn(pattern.n_observed(), |_, _| rng.gen_range(-4.0..4.0));

            let c = conditional_sn(&params, 1.0, &pattern, &x_o).unwrap();
            assert!(
                (c.delta0_c - c.a_o).abs() <= 1e-10 * (1.0 + c.a_o.abs()),
                "Lemma-type threshold identity failed: {} vs {}",
                c.delta0_c,
                c.a_o
            );

            let t = t_posterior(&params, &pattern, &x_o).unwrap();
            let ratio = t.mu_t / t.sigma2_t.sqrt();
            assert!(
                (ratio - c.a_o).abs() <= 1e-10 * (1.0 + c.a_o.abs()),
                "posterior ratio identity failed: {} vs {}",
                ratio,
                c.a_o
            );
        }
    }

    #[test]
    fn quadratic_form_decomposition() {
        // block decomposition of y' A^{-1} y on random PD matrices
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..200 {
            let p = rng.gen_range(2..7);
            let k = rng.gen_range(1..p);
            let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
            let m = &a * a.transpose() + DMatrix::identity(p, p) * 0.6;
            let y = DVector::from_fn(p, |_, _| rng.gen_range(-2.0..2.0));

            let full: f64 = m.clone().lu().solve(&y).unwrap().dot(&y);

            let a11 = m.view((0, 0), (k, k)).into_owned();
            let a12 = m.view((0, k), (k, p - k)).into_owned();
            let a22 = m.view((k, k), (p - k, p - k)).into_owned();
            let y1 = y.rows(0, k).into_owned();
            let y2 = y.rows(k, p - k).into_owned();

            let a22_inv_y2 = a22.clone().lu().solve(&y2).unwrap();
            let resid = &y1 - &a12 * &a22_inv_y2;
            let schur = &a11 - &a12 * a22.clone().lu().solve(&a12.transpose()).unwrap();
            let part1 = schur.lu().solve(&resid).unwrap().dot(&resid);
            let part2 = a22_inv_y2.dot(&y2);

            assert!(
                (full - (part1 + part2)).abs() <= 1e-10 * (1.0 + full.abs()),
                "quadratic decomposition failed: {full} vs {}",
                part1 + part2
            );
        }
    }
}
