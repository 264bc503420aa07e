//! Expectation-step quantities: posterior moments of the scaling variable,
//! responsibilities, the per-row hat-quantity cache, and conditional-mean
//! imputation.

use crate::conditioning::{MissingPattern, PatternContext};
use crate::error::{Error, Result};
use crate::family::density::{smsn_logpdf_point, DensityPoint};
use crate::family::{ComponentParams, MixtureModel, ScaleLaw};
use crate::numkit::special::mills_raw;
use crate::numkit::{log_sum_exp, weighted_moments_mapped};
use nalgebra::{DMatrix, DVector};

const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Posterior moments of the scaling link kappa given the observed block of
/// one row under one component, together with the log observed marginal
/// computed from the same node set.
#[derive(Debug, Clone, Copy)]
pub struct ScaleMomentsCore {
    /// E[kappa^{-1} | x_o, Z_g]
    pub k_inv: f64,
    /// E[kappa^{-2} | x_o, Z_g]
    pub k_inv2: f64,
    /// E[kappa | x_o, Z_g]
    pub k: f64,
    /// E[kappa^{-1/2} W(kappa^{-1/2} A_o) | x_o, Z_g]
    pub xi_neg_half: f64,
    /// E[kappa^{+1/2} W(kappa^{-1/2} A_o) | x_o, Z_g]
    pub xi_plus_half: f64,
    /// Taylor approximation of E[ln kappa^{-1} | x_o, Z_g] with the Jensen
    /// floor on E[kappa^{-2}] / E[kappa^{-1}]^2
    pub log_k_inv: f64,
    /// ln f(x_o | Z_g) of the observed marginal
    pub log_marginal: f64,
}

/// Inner tolerance for the expectation-step quadratures. Tighter than the
/// public engine default so that per-row noise stays far below the
/// log-likelihood monotonicity tolerance.
const ESTEP_QUAD_TOL: f64 = 1e-9;

/// Computes the posterior scale moments from the row's scalar sufficient
/// statistics: observed dimension, ln|Sigma_oo|, Mahalanobis form, and the
/// skewing scalar A_o.
pub(crate) fn scale_moments_core(
    law: &ScaleLaw,
    n_obs: usize,
    log_det_sigma_oo: f64,
    maha: f64,
    a_o: f64,
) -> Result<ScaleMomentsCore> {
    let point = DensityPoint {
        dim: n_obs,
        log_det: log_det_sigma_oo,
        maha,
        skew: a_o,
    };
    if matches!(law, ScaleLaw::Degenerate) {
        let w = mills_raw(a_o);
        return Ok(ScaleMomentsCore {
            k_inv: 1.0,
            k_inv2: 1.0,
            k: 1.0,
            xi_neg_half: w,
            xi_plus_half: w,
            log_k_inv: 0.0,
            log_marginal: crate::family::density::sn_logpdf_point(&point),
        });
    }
    let p = n_obs as f64;
    let base = std::f64::consts::LN_2 - 0.5 * (p * LN_2PI + log_det_sigma_oo);
    let inverse = law.inverse_link();
    // change of variables per law: the unit interval for the beta law, the
    // rational half-line map for the inverse-gamma law, and a log-scale map
    // centered between the two exponential walls for the variance-gamma law
    // (whose posterior can be sharply peaked near u = 0)
    let map: Box<dyn FnMut(f64) -> (f64, f64)> = match *law {
        ScaleLaw::BetaInverse { .. } => Box::new(|v| (v, 0.0)),
        ScaleLaw::GammaInverse { .. } => Box::new(|v| {
            let om = 1.0 - v;
            (v / om, -2.0 * om.ln())
        }),
        ScaleLaw::Gamma { eta } => {
            let d_floor = maha.max(1e-12);
            let center = (d_floor / (2.0 * eta)).sqrt();
            let scale = (d_floor * eta / 2.0).sqrt();
            let half_width = (12.0f64).max(1.2 * scale.ln().abs() + 15.0);
            Box::new(move |v| {
                let y = half_width * (2.0 * v - 1.0);
                let u = center * y.exp();
                (u, (2.0 * half_width).ln() + u.ln())
            })
        }
        ScaleLaw::Degenerate => unreachable!(),
    };
    // E[kappa^{-2}] may not exist for the variance-gamma law, so it is
    // excluded from the convergence test and only used when well behaved
    let wm = weighted_moments_mapped(
        6,
        map,
        |u, out| {
            let k_inv = if inverse { u } else { 1.0 / u };
            let rk = k_inv.sqrt();
            let log_k_inv = k_inv.ln();
            let (w, log_phi) = crate::numkit::special::mills_and_log_phi(rk * a_o);
            out[0] = k_inv;
            out[1] = k_inv * k_inv;
            out[2] = 1.0 / k_inv;
            out[3] = rk * w;
            out[4] = w / rk;
            out[5] = log_k_inv;
            base + 0.5 * p * log_k_inv - 0.5 * k_inv * maha + log_phi + law.log_density(u)
        },
        ESTEP_QUAD_TOL,
        &[1],
    )?;
    let k_inv = wm.moments[0];
    let k_inv2 = wm.moments[1];
    let ratio = k_inv2 / (k_inv * k_inv);
    // Taylor expansion of E[ln kappa^{-1}] about E[kappa^{-1}], floored by
    // Jensen's inequality; when the second moment misbehaves (variance-gamma
    // near-center rows) fall back to the directly integrated expectation
    let log_k_inv = if ratio.is_finite() && ratio < 100.0 {
        k_inv.ln() - 0.5 * (ratio.max(1.0 + 1e-12) - 1.0)
    } else {
        wm.moments[5]
    };
    Ok(ScaleMomentsCore {
        k_inv,
        k_inv2,
        k: wm.moments[2],
        xi_neg_half: wm.moments[3],
        xi_plus_half: wm.moments[4],
        log_k_inv,
        log_marginal: wm.log_norm,
    })
}

/// The five hat-moments of the scaling variable exposed per observation and
/// component: E[k^{-1}], xi-hat^{-1/2}, E[k^{-1}T], E[k^{-1}T^2], E[ln k^{-1}].
#[derive(Debug, Clone, Copy)]
pub struct ScaleMomentsHat {
    pub k_inv: f64,
    pub xi_neg_half: f64,
    pub k_inv_t: f64,
    pub k_inv_t2: f64,
    pub log_k_inv: f64,
}

/// Posterior scale moments for one component and one observed row.
pub fn posterior_scale_moments(
    params: &ComponentParams,
    law: &ScaleLaw,
    pattern: &MissingPattern,
    x_o: &DVector<f64>,
) -> Result<ScaleMomentsHat> {
    let ctx = PatternContext::new(params, pattern)?;
    let centered = x_o - &ctx.mu_o;
    let maha = ctx.maha_observed(&centered);
    let a_o = ctx.skew_scalar(&centered);
    let core = scale_moments_core(law, ctx.n_obs, ctx.log_det_sigma_oo, maha, a_o)?;
    let mu_t = ctx.mu_t(&centered);
    let sigma_t = ctx.sigma2_t.sqrt();
    Ok(ScaleMomentsHat {
        k_inv: core.k_inv,
        xi_neg_half: core.xi_neg_half,
        k_inv_t: core.k_inv * mu_t + sigma_t * core.xi_neg_half,
        k_inv_t2: core.k_inv * mu_t * mu_t + mu_t * sigma_t * core.xi_neg_half + ctx.sigma2_t,
        log_k_inv: core.log_k_inv,
    })
}

/// Per-(row, component) hat quantities of the expectation step.
#[derive(Debug, Clone)]
pub struct EStepEntry {
    /// responsibility z-hat
    pub z: f64,
    /// z-hat E[k^{-1}]
    pub zk: f64,
    /// z-hat E[k^{-1} T]
    pub zkt: f64,
    /// z-hat E[k^{-1} T^2]
    pub zkt2: f64,
    /// z-hat E[k^{-1} X]
    pub zkx: DVector<f64>,
    /// z-hat E[k^{-1} T X]
    pub zktx: DVector<f64>,
    /// z-hat E[k^{-1} X X']
    pub zkxx: DMatrix<f64>,
    pub k_inv: f64,
    pub xi_neg_half: f64,
    pub xi_plus_half: f64,
    pub log_k_inv: f64,
    /// E[ln U | x_o, Z_g] and E[U | x_o, Z_g] for the hyperparameter update
    pub e_ln_u: f64,
    pub e_u: f64,
    /// ln f(x_o | Z_g)
    pub log_marginal: f64,
    pub mu_t: f64,
    pub sigma2_t: f64,
}

/// One row's expectation-step output across components.
#[derive(Debug, Clone)]
pub struct EStepRow {
    pub entries: Vec<EStepEntry>,
    /// ln sum_g pi_g f_g(x_o): the row's observed log-likelihood term
    pub log_lik: f64,
    /// true when every component marginal underflowed and the
    /// responsibilities fell back to uniform
    pub uniform_fallback: bool,
}

/// Responsibilities z-hat over components from the observed block only.
pub fn responsibilities(
    model: &MixtureModel,
    pattern: &MissingPattern,
    x_o: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut terms = Vec::with_capacity(model.n_components());
    for (g, (params, law)) in model.components().iter().enumerate() {
        let ctx = PatternContext::new(params, pattern)?;
        let centered = x_o - &ctx.mu_o;
        let point = DensityPoint {
            dim: ctx.n_obs,
            log_det: ctx.log_det_sigma_oo,
            maha: ctx.maha_observed(&centered),
            skew: ctx.skew_scalar(&centered),
        };
        terms.push(model.weights()[g].ln() + smsn_logpdf_point(&point, law)?);
    }
    let total = log_sum_exp(&terms);
    let g = model.n_components();
    if !total.is_finite() {
        return Ok(DVector::from_element(g, 1.0 / g as f64));
    }
    Ok(DVector::from_iterator(
        g,
        terms.iter().map(|t| (t - total).exp()),
    ))
}

/// Full expectation step for one row, using per-component pattern contexts
/// prepared by the caller (one per component for this row's pattern).
pub fn estep_row_with_contexts(
    model: &MixtureModel,
    contexts: &[PatternContext],
    pattern: &MissingPattern,
    x: &DVector<f64>,
) -> Result<EStepRow> {
    let g_total = model.n_components();
    debug_assert_eq!(contexts.len(), g_total);
    let p = model.dim();
    let obs = pattern.observed();
    let mis = pattern.missing();

    struct Partial {
        core: ScaleMomentsCore,
        log_marginal: f64,
        mu_t: f64,
        sigma2_t: f64,
        k_inv_t: f64,
        k_inv_t2: f64,
        kx: DVector<f64>,
        ktx: DVector<f64>,
        kxx: DMatrix<f64>,
        e_ln_u: f64,
        e_u: f64,
    }

    let mut partials = Vec::with_capacity(g_total);
    let mut log_terms = Vec::with_capacity(g_total);
    for (g, (_, law)) in model.components().iter().enumerate() {
        let ctx = &contexts[g];
        let centered = ctx.centered_observed(x, pattern);
        let maha = ctx.maha_observed(&centered);
        let a_o = ctx.skew_scalar(&centered);
        let core = scale_moments_core(law, ctx.n_obs, ctx.log_det_sigma_oo, maha, a_o)?;

        // the skew-t marginal has an exact closed form; the quadrature
        // normalizer serves the laws that lack one
        let log_marginal = match law {
            ScaleLaw::GammaInverse { .. } => {
                let point = DensityPoint {
                    dim: ctx.n_obs,
                    log_det: ctx.log_det_sigma_oo,
                    maha,
                    skew: a_o,
                };
                smsn_logpdf_point(&point, law)?
            }
            _ => core.log_marginal,
        };

        let mu_t = ctx.mu_t(&centered);
        let sigma2_t = ctx.sigma2_t;
        let sigma_t = sigma2_t.sqrt();
        let k_inv_t = core.k_inv * mu_t + sigma_t * core.xi_neg_half;
        let k_inv_t2 = core.k_inv * mu_t * mu_t + mu_t * sigma_t * core.xi_neg_half + sigma2_t;

        // hat vectors over the full coordinate order
        let mut kx = DVector::zeros(p);
        let mut ktx = DVector::zeros(p);
        let mut kxx = DMatrix::zeros(p, p);
        for &j in obs {
            kx[j] = core.k_inv * x[j];
            ktx[j] = k_inv_t * x[j];
        }
        for (&ja, &jb) in obs.iter().flat_map(|a| obs.iter().map(move |b| (a, b))) {
            kxx[(ja, jb)] = core.k_inv * x[ja] * x[jb];
        }
        if !mis.is_empty() {
            let mu_c = ctx.mu_c(&centered);
            let m_c = ctx.m_c(&centered);
            let kx_m = &mu_c * core.k_inv + &ctx.delta_c * core.xi_neg_half;
            let ktx_m = &m_c * k_inv_t + &ctx.psi_c * k_inv_t2;
            // mm block: Sigma_c + k^{-1} mu_c mu_c' + xi^{-1/2} alpha with
            // alpha = mu_c Delta_c' + Delta_c mu_c' - A_o Delta_c Delta_c'
            let alpha = &mu_c * ctx.delta_c.transpose() + &ctx.delta_c * mu_c.transpose()
                - (&ctx.delta_c * ctx.delta_c.transpose()) * a_o;
            let mm = &ctx.sigma_c
                + (&mu_c * mu_c.transpose()) * core.k_inv
                + alpha * core.xi_neg_half;
            for (km, &j) in mis.iter().enumerate() {
                kx[j] = kx_m[km];
                ktx[j] = ktx_m[km];
                for (&jo, ko) in obs.iter().zip(0..) {
                    let _ = ko;
                    kxx[(j, jo)] = kx_m[km] * x[jo];
                    kxx[(jo, j)] = kxx[(j, jo)];
                }
                for (lm, &j2) in mis.iter().enumerate() {
                    kxx[(j, j2)] = mm[(km, lm)];
                }
            }
        }

        let (e_ln_u, e_u) = if law.inverse_link() {
            (core.log_k_inv, core.k_inv)
        } else {
            (-core.log_k_inv, core.k)
        };

        log_terms.push(model.weights()[g].ln() + log_marginal);
        partials.push(Partial {
            core,
            log_marginal,
            mu_t,
            sigma2_t,
            k_inv_t,
            k_inv_t2,
            kx,
            ktx,
            kxx,
            e_ln_u,
            e_u,
        });
    }

    let total = log_sum_exp(&log_terms);
    let (log_lik, uniform_fallback) = if total.is_finite() {
        (total, false)
    } else {
        (-1e300, true)
    };
    let entries = partials
        .into_iter()
        .zip(log_terms.iter())
        .map(|(part, &term)| {
            let z = if uniform_fallback {
                1.0 / g_total as f64
            } else {
                (term - total).exp()
            };
            EStepEntry {
                z,
                zk: z * part.core.k_inv,
                zkt: z * part.k_inv_t,
                zkt2: z * part.k_inv_t2,
                zkx: part.kx * z,
                zktx: part.ktx * z,
                zkxx: part.kxx * z,
                k_inv: part.core.k_inv,
                xi_neg_half: part.core.xi_neg_half,
                xi_plus_half: part.core.xi_plus_half,
                log_k_inv: part.core.log_k_inv,
                e_ln_u: part.e_ln_u,
                e_u: part.e_u,
                log_marginal: part.log_marginal,
                mu_t: part.mu_t,
                sigma2_t: part.sigma2_t,
            }
        })
        .collect();
    Ok(EStepRow {
        entries,
        log_lik,
        uniform_fallback,
    })
}

/// Expectation step for one row, building the per-component contexts on the
/// fly. The fitting engine prepares contexts once per pattern instead.
pub fn estep_row(model: &MixtureModel, pattern: &MissingPattern, x: &DVector<f64>) -> Result<EStepRow> {
    let contexts = model
        .components()
        .iter()
        .map(|(params, _)| PatternContext::new(params, pattern))
        .collect::<Result<Vec<_>>>()?;
    estep_row_with_contexts(model, &contexts, pattern, x)
}

/// Fills the missing cells of `x` with the responsibility-weighted
/// conditional means sum_g z_g (mu_c,g + xi-hat^{+1/2}_g Delta_c,g); observed
/// cells are returned untouched.
pub fn impute_row(
    model: &MixtureModel,
    pattern: &MissingPattern,
    x: &DVector<f64>,
    resp: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut out = x.clone();
    if pattern.is_complete() {
        return Ok(out);
    }
    if resp.len() != model.n_components() {
        return Err(Error::DimensionMismatch {
            context: "impute_row responsibilities",
            expected: model.n_components(),
            got: resp.len(),
        });
    }
    let mut fill = DVector::zeros(pattern.n_missing());
    for (g, (params, law)) in model.components().iter().enumerate() {
        let ctx = PatternContext::new(params, pattern)?;
        let centered = ctx.centered_observed(x, pattern);
        let maha = ctx.maha_observed(&centered);
        let a_o = ctx.skew_scalar(&centered);
        let core = scale_moments_core(law, ctx.n_obs, ctx.log_det_sigma_oo, maha, a_o)?;
        let cond_mean = ctx.mu_c(&centered) + &ctx.delta_c * core.xi_plus_half;
        fill += cond_mean * resp[g];
    }
    for (k, &j) in pattern.missing().iter().enumerate() {
        out[j] = fill[k];
    }
    Ok(out)
}
