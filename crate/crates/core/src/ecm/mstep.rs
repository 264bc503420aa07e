//! The conditional-maximization pass: weight, residual-scale, location,
//! skew-direction, and hyperparameter updates in the published order
//! (pi -> Omega -> mu -> Delta -> theta -> Sigma -> lambda).

use crate::conditioning::EStepRow;
use crate::ecm::config::{FitConfig, OmegaUpdate};
use crate::error::{Error, Result};
use crate::family::{ComponentParams, FamilyKind, MixtureModel, ScaleLaw};
use nalgebra::{DMatrix, DVector};

/// Sums of the per-row hat quantities for one component.
#[derive(Debug, Clone)]
pub struct ComponentSums {
    pub sz: f64,
    pub szk: f64,
    pub szkt: f64,
    pub szkt2: f64,
    pub szkx: DVector<f64>,
    pub szktx: DVector<f64>,
    pub szkxx: DMatrix<f64>,
    /// sum_i z-hat E[ln U | x_o, Z_g] and sum_i z-hat E[U | x_o, Z_g]
    pub sz_ln_u: f64,
    pub sz_u: f64,
}

impl ComponentSums {
    fn zeros(p: usize) -> Self {
        ComponentSums {
            sz: 0.0,
            szk: 0.0,
            szkt: 0.0,
            szkt2: 0.0,
            szkx: DVector::zeros(p),
            szktx: DVector::zeros(p),
            szkxx: DMatrix::zeros(p, p),
            sz_ln_u: 0.0,
            sz_u: 0.0,
        }
    }
}

/// Reduces row caches into per-component sums in row order, so results do
/// not depend on how the expectation step was parallelized.
pub fn accumulate(rows: &[EStepRow], n_components: usize, p: usize) -> Vec<ComponentSums> {
    let mut sums = vec![ComponentSums::zeros(p); n_components];
    for row in rows {
        for (g, e) in row.entries.iter().enumerate() {
            let s = &mut sums[g];
            s.sz += e.z;
            s.szk += e.zk;
            s.szkt += e.zkt;
            s.szkt2 += e.zkt2;
            s.szkx += &e.zkx;
            s.szktx += &e.zktx;
            s.szkxx += &e.zkxx;
            s.sz_ln_u += e.z * e.e_ln_u;
            s.sz_u += e.z * e.e_u;
        }
    }
    sums
}

/// Aggregated expected log mixing density: the hyperparameter objective.
fn theta_objective(kind: FamilyKind, theta: f64, n_g: f64, sz_ln_u: f64, sz_u: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    match kind {
        FamilyKind::SkewNormal => 0.0,
        FamilyKind::SkewT => {
            let a = theta / 2.0;
            n_g * (a * a.ln() - ln_gamma(a)) + (a - 1.0) * sz_ln_u - a * sz_u
        }
        FamilyKind::SkewSlash => n_g * theta.ln() + (theta - 1.0) * sz_ln_u,
        FamilyKind::SkewVGamma => {
            n_g * (theta * theta.ln() - ln_gamma(theta)) + (theta - 1.0) * sz_ln_u - theta * sz_u
        }
    }
}

/// Golden-section maximization on [lo, hi] to absolute tolerance `tol`.
fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// One full conditional-maximization pass over all components.
pub fn cm_step(
    n: usize,
    sums: &[ComponentSums],
    model: &MixtureModel,
    config: &FitConfig,
    warnings: &mut Vec<String>,
) -> Result<MixtureModel> {
    let p = model.dim();
    let g_total = model.n_components();
    let mut weights = Vec::with_capacity(g_total);
    let mut components = Vec::with_capacity(g_total);

    for g in 0..g_total {
        let s = &sums[g];
        let n_g = s.sz;
        if n_g < (p + 1) as f64 {
            return Err(Error::EmptyComponent {
                index: g,
                size: n_g,
                min: (p + 1) as f64,
            });
        }
        let old = model.component(g);
        let law = model.law(g);
        let mu_old = old.mu();
        let delta_old = old.delta();

        weights.push(n_g / n as f64);

        // fresh location (needed inside the printed residual-scale update)
        let mu_new = if config.fix_lambda_zero {
            &s.szkx / s.szk
        } else {
            (&s.szkx - delta_old * s.szkt) / s.szk
        };

        let mu_cross = match config.omega_update {
            OmegaUpdate::Printed => &mu_new,
            OmegaUpdate::Lagged => mu_old,
        };
        let mut omega = &s.szkxx
            - &s.szkx * mu_old.transpose()
            - mu_old * s.szkx.transpose()
            + mu_old * mu_old.transpose() * s.szk
            - &s.szktx * delta_old.transpose()
            - delta_old * s.szktx.transpose()
            + (mu_cross * delta_old.transpose() + delta_old * mu_cross.transpose()) * s.szkt
            + delta_old * delta_old.transpose() * s.szkt2;
        omega /= n_g;
        omega = (&omega + omega.transpose()) * 0.5;

        // near-singular residual scales get a logged relative ridge before
        // they can poison the observed-block factorizations downstream
        let spec = crate::numkit::Spectral::new(&omega);
        if spec.min_eigenvalue() <= 0.0 || spec.condition() > 1e10 {
            let ridge = omega.trace().max(1e-12) / p as f64 * config.ridge.max(1e-10);
            warnings.push(format!(
                "component {g}: residual scale condition {:.2e}, ridged by {ridge:.3e}",
                spec.condition()
            ));
            omega += DMatrix::identity(p, p) * ridge;
        }

        // skew-direction update with the fresh location
        let delta_new = if config.fix_lambda_zero {
            DVector::zeros(p)
        } else {
            (&s.szktx - &mu_new * s.szkt) / s.szkt2
        };

        // hyperparameter update by bounded golden-section search
        let law_new = match ScaleLaw::bracket(config.family, p) {
            None => *law,
            Some((lo, hi)) => {
                let theta_old = law.hyper().expect("non-degenerate law has a hyperparameter");
                let f = |t: f64| theta_objective(config.family, t, n_g, s.sz_ln_u, s.sz_u);
                let theta_star = golden_section_max(f, lo, hi, 1e-6);
                // never accept a downhill move
                if f(theta_star) >= f(theta_old) {
                    law.with_hyper(theta_star)
                } else {
                    *law
                }
            }
        };

        // Sigma = Omega + Delta Delta', lambda from (Sigma, Delta)
        let params = match ComponentParams::from_moment_form(mu_new.clone(), &omega, &delta_new) {
            Ok(c) => c,
            Err(Error::NotPd { .. }) | Err(Error::NotPsd { .. }) | Err(Error::Singular { .. }) => {
                let ridge = omega.trace().max(1e-12) / p as f64 * config.ridge.max(1e-10);
                warnings.push(format!(
                    "component {g}: residual scale ridged by {ridge:.3e}"
                ));
                let ridged = &omega + DMatrix::identity(p, p) * ridge;
                ComponentParams::from_moment_form(mu_new.clone(), &ridged, &delta_new)?
            }
            Err(e) => return Err(e),
        };
        components.push((params, law_new));
    }

    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    MixtureModel::new(weights, components)
}

/// The parameter-dependent part of the expected complete-data log-likelihood
/// under a fixed expectation-step cache. Constants independent of the
/// parameters are dropped, so only differences are meaningful.
pub fn q_value(sums: &[ComponentSums], model: &MixtureModel) -> Result<f64> {
    let p = model.dim();
    let mut q = 0.0;
    for g in 0..model.n_components() {
        let s = &sums[g];
        let params = model.component(g);
        let mu = params.mu();
        let delta = params.delta();
        let omega = params.omega();
        let omega_f = crate::numkit::PdFactors::new(omega)?;

        let quad = &s.szkxx
            - &s.szkx * mu.transpose()
            - mu * s.szkx.transpose()
            + mu * mu.transpose() * s.szk
            - &s.szktx * delta.transpose()
            - delta * s.szktx.transpose()
            + (mu * delta.transpose() + delta * mu.transpose()) * s.szkt
            + delta * delta.transpose() * s.szkt2;
        let trace_term = (&omega_f.inv * &quad).trace();

        let theta_part = match model.law(g).hyper() {
            Some(theta) => theta_objective(model.kind(), theta, s.sz, s.sz_ln_u, s.sz_u),
            None => 0.0,
        };
        q += s.sz * model.weights()[g].ln() - 0.5 * s.sz * omega_f.log_det - 0.5 * trace_term
            + theta_part;
        let _ = p;
    }
    Ok(q)
}
