//! The fitting loop: expectation step over all rows, conditional
//! maximization, Aitken-accelerated convergence, report assembly.

use crate::conditioning::{estep_row_with_contexts, EStepRow, ObservationSet, PatternContext};
use crate::ecm::config::{FitConfig, FitReport};
use crate::ecm::init::initialize;
use crate::ecm::mstep::{accumulate, cm_step};
use crate::error::Result;
use crate::family::density::{smsn_logpdf_point, DensityPoint};
use crate::family::MixtureModel;
use crate::numkit::log_sum_exp;
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Observed-data log-likelihood: each row contributes the log of the
/// weighted sum of its observed-marginal densities.
pub fn observed_loglik(data: &ObservationSet, model: &MixtureModel) -> Result<f64> {
    let contexts = build_contexts(data, model)?;
    let mut total = 0.0;
    for i in 0..data.n() {
        let pattern = data.pattern_of(i);
        let pid = data.pattern_id(i);
        let mut terms = Vec::with_capacity(model.n_components());
        for (g, (_, law)) in model.components().iter().enumerate() {
            let ctx = &contexts[g][pid];
            let centered = ctx.centered_observed(data.row(i), pattern);
            let point = DensityPoint {
                dim: ctx.n_obs,
                log_det: ctx.log_det_sigma_oo,
                maha: ctx.maha_observed(&centered),
                skew: ctx.skew_scalar(&centered),
            };
            terms.push(model.weights()[g].ln() + smsn_logpdf_point(&point, law)?);
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// Aitken acceleration check on three consecutive log-likelihood values.
/// Returns the convergence flag and the asymptote estimate.
pub fn aitken_check(l_k: f64, l_k1: f64, l_k2: f64, eps: f64) -> (bool, f64) {
    let denom = l_k1 - l_k;
    let a = (l_k2 - l_k1) / denom;
    if denom.abs() < 1e-14 || a >= 1.0 {
        return ((l_k2 - l_k1).abs() < eps, l_k2);
    }
    let l_inf = l_k1 + (l_k2 - l_k1) / (1.0 - a);
    let gap = l_inf - l_k2;
    ((0.0..eps).contains(&gap), l_inf)
}

/// 2 ln L - P ln n; model selection maximizes this quantity.
pub fn bic(loglik: f64, free_parameters: usize, n: usize) -> f64 {
    2.0 * loglik - free_parameters as f64 * (n as f64).ln()
}

fn build_contexts(data: &ObservationSet, model: &MixtureModel) -> Result<Vec<Vec<PatternContext>>> {
    model
        .components()
        .iter()
        .map(|(params, _)| {
            data.patterns()
                .iter()
                .map(|pat| PatternContext::new(params, pat))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn estep_all(
    data: &ObservationSet,
    model: &MixtureModel,
    contexts: &[Vec<PatternContext>],
) -> Result<Vec<EStepRow>> {
    (0..data.n())
        .into_par_iter()
        .map(|i| {
            let pid = data.pattern_id(i);
            let pattern = data.pattern_of(i);
            let ctxs: Vec<PatternContext> = contexts.iter().map(|c| c[pid].clone()).collect();
            estep_row_with_contexts(model, &ctxs, pattern, data.row(i))
        })
        .collect()
}

/// Fits the mixture to the dataset. Deterministic under a fixed seed.
pub fn fit(data: &ObservationSet, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let p = data.dim();
    let n = data.n();
    let mut warnings = Vec::new();
    let mut model = initialize(data, config)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut model_trace = config.record_trace.then(|| vec![model.clone()]);

    let mut converged = false;
    let mut n_iter = 0usize;
    let mut rows: Vec<EStepRow>;
    loop {
        let contexts = build_contexts(data, &model)?;
        rows = estep_all(data, &model, &contexts)?;
        let loglik: f64 = rows.iter().map(|r| r.log_lik).sum();
        let fallbacks = rows.iter().filter(|r| r.uniform_fallback).count();
        if fallbacks > 0 {
            warnings.push(format!(
                "iteration {n_iter}: {fallbacks} rows fell back to uniform responsibilities"
            ));
        }
        trace.push(loglik);

        if trace.len() >= 3 {
            let m = trace.len();
            let (done, _) = aitken_check(trace[m - 3], trace[m - 2], trace[m - 1], config.tol);
            if done {
                converged = true;
                break;
            }
        }
        if n_iter >= config.max_iter {
            break;
        }

        let sums = accumulate(&rows, model.n_components(), p);
        model = cm_step(n, &sums, &model, config, &mut warnings)?;
        n_iter += 1;
        if let Some(t) = model_trace.as_mut() {
            t.push(model.clone());
        }
    }

    // report assembly from the cache of the final expectation step
    let g_total = model.n_components();
    let mut responsibilities = DMatrix::zeros(n, g_total);
    for (i, row) in rows.iter().enumerate() {
        for g in 0..g_total {
            responsibilities[(i, g)] = row.entries[g].z;
        }
    }
    let labels = FitReport::hard_labels(&responsibilities);
    let imputed = impute_all(data, &model, &rows)?;
    let loglik = *trace.last().expect("at least one iteration ran");
    let free_parameters = model.free_parameters();
    let bic_value = bic(loglik, free_parameters, n);

    Ok(FitReport {
        model,
        responsibilities,
        labels,
        imputed,
        loglik_trace: trace,
        converged,
        n_iter,
        bic: bic_value,
        free_parameters,
        warnings,
        model_trace,
    })
}

/// Conditional-mean imputation under the final model, reusing the cached
/// posterior scale moments.
fn impute_all(
    data: &ObservationSet,
    model: &MixtureModel,
    rows: &[EStepRow],
) -> Result<DMatrix<f64>> {
    let n = data.n();
    let p = data.dim();
    let contexts = build_contexts(data, model)?;
    let mut out = DMatrix::zeros(n, p);
    for i in 0..n {
        let pattern = data.pattern_of(i);
        let x = data.row(i);
        for &j in pattern.observed() {
            out[(i, j)] = x[j];
        }
        if pattern.is_complete() {
            continue;
        }
        let pid = data.pattern_id(i);
        let mut fill = nalgebra::DVector::zeros(pattern.n_missing());
        for g in 0..model.n_components() {
            let ctx = &contexts[g][pid];
            let e = &rows[i].entries[g];
            let centered = ctx.centered_observed(x, pattern);
            let cond_mean = ctx.mu_c(&centered) + &ctx.delta_c * e.xi_plus_half;
            fill += cond_mean * e.z;
        }
        for (k, &j) in pattern.missing().iter().enumerate() {
            out[(i, j)] = fill[k];
        }
    }
    Ok(out)
}

/// Convenience wrapper: expectation-step rows for a whole dataset under a
/// fixed model (used by tests and diagnostics).
pub fn estep_dataset(data: &ObservationSet, model: &MixtureModel) -> Result<Vec<EStepRow>> {
    let contexts = build_contexts(data, model)?;
    estep_all(data, model, &contexts)
}

/// Log-likelihood per row under a fixed model without refitting.
pub fn row_logliks(data: &ObservationSet, model: &MixtureModel) -> Result<Vec<f64>> {
    Ok(estep_dataset(data, model)?
        .into_iter()
        .map(|r| r.log_lik)
        .collect())
}
