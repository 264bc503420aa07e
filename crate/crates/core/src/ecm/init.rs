//! Starting values: k-means clusters on a column-mean-imputed copy, or a
//! random partition fallback.

use crate::conditioning::ObservationSet;
use crate::ecm::config::{FitConfig, InitStrategy};
use crate::ecm::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::family::{ComponentParams, MixtureModel, ScaleLaw};
use crate::numkit::SymMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds the starting model for a fit. Cluster means/covariances come from
/// a column-mean-imputed working copy; skewness starts at zero and the
/// hyperparameters at mid-range defaults.
pub fn initialize(data: &ObservationSet, config: &FitConfig) -> Result<MixtureModel> {
    config.validate()?;
    let p = data.dim();
    let g = config.n_components;
    if data.n() < g * (p + 1) {
        return Err(Error::InvalidParameter(format!(
            "need at least {} rows for {} components in dimension {}, got {}",
            g * (p + 1),
            g,
            p,
            data.n()
        )));
    }
    match &config.init {
        InitStrategy::Given(model) => {
            if model.dim() != p || model.n_components() != g {
                return Err(Error::InvalidParameter(
                    "supplied starting model does not match the data/config shape".into(),
                ));
            }
            Ok(model.clone())
        }
        InitStrategy::KMeans => {
            let working = data.column_mean_imputed();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let (labels, _) = kmeans(&working, g, 10, &mut rng);
            match model_from_partition(&working, &labels, config) {
                Ok(m) => Ok(m),
                Err(Error::DegenerateInit { .. }) => {
                    let labels = random_partition(working.nrows(), g, &mut rng);
                    model_from_partition(&working, &labels, config)
                }
                Err(e) => Err(e),
            }
        }
        InitStrategy::RandomPartition => {
            let working = data.column_mean_imputed();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let labels = random_partition(working.nrows(), g, &mut rng);
            model_from_partition(&working, &labels, config)
        }
    }
}

fn random_partition<R: Rng + ?Sized>(n: usize, g: usize, rng: &mut R) -> Vec<usize> {
    // one pass guaranteeing every cluster at least one row, then uniform
    let mut labels: Vec<usize> = (0..n).map(|i| i % g).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

fn model_from_partition(
    working: &DMatrix<f64>,
    labels: &[usize],
    config: &FitConfig,
) -> Result<MixtureModel> {
    let n = working.nrows();
    let p = working.ncols();
    let g = config.n_components;
    let mut counts = vec![0usize; g];
    for &l in labels {
        counts[l] += 1;
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt < p + 1 {
            return Err(Error::DegenerateInit {
                index: c,
                rows: cnt,
                min: p + 1,
            });
        }
    }

    let mut components = Vec::with_capacity(g);
    let mut weights = Vec::with_capacity(g);
    for c in 0..g {
        let nc = counts[c] as f64;
        let mut mean = DVector::zeros(p);
        for i in 0..n {
            if labels[i] == c {
                for j in 0..p {
                    mean[j] += working[(i, j)];
                }
            }
        }
        mean /= nc;
        let mut cov = DMatrix::zeros(p, p);
        let mut m3 = DVector::zeros(p);
        for i in 0..n {
            if labels[i] == c {
                let d = DVector::from_fn(p, |j, _| working[(i, j)] - mean[j]);
                for j in 0..p {
                    m3[j] += d[j] * d[j] * d[j];
                }
                cov += &d * d.transpose();
            }
        }
        cov /= nc - 1.0;
        m3 /= nc;

        // moment-matched skewness start: exactly zero skewness is a fixed
        // point of the skew-direction update, so symmetric starts never move
        let lambda0 = DVector::from_fn(p, |j, _| {
            let sd = cov[(j, j)].max(1e-12).sqrt();
            let g1 = m3[j] / (sd * sd * sd);
            (2.0 * g1).clamp(-2.0, 2.0)
        });
        let lambda_init = if config.fix_lambda_zero {
            DVector::zeros(p)
        } else {
            lambda0
        };
        // ridge the covariance until it is usable as a scale matrix
        let mut ridge = cov.trace().max(1e-12) / p as f64 * config.ridge.max(1e-10);
        let params = loop {
            let candidate = &cov + DMatrix::identity(p, p) * ridge;
            match SymMatrix::new(candidate)
                .and_then(|s| ComponentParams::new(mean.clone(), s, lambda_init.clone()))
            {
                Ok(c) => break c,
                Err(_) if ridge < cov.trace().max(1.0) => {
                    ridge *= 100.0;
                }
                Err(e) => return Err(e),
            }
        };
        components.push((params, ScaleLaw::default_for(config.family, p)));
        weights.push(nc / n as f64);
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    MixtureModel::new(weights, components)
}
