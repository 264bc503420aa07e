//! Shared helpers for the oracle test suites: random model generation,
//! test-local Gaussian conditioning, and a Kolmogorov-Smirnov test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use smsnmix_core::conditioning::MissingPattern;
use smsnmix_core::family::{ComponentParams, ScaleLaw};
use smsnmix_core::numkit::SymMatrix;

pub fn random_pd(rng: &mut impl Rng, p: usize, jitter: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(p, p) * jitter
}

pub fn random_params(rng: &mut impl Rng, p: usize, lambda_scale: f64) -> ComponentParams {
    ComponentParams::new(
        DVector::from_fn(p, |_, _| rng.gen_range(-3.0..3.0)),
        SymMatrix::new(random_pd(rng, p, 0.5)).unwrap(),
        DVector::from_fn(p, |_, _| rng.gen_range(-lambda_scale..lambda_scale)),
    )
    .unwrap()
}

pub fn random_incomplete_pattern(rng: &mut impl Rng, p: usize) -> MissingPattern {
    loop {
        let mask: Vec<bool> = (0..p).map(|_| rng.gen_bool(0.6)).collect();
        let n_obs = mask.iter().filter(|&&b| b).count();
        if n_obs == 0 || n_obs == p {
            continue;
        }
        return MissingPattern::from_observed_mask(&mask).unwrap();
    }
}

pub fn random_law(rng: &mut impl Rng, which: usize, p: usize) -> ScaleLaw {
    match which % 4 {
        0 => ScaleLaw::Degenerate,
        1 => ScaleLaw::GammaInverse {
            nu: rng.gen_range(3.0..12.0),
        },
        2 => ScaleLaw::BetaInverse {
            alpha: rng.gen_range(1.5..6.0),
        },
        _ => ScaleLaw::Gamma {
            eta: rng.gen_range(p as f64 / 2.0 + 0.6..6.0),
        },
    }
}

/// Classical Gaussian conditional of x_m | x_o for N(mean, cov), computed
/// with plain LU solves (independent of the library's conditioning path).
pub struct GaussianConditional {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn gaussian_conditional(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    obs_idx: &[usize],
    mis_idx: &[usize],
    x_o: &DVector<f64>,
) -> GaussianConditional {
    let no = obs_idx.len();
    let nm = mis_idx.len();
    let mu_o = DVector::from_iterator(no, obs_idx.iter().map(|&j| mean[j]));
    let mu_m = DVector::from_iterator(nm, mis_idx.iter().map(|&j| mean[j]));
    let c_oo = DMatrix::from_fn(no, no, |i, j| cov[(obs_idx[i], obs_idx[j])]);
    let c_mo = DMatrix::from_fn(nm, no, |i, j| cov[(mis_idx[i], obs_idx[j])]);
    let c_mm = DMatrix::from_fn(nm, nm, |i, j| cov[(mis_idx[i], mis_idx[j])]);
    let lu = c_oo.lu();
    let sol = lu.solve(&(x_o - &mu_o)).expect("observed block PD");
    let gain_t = lu.solve(&c_mo.transpose()).expect("observed block PD");
    GaussianConditional {
        mean: &mu_m + &c_mo * sol,
        cov: &c_mm - &c_mo * gain_t,
    }
}

/// Draws from N(0, cov) via Cholesky, test-local.
pub fn sample_gaussian(
    rng: &mut impl Rng,
    cov: &DMatrix<f64>,
) -> DVector<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let chol = cov
        .clone()
        .cholesky()
        .unwrap_or_else(|| (cov + DMatrix::identity(cov.nrows(), cov.ncols()) * 1e-10)
            .cholesky()
            .expect("conditional covariance PSD"));
    let z = DVector::from_fn(cov.nrows(), |_, _| StandardNormal.sample(rng));
    chol.l() * z
}

/// cdf of N(mu, sigma^2) truncated to (0, inf).
pub fn truncnorm_cdf(t: f64, mu: f64, sigma: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let phi = |z: f64| smsnmix_core::numkit::std_normal_cdf(z).unwrap();
    let base = phi(-mu / sigma);
    ((phi((t - mu) / sigma) - base) / (1.0 - base)).clamp(0.0, 1.0)
}

/// Two-sided Kolmogorov-Smirnov test of a sample against a cdf; returns
/// (statistic, asymptotic p-value with the small-sample correction).
pub fn ks_test(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &t) in sample.iter().enumerate() {
        let f = cdf(t);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.max(lo));
    }
    let en = n.sqrt();
    let arg = (en + 0.12 + 0.11 / en) * d;
    // Kolmogorov survival series
    let mut p = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * arg * arg).exp();
        p += 2.0 * sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

/// Mean and standard error of a slice of draws.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
