//! Sampling from the scale-mixture family through its stochastic
//! representation: X = mu + T Delta + sqrt(K) Sigma^{1/2} (I - dd')^{1/2} Z
//! with T = sqrt(K) |N(0,1)| and Z a standard normal vector.

use crate::error::Result;
use crate::family::{ComponentParams, MixtureModel, ScaleLaw};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Draws `n` rows from one component; deterministic under a fixed RNG state.
pub fn sample_smsn<R: Rng + ?Sized>(
    params: &ComponentParams,
    law: &ScaleLaw,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = params.dim();
    let shaper = noise_shaper(params);
    let mut out = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        let row = draw_one(params, law, &shaper, rng, &mut z);
        out.set_row(i, &row.transpose());
    }
    Ok(out)
}

/// Draws `n` rows from the mixture along with their component labels.
pub fn sample_mixture<R: Rng + ?Sized>(
    model: &MixtureModel,
    n: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let p = model.dim();
    let shapers: Vec<DMatrix<f64>> = model
        .components()
        .iter()
        .map(|(c, _)| noise_shaper(c))
        .collect();
    let mut out = DMatrix::zeros(n, p);
    let mut labels = Vec::with_capacity(n);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        let v: f64 = rng.gen();
        let mut acc = 0.0;
        let mut g = model.n_components() - 1;
        for (j, &w) in model.weights().iter().enumerate() {
            acc += w;
            if v < acc {
                g = j;
                break;
            }
        }
        let (params, law) = &model.components()[g];
        let row = draw_one(params, law, &shapers[g], rng, &mut z);
        out.set_row(i, &row.transpose());
        labels.push(g);
    }
    Ok((out, labels))
}

/// Sigma^{1/2} (I - delta delta')^{1/2}, using the rank-one closed form of
/// the square root.
fn noise_shaper(params: &ComponentParams) -> DMatrix<f64> {
    let p = params.dim();
    let d = params.small_delta();
    let n2 = d.norm_squared();
    let root = if n2 > 1e-14 {
        let c = (1.0 - (1.0 - n2).sqrt()) / n2;
        DMatrix::identity(p, p) - d * d.transpose() * c
    } else {
        DMatrix::identity(p, p)
    };
    params.sigma_sqrt() * root
}

fn draw_one<R: Rng + ?Sized>(
    params: &ComponentParams,
    law: &ScaleLaw,
    shaper: &DMatrix<f64>,
    rng: &mut R,
    z: &mut DVector<f64>,
) -> DVector<f64> {
    let u = law.sample_u(rng);
    let k = law.kappa(u);
    let t0: f64 = {
        let v: f64 = StandardNormal.sample(rng);
        v.abs()
    };
    let t = k.sqrt() * t0;
    for j in 0..z.len() {
        z[j] = StandardNormal.sample(rng);
    }
    params.mu() + params.delta() * t + (shaper * &*z) * k.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::moments::smsn_moments;
    use crate::numkit::SymMatrix;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_component() -> ComponentParams {
        ComponentParams::new(
            DVector::from_row_slice(&[1.0, -2.0]),
            SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap(),
            DVector::zeros(2),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_reduction_mean_cov() {
        let c = gaussian_component();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let draws = sample_smsn(&c, &ScaleLaw::Degenerate, n, &mut rng).unwrap();
        for j in 0..2 {
            let mean = draws.column(j).mean();
            let sd = (c.sigma().as_matrix()[(j, j)] / n as f64).sqrt();
            assert!(
                (mean - c.mu()[j]).abs() <= 3.0 * sd,
                "column {j} mean {mean}"
            );
        }
        // covariance entries within 3 binomial-ish standard errors
        let mu_hat = [draws.column(0).mean(), draws.column(1).mean()];
        let mut cov = [[0.0; 2]; 2];
        for i in 0..n {
            for a in 0..2 {
                for b in 0..2 {
                    cov[a][b] += (draws[(i, a)] - mu_hat[a]) * (draws[(i, b)] - mu_hat[b]);
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                let est = cov[a][b] / (n as f64 - 1.0);
                let truth = c.sigma().as_matrix()[(a, b)];
                // var of sample covariance ~ (s_aa s_bb + s_ab^2)/n
                let se = ((c.sigma().as_matrix()[(a, a)] * c.sigma().as_matrix()[(b, b)]
                    + truth * truth)
                    / n as f64)
                    .sqrt();
                assert!((est - truth).abs() <= 3.0 * se);
            }
        }
    }

    #[test]
    fn equal_seeds_identical_output() {
        let c = gaussian_component();
        let law = ScaleLaw::GammaInverse { nu: 4.0 };
        let a = sample_smsn(&c, &law, 500, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_smsn(&c, &law, 500, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_matches_analytic_moments_every_law() {
        let c = ComponentParams::new(
            DVector::from_row_slice(&[-5.0, 0.0]),
            SymMatrix::new(DMatrix::from_row_slice(2, 2, &[3.0, -1.0, -1.0, 3.0])).unwrap(),
            DVector::from_row_slice(&[3.0, 6.0]),
        )
        .unwrap();
        let laws = [
            ScaleLaw::Degenerate,
            ScaleLaw::GammaInverse { nu: 4.0 },
            ScaleLaw::BetaInverse { alpha: 3.0 },
            ScaleLaw::Gamma { eta: 2.0 },
        ];
        let n = 1_000_000;
        for (li, law) in laws.iter().enumerate() {
            let (mean, cov) = smsn_moments(&c, law).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(900 + li as u64);
            let draws = sample_smsn(&c, law, n, &mut rng).unwrap();
            for j in 0..2 {
                let m = draws.column(j).mean();
                let var_j = cov.as_matrix()[(j, j)];
                let se = (var_j / n as f64).sqrt();
                assert!(
                    (m - mean[j]).abs() <= 3.0 * se,
                    "law {li} col {j}: {m} vs {} (se {se})",
                    mean[j]
                );
            }
            // covariance check with empirical fourth-moment standard errors
            let mu_hat = [draws.column(0).mean(), draws.column(1).mean()];
            for a in 0..2 {
                for b in a..2 {
                    let mut s = 0.0;
                    let mut s2 = 0.0;
                    for i in 0..n {
                        let v = (draws[(i, a)] - mu_hat[a]) * (draws[(i, b)] - mu_hat[b]);
                        s += v;
                        s2 += v * v;
                    }
                    let est = s / n as f64;
                    let se = ((s2 / n as f64 - est * est) / n as f64).sqrt();
                    let truth = cov.as_matrix()[(a, b)];
                    assert!(
                        (est - truth).abs() <= 3.0 * se,
                        "law {li} cov[{a}{b}]: {est} vs {truth} (se {se})"
                    );
                }
            }
        }
    }

    #[test]
    fn histogram_matches_density_chi_square() {
        // skew-t with the experiment-design parameters, 2-d histogram GOF
        let c = ComponentParams::new(
            DVector::from_row_slice(&[-5.0, 0.0]),
            SymMatrix::new(DMatrix::from_row_slice(2, 2, &[3.0, -1.0, -1.0, 3.0])).unwrap(),
            DVector::from_row_slice(&[3.0, 6.0]),
        )
        .unwrap();
        let law = ScaleLaw::GammaInverse { nu: 4.0 };
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = sample_smsn(&c, &law, n, &mut rng).unwrap();

        let (x0, x1, nx) = (-12.0, 2.0, 12);
        let (y0, y1, ny) = (-5.0, 10.0, 12);
        let hx = (x1 - x0) / nx as f64;
        let hy = (y1 - y0) / ny as f64;
        let mut counts = vec![0usize; nx * ny];
        let mut outside = 0usize;
        for i in 0..n {
            let (a, b) = (draws[(i, 0)], draws[(i, 1)]);
            if a < x0 || a >= x1 || b < y0 || b >= y1 {
                outside += 1;
                continue;
            }
            let ix = ((a - x0) / hx) as usize;
            let iy = ((b - y0) / hy) as usize;
            counts[ix * ny + iy] += 1;
        }
        // expected mass per cell by 12x12 midpoint quadrature of the density
        let mut chi2 = 0.0;
        let mut dof = 0usize;
        let mut kept = 0usize;
        const SUB: usize = 12;
        for ix in 0..nx {
            for iy in 0..ny {
                let mut mass = 0.0;
                for sx in 0..SUB {
                    for sy in 0..SUB {
                        let px = x0 + (ix as f64 + (sx as f64 + 0.5) / SUB as f64) * hx;
                        let py = y0 + (iy as f64 + (sy as f64 + 0.5) / SUB as f64) * hy;
                        let x = DVector::from_row_slice(&[px, py]);
                        mass += crate::family::smsn_logpdf(&x, &c, &law).unwrap().exp();
                    }
                }
                mass *= hx * hy / (SUB * SUB) as f64;
                let expected = mass * n as f64;
                if expected >= 5.0 {
                    let obs = counts[ix * ny + iy] as f64;
                    chi2 += (obs - expected).powi(2) / expected;
                    dof += 1;
                    kept += counts[ix * ny + iy];
                }
            }
        }
        assert!(dof > 20, "need enough populated cells");
        let _ = (outside, kept);
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let dist = ChiSquared::new((dof - 1) as f64).unwrap();
        let p_value = 1.0 - dist.cdf(chi2);
        assert!(
            p_value > 0.01,
            "chi-square GOF rejected: chi2 = {chi2:.1}, dof = {dof}, p = {p_value:.4}"
        );
    }
}
