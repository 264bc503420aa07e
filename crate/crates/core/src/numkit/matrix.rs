//! Symmetric-matrix primitives: validated construction, spectral
//! decompositions, PSD square roots, and positive-definite solves.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Relative tolerance for accepting a matrix as symmetric.
const SYM_TOL: f64 = 1e-12;
/// Eigenvalues below `-PSD_TOL * lambda_max` mean the matrix is not PSD;
/// values in `[-PSD_TOL * lambda_max, 0)` are clamped to zero.
const PSD_TOL: f64 = 1e-10;

/// A square symmetric matrix of `f64` entries.
///
/// Construction symmetrizes the input after checking that the asymmetry is
/// within floating-point jitter; all downstream code may then rely on exact
/// symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "SymMatrix::new",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "SymMatrix::new",
            });
        }
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let mut asym = 0.0f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if asym > SYM_TOL * scale {
            return Err(Error::NotSymmetric { asym: asym / scale });
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix(sym))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Symmetric (spectral) PSD square root: R with R R = M.
    ///
    /// Eigenvalues in `[-1e-10 * lambda_max, 0)` are clamped to zero before
    /// rooting; anything below that range is a genuine PSD violation.
    pub fn psd_sqrt(&self) -> Result<SymMatrix> {
        let spec = Spectral::new(self.as_matrix());
        let r = spec.psd_power(0.5)?;
        Ok(SymMatrix(r))
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Eigendecomposition of a symmetric matrix, with helpers for matrix powers
/// and positive-definite solves.
#[derive(Debug, Clone)]
pub struct Spectral {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl Spectral {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        Spectral {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }

    /// Condition number estimate for a PD matrix.
    pub fn condition(&self) -> f64 {
        let max = self.max_eigenvalue();
        let min = self.min_eigenvalue();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// M^p through the eigenbasis with PSD clamping; errors if M is not PSD.
    pub fn psd_power(&self, p: f64) -> Result<DMatrix<f64>> {
        let max = self.max_eigenvalue().max(0.0);
        let min = self.min_eigenvalue();
        if min < -PSD_TOL * max.max(1e-300) {
            return Err(Error::NotPsd {
                min_eig: min,
                max_eig: max,
            });
        }
        let clamped = self.values.map(|v| v.max(0.0));
        if p < 0.0 && clamped.iter().any(|&v| v == 0.0) {
            return Err(Error::NotPd { min_eig: min });
        }
        let d = DMatrix::from_diagonal(&clamped.map(|v| v.powf(p)));
        let r = &self.vectors * d * self.vectors.transpose();
        Ok((&r + r.transpose()) * 0.5)
    }

    pub fn log_determinant(&self) -> Result<f64> {
        if self.min_eigenvalue() <= 0.0 {
            return Err(Error::NotPd {
                min_eig: self.min_eigenvalue(),
            });
        }
        Ok(self.values.iter().map(|v| v.ln()).sum())
    }
}

/// Precomputed quantities of one positive-definite matrix: inverse, the
/// symmetric roots, log-determinant, and a condition estimate.
#[derive(Debug, Clone)]
pub struct PdFactors {
    pub inv: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub log_det: f64,
    pub condition: f64,
}

impl PdFactors {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let spec = Spectral::new(m);
        let min = spec.min_eigenvalue();
        if min <= 0.0 {
            return Err(Error::NotPd { min_eig: min });
        }
        let condition = spec.condition();
        if condition > 1e12 {
            return Err(Error::Singular { cond: condition });
        }
        Ok(PdFactors {
            inv: spec.psd_power(-1.0)?,
            sqrt: spec.psd_power(0.5)?,
            inv_sqrt: spec.psd_power(-0.5)?,
            log_det: spec.log_determinant()?,
            condition,
        })
    }
}

/// Mahalanobis-type quadratic form x' M x.
pub fn quad_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (m * x).dot(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_root_is_identity() {
        let m = SymMatrix::identity(4);
        let r = m.psd_sqrt().unwrap();
        assert_relative_eq!(r.as_matrix(), m.as_matrix(), epsilon = 1e-14);
    }

    #[test]
    fn diagonal_root() {
        let m = SymMatrix::from_diagonal(&[4.0, 9.0]);
        let r = m.psd_sqrt().unwrap();
        assert_relative_eq!(r.as_matrix()[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.as_matrix()[(1, 1)], 3.0, epsilon = 1e-12);
        assert_relative_eq!(r.as_matrix()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    fn random_psd(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose()
    }

    #[test]
    fn random_psd_roundtrip() {
        let mut rng = StdRng::seed_from_u64(7);
        let m = random_psd(&mut rng, 5);
        let r = SymMatrix::new(m.clone()).unwrap().psd_sqrt().unwrap();
        let back = r.as_matrix() * r.as_matrix();
        let err = (&back - &m).norm() / m.norm();
        assert!(err <= 1e-10, "relative Frobenius error {err}");
    }

    #[test]
    fn psd_roundtrip_corpus() {
        // orders 1..=8, 100 matrices total
        let mut rng = StdRng::seed_from_u64(99);
        for i in 0..100 {
            let n = 1 + (i % 8);
            let m = random_psd(&mut rng, n);
            let r = SymMatrix::new(m.clone()).unwrap().psd_sqrt().unwrap();
            let back = r.as_matrix() * r.as_matrix();
            let err = (&back - &m).norm() / m.norm().max(1e-300);
            assert!(err <= 1e-10, "order {n}: relative Frobenius error {err}");
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = SymMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(m.psd_sqrt(), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn clamps_jitter_eigenvalues() {
        // eigenvalue at -1e-12 relative to max 1.0 is inside the clamp band
        let m = SymMatrix::from_diagonal(&[1.0, -1e-12]);
        let r = m.psd_sqrt().unwrap();
        assert_relative_eq!(r.as_matrix()[(1, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    proptest! {
        #[test]
        fn prop_psd_sqrt_roundtrip(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let n = 1 + (seed % 6) as usize;
            let m = random_psd(&mut rng, n);
            let r = SymMatrix::new(m.clone()).unwrap().psd_sqrt().unwrap();
            let back = r.as_matrix() * r.as_matrix();
            let err = (&back - &m).norm() / m.norm().max(1e-300);
            prop_assert!(err <= 1e-10);
        }
    }
}
