//! The two-component bivariate generating models used throughout the
//! synthetic experiments.

use crate::family::{ComponentParams, FamilyKind, MixtureModel, ScaleLaw};
use crate::numkit::SymMatrix;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Cluster proximity: the second location sits at (-3, 0) when separated and
/// (-1, 0) when close.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Overlap {
    Separated,
    Close,
}

impl Overlap {
    pub fn name(&self) -> &'static str {
        match self {
            Overlap::Separated => "separated",
            Overlap::Close => "close",
        }
    }
}

impl std::fmt::Display for Overlap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The exact two-component generating model: weights (0.3, 0.7), locations
/// (-5,0) and (-3,0) or (-1,0), scales [[3,-1],[-1,3]] and [[3,1],[1,3]],
/// skewness (3,6) and (5,4), with per-family hyperparameters nu=(4,7),
/// alpha=(3,2), eta=(2,3).
pub fn make_truth(overlap: Overlap, family: FamilyKind) -> MixtureModel {
    let mu2_x = match overlap {
        Overlap::Separated => -3.0,
        Overlap::Close => -1.0,
    };
    let c1 = ComponentParams::new(
        DVector::from_row_slice(&[-5.0, 0.0]),
        SymMatrix::new(DMatrix::from_row_slice(2, 2, &[3.0, -1.0, -1.0, 3.0])).unwrap(),
        DVector::from_row_slice(&[3.0, 6.0]),
    )
    .unwrap();
    let c2 = ComponentParams::new(
        DVector::from_row_slice(&[mu2_x, 0.0]),
        SymMatrix::new(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0])).unwrap(),
        DVector::from_row_slice(&[5.0, 4.0]),
    )
    .unwrap();
    let (law1, law2) = match family {
        FamilyKind::SkewNormal => (ScaleLaw::Degenerate, ScaleLaw::Degenerate),
        FamilyKind::SkewT => (
            ScaleLaw::GammaInverse { nu: 4.0 },
            ScaleLaw::GammaInverse { nu: 7.0 },
        ),
        FamilyKind::SkewSlash => (
            ScaleLaw::BetaInverse { alpha: 3.0 },
            ScaleLaw::BetaInverse { alpha: 2.0 },
        ),
        FamilyKind::SkewVGamma => (ScaleLaw::Gamma { eta: 2.0 }, ScaleLaw::Gamma { eta: 3.0 }),
    };
    MixtureModel::new(vec![0.3, 0.7], vec![(c1, law1), (c2, law2)]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_skew_normal() {
        let m = make_truth(Overlap::Separated, FamilyKind::SkewNormal);
        assert_eq!(m.weights()[0], 0.3);
        assert_eq!(m.component(1).mu()[0], -3.0);
    }

    #[test]
    fn close_skew_t_hyperparameters() {
        let m = make_truth(Overlap::Close, FamilyKind::SkewT);
        assert_eq!(m.law(0).hyper(), Some(4.0));
        assert_eq!(m.law(1).hyper(), Some(7.0));
        assert_eq!(m.component(1).mu()[0], -1.0);
    }

    #[test]
    fn vgamma_rate_tie() {
        let m = make_truth(Overlap::Separated, FamilyKind::SkewVGamma);
        assert_eq!(m.law(0).gamma_sq(), Some(4.0));
        assert_eq!(m.law(1).gamma_sq(), Some(6.0));
    }
}
