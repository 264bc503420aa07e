//! Densities, moments, and samplers for the multivariate skew-normal and its
//! scale-mixture family, the truncated normal, and the mixture density.

pub mod density;
pub mod law;
pub mod moments;
pub mod params;
pub mod sample;

pub use density::{mixture_logpdf, smsn_logpdf, sn_logpdf};
pub use law::{FamilyKind, ScaleLaw};
pub use moments::{smsn_moments, truncnorm_moments, TruncNormVariance};
pub use params::{ComponentParams, MixtureModel};
pub use sample::{sample_mixture, sample_smsn};
