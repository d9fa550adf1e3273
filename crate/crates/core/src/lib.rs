//! Covariance-matrix security analysis of two-way continuous-variable QKD
//! with measurement-based Gaussian operations at the sender.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod gaussian;
pub mod protocols;
pub mod sampler;

pub use error::{Error, Result, Warning};
pub use gaussian::{CovarianceMatrix, Quadrature, SpectrumMethod, SymplecticSpectrum, SymplecticTransform};
pub use protocols::{key_rate, ChannelParams, GainPolicy, ProtocolScenario, RateReport, Variant};
