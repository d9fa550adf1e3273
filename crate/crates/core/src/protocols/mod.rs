//! Covariance matrices, post-processing and key rates of the two-way
//! protocol family and the one-way baselines.

mod builders;
mod channel;
mod holevo;
mod rate;
mod scenario;

pub use builders::{
    build_constructive, build_het2m_closed_form, build_het2m_constructive, heterodyne_modes,
    pre_heterodyne_closed_form, variant_cm, EVE_LABELS, HET2M_LABELS, PRE_LABELS,
};
pub use channel::ChannelParams;
pub use holevo::{
    bob_postprocess, cm_transmittance_gain, estimator_gain, holevo_bound, holevo_bound_het2m, measured_quadratures,
    postprocess, transmittance_gain, wiener_gain, HolevoBound,
};
pub use rate::{
    detected_cm, key_rate, key_rate_from_cm, key_rate_with, mutual_info_from_cm, mutual_info_het2m,
    mutual_info_variant, RateReport,
};
pub use scenario::{GainPolicy, ProtocolScenario, Variant};
