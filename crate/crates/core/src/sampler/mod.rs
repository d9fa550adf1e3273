//! Shot-level emulation of the Het2M measurement record and parameter estimation.

mod emulate;
mod estimate;
mod shots;

pub use emulate::{
    key_rate_from_samples, SampledReport, BOOTSTRAP_RESAMPLES, INTERVAL_SIGMAS, MAX_BLOCKS, PROJECTION_SIGMAS,
};
pub use estimate::{estimate_cm, estimate_from_sums, x_basis_fraction, EstimatedCM, MomentSums, MIN_SHOTS};
pub use shots::{read_shots_csv, sample_shots, write_shots_csv, ShotRecord, ShotSet, MEASURED_COLUMNS};
