//! Distance conversion, root finding and parameter sweeps.

mod roots;
mod sweep;

pub use roots::{
    distance_to_transmittance, max_distance, tolerable_epsilon, RootResult, RootStatus, DEFAULT_LOSS_DB_PER_KM,
    DISTANCE_TOL_KM, EPS_TOL, ROOT_RESIDUAL,
};
pub use sweep::{sweep, write_sweep_csv, Axis, Quantity, RowStatus, SweepRow, SweepSpec, VaRule};
