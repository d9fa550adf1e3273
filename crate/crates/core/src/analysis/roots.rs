use serde::Serialize;

use crate::error::{Error, Result, Warning};
use crate::protocols::{key_rate, ChannelParams, ProtocolScenario};

pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;
/// Residual below which a root is accepted.
pub const ROOT_RESIDUAL: f64 = 1e-8;
pub const EPS_TOL: f64 = 1e-6;
pub const DISTANCE_TOL_KM: f64 = 0.01;
const EPS_CAP: f64 = 64.0;
const DISTANCE_CAP_KM: f64 = 2048.0;
const PRESCAN_POINTS: usize = 32;
const MAX_ITERATIONS: usize = 200;

/// Fiber transmittance `10^(-loss d / 10)` of one leg of length `d_km`.
pub fn distance_to_transmittance(d_km: f64, loss_db_per_km: f64) -> Result<f64> {
    if !(d_km >= 0.0 && d_km.is_finite()) {
        return Err(Error::domain(format!("distance must be finite and >= 0 km, got {d_km}")));
    }
    if !(loss_db_per_km >= 0.0 && loss_db_per_km.is_finite()) {
        return Err(Error::domain(format!("fiber loss must be finite and >= 0 dB/km, got {loss_db_per_km}")));
    }
    Ok(10f64.powf(-loss_db_per_km * d_km / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    Ok,
    /// The rate is not positive at the left end, or stays positive up to the search cap.
    NoRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootResult {
    pub root: Option<f64>,
    pub status: RootStatus,
    /// `K_R` at the returned root.
    pub residual: f64,
    /// Final bracket `(positive side, non-positive side)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

impl RootResult {
    fn none(lo: f64, hi: f64, residual: f64) -> Self {
        Self { root: None, status: RootStatus::NoRoot, residual, bracket: (lo, hi), iterations: 0, warnings: vec![] }
    }
}

/// Zero of a function that is positive at `lo` and turns non-positive
/// somewhere above it. The upper end starts at `hi` and doubles up to `cap`.
/// Bisection stops once the bracket is narrower than `tol` and the residual
/// is below [`ROOT_RESIDUAL`].
fn find_crossing(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, cap: f64, tol: f64) -> Result<RootResult> {
    let f_lo = f(lo)?;
    if f_lo <= 0.0 {
        return Ok(RootResult::none(lo, lo, f_lo));
    }
    let mut hi = hi;
    let mut f_hi = f(hi)?;
    while f_hi > 0.0 {
        if hi * 2.0 > cap {
            return Ok(RootResult::none(lo, hi, f_hi));
        }
        hi *= 2.0;
        f_hi = f(hi)?;
    }

    let mut warnings = Vec::new();
    let mut sign_changes = 0;
    let mut prev = f_lo > 0.0;
    for i in 1..=PRESCAN_POINTS {
        let x = lo + (hi - lo) * i as f64 / PRESCAN_POINTS as f64;
        let pos = f(x)? > 0.0;
        if pos != prev {
            sign_changes += 1;
        }
        prev = pos;
    }
    if sign_changes > 1 {
        warnings.push(Warning::NonMonotonic { sign_changes });
    }

    let (mut a, mut b) = (lo, hi);
    let (mut best, mut best_f) = if f_hi.abs() < f_lo.abs() { (hi, f_hi) } else { (lo, f_lo) };
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        if b - a < tol && best_f.abs() < ROOT_RESIDUAL {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        iterations += 1;
        if fm.abs() < best_f.abs() {
            best = m;
            best_f = fm;
        }
        if fm > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(RootResult { root: Some(best), status: RootStatus::Ok, residual: best_f, bracket: (a, b), iterations, warnings })
}

/// Largest excess noise (applied to both legs) with a non-negative key rate
/// at fiber length `d_km`.
pub fn tolerable_epsilon(s: &ProtocolScenario, d_km: f64, loss_db_per_km: f64) -> Result<RootResult> {
    s.validate()?;
    let t = distance_to_transmittance(d_km, loss_db_per_km)?;
    let f = |eps: f64| -> Result<f64> { Ok(key_rate(&s.with_channel(ChannelParams::new(t, eps)?))?.k_r) };
    find_crossing(f, 0.0, 1.0, EPS_CAP, EPS_TOL)
}

/// Fiber length per leg at which the key rate reaches zero, at the excess
/// noise of `s.ch2` on both legs.
pub fn max_distance(s: &ProtocolScenario, loss_db_per_km: f64) -> Result<RootResult> {
    s.validate()?;
    let eps = s.ch2.eps;
    let f = |d: f64| -> Result<f64> {
        let t = distance_to_transmittance(d, loss_db_per_km)?;
        Ok(key_rate(&s.with_channel(ChannelParams::new(t, eps)?))?.k_r)
    };
    find_crossing(f, 0.0, 1.0, DISTANCE_CAP_KM, DISTANCE_TOL_KM)
}
