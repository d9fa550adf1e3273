use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::roots::{distance_to_transmittance, max_distance, tolerable_epsilon, RootStatus};
use crate::error::{Error, Result};
use crate::gaussian::fmt_num;
use crate::protocols::{key_rate, ChannelParams, ProtocolScenario, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    DistanceKm,
    Epsilon,
    Beta,
    TA,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::DistanceKm => "distance_km",
            Axis::Epsilon => "epsilon",
            Axis::Beta => "beta",
            Axis::TA => "T_A",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "distance_km" | "distance" | "dist" | "d" => Ok(Axis::DistanceKm),
            "epsilon" | "eps" => Ok(Axis::Epsilon),
            "beta" => Ok(Axis::Beta),
            "t_a" | "ta" => Ok(Axis::TA),
            _ => Err(Error::Parse(format!("unknown sweep axis '{s}' (distance_km, epsilon, beta, T_A)"))),
        }
    }
}

/// What each grid point reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    KeyRate,
    TolerableEpsilon,
    MaxDistance,
}

impl Quantity {
    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Quantity::KeyRate => "K_R",
            Quantity::TolerableEpsilon => "eps_star",
            Quantity::MaxDistance => "d_star",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().replace('-', "_").as_str() {
            "key_rate" | "keyrate" | "k_r" => Ok(Quantity::KeyRate),
            "tolerable_epsilon" | "tolerable_noise" | "eps_star" => Ok(Quantity::TolerableEpsilon),
            "max_distance" | "d_star" => Ok(Quantity::MaxDistance),
            _ => Err(Error::Parse(format!("unknown sweep quantity '{s}'"))),
        }
    }
}

/// How Alice's EPR variance follows the other parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VaRule {
    /// Use the base scenario's `V_A`.
    #[default]
    Fixed,
    /// `V_A = V / (1 - T_A)`, keeping the modulation reaching the channel at `V`.
    CouplerScaled,
}

impl VaRule {
    pub fn apply(self, s: &mut ProtocolScenario) {
        if self == VaRule::CouplerScaled {
            s.v_a = s.v / (1.0 - s.t_a);
        }
    }
}

/// A one-dimensional sweep over symmetric channels (same `T` and `eps` on
/// both legs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variants: Vec<Variant>,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub quantity: Quantity,
    /// Fixed fields; its `ch2` supplies `eps` (and `T` unless a distance is set).
    pub base: ProtocolScenario,
    /// Fiber length per leg when the axis is not distance.
    pub distance_km: Option<f64>,
    pub loss_db_per_km: f64,
    pub va_rule: VaRule,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("sweep grid must be strictly increasing"));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sweep grid values must be finite"));
        }
        if self.axis == Axis::DistanceKm && self.grid.first().is_some_and(|&d| d < 0.0) {
            return Err(Error::domain("distances must be >= 0 km"));
        }
        match (self.quantity, self.axis) {
            (Quantity::TolerableEpsilon, Axis::Epsilon) => {
                return Err(Error::domain("tolerable-noise sweeps cannot run along the epsilon axis"))
            }
            (Quantity::MaxDistance, Axis::DistanceKm) => {
                return Err(Error::domain("max-distance sweeps cannot run along the distance axis"))
            }
            _ => {}
        }
        if self.variants.is_empty() {
            return Err(Error::domain("sweep needs at least one variant"));
        }
        self.base.ch2.validate()
    }

    /// Scenario and fiber length at one grid point.
    fn point(&self, variant: Variant, value: f64) -> Result<(ProtocolScenario, Option<f64>)> {
        let mut s = self.base.with_variant(variant);
        let mut eps = s.ch2.eps;
        let mut dist = self.distance_km;
        match self.axis {
            Axis::DistanceKm => dist = Some(value),
            Axis::Epsilon => eps = value,
            Axis::Beta => s.beta = value,
            Axis::TA => s.t_a = value,
        }
        let t = match dist {
            Some(d) => distance_to_transmittance(d, self.loss_db_per_km)?,
            None => s.ch2.t,
        };
        s = s.with_channel(ChannelParams::new(t, eps)?);
        self.va_rule.apply(&mut s);
        s.validate()?;
        Ok((s, dist))
    }

    fn evaluate(&self, variant: Variant, value: f64) -> SweepRow {
        let outcome = self.point(variant, value).and_then(|(s, dist)| match self.quantity {
            Quantity::KeyRate => {
                let k = key_rate(&s)?.k_r;
                Ok((Some(k), if k > 0.0 { RowStatus::Ok } else { RowStatus::NegativeRate }))
            }
            Quantity::TolerableEpsilon => {
                let d = dist.ok_or_else(|| Error::domain("tolerable-noise sweeps need a distance"))?;
                root_row(tolerable_epsilon(&s, d, self.loss_db_per_km)?)
            }
            Quantity::MaxDistance => root_row(max_distance(&s, self.loss_db_per_km)?),
        });
        let (result, status) = outcome.unwrap_or_else(|e| (None, RowStatus::Error(e.to_string())));
        SweepRow { axis: self.axis, value, variant, result, status }
    }
}

fn root_row(r: super::roots::RootResult) -> Result<(Option<f64>, RowStatus)> {
    Ok(match r.status {
        RootStatus::Ok => (r.root, RowStatus::Ok),
        RootStatus::NoRoot => (None, RowStatus::NoRoot),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    NegativeRate,
    NoRoot,
    /// The point could not be evaluated; the rest of the sweep still runs.
    Error(String),
}

impl RowStatus {
    pub fn as_str(&self) -> &str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::NegativeRate => "negative_rate",
            RowStatus::NoRoot => "no_root",
            RowStatus::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub variant: Variant,
    /// `K_R`, `eps*` or `d*` depending on the sweep quantity.
    pub result: Option<f64>,
    pub status: RowStatus,
}

/// Evaluates every `(grid value, variant)` pair, grid-major, in parallel.
/// Row order and content do not depend on scheduling.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points: Vec<(f64, Variant)> =
        spec.grid.iter().flat_map(|&x| spec.variants.iter().map(move |&v| (x, v))).collect();
    Ok(points.par_iter().map(|&(x, v)| spec.evaluate(v, x)).collect())
}

/// Writes rows as `axis,value,variant,<quantity>,status`. Missing results
/// are empty fields; the header is always written.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], quantity: Quantity, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["axis", "value", "variant", quantity.column(), "status"])?;
    for r in rows {
        let result = r.result.map(fmt_num).unwrap_or_default();
        wr.write_record([r.axis.as_str(), &fmt_num(r.value), r.variant.as_str(), &result, r.status.as_str()])?;
    }
    wr.flush()?;
    Ok(())
}
