use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::channel::ChannelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    /// Bob heterodynes both returning modes.
    Het2M,
    /// Bob homodynes both.
    Hom2M,
    /// Homodyne on B1, heterodyne on B2.
    HomHetM,
    /// Heterodyne on B1, homodyne on B2.
    HetHomM,
    OneWayHet,
    OneWayHom,
}

impl Variant {
    pub const TWO_WAY: [Variant; 4] = [Variant::Het2M, Variant::Hom2M, Variant::HomHetM, Variant::HetHomM];
    pub const ALL: [Variant; 6] = [
        Variant::Het2M,
        Variant::Hom2M,
        Variant::HomHetM,
        Variant::HetHomM,
        Variant::OneWayHet,
        Variant::OneWayHom,
    ];

    pub fn is_two_way(self) -> bool {
        !matches!(self, Variant::OneWayHet | Variant::OneWayHom)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Het2M => "het2m",
            Variant::Hom2M => "hom2m",
            Variant::HomHetM => "homhetm",
            Variant::HetHomM => "hethomm",
            Variant::OneWayHet => "oneway-het",
            Variant::OneWayHom => "oneway-hom",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect::<String>().to_lowercase();
        Ok(match key.as_str() {
            "het2m" | "het2" => Variant::Het2M,
            "hom2m" | "hom2" => Variant::Hom2M,
            "homhetm" | "homhet" => Variant::HomHetM,
            "hethomm" | "hethom" => Variant::HetHomM,
            "onewayhet" | "het" => Variant::OneWayHet,
            "onewayhom" | "hom" => Variant::OneWayHom,
            _ => return Err(Error::Parse(format!("unknown protocol variant '{s}'"))),
        })
    }
}

/// How Bob picks the C-NOT gain `k` of his post-processing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GainPolicy {
    /// `sqrt(T1 T2 T_A)`, rescaled by the heterodyne attenuation of the two
    /// combined quadratures. Reproduces the closed-form mutual information.
    #[default]
    Transmittance,
    /// `Cov(target, control) / Var(control)`, minimizing Bob's variance.
    Wiener,
    Fixed(f64),
}

impl FromStr for GainPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "transmittance" | "t" => Ok(GainPolicy::Transmittance),
            "wiener" | "w" => Ok(GainPolicy::Wiener),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|k| k.is_finite())
                .map(GainPolicy::Fixed)
                .ok_or_else(|| Error::Parse(format!("gain policy must be transmittance, wiener or a number, got '{s}'"))),
        }
    }
}

impl fmt::Display for GainPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainPolicy::Transmittance => f.write_str("transmittance"),
            GainPolicy::Wiener => f.write_str("wiener"),
            GainPolicy::Fixed(k) => write!(f, "{k}"),
        }
    }
}

/// Everything needed to evaluate one protocol at one operating point.
///
/// One-way variants use `v` and `ch2` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolScenario {
    pub variant: Variant,
    /// Bob's EPR variance.
    pub v: f64,
    /// Alice's EPR variance.
    pub v_a: f64,
    /// Alice's coupler transmittance.
    pub t_a: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    /// Bob to Alice.
    pub ch1: ChannelParams,
    /// Alice to Bob.
    pub ch2: ChannelParams,
    pub gain: GainPolicy,
}

impl ProtocolScenario {
    /// Scenario with the same channel on both legs, checked.
    pub fn symmetric(variant: Variant, v: f64, v_a: f64, t_a: f64, beta: f64, ch: ChannelParams) -> Result<Self> {
        let s = Self { variant, v, v_a, t_a, beta, ch1: ch, ch2: ch, gain: GainPolicy::default() };
        s.validate()?;
        Ok(s)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_gain(mut self, gain: GainPolicy) -> Self {
        self.gain = gain;
        self
    }

    /// Replaces both legs with `ch`.
    pub fn with_channel(mut self, ch: ChannelParams) -> Self {
        self.ch1 = ch;
        self.ch2 = ch;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 1.0 && self.v.is_finite()) {
            return Err(Error::domain(format!("V must satisfy V >= 1, got {}", self.v)));
        }
        if !(self.beta >= 0.0 && self.beta <= 1.0) {
            return Err(Error::domain(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        self.ch2.validate()?;
        if self.variant.is_two_way() {
            if !(self.v_a >= 1.0 && self.v_a.is_finite()) {
                return Err(Error::domain(format!("V_A must satisfy V_A >= 1, got {}", self.v_a)));
            }
            if !(self.t_a > 0.0 && self.t_a < 1.0) {
                return Err(Error::domain(format!("T_A must lie in (0, 1), got {}", self.t_a)));
            }
            self.ch1.validate()?;
        }
        if let GainPolicy::Fixed(k) = self.gain {
            if !k.is_finite() {
                return Err(Error::domain(format!("fixed gain must be finite, got {k}")));
            }
        }
        Ok(())
    }
}
