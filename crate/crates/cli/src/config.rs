//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! A config file holds one table per named run; `--section` picks one, and a
//! file without tables is read as a single run. Flags always win.

use std::path::{Path, PathBuf};

use clap::Args;
use cvqkd::analysis::{distance_to_transmittance, VaRule, DEFAULT_LOSS_DB_PER_KM};
use cvqkd::{ChannelParams, Error, GainPolicy, ProtocolScenario, Result, SpectrumMethod, Variant};
use serde::Deserialize;

/// Every field a run can take from a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub variant: Option<String>,
    pub variants: Option<Vec<String>>,
    #[serde(rename = "V")]
    pub v: Option<f64>,
    #[serde(rename = "VA")]
    pub v_a: Option<f64>,
    #[serde(rename = "TA")]
    pub t_a: Option<f64>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub dist: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub loss: Option<f64>,
    pub gain: Option<String>,
    pub method: Option<String>,
    pub axis: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub range: Option<String>,
    pub quantity: Option<String>,
    pub va_rule: Option<String>,
    pub seed: Option<u64>,
    pub n_shots: Option<usize>,
    pub output: Option<PathBuf>,
    pub shots_output: Option<PathBuf>,
    pub estimate_output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path, section: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table =
            text.parse().map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
        let chosen = match section {
            Some(name) => match table.get(name) {
                Some(toml::Value::Table(t)) => t.clone(),
                _ => return Err(Error::Parse(format!("config {} has no section [{name}]", path.display()))),
            },
            None => {
                if table.values().any(|v| v.is_table()) {
                    let names: Vec<&str> = table.iter().filter(|(_, v)| v.is_table()).map(|(k, _)| k.as_str()).collect();
                    return Err(Error::Parse(format!("config has sections; pick one with --section ({})", names.join(", "))));
                }
                table
            }
        };
        chosen.try_into().map_err(|e: toml::de::Error| Error::Parse(format!("config {}: {e}", path.display())))
    }
}

/// Scenario flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Table of the config file to use.
    #[arg(long, requires = "config")]
    pub section: Option<String>,
    /// het2m, hom2m, homhetm, hethomm, oneway-het or oneway-hom.
    #[arg(long)]
    pub variant: Option<String>,
    /// Bob's EPR variance (shot-noise units).
    #[arg(long = "V")]
    pub v: Option<f64>,
    /// Alice's EPR variance; defaults to V.
    #[arg(long = "VA")]
    pub v_a: Option<f64>,
    /// Alice's coupler transmittance.
    #[arg(long = "TA")]
    pub t_a: Option<f64>,
    /// Reconciliation efficiency.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Excess noise on each leg (shot-noise units).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Fiber length per leg in km.
    #[arg(long, conflicts_with = "t")]
    pub dist: Option<f64>,
    /// Channel transmittance per leg, instead of a distance.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Fiber loss in dB/km.
    #[arg(long)]
    pub loss: Option<f64>,
    /// Bob's gain: transmittance, wiener or a number.
    #[arg(long)]
    pub gain: Option<String>,
}

macro_rules! pick {
    ($flag:expr, $file:expr) => {
        $flag.clone().or_else(|| $file.clone())
    };
}

/// Flags merged over the file, before validation.
#[derive(Debug, Clone)]
pub struct Merged {
    pub file: FileConfig,
    pub args: ScenarioArgs,
}

impl Merged {
    pub fn new(args: &ScenarioArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p, args.section.as_deref())?,
            None => FileConfig::default(),
        };
        Ok(Self { file, args: args.clone() })
    }

    pub fn loss(&self) -> Result<f64> {
        let loss = pick!(self.args.loss, self.file.loss).unwrap_or(DEFAULT_LOSS_DB_PER_KM);
        if !(loss >= 0.0 && loss.is_finite()) {
            return Err(Error::Domain(format!("loss must be finite and >= 0 dB/km, got {loss}")));
        }
        Ok(loss)
    }

    pub fn dist(&self) -> Option<f64> {
        pick!(self.args.dist, self.file.dist)
    }

    fn transmittance(&self) -> Option<f64> {
        pick!(self.args.t, self.file.t)
    }

    pub fn variant(&self) -> Result<Variant> {
        pick!(self.args.variant, self.file.variant).as_deref().unwrap_or("het2m").parse()
    }

    /// Scenario with the channel transmittance taken from `dist` or `T`.
    /// With `need_channel` false and neither given, the channel is ideal
    /// (callers then overwrite it).
    pub fn scenario(&self, need_channel: bool) -> Result<ProtocolScenario> {
        let v = pick!(self.args.v, self.file.v).ok_or_else(|| Error::Domain("V is required (--V)".into()))?;
        let v_a = pick!(self.args.v_a, self.file.v_a).unwrap_or(v);
        let t_a = pick!(self.args.t_a, self.file.t_a).unwrap_or(0.8);
        let beta = pick!(self.args.beta, self.file.beta).unwrap_or(0.99);
        let eps = pick!(self.args.eps, self.file.eps).unwrap_or(0.0);
        // a flag for either dist or T replaces whatever the file sets
        let t = match (self.args.dist, self.args.t, self.dist(), self.transmittance()) {
            (Some(d), _, _, _) => distance_to_transmittance(d, self.loss()?)?,
            (None, Some(t), _, _) => t,
            (None, None, Some(d), None) => distance_to_transmittance(d, self.loss()?)?,
            (None, None, None, Some(t)) => t,
            (None, None, Some(_), Some(_)) => {
                return Err(Error::Domain("config sets both dist and T; keep one".into()))
            }
            (None, None, None, None) if !need_channel => 1.0,
            (None, None, None, None) => return Err(Error::Domain("either --dist or --T is required".into())),
        };
        let gain = match pick!(self.args.gain, self.file.gain) {
            Some(g) => g.parse()?,
            None => GainPolicy::default(),
        };
        let mut s = ProtocolScenario::symmetric(self.variant()?, v, v_a, t_a, beta, ChannelParams::new(t, eps)?)?;
        s.gain = gain;
        Ok(s)
    }

    pub fn method(&self, flag: Option<&str>) -> Result<SpectrumMethod> {
        match flag.map(str::to_string).or_else(|| self.file.method.clone()).as_deref() {
            None | Some("generic") => Ok(SpectrumMethod::Generic),
            Some("quartic") => Ok(SpectrumMethod::Quartic),
            Some(m) => Err(Error::Parse(format!("method must be generic or quartic, got '{m}'"))),
        }
    }
}

pub fn parse_va_rule(s: &str) -> Result<VaRule> {
    match s.to_lowercase().replace('-', "_").as_str() {
        "fixed" => Ok(VaRule::Fixed),
        "coupler_scaled" | "scaled" => Ok(VaRule::CouplerScaled),
        _ => Err(Error::Parse(format!("va_rule must be fixed or coupler_scaled, got '{s}'"))),
    }
}

/// `start:stop:count`, inclusive, evenly spaced.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("range must look like start:stop:count, got '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    })
}
