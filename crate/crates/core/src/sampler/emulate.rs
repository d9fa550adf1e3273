//! Key rate from a shot record, with a bootstrap confidence interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::estimate::{estimate_from_sums, EstimatedCM, MomentSums, MIN_SHOTS};
use super::shots::ShotRecord;
use crate::error::{Error, Result, Warning};
use crate::gaussian::{
    heterodyne_recombine, heterodyne_split, inflate_to_physical, reduce_labels, CovarianceMatrix, SpectrumMethod,
};
use crate::protocols::{
    cm_transmittance_gain, key_rate_from_cm, wiener_gain, GainPolicy, ProtocolScenario, RateReport, Variant,
    HET2M_LABELS,
};

pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Upper limit on the number of contiguous blocks resampled by the bootstrap.
pub const MAX_BLOCKS: usize = 1024;
/// The physicality repair may inflate the diagonal by at most this many standard errors.
pub const PROJECTION_SIGMAS: f64 = 5.0;
/// Half-width of the reported interval in bootstrap standard deviations.
pub const INTERVAL_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledReport {
    pub report: RateReport,
    /// `K_R` estimate minus and plus three bootstrap standard deviations.
    pub interval: (f64, f64),
    /// Bootstrap standard deviation of `K_R`.
    pub sigma: f64,
    pub n_shots: usize,
    /// Resamples whose estimate could not be evaluated.
    pub failed_resamples: usize,
    #[serde(skip)]
    pub estimate: EstimatedCM,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

/// Alice's and Bob's heterodyned modes; their split ports are recombined
/// before the physicality repair so the splitting vacua stay exact.
const SPLIT_MODES: [&str; 3] = ["B2", "B1", "A1"];

/// Repairs the estimate and evaluates the rate.
///
/// The heterodyne ports are recombined into the four-mode state, whose
/// diagonal is inflated by `c` Gaussian standard errors `Gamma_ii sqrt(2/n)`
/// until it is physical, and then split again. With `strict`, `c` above
/// [`PROJECTION_SIGMAS`] is an error.
fn rate_of(est: &EstimatedCM, s: &ProtocolScenario, strict: bool) -> Result<(RateReport, Option<Warning>)> {
    let mut four = est.to_cm()?;
    for l in SPLIT_MODES {
        let x = four.mode_index(&format!("{l}X"))?;
        let p = four.mode_index(&format!("{l}P"))?;
        four = heterodyne_recombine(&four, x, p, l)?;
    }
    let m = four.matrix();
    let scale = (2.0 / est.n_shots as f64).sqrt();
    let weights: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].abs().max(1.0) * scale).collect();
    let (repaired, c) = inflate_to_physical(m, &weights)?;
    if strict && c > PROJECTION_SIGMAS {
        return Err(Error::Physicality(format!(
            "estimate needs {c:.2} standard errors of diagonal inflation to become physical \
             (limit {PROJECTION_SIGMAS})"
        )));
    }
    let warning = (c > 0.0).then(|| Warning::Projected { max_shift: c * weights.iter().cloned().fold(0.0, f64::max) });
    let four = CovarianceMatrix::new(repaired, four.labels().to_vec())?;
    let idx = SPLIT_MODES.iter().map(|l| four.mode_index(l)).collect::<Result<Vec<_>>>()?;
    let cm = reduce_labels(&heterodyne_split(&four, &idx)?, &HET2M_LABELS)?;
    let k = match s.gain {
        GainPolicy::Transmittance => cm_transmittance_gain(&cm, Variant::Het2M, s.v)?,
        GainPolicy::Wiener => wiener_gain(&cm, Variant::Het2M)?,
        GainPolicy::Fixed(k) => k,
    };
    let report = key_rate_from_cm(&cm, Variant::Het2M, s.beta, Some(k), SpectrumMethod::Generic)?;
    Ok((report, warning))
}

/// Estimates the state from `shots`, evaluates the Het2M key rate and
/// brackets it with a block bootstrap of [`BOOTSTRAP_RESAMPLES`] resamples.
///
/// `meta` supplies Bob's EPR variance, `beta` and the gain policy; its
/// channel fields are not used. Resampling is driven by `seed`.
pub fn key_rate_from_samples(shots: &[ShotRecord], meta: &ProtocolScenario, seed: u64) -> Result<SampledReport> {
    if meta.variant != Variant::Het2M {
        return Err(Error::domain("shot-level emulation covers the Het2M protocol only"));
    }
    meta.validate()?;
    let n = shots.len();
    if n < MIN_SHOTS {
        return Err(Error::InsufficientData(format!("need at least {MIN_SHOTS} shots, got {n}")));
    }

    let n_blocks = n.min(MAX_BLOCKS);
    let blocks: Vec<MomentSums> = (0..n_blocks)
        .into_par_iter()
        .map(|b| MomentSums::from_shots(&shots[b * n / n_blocks..(b + 1) * n / n_blocks]))
        .collect();
    let total = blocks.iter().fold(MomentSums::default(), |mut acc, b| {
        acc.merge(b);
        acc
    });

    let (mut estimate, mut warnings) = estimate_from_sums(&total)?;
    estimate.seed = Some(seed);
    if warnings.iter().any(|w| matches!(w, Warning::Degenerate(_))) {
        return Err(Error::Degenerate("shot record carries no signal".into()));
    }
    let (report, w) = rate_of(&estimate, meta, true)?;
    warnings.extend(w);

    let base = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Option<f64>> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|r| {
            let mut rng = base.clone();
            rng.set_stream(r as u64);
            rng.set_word_pos(0);
            let mut sums = MomentSums::default();
            for _ in 0..n_blocks {
                sums.merge(&blocks[rng.random_range(0..n_blocks)]);
            }
            let (est, _) = estimate_from_sums(&sums).ok()?;
            rate_of(&est, meta, false).ok().map(|(r, _)| r.k_r)
        })
        .collect();
    let ok: Vec<f64> = draws.iter().flatten().copied().collect();
    let failed = BOOTSTRAP_RESAMPLES - ok.len();
    if ok.len() < BOOTSTRAP_RESAMPLES / 2 {
        return Err(Error::InsufficientData(format!(
            "{failed} of {BOOTSTRAP_RESAMPLES} bootstrap resamples could not be evaluated"
        )));
    }
    let m = ok.iter().sum::<f64>() / ok.len() as f64;
    let sigma = (ok.iter().map(|k| (k - m).powi(2)).sum::<f64>() / (ok.len() - 1) as f64).sqrt();
    let k = report.k_r;
    Ok(SampledReport {
        interval: (k - INTERVAL_SIGMAS * sigma, k + INTERVAL_SIGMAS * sigma),
        report,
        sigma,
        n_shots: n,
        failed_resamples: failed,
        estimate,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{build_het2m_closed_form, key_rate, ChannelParams};
    use crate::sampler::sample_shots;

    fn scenario() -> ProtocolScenario {
        let t = 10f64.powf(-0.02 * 20.0);
        ProtocolScenario::symmetric(Variant::Het2M, 100.0, 100.0, 0.8, 0.99, ChannelParams::new(t, 0.2).unwrap())
            .unwrap()
    }

    #[test]
    fn exact_moments_reproduce_analytic_rate() {
        // a huge sample lands close to the analytic value
        let s = scenario();
        let set = sample_shots(&build_het2m_closed_form(&s).unwrap(), 200_000, 3).unwrap();
        let r = key_rate_from_samples(&set.shots, &s, 3).unwrap();
        let exact = key_rate(&s).unwrap().k_r;
        assert!(r.interval.0 <= exact && exact <= r.interval.1, "{:?} vs {exact}", r.interval);
        assert!(r.sigma > 0.0);
    }

    #[test]
    fn same_seed_same_report() {
        let s = scenario();
        let set = sample_shots(&build_het2m_closed_form(&s).unwrap(), 5_000, 9).unwrap();
        let a = key_rate_from_samples(&set.shots, &s, 9).unwrap();
        let b = key_rate_from_samples(&set.shots, &s, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_other_variants_and_short_records() {
        let s = scenario();
        let set = sample_shots(&build_het2m_closed_form(&s).unwrap(), 50, 1).unwrap();
        assert!(matches!(key_rate_from_samples(&set.shots, &s, 1), Err(Error::InsufficientData(_))));
        let hom = s.with_variant(Variant::Hom2M);
        assert!(key_rate_from_samples(&set.shots, &hom, 1).is_err());
    }
}
