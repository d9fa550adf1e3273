use serde::Serialize;

use super::builders::{build_constructive, build_het2m_closed_form, heterodyne_modes, pre_heterodyne_closed_form};
use super::holevo::{estimator_gain, holevo_bound, postprocess, HolevoBound};
use super::scenario::{ProtocolScenario, Variant};
use crate::error::{Error, Result};
use crate::gaussian::{heterodyne_split, CovarianceMatrix, Quadrature, SpectrumMethod};

/// `F = 2V - 2 sqrt(V^2 - 1) + chi1`, with the difference evaluated stably.
fn f_term(v: f64, chi1: f64) -> f64 {
    2.0 / (v + (v * v - 1.0).sqrt()) + chi1
}

/// Alice-Bob mutual information of Het2M in bits:
///
/// `log2[(1 + T1 T2 T_A (1+F) + T2 (V_A - T_A V_A + chi2)) / (1 + T1 T2 T_A (1+F) + T2 (1 - T_A + chi2))]`
pub fn mutual_info_het2m(s: &ProtocolScenario) -> f64 {
    let (t1, t2, ta, va) = (s.ch1.t, s.ch2.t, s.t_a, s.v_a);
    let x2 = s.ch2.chi();
    let f = f_term(s.v, s.ch1.chi());
    let common = 1.0 + t1 * t2 * ta * (1.0 + f);
    ((common + t2 * (va - ta * va + x2)) / (common + t2 * (1.0 - ta + x2))).log2()
}

/// Closed-form mutual information of any two-way variant.
pub fn mutual_info_variant(s: &ProtocolScenario) -> Result<f64> {
    let (t1, t2, ta, va) = (s.ch1.t, s.ch2.t, s.t_a, s.v_a);
    let x2 = s.ch2.chi();
    let f = f_term(s.v, s.ch1.chi());
    let ratio = match s.variant {
        Variant::Het2M => return Ok(mutual_info_het2m(s)),
        Variant::Hom2M => (va - ta * va + ta * t1 * f + x2) / (1.0 - ta + ta * t1 * f + x2),
        Variant::HomHetM => {
            let common = 1.0 + t1 * t2 * ta * f;
            (common + t2 * (va - ta * va + x2)) / (common + t2 * (1.0 - ta + x2))
        }
        Variant::HetHomM => {
            (va - ta * va + ta * t1 * (1.0 + f) + x2) / (1.0 - ta + ta * t1 * (1.0 + f) + x2)
        }
        Variant::OneWayHet | Variant::OneWayHom => {
            return Err(Error::domain("one-way mutual information comes from the state, not a formula"))
        }
    };
    Ok(0.5 * ratio.log2())
}

/// `(Alice mode, quadrature, Bob mode, quadrature)` pairs carrying the key.
fn key_pairs(variant: Variant) -> &'static [(&'static str, &'static str, Quadrature)] {
    match variant {
        Variant::Het2M => &[("A1X", "B4", Quadrature::X), ("A1P", "B6", Quadrature::P)],
        Variant::Hom2M | Variant::HomHetM | Variant::HetHomM => &[("A1X", "B4", Quadrature::X)],
        Variant::OneWayHet => &[("AX", "BX", Quadrature::X), ("AP", "BP", Quadrature::P)],
        Variant::OneWayHom => &[("AX", "B", Quadrature::X)],
    }
}

/// Mutual information from a post-processed state: for each key quadrature,
/// `1/2 log2(Var(a) / Var(a | b))`.
pub fn mutual_info_from_cm(gamma_ab: &CovarianceMatrix, variant: Variant) -> Result<f64> {
    let mut total = 0.0;
    for (a, b, q) in key_pairs(variant) {
        let (ia, ib) = (gamma_ab.mode_index(a)?, gamma_ab.mode_index(b)?);
        let va = gamma_ab.cov(ia, *q, ia, *q);
        let vb = gamma_ab.cov(ib, *q, ib, *q);
        let c = gamma_ab.cov(ia, *q, ib, *q);
        let cond = va - c * c / vb;
        if !(cond > 0.0) {
            return Err(Error::Numerical(format!("non-positive conditional variance {cond:.3e} for {a}")));
        }
        total += 0.5 * (va / cond).log2();
    }
    Ok(total)
}

/// Everything that goes into one key rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub variant: Variant,
    pub beta: f64,
    pub i_ba: f64,
    pub s_e: f64,
    pub s_e_cond: f64,
    pub i_be: f64,
    /// `beta I_BA - I_BE`, bits per channel use.
    pub k_r: f64,
    /// Bob's gain; absent for one-way variants.
    pub k_used: Option<f64>,
    pub spectrum: Vec<f64>,
    pub cond_spectrum: Vec<f64>,
    pub method: SpectrumMethod,
}

impl RateReport {
    fn assemble(variant: Variant, beta: f64, i_ba: f64, k: Option<f64>, h: HolevoBound) -> Self {
        Self {
            variant,
            beta,
            i_ba,
            s_e: h.s_e,
            s_e_cond: h.s_e_cond,
            i_be: h.i_be,
            k_r: beta * i_ba - h.i_be,
            k_used: k,
            spectrum: h.spectrum.eigenvalues,
            cond_spectrum: h.cond_spectrum.eigenvalues,
            method: h.spectrum.method,
        }
    }
}

/// State at Bob's and Alice's detectors, from closed forms where available.
pub fn detected_cm(s: &ProtocolScenario) -> Result<CovarianceMatrix> {
    match s.variant {
        Variant::Het2M => build_het2m_closed_form(s),
        Variant::OneWayHet | Variant::OneWayHom => {
            let g = build_constructive(s, false)?;
            let idx = heterodyne_modes(s.variant)
                .iter()
                .map(|l| g.mode_index(l))
                .collect::<Result<Vec<_>>>()?;
            heterodyne_split(&g, &idx)
        }
        _ => {
            let g = pre_heterodyne_closed_form(s)?;
            let idx = heterodyne_modes(s.variant)
                .iter()
                .map(|l| g.mode_index(l))
                .collect::<Result<Vec<_>>>()?;
            heterodyne_split(&g, &idx)
        }
    }
}

/// Secret key rate `K_R = beta I_BA - I_BE` under reverse reconciliation.
pub fn key_rate(s: &ProtocolScenario) -> Result<RateReport> {
    key_rate_with(s, SpectrumMethod::Generic)
}

pub fn key_rate_with(s: &ProtocolScenario, method: SpectrumMethod) -> Result<RateReport> {
    s.validate()?;
    let detected = detected_cm(s)?;
    let k = estimator_gain(&detected, s)?;
    let h = holevo_bound(&detected, s.variant, k, method)?;
    let i_ba = if s.variant.is_two_way() {
        mutual_info_variant(s)?
    } else {
        mutual_info_from_cm(&detected, s.variant)?
    };
    Ok(RateReport::assemble(s.variant, s.beta, i_ba, k, h))
}

/// Key rate from a detected state (e.g. an estimate), with the mutual
/// information read off the state rather than the closed form.
pub fn key_rate_from_cm(
    detected: &CovarianceMatrix,
    variant: Variant,
    beta: f64,
    k: Option<f64>,
    method: SpectrumMethod,
) -> Result<RateReport> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    let h = holevo_bound(detected, variant, k, method)?;
    let i_ba = mutual_info_from_cm(&postprocess(detected, variant, k)?, variant)?;
    Ok(RateReport::assemble(variant, beta, i_ba, k, h))
}
