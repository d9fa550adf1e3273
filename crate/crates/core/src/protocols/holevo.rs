//! Bob's C-NOT post-processing and the Holevo bound on Eve's information.

use serde::Serialize;

use super::builders::heterodyne_modes;
use super::scenario::{GainPolicy, ProtocolScenario, Variant};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply, cnot_gate, condition_on_homodynes, direct_sum, heterodyne_recombine, reorder, symplectic_invariants,
    symplectic_spectrum_generic, symplectic_spectrum_quartic, CovarianceMatrix, Quadrature, SpectrumMethod,
    SymplecticSpectrum,
};

/// Below this variance a control quadrature carries no usable signal.
const DEGENERATE_VARIANCE: f64 = 1e-12;

/// `(target, control)` of the x-quadrature C-NOT for two-way variants.
fn x_gate(variant: Variant) -> Option<(&'static str, &'static str)> {
    match variant {
        Variant::Het2M => Some(("B2X", "B1X")),
        Variant::Hom2M => Some(("B2", "B1")),
        Variant::HomHetM => Some(("B2X", "B1")),
        Variant::HetHomM => Some(("B2", "B1X")),
        Variant::OneWayHet | Variant::OneWayHom => None,
    }
}

/// Quadratures Bob measures on the post-processed state.
pub fn measured_quadratures(variant: Variant) -> &'static [(&'static str, Quadrature)] {
    match variant {
        Variant::Het2M => &[("B4", Quadrature::X), ("B6", Quadrature::P)],
        Variant::Hom2M | Variant::HomHetM | Variant::HetHomM => &[("B4", Quadrature::X)],
        Variant::OneWayHet => &[("BX", Quadrature::X), ("BP", Quadrature::P)],
        Variant::OneWayHom => &[("B", Quadrature::X)],
    }
}

/// `sqrt(T1 T2 T_A)`, the amplitude transmittance from Bob's first source to
/// his second detector, scaled by the 50:50 attenuation of whichever of the
/// two combined quadratures went through a heterodyne split.
pub fn transmittance_gain(s: &ProtocolScenario) -> Option<f64> {
    let g = (s.ch1.t * s.ch2.t * s.t_a).sqrt();
    match s.variant {
        Variant::Het2M | Variant::Hom2M => Some(g),
        Variant::HomHetM => Some(g * std::f64::consts::FRAC_1_SQRT_2),
        Variant::HetHomM => Some(g * std::f64::consts::SQRT_2),
        Variant::OneWayHet | Variant::OneWayHom => None,
    }
}

fn gate_moments(cm: &CovarianceMatrix, variant: Variant) -> Result<(f64, f64)> {
    let (t, c) = x_gate(variant).ok_or_else(|| Error::domain(format!("{variant} has no post-processing gain")))?;
    let (t, c) = (cm.mode_index(t)?, cm.mode_index(c)?);
    Ok((cm.cov(t, Quadrature::X, c, Quadrature::X), cm.cov(c, Quadrature::X, c, Quadrature::X)))
}

/// `Cov(x_target, x_control) / Var(x_control)`.
pub fn wiener_gain(cm: &CovarianceMatrix, variant: Variant) -> Result<f64> {
    let (cov, var) = gate_moments(cm, variant)?;
    if var < DEGENERATE_VARIANCE {
        return Err(Error::Degenerate(format!("control variance {var:.3e} is zero")));
    }
    Ok(cov / var)
}

/// The transmittance gain recovered from the state itself, given Bob's EPR
/// variance: the control's excess over shot noise is `a^2 (V - 1)` and its
/// covariance with the target `a b g sqrt(V^2 - 1)`, where `a`, `b` are the
/// split attenuations.
pub fn cm_transmittance_gain(cm: &CovarianceMatrix, variant: Variant, v: f64) -> Result<f64> {
    let (cov, var) = gate_moments(cm, variant)?;
    let excess = var - 1.0;
    if v - 1.0 < DEGENERATE_VARIANCE || excess.abs() < DEGENERATE_VARIANCE {
        return Err(Error::Degenerate("Bob's source is vacuum; the transmittance gain is undefined".into()));
    }
    Ok(cov / excess * ((v - 1.0) / (v + 1.0)).sqrt())
}

/// Resolves the scenario's gain policy on the detected state.
pub fn estimator_gain(cm: &CovarianceMatrix, s: &ProtocolScenario) -> Result<Option<f64>> {
    if !s.variant.is_two_way() {
        return Ok(None);
    }
    match s.gain {
        GainPolicy::Transmittance => Ok(transmittance_gain(s)),
        GainPolicy::Wiener => wiener_gain(cm, s.variant).map(Some),
        GainPolicy::Fixed(k) => Ok(Some(k)),
    }
}

/// Het2M post-processing: one C-NOT builds `x_B = x_B2X - k x_B1X`, the other
/// `p_B = p_B2P + k p_B1P`. Input in canonical Het2M order; output modes
/// `B4 B3 B6 B5 A2 A1X A1P`, where B4 and B6 carry `x_B` and `p_B`.
pub fn bob_postprocess(cm: &CovarianceMatrix, k: f64) -> Result<CovarianceMatrix> {
    let idx = ["B2X", "B2P", "B1X", "B1P"]
        .iter()
        .map(|l| cm.mode_index(l))
        .collect::<Result<Vec<_>>>()?;
    let n = cm.n_modes();
    let g = apply(&cnot_gate(k, idx[2], idx[0], n)?, cm)?;
    let g = apply(&cnot_gate(k, idx[1], idx[3], n)?, &g)?;
    let mut labels = g.labels().to_vec();
    for (i, name) in idx.iter().zip(["B4", "B6", "B3", "B5"]) {
        labels[*i] = name.to_string();
    }
    let g = g.with_labels(labels)?;
    let mut perm: Vec<usize> = vec![idx[0], idx[2], idx[1], idx[3]];
    perm.extend((0..n).filter(|i| !idx.contains(i)));
    reorder(&g, &perm)
}

/// Applies the variant's post-processing. Single-gate variants keep mode
/// positions and rename target and control to B4 and B3. One-way variants
/// pass through unchanged.
pub fn postprocess(cm: &CovarianceMatrix, variant: Variant, k: Option<f64>) -> Result<CovarianceMatrix> {
    let Some((t, c)) = x_gate(variant) else {
        return Ok(cm.clone());
    };
    let k = k.ok_or_else(|| Error::domain(format!("{variant} needs a post-processing gain")))?;
    if variant == Variant::Het2M {
        return bob_postprocess(cm, k);
    }
    let (ti, ci) = (cm.mode_index(t)?, cm.mode_index(c)?);
    let mut g = apply(&cnot_gate(k, ci, ti, cm.n_modes())?, cm)?;
    g.relabel(t, "B4")?;
    g.relabel(c, "B3")?;
    Ok(g)
}

/// Eve's entropy, her entropy given Bob's data, and their difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolevoBound {
    pub s_e: f64,
    pub s_e_cond: f64,
    pub i_be: f64,
    pub spectrum: SymplecticSpectrum,
    pub cond_spectrum: SymplecticSpectrum,
}

/// Holevo bound for a detected state (the variant's layout before Bob's
/// post-processing) and gain `k`.
///
/// Eve purifies the Alice-Bob state, so her entropy is that of the whole
/// post-processed state, and conditioning on Bob's measured quadratures
/// gives her entropy given his data.
pub fn holevo_bound(
    detected: &CovarianceMatrix,
    variant: Variant,
    k: Option<f64>,
    method: SpectrumMethod,
) -> Result<HolevoBound> {
    let gamma_ab = postprocess(detected, variant, k)?;
    let cond = condition_on_homodynes(&gamma_ab, measured_quadratures(variant))?;
    let (spectrum, cond_spectrum) = match method {
        SpectrumMethod::Generic => (symplectic_spectrum_generic(&gamma_ab)?, symplectic_spectrum_generic(&cond)?),
        SpectrumMethod::Quartic => {
            // Bob's gate is symplectic, so the detected state has the same
            // spectrum; undoing the heterodyne splits leaves at most 4 modes.
            let pre = recombine_all(detected, heterodyne_modes(variant))?;
            let post = recombine_all(&cond, &["A1", "A"])?;
            (quartic_padded(&pre, detected.n_modes())?, quartic_padded(&post, cond.n_modes())?)
        }
    };
    let s_e = spectrum.entropy();
    let s_e_cond = cond_spectrum.entropy();
    Ok(HolevoBound { s_e, s_e_cond, i_be: s_e - s_e_cond, spectrum, cond_spectrum })
}

/// [`holevo_bound`] for Het2M.
pub fn holevo_bound_het2m(detected: &CovarianceMatrix, k: f64, method: SpectrumMethod) -> Result<HolevoBound> {
    holevo_bound(detected, Variant::Het2M, Some(k), method)
}

fn recombine_all(cm: &CovarianceMatrix, bases: &[&str]) -> Result<CovarianceMatrix> {
    let mut cur = cm.clone();
    for base in bases {
        let (x, p) = (format!("{base}X"), format!("{base}P"));
        if let (Ok(i), Ok(j)) = (cur.mode_index(&x), cur.mode_index(&p)) {
            cur = heterodyne_recombine(&cur, i, j, base)?;
        }
    }
    Ok(cur)
}

/// Quartic spectrum of a state of at most 4 modes, padded with vacua to 4
/// and then to (or trimmed of unit eigenvalues down to) `n_full` values.
fn quartic_padded(cm: &CovarianceMatrix, n_full: usize) -> Result<SymplecticSpectrum> {
    let n = cm.n_modes();
    if n > 4 {
        return Err(Error::dimension(format!("quartic spectrum needs at most 4 modes after reduction, got {n}")));
    }
    let padded = if n < 4 {
        direct_sum(&[cm.clone(), CovarianceMatrix::vacuum(4 - n)])?
    } else {
        cm.clone()
    };
    let mut spec = symplectic_spectrum_quartic(&symplectic_invariants(&padded)?)?;
    spec.eigenvalues.resize(n_full, 1.0);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::von_neumann_entropy;
    use crate::protocols::{build_het2m_closed_form, ChannelParams};
    use approx::assert_relative_eq;

    fn reference() -> ProtocolScenario {
        let ch = ChannelParams::new(0.5, 0.2).unwrap();
        ProtocolScenario::symmetric(Variant::Het2M, 100.0, 100.0, 0.8, 0.99, ch).unwrap()
    }

    #[test]
    fn zero_gain_is_relabeling() {
        let g = build_het2m_closed_form(&reference()).unwrap();
        let p = bob_postprocess(&g, 0.0).unwrap();
        assert_eq!(p.labels(), ["B4", "B3", "B6", "B5", "A2", "A1X", "A1P"]);
        let back = reorder(&p, &[0, 2, 1, 3, 4, 5, 6]).unwrap();
        assert_eq!(back.matrix(), g.matrix());
    }

    #[test]
    fn postprocessed_variance() {
        let g = build_het2m_closed_form(&reference()).unwrap();
        let k = 0.37;
        let p = bob_postprocess(&g, k).unwrap();
        let expect = g.entry(0, 0) - 2.0 * k * g.entry(0, 4) + k * k * g.entry(4, 4);
        assert_relative_eq!(p.entry(0, 0), expect, max_relative = 1e-13);
        let before = von_neumann_entropy(&g).unwrap();
        let after = von_neumann_entropy(&p).unwrap();
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn wiener_gain_properties() {
        let g = build_het2m_closed_form(&reference()).unwrap();
        let k = wiener_gain(&g, Variant::Het2M).unwrap();
        let var = |k: f64| bob_postprocess(&g, k).unwrap().entry(0, 0);
        assert!(var(k) <= var(k + 0.1) && var(k) <= var(k - 0.1));
        // Alice's covariance with x_B does not move
        let c0 = bob_postprocess(&g, 0.0).unwrap().entry(0, 10);
        let ck = bob_postprocess(&g, k).unwrap().entry(0, 10);
        assert_relative_eq!(c0, ck, max_relative = 1e-13);
    }

    #[test]
    fn uncorrelated_control_gives_zero_gain() {
        let mut s = reference();
        s.v = 1.0;
        let g = build_het2m_closed_form(&s).unwrap();
        assert_eq!(wiener_gain(&g, Variant::Het2M).unwrap(), 0.0);
        assert!(matches!(cm_transmittance_gain(&g, Variant::Het2M, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cm_gain_recovers_transmittance() {
        let s = reference();
        for v in Variant::TWO_WAY {
            let s = s.with_variant(v);
            let g = crate::protocols::variant_cm(&s).unwrap();
            let k = cm_transmittance_gain(&g, v, s.v).unwrap();
            assert_relative_eq!(k, transmittance_gain(&s).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn quartic_route_agrees_with_generic() {
        let s = reference();
        for v in Variant::ALL {
            let s = s.with_variant(v);
            let g = crate::protocols::variant_cm(&s).unwrap();
            let k = transmittance_gain(&s);
            let a = holevo_bound(&g, v, k, SpectrumMethod::Generic).unwrap();
            let b = holevo_bound(&g, v, k, SpectrumMethod::Quartic).unwrap();
            assert_eq!(a.cond_spectrum.len(), b.cond_spectrum.len());
            assert!((a.i_be - b.i_be).abs() < 1e-6, "{v}: {} vs {}", a.i_be, b.i_be);
        }
    }

    #[test]
    fn conditional_spectrum_lengths() {
        let s = reference();
        for (v, len) in [(Variant::Het2M, 5), (Variant::Hom2M, 4), (Variant::HomHetM, 5), (Variant::HetHomM, 5)] {
            let s = s.with_variant(v);
            let g = crate::protocols::variant_cm(&s).unwrap();
            let h = holevo_bound(&g, v, transmittance_gain(&s), SpectrumMethod::Generic).unwrap();
            assert_eq!(h.cond_spectrum.len(), len, "{v}");
        }
    }
}
