//! Covariance matrices of the protocol variants, built two independent ways:
//! by running the optical pipeline through symplectic maps, and by filling
//! in the propagated matrix elements directly.

use nalgebra::{DMatrix, Matrix2};

use super::channel::ChannelParams;
use super::scenario::{ProtocolScenario, Variant};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply, beam_splitter, cnot_gate, direct_sum, epr_cm, heterodyne_split, reduce, reorder, CovarianceMatrix,
};

/// Mode labels of the Het2M state, in canonical order.
pub const HET2M_LABELS: [&str; 7] = ["B2X", "B2P", "B1X", "B1P", "A2", "A1X", "A1P"];
/// Eve's modes when kept: the two halves of each cloner pair.
pub const EVE_LABELS: [&str; 4] = ["E1", "E1'", "E2", "E2'"];
/// Mode labels before any heterodyne splitting.
pub const PRE_LABELS: [&str; 4] = ["B2", "B1", "A2", "A1"];

/// Which of `B2 B1 A2 A1` (two-way) or `A B` (one-way) are heterodyned.
/// Alice always heterodynes A1 (or A) so that she prepares coherent states.
pub fn heterodyne_modes(variant: Variant) -> &'static [&'static str] {
    match variant {
        Variant::Het2M => &["B2", "B1", "A1"],
        Variant::Hom2M => &["A1"],
        Variant::HomHetM => &["B2", "A1"],
        Variant::HetHomM => &["B1", "A1"],
        Variant::OneWayHet => &["A", "B"],
        Variant::OneWayHom => &["A"],
    }
}

/// Eve's two cloner modes for one leg: an EPR pair of variance `W`, or two
/// vacua used by the noise dilation when the leg is lossless.
fn eve_pair(ch: &ChannelParams) -> Result<CovarianceMatrix> {
    if ch.t < 1.0 {
        epr_cm(ch.cloner_variance())
    } else {
        Ok(CovarianceMatrix::vacuum(2))
    }
}

/// Sends mode `c` through the channel, with Eve holding `e1` (injected) and
/// `e2` (her idler).
fn channel(g: &CovarianceMatrix, ch: &ChannelParams, c: usize, e1: usize, e2: usize) -> Result<CovarianceMatrix> {
    let n = g.n_modes();
    if ch.t < 1.0 {
        return apply(&beam_splitter(ch.t, c, e1, n)?, g);
    }
    // Lossless leg: additive noise eps in both quadratures via two QND
    // couplings to vacuum, x_c += sqrt(eps) x_e1 and p_c += sqrt(eps) p_e2.
    let k = ch.eps.sqrt();
    let g = apply(&cnot_gate(-k, e1, c, n)?, g)?;
    apply(&cnot_gate(k, c, e2, n)?, &g)
}

/// Two-way state before detection, modes `B2 B1 A2 A1`, followed by Eve's
/// four modes when `keep_eve` is set (the global state is then pure).
pub fn build_constructive(s: &ProtocolScenario, keep_eve: bool) -> Result<CovarianceMatrix> {
    s.validate()?;
    if !s.variant.is_two_way() {
        return build_one_way_constructive(s, keep_eve);
    }
    // 0 B1, 1 C1, 2 E1, 3 E1', 4 A1, 5 A', 6 E2, 7 E2'
    let g = direct_sum(&[epr_cm(s.v)?, eve_pair(&s.ch1)?, epr_cm(s.v_a)?, eve_pair(&s.ch2)?])?;
    let g = channel(&g, &s.ch1, 1, 2, 3)?;
    // mode 1 leaves Alice's coupler towards Bob, mode 5 stays with her as A2
    let g = apply(&beam_splitter(s.t_a, 1, 5, 8)?, &g)?;
    let g = channel(&g, &s.ch2, 1, 6, 7)?;
    if keep_eve {
        let g = reorder(&g, &[1, 0, 5, 4, 2, 3, 6, 7])?;
        g.with_labels(PRE_LABELS.iter().chain(EVE_LABELS.iter()).copied())
    } else {
        reduce(&g, &[1, 0, 5, 4])?.with_labels(PRE_LABELS)
    }
}

/// One-way state: Alice keeps `A` of an EPR pair of variance `V` and sends
/// the other half through `ch2` to Bob (`B`). Eve's modes follow when kept.
fn build_one_way_constructive(s: &ProtocolScenario, keep_eve: bool) -> Result<CovarianceMatrix> {
    let g = direct_sum(&[epr_cm(s.v)?, eve_pair(&s.ch2)?])?;
    let g = channel(&g, &s.ch2, 1, 2, 3)?;
    if keep_eve {
        g.with_labels(["A", "B", "E", "E'"])
    } else {
        reduce(&g, &[0, 1])?.with_labels(["A", "B"])
    }
}

/// Splits the variant's heterodyned modes of a constructive state.
fn split_variant(g: &CovarianceMatrix, variant: Variant) -> Result<CovarianceMatrix> {
    let idx = heterodyne_modes(variant)
        .iter()
        .map(|l| g.mode_index(l))
        .collect::<Result<Vec<_>>>()?;
    heterodyne_split(g, &idx)
}

/// Het2M state through the full optical pipeline, in the order of
/// [`HET2M_LABELS`], with Eve's modes appended when `keep_eve` is set.
pub fn build_het2m_constructive(s: &ProtocolScenario, keep_eve: bool) -> Result<CovarianceMatrix> {
    let s = s.with_variant(Variant::Het2M);
    split_variant(&build_constructive(&s, keep_eve)?, Variant::Het2M)
}

/// Alice-Bob state of any variant as seen by the detectors, from the
/// constructive pipeline. Two-way order is `B2 B1 A2 A1` with each
/// heterodyned mode replaced by its X and P ports.
pub fn variant_cm(s: &ProtocolScenario) -> Result<CovarianceMatrix> {
    split_variant(&build_constructive(s, false)?, s.variant)
}

/// Het2M state from the closed-form matrix elements.
pub fn build_het2m_closed_form(s: &ProtocolScenario) -> Result<CovarianceMatrix> {
    s.validate()?;
    if !s.variant.is_two_way() {
        return Err(Error::domain("closed-form Het2M state needs a two-way scenario"));
    }
    let (v, va, ta) = (s.v, s.v_a, s.t_a);
    let (t1, t2) = (s.ch1.t, s.ch2.t);
    let (x1, x2) = (s.ch1.chi(), s.ch2.chi());
    let i = Matrix2::identity();
    let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let o = Matrix2::zeros();

    let gb = i * (0.5 * (1.0 + t2 * (va - ta * va + t1 * ta * (v + x1) + x2)));
    let ga = i * (ta * va + t1 * (1.0 - ta) * (v + x1));
    let c1 = z * (0.5 * (t1 * t2 * ta * (v * v - 1.0)).sqrt());
    let c2 = i * ((0.5 * t2 * (1.0 - ta) * ta).sqrt() * (va - t1 * (v + x1)));
    let c3 = z * (0.5 * (t2 * (1.0 - ta) * (va * va - 1.0)).sqrt());
    let c4 = z * -(0.5 * t1 * (1.0 - ta) * (v * v - 1.0)).sqrt();
    let c5 = z * (0.5 * ta * (va * va - 1.0)).sqrt();
    let b_plus = i * (0.5 * (1.0 + v));
    let b_minus = i * (0.5 * (1.0 - v));
    let a_plus = i * (0.5 * (1.0 + va));
    let a_minus = i * (0.5 * (1.0 - va));

    // upper triangle, rows/cols B2X B2P B1X B1P A2 A1X A1P
    #[rustfmt::skip]
    let upper: [[Option<Matrix2<f64>>; 7]; 7] = [
        [Some(gb), Some(i - gb), Some(c1), Some(-c1), Some(c2), Some(c3), Some(-c3)],
        [None, Some(gb), Some(-c1), Some(c1), Some(-c2), Some(-c3), Some(c3)],
        [None, None, Some(b_plus), Some(b_minus), Some(c4), Some(o), Some(o)],
        [None, None, None, Some(b_plus), Some(-c4), Some(o), Some(o)],
        [None, None, None, None, Some(ga), Some(c5), Some(-c5)],
        [None, None, None, None, None, Some(a_plus), Some(a_minus)],
        [None, None, None, None, None, None, Some(a_plus)],
    ];
    let mut m = DMatrix::zeros(14, 14);
    for (r, row) in upper.iter().enumerate() {
        for (c, block) in row.iter().enumerate() {
            if let Some(b) = block {
                m.view_mut((2 * r, 2 * c), (2, 2)).copy_from(b);
                m.view_mut((2 * c, 2 * r), (2, 2)).copy_from(&b.transpose());
            }
        }
    }
    CovarianceMatrix::new(m, HET2M_LABELS.iter().map(|l| l.to_string()).collect())
}

/// Closed form of the two-way state before detection, modes `B2 B1 A2 A1`.
pub fn pre_heterodyne_closed_form(s: &ProtocolScenario) -> Result<CovarianceMatrix> {
    s.validate()?;
    if !s.variant.is_two_way() {
        return Err(Error::domain("pre-detection two-way state needs a two-way scenario"));
    }
    let (v, va, ta) = (s.v, s.v_a, s.t_a);
    let (t1, t2) = (s.ch1.t, s.ch2.t);
    let (x1, x2) = (s.ch1.chi(), s.ch2.chi());
    let i = Matrix2::identity();
    let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let blocks = [
        ((0, 0), i * (t2 * ((1.0 - ta) * va + t1 * ta * (v + x1) + x2))),
        ((0, 1), z * (t1 * t2 * ta * (v * v - 1.0)).sqrt()),
        ((0, 2), i * ((t2 * ta * (1.0 - ta)).sqrt() * (va - t1 * (v + x1)))),
        ((0, 3), z * (t2 * (1.0 - ta) * (va * va - 1.0)).sqrt()),
        ((1, 1), i * v),
        ((1, 2), z * -(t1 * (1.0 - ta) * (v * v - 1.0)).sqrt()),
        ((1, 3), Matrix2::zeros()),
        ((2, 2), i * (ta * va + t1 * (1.0 - ta) * (v + x1))),
        ((2, 3), z * (ta * (va * va - 1.0)).sqrt()),
        ((3, 3), i * va),
    ];
    let mut m = DMatrix::zeros(8, 8);
    for ((r, c), b) in blocks {
        m.view_mut((2 * r, 2 * c), (2, 2)).copy_from(&b);
        m.view_mut((2 * c, 2 * r), (2, 2)).copy_from(&b.transpose());
    }
    CovarianceMatrix::new(m, PRE_LABELS.iter().map(|l| l.to_string()).collect())
}
