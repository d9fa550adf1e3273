use nalgebra::DMatrix;

use super::cm::{direct_sum, reduce, reorder, CovarianceMatrix, Quadrature};
use super::symplectic::{apply, beam_splitter};
use crate::error::{Error, Result};

/// A diagonal entry of the projected measured block counts as zero below this
/// fraction of the block trace.
pub const PINV_TOL: f64 = 1e-12;

/// State of the remaining modes after a homodyne measurement of `quadrature`
/// on `mode`:
///
/// `Gamma' = Gamma_rest - C (X gamma X)^MP C^T`
///
/// where `gamma` is the measured mode's block, `C` the cross-covariance and
/// `X` projects onto the measured quadrature. The measured mode is dropped
/// from the labels.
pub fn condition_on_homodyne(cm: &CovarianceMatrix, mode: usize, quadrature: Quadrature) -> Result<CovarianceMatrix> {
    let n = cm.n_modes();
    if mode >= n {
        return Err(Error::Index(format!("mode {mode} out of range for {n} modes")));
    }
    if n < 2 {
        return Err(Error::dimension("homodyne conditioning needs at least one remaining mode"));
    }
    let g = cm.matrix();
    let q = 2 * mode + quadrature.offset();
    let trace = g[(2 * mode, 2 * mode)] + g[(2 * mode + 1, 2 * mode + 1)];
    let var = g[(q, q)];
    let rest: Vec<usize> = (0..2 * n).filter(|&i| i / 2 != mode).collect();
    let k = rest.len();
    let mut out = DMatrix::from_fn(k, k, |i, j| g[(rest[i], rest[j])]);
    if var >= PINV_TOL * trace {
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] -= g[(rest[i], q)] * g[(rest[j], q)] / var;
            }
        }
    }
    let labels = cm
        .labels()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != mode)
        .map(|(_, l)| l.clone())
        .collect();
    let out = CovarianceMatrix::new(out, labels)?;
    out.check_physical()
        .map_err(|e| Error::Physicality(format!("conditioned state is unphysical: {e}")))?;
    Ok(out)
}

/// Conditions on a sequence of `(label, quadrature)` measurements, resolving
/// each label against the current (shrinking) matrix.
pub fn condition_on_homodynes(cm: &CovarianceMatrix, measurements: &[(&str, Quadrature)]) -> Result<CovarianceMatrix> {
    let mut cur = cm.clone();
    for (label, q) in measurements {
        let i = cur.mode_index(label)?;
        cur = condition_on_homodyne(&cur, i, *q)?;
    }
    Ok(cur)
}

/// Heterodyne splitting: each listed mode `L` is mixed with a fresh vacuum on
/// a 50:50 beam splitter. The transmitted port becomes `LX` (its x is
/// measured) and the reflected port `LP` (its p is measured), inserted right
/// after one another in place of `L`.
pub fn heterodyne_split(cm: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    let n = cm.n_modes();
    for (i, &m) in modes.iter().enumerate() {
        if m >= n || modes[..i].contains(&m) {
            return Err(Error::Index(format!("invalid heterodyne mode {m} for {n} modes")));
        }
    }
    let total = n + modes.len();
    let mut g = direct_sum(&[cm.clone(), CovarianceMatrix::vacuum(modes.len())])?;
    let mut perm = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..n {
        perm.push(i);
        match modes.iter().position(|&m| m == i) {
            Some(slot) => {
                let j = n + slot;
                g = apply(&beam_splitter(0.5, i, j, total)?, &g)?;
                perm.push(j);
                labels.push(format!("{}X", cm.labels()[i]));
                labels.push(format!("{}P", cm.labels()[i]));
            }
            None => labels.push(cm.labels()[i].clone()),
        }
    }
    reorder(&g, &perm)?.with_labels(labels)
}

/// Undoes [`heterodyne_split`] for the pair `(x_mode, p_mode)`: the pair is
/// recombined on the inverse splitter, the vacuum port is checked to be
/// uncorrelated vacuum and dropped. The recombined mode takes `label` and
/// the position of `x_mode`.
pub fn heterodyne_recombine(cm: &CovarianceMatrix, x_mode: usize, p_mode: usize, label: &str) -> Result<CovarianceMatrix> {
    let n = cm.n_modes();
    let bs = beam_splitter(0.5, x_mode, p_mode, n)?.inverse();
    let g = apply(&bs, cm)?;
    let scale = g.matrix().amax().max(1.0);
    let tol = 1e-9 * scale;
    let m = g.matrix();
    for r in 0..2 * n {
        for q in 0..2 {
            let c = 2 * p_mode + q;
            let expect = if r == c { 1.0 } else { 0.0 };
            if (m[(r, c)] - expect).abs() > tol {
                return Err(Error::Numerical(format!(
                    "modes {x_mode} and {p_mode} do not recombine to a signal plus vacuum (entry {r},{c} = {:.3e})",
                    m[(r, c)]
                )));
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != p_mode).collect();
    let mut out = reduce(&g, &keep)?;
    let pos = keep.iter().position(|&i| i == x_mode).expect("x mode kept");
    let mut labels = out.labels().to_vec();
    labels[pos] = label.to_string();
    out = out.with_labels(labels)?;
    Ok(out)
}
