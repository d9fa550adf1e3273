//! Linear symplectic maps acting on interleaved quadrature vectors.

use nalgebra::DMatrix;

use super::cm::CovarianceMatrix;
use crate::error::{Error, Result};

/// Tolerance on `max |S Omega S^T - Omega|` for a matrix to count as symplectic.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// The symplectic form `Omega = (+) [[0, 1], [-1, 0]]` on `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(2 * i, 2 * i + 1)] = 1.0;
        o[(2 * i + 1, 2 * i)] = -1.0;
    }
    o
}

/// A real `2n x 2n` matrix with `S Omega S^T = Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    m: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Wraps a matrix after checking symplecticity to [`SYMPLECTIC_TOL`]
    /// (scaled by the squared norm of `m` for large-gain transforms).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(Error::dimension(format!("symplectic matrix must be 2n x 2n, got {r}x{c}")));
        }
        let scale = m.amax().max(1.0);
        let dev = symplectic_defect(&m);
        if dev > SYMPLECTIC_TOL * scale * scale {
            return Err(Error::domain(format!("matrix is not symplectic (defect {dev:.3e})")));
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SymplecticTransform) -> Result<Self> {
        if self.m.shape() != first.m.shape() {
            return Err(Error::dimension("cannot compose transforms on different mode counts"));
        }
        Ok(Self { m: &self.m * &first.m })
    }

    pub fn inverse(&self) -> Self {
        // S^{-1} = -Omega S^T Omega
        let o = omega(self.n_modes());
        Self { m: -(&o * self.m.transpose() * &o) }
    }

    /// Block-diagonal sum of transforms.
    pub fn direct_sum(parts: &[SymplecticTransform]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::dimension("direct sum of zero transforms"));
        }
        let dim: usize = parts.iter().map(|p| p.m.nrows()).sum();
        let mut m = DMatrix::zeros(dim, dim);
        let mut off = 0;
        for p in parts {
            let k = p.m.nrows();
            m.view_mut((off, off), (k, k)).copy_from(&p.m);
            off += k;
        }
        Ok(Self { m })
    }

    /// Embeds a transform on `modes.len()` modes into an `n`-mode identity,
    /// acting on the listed modes in order.
    pub fn embed(&self, modes: &[usize], n: usize) -> Result<Self> {
        if modes.len() != self.n_modes() {
            return Err(Error::dimension(format!("{} target modes for a {}-mode transform", modes.len(), self.n_modes())));
        }
        check_distinct(modes, n)?;
        let mut m = DMatrix::identity(2 * n, 2 * n);
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                m[(ia, ib)] = self.m[(a, b)];
            }
        }
        Ok(Self { m })
    }
}

fn check_distinct(modes: &[usize], n: usize) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= n {
            return Err(Error::Index(format!("mode {m} out of range for {n} modes")));
        }
        if modes[..i].contains(&m) {
            return Err(Error::Index(format!("mode {m} used twice")));
        }
    }
    Ok(())
}

/// `max |S Omega S^T - Omega|`.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let o = omega(m.nrows() / 2);
    (m * &o * m.transpose() - o).amax()
}

/// Beam splitter of transmittance `t` mixing modes `i` and `j` of `n`:
/// `x_i' = sqrt(t) x_i + sqrt(1-t) x_j`, `x_j' = -sqrt(1-t) x_i + sqrt(t) x_j`, same for `p`.
pub fn beam_splitter(t: f64, i: usize, j: usize, n: usize) -> Result<SymplecticTransform> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("beam splitter transmittance must lie in [0, 1], got {t}")));
    }
    check_distinct(&[i, j], n)?;
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    let mut m = DMatrix::identity(2 * n, 2 * n);
    for q in 0..2 {
        let (ri, rj) = (2 * i + q, 2 * j + q);
        m[(ri, ri)] = a;
        m[(ri, rj)] = b;
        m[(rj, ri)] = -b;
        m[(rj, rj)] = a;
    }
    Ok(SymplecticTransform { m })
}

/// Continuous-variable C-NOT of gain `k`: `x_t' = x_t - k x_c`, `p_c' = p_c + k p_t`,
/// every other quadrature unchanged.
pub fn cnot_gate(k: f64, control: usize, target: usize, n: usize) -> Result<SymplecticTransform> {
    if !k.is_finite() {
        return Err(Error::domain(format!("C-NOT gain must be finite, got {k}")));
    }
    check_distinct(&[control, target], n)?;
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * target, 2 * control)] = -k;
    m[(2 * control + 1, 2 * target + 1)] = k;
    Ok(SymplecticTransform { m })
}

/// Returns `S Gamma S^T`, re-symmetrized, keeping the input labels.
pub fn apply(s: &SymplecticTransform, cm: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.m.nrows() != cm.matrix().nrows() {
        return Err(Error::dimension(format!(
            "{}-mode transform applied to {}-mode state",
            s.n_modes(),
            cm.n_modes()
        )));
    }
    let out = &s.m * cm.matrix() * s.m.transpose();
    CovarianceMatrix::new(out, cm.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn unit_transmittance_is_identity() {
        let s = beam_splitter(1.0, 0, 1, 2).unwrap();
        assert_eq!(s.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn balanced_splitter_matches_reference_matrix() {
        let h = 0.5f64.sqrt();
        #[rustfmt::skip]
        let reference = DMatrix::from_row_slice(4, 4, &[
             h, 0.0, h, 0.0,
            0.0, h, 0.0, h,
            -h, 0.0, h, 0.0,
            0.0, -h, 0.0, h,
        ]);
        let s = beam_splitter(0.5, 0, 1, 2).unwrap();
        assert_abs_diff_eq!(s.matrix(), &reference, epsilon = 1e-16);
    }

    #[test]
    fn splitter_rejects_bad_arguments() {
        assert!(matches!(beam_splitter(1.2, 0, 1, 2), Err(Error::Domain(_))));
        assert!(matches!(beam_splitter(-0.1, 0, 1, 2), Err(Error::Domain(_))));
        assert!(matches!(beam_splitter(0.5, 1, 1, 2), Err(Error::Index(_))));
        assert!(matches!(beam_splitter(0.5, 0, 2, 2), Err(Error::Index(_))));
    }

    #[test]
    fn cnot_zero_gain_is_identity() {
        assert_eq!(cnot_gate(0.0, 1, 0, 2).unwrap().matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn cnot_acts_on_quadrature_vector() {
        // ordering (x_t, p_t, x_c, p_c)
        let s = cnot_gate(2.0, 1, 0, 2).unwrap();
        let v = DVector::from_vec(vec![5.0, 1.0, 3.0, 2.0]);
        let out = s.matrix() * v;
        assert_eq!(out.as_slice(), &[-1.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn cnot_is_symplectic_for_several_gains() {
        for k in [-3.0, 0.7, 10.0] {
            let s = cnot_gate(k, 0, 2, 3).unwrap();
            assert!(symplectic_defect(s.matrix()) < SYMPLECTIC_TOL);
        }
    }

    #[test]
    fn cnot_rejects_collision_and_nan() {
        assert!(matches!(cnot_gate(1.0, 1, 1, 2), Err(Error::Index(_))));
        assert!(matches!(cnot_gate(f64::INFINITY, 0, 1, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_and_embed() {
        let s = beam_splitter(0.3, 0, 1, 2).unwrap();
        let id = s.compose(&s.inverse()).unwrap();
        assert_abs_diff_eq!(id.matrix(), &DMatrix::identity(4, 4), epsilon = 1e-15);
        let e = s.embed(&[2, 0], 3).unwrap();
        assert_eq!(e, beam_splitter(0.3, 2, 0, 3).unwrap());
    }

    #[test]
    fn new_rejects_non_symplectic() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = 2.0;
        assert!(SymplecticTransform::new(m).is_err());
        assert!(SymplecticTransform::new(beam_splitter(0.2, 0, 1, 2).unwrap().matrix().clone()).is_ok());
    }

    #[test]
    fn apply_identity_and_dimension_check() {
        let cm = crate::gaussian::epr_cm(3.0).unwrap();
        assert_eq!(apply(&SymplecticTransform::identity(2), &cm).unwrap(), cm);
        assert!(matches!(apply(&SymplecticTransform::identity(3), &cm), Err(Error::Dimension(_))));
    }
}
