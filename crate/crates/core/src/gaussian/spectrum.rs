//! Symplectic spectra.
//!
//! Two independent routes: a generic one for any mode count, based on the
//! singular values of `L^T Omega L` with `Gamma = L L^T`, and a closed-form
//! route for four modes that solves the quartic whose roots are the squared
//! symplectic eigenvalues, with coefficients given by the symplectic
//! invariants (sums of principal minors of `Omega Gamma`).

use nalgebra::{Complex, DMatrix};

use super::cm::CovarianceMatrix;
use super::symplectic::omega;
use crate::error::{Error, Result};

/// Eigenvalues within `PURITY_TOL` of 1 are snapped to 1; anything lower is unphysical.
pub const PURITY_TOL: f64 = 1e-8;

/// Maximum relative mismatch between the two members of a singular-value pair.
pub const PAIRING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Generic,
    Quartic,
}

/// Symplectic eigenvalues sorted in descending order, each at least 1.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SymplecticSpectrum {
    pub eigenvalues: Vec<f64>,
    pub method: SpectrumMethod,
}

impl SymplecticSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues.iter().map(|&l| g_unchecked(l)).sum()
    }

    fn from_raw(mut raw: Vec<f64>, method: SpectrumMethod) -> Result<Self> {
        for v in raw.iter_mut() {
            *v = clamp_eigenvalue(*v)?;
        }
        raw.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues: raw, method })
    }
}

/// Applies the purity clamp to one symplectic eigenvalue.
pub fn clamp_eigenvalue(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Numerical(format!("non-finite symplectic eigenvalue {v}")));
    }
    if (v - 1.0).abs() <= PURITY_TOL {
        Ok(1.0)
    } else if v > 1.0 {
        Ok(v)
    } else {
        Err(Error::Physicality(format!("symplectic eigenvalue {v} violates the uncertainty principle")))
    }
}

/// Unclamped symplectic eigenvalues of a positive-definite symmetric matrix,
/// sorted descending.
///
/// Fails with [`Error::Physicality`] when the matrix is not positive definite
/// and with [`Error::Numerical`] when singular values do not come in pairs.
pub fn raw_symplectic_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    if dim != m.ncols() || !dim.is_multiple_of(2) || dim == 0 {
        return Err(Error::dimension(format!("expected a 2n x 2n matrix, got {}x{}", dim, m.ncols())));
    }
    let n = dim / 2;
    let sym = (m + m.transpose()) * 0.5;
    let chol = sym
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Physicality("covariance matrix is not positive definite".into()))?;
    let l = chol.l();
    let a = l.transpose() * omega(n) * &l;
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    if sv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("singular value decomposition did not converge".into()));
    }
    sv.sort_by(|a, b| b.total_cmp(a));
    let mut out = Vec::with_capacity(n);
    for pair in sv.chunks(2) {
        let (hi, lo) = (pair[0], pair[1]);
        if hi - lo > PAIRING_TOL * hi.max(1.0) {
            return Err(Error::Numerical(format!("unpaired symplectic eigenvalues {hi} and {lo}")));
        }
        out.push(0.5 * (hi + lo));
    }
    Ok(out)
}

/// Symplectic spectrum by the generic route, clamped at 1.
pub fn symplectic_spectrum_generic(cm: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    SymplecticSpectrum::from_raw(raw_symplectic_eigenvalues(cm.matrix())?, SpectrumMethod::Generic)
}

/// The four symplectic invariants of a 4-mode state: `Delta_j` is the sum of
/// the determinants of all `2j x 2j` principal submatrices of `Omega Gamma`.
pub fn symplectic_invariants(cm: &CovarianceMatrix) -> Result<[f64; 4]> {
    if cm.n_modes() != 4 {
        return Err(Error::dimension(format!("symplectic invariants need exactly 4 modes, got {}", cm.n_modes())));
    }
    let og = omega(4) * cm.matrix();
    let mut out = [0.0; 4];
    for (j, slot) in out.iter_mut().enumerate() {
        let size = 2 * (j + 1);
        let mut total = 0.0;
        for_each_subset(8, size, |idx| {
            let sub = DMatrix::from_fn(size, size, |r, c| og[(idx[r], idx[c])]);
            total += sub.determinant();
        });
        *slot = total;
    }
    Ok(out)
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Radicands this close to zero (relative to `Delta_1^k`) are treated as exact zeros.
const SNAP: f64 = 64.0 * f64::EPSILON;
/// Radicands more negative than this (relative to `Delta_1^2`) signal ill-conditioning.
const NEGATIVE_RADICAND_TOL: f64 = 1e-8;

/// Closed-form 4-mode symplectic spectrum from the invariants.
///
/// Solves `z^4 - D1 z^3 + D2 z^2 - D3 z + D4 = 0` for `z = lambda^2` with the
/// resolvent-cubic expressions
///
/// ```text
/// H = D2^2 - 3 D1 D3 + 12 D4
/// L = 2 D2^3 - 9 D1 D2 D3 + 27 D3^2 + 27 D1^2 D4 - 72 D2 D4
/// J = (L + sqrt(L^2 - 4 H^3))^(1/3)
/// Theta = 2^(1/3) H / (3 J) + J / (3 * 2^(1/3))
/// ```
///
/// Intermediate radicands within rounding error of zero are snapped to zero so
/// that exactly degenerate spectra (pure states) come out exact; the formula
/// loses roughly half the working precision on nearly-degenerate pairs.
pub fn symplectic_spectrum_quartic(inv: &[f64; 4]) -> Result<SymplecticSpectrum> {
    let z = quartic_roots(inv)?;
    let raw = z.iter().map(|&v| v.max(0.0).sqrt()).collect();
    SymplecticSpectrum::from_raw(raw, SpectrumMethod::Quartic)
}

fn quartic_roots(inv: &[f64; 4]) -> Result<[f64; 4]> {
    let [d1, d2, d3, d4] = *inv;
    if inv.iter().any(|v| !v.is_finite()) || d1 <= 0.0 {
        return Err(Error::domain(format!("invalid symplectic invariants {inv:?}")));
    }
    let tol = |k: i32| SNAP * d1.powi(k);
    let cbrt2 = 2f64.cbrt();

    let h = d2 * d2 - 3.0 * d1 * d3 + 12.0 * d4;
    let l = 2.0 * d2.powi(3) - 9.0 * d1 * d2 * d3 + 27.0 * d3 * d3 + 27.0 * d1 * d1 * d4 - 72.0 * d2 * d4;
    let theta = if h.abs() <= tol(4) && l.abs() <= tol(6) {
        0.0
    } else {
        let disc = Complex::new(l * l - 4.0 * h.powi(3), 0.0).sqrt();
        let lc = Complex::new(l, 0.0);
        let mut j = (lc + disc).powf(1.0 / 3.0);
        if j.norm() <= tol(2) {
            j = (lc - disc).powf(1.0 / 3.0);
        }
        let th = Complex::new(cbrt2 * h, 0.0) / (j * 3.0) + j / (3.0 * cbrt2);
        if th.im.abs() > 1e-6 * th.norm().max(tol(2)) {
            return Err(Error::Numerical(format!("resolvent root is not real ({th})")));
        }
        th.re
    };

    let r2 = snap(d1 * d1 / 4.0 - 2.0 * d2 / 3.0 + theta, tol(2), d1)?;
    let r = r2.sqrt();
    let q = if r == 0.0 {
        0.0
    } else {
        (d1.powi(3) - 4.0 * d1 * d2 + 8.0 * d3) / (4.0 * r)
    };
    let base = d1 * d1 / 2.0 - 4.0 * d2 / 3.0 - theta;
    let a = snap(base - q, tol(2), d1)?.sqrt();
    let b = snap(base + q, tol(2), d1)?.sqrt();
    let m = d1 / 4.0;
    Ok([m + r / 2.0 + b / 2.0, m + r / 2.0 - b / 2.0, m - r / 2.0 + a / 2.0, m - r / 2.0 - a / 2.0])
}

fn snap(v: f64, tol: f64, d1: f64) -> Result<f64> {
    if v.abs() <= tol {
        Ok(0.0)
    } else if v < -NEGATIVE_RADICAND_TOL * d1 * d1 {
        Err(Error::Numerical(format!("negative radicand {v:.3e}; invariants are ill-conditioned")))
    } else {
        Ok(v.max(0.0))
    }
}

/// Entropy contribution of one symplectic eigenvalue, in bits:
/// `((l+1)/2) log2((l+1)/2) - ((l-1)/2) log2((l-1)/2)`, with `g(1) = 0`.
pub fn g_function(lambda: f64) -> Result<f64> {
    Ok(g_unchecked(clamp_eigenvalue(lambda)?))
}

fn g_unchecked(lambda: f64) -> f64 {
    let a = 0.5 * (lambda + 1.0);
    let b = 0.5 * (lambda - 1.0);
    let tail = if b > 0.0 { b * b.log2() } else { 0.0 };
    a * a.log2() - tail
}

/// Von Neumann entropy in bits, from the generic spectrum.
pub fn von_neumann_entropy(cm: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_spectrum_generic(cm)?.entropy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{direct_sum, epr_cm};
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_and_thermal_spectra() {
        let s = symplectic_spectrum_generic(&CovarianceMatrix::vacuum(1)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0]);
        let s = symplectic_spectrum_generic(&CovarianceMatrix::thermal(3.0, "t").unwrap()).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 3.0, max_relative = 1e-14);
    }

    #[test]
    fn epr_is_pure() {
        let s = symplectic_spectrum_generic(&epr_cm(5.0).unwrap()).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn unphysical_matrix_rejected() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5]));
        let cm = CovarianceMatrix::unlabeled(m).unwrap();
        assert!(matches!(symplectic_spectrum_generic(&cm), Err(Error::Physicality(_))));
        // squeezed but physical
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.25, 4.0]));
        let cm = CovarianceMatrix::unlabeled(m).unwrap();
        assert_eq!(symplectic_spectrum_generic(&cm).unwrap().eigenvalues, vec![1.0]);
    }

    #[test]
    fn identity_invariants_are_binomial() {
        let inv = symplectic_invariants(&CovarianceMatrix::vacuum(4)).unwrap();
        for (got, want) in inv.iter().zip([4.0, 6.0, 4.0, 1.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn first_invariant_by_direct_minors() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]));
        let inv = symplectic_invariants(&CovarianceMatrix::unlabeled(m).unwrap()).unwrap();
        assert_relative_eq!(inv[0], 7.0, max_relative = 1e-14);
    }

    #[test]
    fn invariants_need_four_modes() {
        assert!(matches!(symplectic_invariants(&CovarianceMatrix::vacuum(3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn quartic_on_exact_identity_invariants() {
        let s = symplectic_spectrum_quartic(&[4.0, 6.0, 4.0, 1.0]).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0; 4]);
        assert_eq!(s.method, SpectrumMethod::Quartic);
    }

    #[test]
    fn quartic_on_two_epr_pairs() {
        let cm = direct_sum(&[epr_cm(2.0).unwrap(), epr_cm(3.0).unwrap()]).unwrap();
        let s = symplectic_spectrum_quartic(&symplectic_invariants(&cm).unwrap()).unwrap();
        for v in s.eigenvalues {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn quartic_with_degenerate_thermal_pair() {
        let th = CovarianceMatrix::thermal(3.0, "t").unwrap();
        let cm = direct_sum(&[epr_cm(2.0).unwrap(), th.clone(), th]).unwrap();
        let s = symplectic_spectrum_quartic(&symplectic_invariants(&cm).unwrap()).unwrap();
        let want = [3.0, 3.0, 1.0, 1.0];
        for (g, w) in s.eigenvalues.iter().zip(want) {
            assert_relative_eq!(*g, w, max_relative = 1e-12);
        }
    }

    #[test]
    fn quartic_rejects_garbage() {
        assert!(symplectic_spectrum_quartic(&[f64::NAN, 1.0, 1.0, 1.0]).is_err());
        assert!(symplectic_spectrum_quartic(&[-1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn g_values() {
        assert_eq!(g_function(1.0).unwrap(), 0.0);
        assert_relative_eq!(g_function(3.0).unwrap(), 2.0, max_relative = 1e-15);
        assert!(g_function(5.0).unwrap() > g_function(3.0).unwrap());
        assert_eq!(g_function(1.0 - 5e-9).unwrap(), 0.0);
        assert!(matches!(g_function(0.9), Err(Error::Physicality(_))));
    }

    #[test]
    fn entropy_of_thermal_and_pure() {
        assert_relative_eq!(
            von_neumann_entropy(&CovarianceMatrix::thermal(3.0, "t").unwrap()).unwrap(),
            2.0,
            max_relative = 1e-13
        );
        assert_eq!(von_neumann_entropy(&epr_cm(40.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn entropy_additive_over_direct_sum() {
        let a = CovarianceMatrix::thermal(2.5, "a").unwrap();
        let b = direct_sum(&[epr_cm(3.0).unwrap(), CovarianceMatrix::thermal(7.0, "c").unwrap()]).unwrap();
        let ab = direct_sum(&[a.clone(), b.clone()]).unwrap();
        let lhs = von_neumann_entropy(&ab).unwrap();
        let rhs = von_neumann_entropy(&a).unwrap() + von_neumann_entropy(&b).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn subsets_enumerated() {
        let mut count = 0;
        for_each_subset(8, 4, |_| count += 1);
        assert_eq!(count, 70);
    }
}
