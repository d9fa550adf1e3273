//! Williamson normal form `Gamma = S diag(nu_1, nu_1, ..., nu_n, nu_n) S^T`
//! and the physicality projection built on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::symplectic::omega;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Williamson {
    /// Symplectic matrix with `Gamma = S D S^T`.
    pub symplectic: DMatrix<f64>,
    /// Symplectic eigenvalues, unclamped, in the mode order of `symplectic`.
    pub eigenvalues: Vec<f64>,
}

impl Williamson {
    /// Rebuilds `S diag(nu) S^T` for replacement eigenvalues.
    pub fn reconstruct(&self, eigenvalues: &[f64]) -> DMatrix<f64> {
        let d = DVector::from_iterator(eigenvalues.len() * 2, eigenvalues.iter().flat_map(|&v| [v, v]));
        let s = &self.symplectic;
        let out = s * DMatrix::from_diagonal(&d) * s.transpose();
        (&out + out.transpose()) * 0.5
    }
}

/// Williamson decomposition of a symmetric positive-definite matrix.
pub fn williamson(m: &DMatrix<f64>) -> Result<Williamson> {
    let dim = m.nrows();
    if dim != m.ncols() || !dim.is_multiple_of(2) || dim == 0 {
        return Err(Error::dimension(format!("expected a 2n x 2n matrix, got {}x{}", dim, m.ncols())));
    }
    let n = dim / 2;
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Physicality("matrix is not positive definite".into()));
    }
    let u = &eig.eigenvectors;
    let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let root = u * &sqrt_d * u.transpose();
    let inv_root = u * &inv_sqrt_d * u.transpose();

    // antisymmetric, eigenvalues +-i/nu
    let k = &inv_root * omega(n) * &inv_root;
    let ktk = k.transpose() * &k;
    let ev = SymmetricEigen::new((&ktk + ktk.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| ev.eigenvalues[b].total_cmp(&ev.eigenvalues[a]));

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut nus = Vec::with_capacity(n);
    for &i in &order {
        if cols.len() == dim {
            break;
        }
        let mut u1 = ev.eigenvectors.column(i).into_owned();
        orthogonalize(&mut u1, &cols);
        let norm = u1.norm();
        if norm < 0.5 {
            continue;
        }
        u1 /= norm;
        let mu = &k * &u1;
        let b = mu.norm();
        if !(b > 0.0) {
            return Err(Error::Numerical("degenerate symplectic form in Williamson decomposition".into()));
        }
        let mut u2 = -mu / b;
        orthogonalize(&mut u2, &cols);
        u2 /= u2.norm();
        cols.push(u1);
        cols.push(u2);
        nus.push(1.0 / b);
    }
    if nus.len() != n {
        return Err(Error::Numerical(format!("found {} of {n} symplectic pairs", nus.len())));
    }
    let o = DMatrix::from_columns(&cols);
    let d = DVector::from_iterator(dim, nus.iter().flat_map(|&v| [v, v]));
    let s = root * o * DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt()));
    Ok(Williamson { symplectic: s, eigenvalues: nus })
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
}

/// Nearest-physical repair: raises every symplectic eigenvalue below 1 to
/// exactly 1 in the Williamson frame. Returns the repaired matrix and the
/// largest entrywise change; a physical input comes back unchanged.
pub fn project_physical(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let w = williamson(m)?;
    if w.eigenvalues.iter().all(|&v| v >= 1.0) {
        return Ok((m.clone(), 0.0));
    }
    let clipped: Vec<f64> = w.eigenvalues.iter().map(|&v| v.max(1.0)).collect();
    let out = w.reconstruct(&clipped);
    let shift = (&out - m).amax();
    Ok((out, shift))
}

/// Smallest eigenvalue of `m + i Omega`, read from its real 2d x 2d form.
pub fn uncertainty_margin(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let om = omega(d / 2);
    let mut r = DMatrix::zeros(2 * d, 2 * d);
    r.view_mut((0, 0), (d, d)).copy_from(m);
    r.view_mut((d, d), (d, d)).copy_from(m);
    r.view_mut((0, d), (d, d)).copy_from(&(-&om));
    r.view_mut((d, 0), (d, d)).copy_from(&om);
    SymmetricEigen::new(r).eigenvalues.min()
}

/// Repairs `m` by adding `c * diag(weights)` with the smallest `c >= 0` that
/// satisfies `m + c W + i Omega >= 0`. Returns the matrix and `c`.
///
/// Adding a positive diagonal only moves eigenvalues of `m + i Omega` up, so
/// `c` is found by bisection. Weighting by standard errors makes `c` a shift
/// measured in standard errors.
pub fn inflate_to_physical(m: &DMatrix<f64>, weights: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let d = m.nrows();
    if d != m.ncols() || !d.is_multiple_of(2) || weights.len() != d {
        return Err(Error::dimension(format!("need a square even matrix and {d} weights")));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::domain("inflation weights must be positive and finite"));
    }
    // rounding tolerance: a pure state sits exactly on the boundary
    let tol = 1e-12 * m.diagonal().amax().max(1.0);
    let physical = |x: &DMatrix<f64>| uncertainty_margin(x) >= -tol;
    if physical(m) {
        return Ok((m.clone(), 0.0));
    }
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(weights));
    let at = |c: f64| m + &w * c;
    let (mut lo, mut hi) = (0.0, 1.0);
    while !physical(&at(hi)) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical("no finite inflation makes the matrix physical".into()));
        }
    }
    for _ in 0..100 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if !physical(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((at(hi), hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::spectrum::raw_symplectic_eigenvalues;
    use crate::gaussian::symplectic::symplectic_defect;
    use crate::gaussian::{apply, beam_splitter, direct_sum, epr_cm, CovarianceMatrix};
    use approx::assert_relative_eq;

    fn mixed_state() -> CovarianceMatrix {
        let s = direct_sum(&[
            epr_cm(3.0).unwrap(),
            CovarianceMatrix::thermal(2.0, "t").unwrap(),
            CovarianceMatrix::thermal(5.0, "u").unwrap(),
        ])
        .unwrap();
        let bs = beam_splitter(0.37, 1, 2, 4).unwrap();
        let bs2 = beam_splitter(0.8, 0, 3, 4).unwrap();
        apply(&bs2, &apply(&bs, &s).unwrap()).unwrap()
    }

    #[test]
    fn decomposition_reconstructs_and_is_symplectic() {
        let cm = mixed_state();
        let w = williamson(cm.matrix()).unwrap();
        assert!(symplectic_defect(&w.symplectic) < 1e-10);
        let back = w.reconstruct(&w.eigenvalues);
        assert!((&back - cm.matrix()).amax() < 1e-11);
        let mut a = w.eigenvalues.clone();
        a.sort_by(|x, y| y.total_cmp(x));
        let b = raw_symplectic_eigenvalues(cm.matrix()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(*x, *y, max_relative = 1e-10);
        }
    }

    #[test]
    fn projection_is_identity_on_physical_input() {
        let cm = mixed_state();
        let (p, shift) = project_physical(cm.matrix()).unwrap();
        assert_eq!(shift, 0.0);
        assert_eq!(&p, cm.matrix());
    }

    #[test]
    fn projection_lifts_sub_vacuum_mode() {
        let mut m = mixed_state().into_matrix();
        // shrink toward an unphysical state
        m *= 0.9;
        let (p, shift) = project_physical(&m).unwrap();
        assert!(shift > 0.0);
        let nu = raw_symplectic_eigenvalues(&p).unwrap();
        assert!(nu.iter().all(|&v| v > 1.0 - 1e-10), "{nu:?}");
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(williamson(&m), Err(Error::Physicality(_))));
    }

    #[test]
    fn inflation_repairs_with_minimal_shift() {
        // a squeezed vacuum pushed below the uncertainty bound
        let mut m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.9, 1.0, 1.0]));
        m[(2, 2)] = 0.9;
        let (out, c) = inflate_to_physical(&m, &[0.1, 0.1, 0.1, 0.1]).unwrap();
        assert!(uncertainty_margin(&out) > -1e-11);
        assert!(c > 0.0);
        // slightly less inflation is not enough
        let less = &m + DMatrix::identity(4, 4) * (0.1 * c * (1.0 - 1e-6));
        assert!(uncertainty_margin(&less) < 0.0);
        let ok = DMatrix::identity(4, 4);
        assert_eq!(inflate_to_physical(&ok, &[1.0; 4]).unwrap().1, 0.0);
    }
}
