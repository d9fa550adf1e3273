//! Covariance matrices of multimode Gaussian states.
//!
//! Quadratures are interleaved, `(x1, p1, x2, p2, ...)`, and everything is in
//! shot-noise units: the vacuum has variance 1.

use std::fmt;
use std::io::{Read, Write};

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

/// Position or momentum quadrature of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    /// Offset of this quadrature inside a mode's 2x2 block.
    pub fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrature::X => "x",
            Quadrature::P => "p",
        }
    }
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Quadrature::X),
            "p" | "P" => Ok(Quadrature::P),
            other => Err(Error::Parse(format!("quadrature must be \"x\" or \"p\", got {other:?}"))),
        }
    }
}

/// Real symmetric `2n x 2n` second-moment matrix over labeled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
    labels: Vec<String>,
}

impl CovarianceMatrix {
    /// Builds a covariance matrix, symmetrizing the input.
    ///
    /// Rejects non-square or odd-sized matrices, label counts that do not match
    /// the mode count, non-finite entries and non-positive variances. The
    /// uncertainty principle is not checked here; see [`CovarianceMatrix::check_physical`].
    pub fn new(entries: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(Error::dimension(format!("covariance matrix must be 2n x 2n with n >= 1, got {r}x{c}")));
        }
        if labels.len() != r / 2 {
            return Err(Error::dimension(format!("{} labels for {} modes", labels.len(), r / 2)));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("covariance matrix has non-finite entries".into()));
        }
        if let Some(i) = (0..r).find(|&i| entries[(i, i)] <= 0.0) {
            return Err(Error::Physicality(format!(
                "variance {} of quadrature {i} is not strictly positive",
                entries[(i, i)]
            )));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(Self { entries, labels })
    }

    /// Like [`CovarianceMatrix::new`] but with labels `m0, m1, ...`.
    pub fn unlabeled(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows() / 2;
        Self::new(entries, default_labels(n))
    }

    /// `n`-mode vacuum.
    pub fn vacuum(n: usize) -> Self {
        Self { entries: DMatrix::identity(2 * n, 2 * n), labels: default_labels(n) }
    }

    /// Single-mode thermal state `diag(w, w)`.
    pub fn thermal(w: f64, label: impl Into<String>) -> Result<Self> {
        if !(w >= 1.0) {
            return Err(Error::domain(format!("thermal variance must be >= 1, got {w}")));
        }
        Ok(Self { entries: DMatrix::identity(2, 2) * w, labels: vec![label.into()] })
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Covariance of quadrature `qa` of mode `a` with quadrature `qb` of mode `b`.
    pub fn cov(&self, a: usize, qa: Quadrature, b: usize, qb: Quadrature) -> f64 {
        self.entries[(2 * a + qa.offset(), 2 * b + qb.offset())]
    }

    /// The 2x2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Index(format!("no mode labeled {label:?} in {:?}", self.labels)))
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.n_modes() {
            return Err(Error::dimension(format!("{} labels for {} modes", labels.len(), self.n_modes())));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Renames a single mode.
    pub fn relabel(&mut self, from: &str, to: impl Into<String>) -> Result<()> {
        let i = self.mode_index(from)?;
        self.labels[i] = to.into();
        Ok(())
    }

    /// Largest entrywise difference to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> Result<f64> {
        if self.entries.shape() != other.entries.shape() {
            return Err(Error::dimension("cannot compare matrices of different size"));
        }
        Ok((&self.entries - &other.entries).amax())
    }

    /// Checks that every symplectic eigenvalue is at least `1 - 1e-8`.
    pub fn check_physical(&self) -> Result<()> {
        crate::gaussian::spectrum::symplectic_spectrum_generic(self).map(|_| ())
    }

    /// Writes the matrix as row-major CSV.
    ///
    /// The header names each column `x_<label>` / `p_<label>` in matrix order;
    /// every number is printed with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(&self.entries, &self.labels, w)
    }

    /// Reads a matrix written by [`CovarianceMatrix::write_csv`]. Lines starting
    /// with `#` are skipped.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let (m, labels) = read_matrix_csv(r)?;
        Self::new(m, labels)
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

/// Column names `x_<label>, p_<label>, ...` for a labeled matrix.
pub fn quadrature_columns(labels: &[String]) -> Vec<String> {
    labels.iter().flat_map(|l| [format!("x_{l}"), format!("p_{l}")]).collect()
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, labels: &[String], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(quadrature_columns(labels))?;
    for i in 0..m.nrows() {
        wr.write_record(m.row(i).iter().map(|&v| fmt_num(v)))?;
    }
    wr.flush()?;
    Ok(())
}

pub(crate) fn read_matrix_csv<R: Read>(r: R) -> Result<(DMatrix<f64>, Vec<String>)> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header = rd.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if !cols.len().is_multiple_of(2) || cols.is_empty() {
        return Err(Error::Parse(format!("expected an even number of quadrature columns, got {}", cols.len())));
    }
    let mut labels = Vec::with_capacity(cols.len() / 2);
    for pair in cols.chunks(2) {
        match (pair[0].strip_prefix("x_"), pair[1].strip_prefix("p_")) {
            (Some(a), Some(b)) if a == b => labels.push(a.to_string()),
            _ => return Err(Error::Parse(format!("bad column pair {:?}", pair))),
        }
    }
    let dim = cols.len();
    let mut data = Vec::with_capacity(dim * dim);
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != dim {
            return Err(Error::Parse(format!("row has {} fields, expected {dim}", rec.len())));
        }
        for f in rec.iter() {
            data.push(f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}")))?);
        }
    }
    if data.len() != dim * dim {
        return Err(Error::Parse(format!("expected {dim} rows, got {}", data.len() / dim)));
    }
    Ok((DMatrix::from_row_slice(dim, dim, &data), labels))
}

fn pauli_z() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// Two-mode squeezed vacuum with quadrature variance `v`.
///
/// Diagonal blocks are `v * I`, off-diagonal blocks `sqrt(v^2 - 1) * Z`.
pub fn epr_cm(v: f64) -> Result<CovarianceMatrix> {
    epr_cm_labeled(v, "a", "b")
}

pub fn epr_cm_labeled(v: f64, a: &str, b: &str) -> Result<CovarianceMatrix> {
    if !(v >= 1.0) || !v.is_finite() {
        return Err(Error::domain(format!("EPR variance must be >= 1, got {v}")));
    }
    let c = (v * v - 1.0).sqrt();
    let mut m = DMatrix::zeros(4, 4);
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&(Matrix2::identity() * v));
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&(Matrix2::identity() * v));
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&(pauli_z() * c));
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&(pauli_z() * c));
    CovarianceMatrix::new(m, vec![a.into(), b.into()])
}

/// Block-diagonal concatenation, labels in order.
pub fn direct_sum(parts: &[CovarianceMatrix]) -> Result<CovarianceMatrix> {
    if parts.is_empty() {
        return Err(Error::dimension("direct sum of zero matrices"));
    }
    let dim: usize = parts.iter().map(|p| p.entries.nrows()).sum();
    let mut m = DMatrix::zeros(dim, dim);
    let mut labels = Vec::new();
    let mut off = 0;
    for p in parts {
        let k = p.entries.nrows();
        m.view_mut((off, off), (k, k)).copy_from(&p.entries);
        labels.extend(p.labels.iter().cloned());
        off += k;
    }
    Ok(CovarianceMatrix { entries: m, labels })
}

/// Simultaneous row/column permutation of modes: output mode `i` is input mode `perm[i]`.
pub fn reorder(cm: &CovarianceMatrix, perm: &[usize]) -> Result<CovarianceMatrix> {
    let n = cm.n_modes();
    if perm.len() != n {
        return Err(Error::dimension(format!("permutation of length {} for {n} modes", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Index(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(select_modes(cm, perm))
}

/// Principal submatrix on the listed modes, in the listed order.
pub fn reduce(cm: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    let n = cm.n_modes();
    if modes.is_empty() {
        return Err(Error::dimension("cannot reduce to zero modes"));
    }
    for (i, &m) in modes.iter().enumerate() {
        if m >= n {
            return Err(Error::Index(format!("mode {m} out of range for {n} modes")));
        }
        if modes[..i].contains(&m) {
            return Err(Error::Index(format!("mode {m} listed twice")));
        }
    }
    Ok(select_modes(cm, modes))
}

/// Reduce by label.
pub fn reduce_labels(cm: &CovarianceMatrix, labels: &[&str]) -> Result<CovarianceMatrix> {
    let idx = labels.iter().map(|l| cm.mode_index(l)).collect::<Result<Vec<_>>>()?;
    reduce(cm, &idx)
}

fn select_modes(cm: &CovarianceMatrix, modes: &[usize]) -> CovarianceMatrix {
    let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let k = idx.len();
    let m = DMatrix::from_fn(k, k, |i, j| cm.entries[(idx[i], idx[j])]);
    let labels = modes.iter().map(|&i| cm.labels[i].clone()).collect();
    CovarianceMatrix { entries: m, labels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn epr_at_vacuum_is_identity() {
        let cm = epr_cm(1.0).unwrap();
        assert_eq!(cm.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn epr_blocks_at_v2() {
        let cm = epr_cm(2.0).unwrap();
        let s3 = 3f64.sqrt();
        assert_eq!(cm.block(0, 0), Matrix2::identity() * 2.0);
        assert_eq!(cm.block(1, 1), Matrix2::identity() * 2.0);
        assert_abs_diff_eq!(cm.block(0, 1), Matrix2::new(s3, 0.0, 0.0, -s3), epsilon = 1e-15);
    }

    #[test]
    fn epr_below_vacuum_rejected() {
        assert!(matches!(epr_cm(0.5), Err(Error::Domain(_))));
        assert!(matches!(epr_cm(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn direct_sum_of_vacua() {
        let v = CovarianceMatrix::vacuum(1);
        let s = direct_sum(&[v.clone(), v]).unwrap();
        assert_eq!(s.matrix(), &DMatrix::identity(4, 4));
        assert_eq!(s.n_modes(), 2);
    }

    #[test]
    fn reduce_epr_gives_thermal() {
        let cm = epr_cm(7.0).unwrap();
        let r = reduce(&cm, &[0]).unwrap();
        assert_eq!(r.matrix(), &(DMatrix::identity(2, 2) * 7.0));
    }

    #[test]
    fn identity_reorder_is_noop() {
        let cm = direct_sum(&[epr_cm(3.0).unwrap(), CovarianceMatrix::thermal(2.0, "t").unwrap()]).unwrap();
        assert_eq!(reorder(&cm, &[0, 1, 2]).unwrap(), cm);
    }

    #[test]
    fn reorder_swaps_blocks() {
        let cm = direct_sum(&[
            CovarianceMatrix::thermal(2.0, "a").unwrap(),
            CovarianceMatrix::thermal(5.0, "b").unwrap(),
        ])
        .unwrap();
        let r = reorder(&cm, &[1, 0]).unwrap();
        assert_eq!(r.entry(0, 0), 5.0);
        assert_eq!(r.labels(), &["b".to_string(), "a".to_string()]);
    }

    #[test]
    fn bad_permutations_and_indices() {
        let cm = epr_cm(2.0).unwrap();
        assert!(matches!(reorder(&cm, &[0, 0]), Err(Error::Index(_))));
        assert!(matches!(reorder(&cm, &[0]), Err(Error::Dimension(_))));
        assert!(matches!(reduce(&cm, &[2]), Err(Error::Index(_))));
        assert!(matches!(reduce(&cm, &[1, 1]), Err(Error::Index(_))));
        assert!(matches!(cm.mode_index("zz"), Err(Error::Index(_))));
    }

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.2, 2.0]);
        let cm = CovarianceMatrix::unlabeled(m).unwrap();
        assert_eq!(cm.entry(0, 1), cm.entry(1, 0));
        assert_abs_diff_eq!(cm.entry(0, 1), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn construction_rejects_bad_shapes() {
        assert!(CovarianceMatrix::unlabeled(DMatrix::identity(3, 3)).is_err());
        assert!(CovarianceMatrix::new(DMatrix::identity(4, 4), vec!["a".into()]).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(1, 1)] = 0.0;
        assert!(matches!(CovarianceMatrix::unlabeled(m), Err(Error::Physicality(_))));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cm = epr_cm_labeled(1.0 / 3.0 + 5.0, "B1", "C1").unwrap();
        let mut buf = Vec::new();
        cm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_B1,p_B1,x_C1,p_C1\n"));
        let back = CovarianceMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back, cm);
    }
}
