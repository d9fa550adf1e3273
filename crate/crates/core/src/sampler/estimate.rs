//! Reconstruction of the Het2M covariance matrix from the measurement record.
//!
//! Only six quadratures are read on every shot, plus one randomly chosen
//! quadrature of A2. The other half of each heterodyne pair follows from the
//! 50:50 vacuum split: with `X`, `P` the two ports of a mode and `v` the
//! vacuum, `p_X = -p_P + sqrt(2) p_v` and `x_P = -x_X + sqrt(2) x_v`. Every
//! entry of the 14x14 matrix is therefore a fixed linear image of the moments
//! of the recorded values and the known vacuum moments.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use super::shots::ShotRecord;
use crate::error::{Error, Result, Warning};
use crate::gaussian::{read_matrix_csv, write_matrix_csv, CovarianceMatrix, Quadrature};
use crate::protocols::HET2M_LABELS;

pub const MIN_SHOTS: usize = 100;

/// Observables: the six measured values, x and p of A2, then x and p of the
/// three splitting vacua (B2, B1, A1).
const N_OBS: usize = 14;

/// Additive second-moment sums over a set of shots (no mean subtraction:
/// the modulation is centered).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentSums {
    pub n: usize,
    /// Per A2 basis: number of shots.
    pub n_basis: [usize; 2],
    /// Per A2 basis: sums of `o_i o_j` over the six always-measured values.
    mm: [SMatrix<f64, 6, 6>; 2],
    mm_sq: [SMatrix<f64, 6, 6>; 2],
    /// Per A2 basis: sums of `a2 * o_j` (j < 6) and `a2^2` at index 6.
    a2: [[f64; 7]; 2],
    a2_sq: [[f64; 7]; 2],
}

impl MomentSums {
    pub fn from_shots(shots: &[ShotRecord]) -> Self {
        let mut s = Self::default();
        for shot in shots {
            s.add(shot);
        }
        s
    }

    pub fn add(&mut self, shot: &ShotRecord) {
        let m = shot.measured();
        let b = shot.a2_basis.offset();
        self.n += 1;
        for i in 0..6 {
            for j in 0..6 {
                let p = m[i] * m[j];
                self.mm[b][(i, j)] += p;
                self.mm_sq[b][(i, j)] += p * p;
            }
        }
        self.n_basis[b] += 1;
        let a = shot.a2_value;
        for (j, &mj) in m.iter().chain([&a]).enumerate() {
            let p = a * mj;
            self.a2[b][j] += p;
            self.a2_sq[b][j] += p * p;
        }
    }

    pub fn merge(&mut self, other: &MomentSums) {
        self.n += other.n;
        for b in 0..2 {
            self.mm[b] += other.mm[b];
            self.mm_sq[b] += other.mm_sq[b];
            self.n_basis[b] += other.n_basis[b];
            for j in 0..7 {
                self.a2[b][j] += other.a2[b][j];
                self.a2_sq[b][j] += other.a2_sq[b][j];
            }
        }
    }
}

/// Sample estimate of the Het2M covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedCM {
    /// Canonical Het2M order; symmetric but not necessarily physical.
    pub entries: DMatrix<f64>,
    /// Standard error of each entry.
    pub std_errors: DMatrix<f64>,
    pub n_shots: usize,
    pub seed: Option<u64>,
}

impl EstimatedCM {
    pub fn labels() -> Vec<String> {
        HET2M_LABELS.iter().map(|s| s.to_string()).collect()
    }

    /// As a covariance matrix (fails if a diagonal entry is not positive).
    pub fn to_cm(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::new(self.entries.clone(), Self::labels())
    }

    /// Row-major CSV preceded by a `# {"n_shots":..,"seed":..}` line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = serde_json::to_string(&Meta { n_shots: self.n_shots, seed: self.seed })
            .map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w, "# {meta}")?;
        write_matrix_csv(&self.entries, &Self::labels(), w)
    }

    /// Reads the matrix and metadata; standard errors are not stored and come back as zeros.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut first = String::new();
        r.read_line(&mut first)?;
        let meta: Meta = first
            .strip_prefix('#')
            .and_then(|m| serde_json::from_str(m.trim()).ok())
            .ok_or_else(|| Error::Parse("estimate file must start with a '# {\"n_shots\":..}' line".into()))?;
        let (entries, labels) = read_matrix_csv(r)?;
        if labels != Self::labels() {
            return Err(Error::Parse(format!("estimate must use modes {}", HET2M_LABELS.join(","))));
        }
        let dim = entries.nrows();
        Ok(Self { entries, std_errors: DMatrix::zeros(dim, dim), n_shots: meta.n_shots, seed: meta.seed })
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    n_shots: usize,
    seed: Option<u64>,
}

/// Each of the 14 quadratures (canonical order) as a combination of observables.
fn quadrature_map() -> DMatrix<f64> {
    let r2 = std::f64::consts::SQRT_2;
    let mut m = DMatrix::zeros(14, N_OBS);
    // (quadrature, observable, weight)
    let terms: [(usize, usize, f64); 20] = [
        (0, 0, 1.0),
        (1, 1, -1.0),
        (1, 9, r2),
        (2, 0, -1.0),
        (2, 8, r2),
        (3, 1, 1.0),
        (4, 2, 1.0),
        (5, 3, -1.0),
        (5, 11, r2),
        (6, 2, -1.0),
        (6, 10, r2),
        (7, 3, 1.0),
        (8, 6, 1.0),
        (9, 7, 1.0),
        (10, 4, 1.0),
        (11, 5, -1.0),
        (11, 13, r2),
        (12, 4, -1.0),
        (12, 12, r2),
        (13, 5, 1.0),
    ];
    for (q, o, w) in terms {
        m[(q, o)] = w;
    }
    m
}

/// Moments of one A2 quadrature from the shots measured in its basis, by
/// regression on the six always-measured values: with `beta` the in-subsample
/// regression coefficients and `s2` the residual variance,
/// `Cov(a2, m) = Sigma beta` and `Var(a2) = beta^T Sigma beta + s2`, where
/// `Sigma` uses every shot. This is the maximum-likelihood estimate for the
/// missing-basis pattern and keeps the small conditional variance of A2
/// given the rest a directly estimated quantity. Falls back to raw moments
/// when the subsample covariance is singular.
fn regress_a2(sub_mm: &SMatrix<f64, 6, 6>, count: f64, raw: &[f64; 7], sigma: &DMatrix<f64>) -> ([f64; 6], f64) {
    let sub = sub_mm / count;
    let c = nalgebra::Vector6::from_column_slice(&raw[..6]);
    let Some(chol) = sub.cholesky() else {
        let mut cross = [0.0; 6];
        cross.copy_from_slice(&raw[..6]);
        return (cross, raw[6]);
    };
    let beta = chol.solve(&c);
    let s2 = (raw[6] - c.dot(&beta)).max(0.0);
    let beta = nalgebra::DVector::from_column_slice(beta.as_slice());
    let cross = sigma * &beta;
    let var = beta.dot(&cross) + s2;
    let mut out = [0.0; 6];
    out.copy_from_slice(cross.as_slice());
    (out, var)
}

/// Estimates the covariance matrix from summed moments. A2 moments come from
/// the shots measured in the matching basis through [`regress_a2`]; the
/// never-jointly-measured `Cov(x_A2, p_A2)` is taken as zero.
pub fn estimate_from_sums(sums: &MomentSums) -> Result<(EstimatedCM, Vec<Warning>)> {
    if sums.n < MIN_SHOTS {
        return Err(Error::InsufficientData(format!("need at least {MIN_SHOTS} shots, got {}", sums.n)));
    }
    if sums.n_basis.iter().any(|&c| c < 2) {
        return Err(Error::InsufficientData("both A2 bases need at least two shots".into()));
    }
    let n = sums.n as f64;
    let mut mean = DMatrix::zeros(N_OBS, N_OBS);
    let mut se = DMatrix::zeros(N_OBS, N_OBS);
    let moment = |sum: f64, sq: f64, count: f64| {
        let mu = sum / count;
        let var = (sq / count - mu * mu).max(0.0);
        (mu, (var / count).sqrt())
    };
    let full_mm = sums.mm[0] + sums.mm[1];
    let full_sq = sums.mm_sq[0] + sums.mm_sq[1];
    for i in 0..6 {
        for j in 0..6 {
            let (mu, s) = moment(full_mm[(i, j)], full_sq[(i, j)], n);
            mean[(i, j)] = mu;
            se[(i, j)] = s;
        }
    }
    let sigma_mm = mean.view((0, 0), (6, 6)).clone_owned();
    for b in 0..2 {
        let count = sums.n_basis[b] as f64;
        let o = 6 + b;
        let mut raw = [0.0; 7];
        for (j, r) in raw.iter_mut().enumerate() {
            let (mu, s) = moment(sums.a2[b][j], sums.a2_sq[b][j], count);
            *r = mu;
            let k = if j < 6 { j } else { o };
            se[(o, k)] = s;
            se[(k, o)] = s;
        }
        let (cross, var) = regress_a2(&sums.mm[b], count, &raw, &sigma_mm);
        for j in 0..6 {
            mean[(o, j)] = cross[j];
            mean[(j, o)] = cross[j];
        }
        mean[(o, o)] = var;
    }
    // splitting vacua: unit variance, correlated only with their own ports
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (v, x_port, p_port) in [(8, 0, 1), (10, 2, 3), (12, 4, 5)] {
        mean[(v, v)] = 1.0;
        mean[(v + 1, v + 1)] = 1.0;
        mean[(v, x_port)] = h;
        mean[(x_port, v)] = h;
        mean[(v + 1, p_port)] = h;
        mean[(p_port, v + 1)] = h;
    }

    let measured_var: f64 = (0..8).map(|i| mean[(i, i)]).sum();
    if measured_var == 0.0 {
        let warn = Warning::Degenerate("every recorded value is zero".into());
        let est = EstimatedCM {
            entries: DMatrix::zeros(14, 14),
            std_errors: DMatrix::zeros(14, 14),
            n_shots: sums.n,
            seed: None,
        };
        return Ok((est, vec![warn]));
    }

    let m = quadrature_map();
    let entries = &m * &mean * m.transpose();
    let entries = (&entries + entries.transpose()) * 0.5;
    // each entry depends on a single non-constant moment
    let abs = m.abs();
    let std_errors = &abs * &se * abs.transpose();
    Ok((EstimatedCM { entries, std_errors, n_shots: sums.n, seed: None }, vec![]))
}

pub fn estimate_cm(shots: &[ShotRecord]) -> Result<(EstimatedCM, Vec<Warning>)> {
    estimate_from_sums(&MomentSums::from_shots(shots))
}

/// Fraction of shots in which Alice measured x on A2.
pub fn x_basis_fraction(shots: &[ShotRecord]) -> f64 {
    shots.iter().filter(|s| s.a2_basis == Quadrature::X).count() as f64 / shots.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{build_het2m_closed_form, ChannelParams, ProtocolScenario, Variant};
    use crate::sampler::sample_shots;

    fn truth() -> CovarianceMatrix {
        let ch = ChannelParams::new(0.4, 0.2).unwrap();
        let s = ProtocolScenario::symmetric(Variant::Het2M, 20.0, 20.0, 0.8, 0.99, ch).unwrap();
        build_het2m_closed_form(&s).unwrap()
    }

    #[test]
    fn map_reproduces_exact_state() {
        // feed exact moments through the map: the state must come back
        let g = truth();
        let m = quadrature_map();
        let measured = [0usize, 3, 4, 7, 10, 13, 8, 9];
        let mut mean = DMatrix::zeros(N_OBS, N_OBS);
        for (a, &qa) in measured.iter().enumerate() {
            for (b, &qb) in measured.iter().enumerate() {
                mean[(a, b)] = g.entry(qa, qb);
            }
        }
        mean[(6, 7)] = 0.0;
        mean[(7, 6)] = 0.0;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (v, x, p) in [(8, 0, 1), (10, 2, 3), (12, 4, 5)] {
            mean[(v, v)] = 1.0;
            mean[(v + 1, v + 1)] = 1.0;
            mean[(v, x)] = h;
            mean[(x, v)] = h;
            mean[(v + 1, p)] = h;
            mean[(p, v + 1)] = h;
        }
        let back = &m * mean * m.transpose();
        assert!((back - g.matrix()).amax() < 1e-12);
    }

    #[test]
    fn estimate_within_three_standard_errors() {
        let g = truth();
        let set = sample_shots(&g, 200_000, 11).unwrap();
        let (est, warn) = estimate_cm(&set.shots).unwrap();
        assert!(warn.is_empty());
        let mut outliers = 0;
        for i in 0..14 {
            for j in 0..14 {
                let d = (est.entries[(i, j)] - g.entry(i, j)).abs();
                if d > 3.0 * est.std_errors[(i, j)] + 1e-12 {
                    outliers += 1;
                }
            }
        }
        // a handful of 3-sigma excursions among 196 correlated entries is expected
        assert!(outliers <= 6, "{outliers}");
        // sign of the B2P/A1X block
        assert!(est.entries[(3, 10)].signum() == g.entry(3, 10).signum());
    }

    #[test]
    fn zero_shots_are_degenerate() {
        let shots: Vec<ShotRecord> = (0..200)
            .map(|i| ShotRecord {
                shot: i,
                x_b2x: 0.0,
                p_b2p: 0.0,
                x_b1x: 0.0,
                p_b1p: 0.0,
                x_a1x: 0.0,
                p_a1p: 0.0,
                a2_basis: if i % 2 == 0 { Quadrature::X } else { Quadrature::P },
                a2_value: 0.0,
            })
            .collect();
        let (est, warn) = estimate_cm(&shots).unwrap();
        assert_eq!(est.entries, DMatrix::zeros(14, 14));
        assert!(matches!(warn[0], Warning::Degenerate(_)));
    }

    #[test]
    fn too_few_shots() {
        let set = sample_shots(&truth(), 10, 1).unwrap();
        assert!(matches!(estimate_cm(&set.shots), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn sums_merge_like_concatenation() {
        let set = sample_shots(&truth(), 1000, 5).unwrap();
        let whole = MomentSums::from_shots(&set.shots);
        let mut parts = MomentSums::from_shots(&set.shots[..300]);
        parts.merge(&MomentSums::from_shots(&set.shots[300..]));
        assert_eq!(whole.n, parts.n);
        assert!((whole.mm[0] - parts.mm[0]).amax() < 1e-9);
    }

    #[test]
    fn estimate_csv_round_trip() {
        let set = sample_shots(&truth(), 500, 5).unwrap();
        let (mut est, _) = estimate_cm(&set.shots).unwrap();
        est.seed = Some(5);
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let back = EstimatedCM::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.entries, est.entries);
        assert_eq!((back.n_shots, back.seed), (500, Some(5)));
    }
}
