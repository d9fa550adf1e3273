use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{fmt_num, CovarianceMatrix, Quadrature};
use crate::protocols::HET2M_LABELS;

/// Negative eigenvalues down to this fraction of the largest are treated as zero.
const PSD_TOL: f64 = 1e-10;
const CHUNK: usize = 4096;

/// One use of the protocol: what each detector recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub x_b2x: f64,
    pub p_b2p: f64,
    pub x_b1x: f64,
    pub p_b1p: f64,
    pub x_a1x: f64,
    pub p_a1p: f64,
    /// Alice measures A2 in a randomly chosen quadrature.
    pub a2_basis: Quadrature,
    pub a2_value: f64,
}

impl ShotRecord {
    /// The six always-measured outcomes, in the order of [`MEASURED_COLUMNS`].
    pub fn measured(&self) -> [f64; 6] {
        [self.x_b2x, self.p_b2p, self.x_b1x, self.p_b1p, self.x_a1x, self.p_a1p]
    }
}

pub const MEASURED_COLUMNS: [&str; 6] = ["x_B2X", "p_B2P", "x_B1X", "p_B1P", "x_A1X", "p_A1P"];

/// A run of shots with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    pub seed: u64,
    pub shots: Vec<ShotRecord>,
}

/// `L` with `L L^T = m`: Cholesky when possible, otherwise the symmetric
/// square root with tiny negative eigenvalues dropped.
fn factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Ok(c.l());
    }
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.amax();
    if let Some(bad) = eig.eigenvalues.iter().find(|&&v| v < -PSD_TOL * top) {
        return Err(Error::Factorization(format!("covariance matrix has eigenvalue {bad:.3e}")));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Draws `n` zero-mean Gaussian shots with covariance `cm` (Het2M layout).
///
/// Shot `i` uses the ChaCha8 stream `i` of `seed`, so the record does not
/// depend on how shots are split across threads.
pub fn sample_shots(cm: &CovarianceMatrix, n: usize, seed: u64) -> Result<ShotSet> {
    if n == 0 {
        return Err(Error::InsufficientData("need at least one shot".into()));
    }
    let idx = HET2M_LABELS
        .iter()
        .map(|l| cm.mode_index(l))
        .collect::<Result<Vec<_>>>()?;
    let dim = 2 * cm.n_modes();
    let l = factor(cm.matrix())?;
    let pos = |mode: usize, q: Quadrature| 2 * idx[mode] + q.offset();
    let cols = [
        pos(0, Quadrature::X),
        pos(1, Quadrature::P),
        pos(2, Quadrature::X),
        pos(3, Quadrature::P),
        pos(5, Quadrature::X),
        pos(6, Quadrature::P),
        pos(4, Quadrature::X),
        pos(4, Quadrature::P),
    ];
    let rows = l.select_rows(cols.iter());
    let base = ChaCha8Rng::seed_from_u64(seed);

    let shots = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let mut z = DVector::<f64>::zeros(dim);
            let rows = &rows;
            let base = &base;
            chunk.iter().map(move |&i| {
                let mut rng = base.clone();
                rng.set_stream(i as u64);
                rng.set_word_pos(0);
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let q = rows * &z;
                let basis = if rng.random::<bool>() { Quadrature::X } else { Quadrature::P };
                ShotRecord {
                    shot: i as u64,
                    x_b2x: q[0],
                    p_b2p: q[1],
                    x_b1x: q[2],
                    p_b1p: q[3],
                    x_a1x: q[4],
                    p_a1p: q[5],
                    a2_basis: basis,
                    a2_value: if basis == Quadrature::X { q[6] } else { q[7] },
                }
            })
        })
        .collect();
    Ok(ShotSet { seed, shots })
}

#[derive(Serialize, Deserialize)]
struct Meta {
    n_shots: usize,
    seed: u64,
}

const SHOT_HEADER: [&str; 9] = ["shot", "x_B2X", "p_B2P", "x_B1X", "p_B1P", "x_A1X", "p_A1P", "A2_basis", "A2_value"];

/// Columnar CSV: a `# {"n_shots":..,"seed":..}` line, a header, one row per shot.
pub fn write_shots_csv<W: Write>(set: &ShotSet, mut w: W) -> Result<()> {
    let meta = serde_json::to_string(&Meta { n_shots: set.shots.len(), seed: set.seed })
        .map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w, "# {meta}")?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SHOT_HEADER)?;
    for s in &set.shots {
        let mut rec = vec![s.shot.to_string()];
        rec.extend(s.measured().iter().map(|&v| fmt_num(v)));
        rec.push(s.a2_basis.as_str().to_string());
        rec.push(fmt_num(s.a2_value));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_shots_csv<R: Read>(r: R) -> Result<ShotSet> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let meta: Meta = first
        .strip_prefix('#')
        .and_then(|m| serde_json::from_str(m.trim()).ok())
        .ok_or_else(|| Error::Parse("shot file must start with a '# {\"n_shots\":..,\"seed\":..}' line".into()))?;
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().collect::<Vec<_>>() != SHOT_HEADER {
        return Err(Error::Parse(format!("shot file header must be {}", SHOT_HEADER.join(","))));
    }
    let num = |f: &str| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}")));
    let mut shots = Vec::with_capacity(meta.n_shots);
    for rec in rd.records() {
        let rec = rec?;
        shots.push(ShotRecord {
            shot: rec[0].trim().parse().map_err(|e| Error::Parse(format!("shot index: {e}")))?,
            x_b2x: num(&rec[1])?,
            p_b2p: num(&rec[2])?,
            x_b1x: num(&rec[3])?,
            p_b1p: num(&rec[4])?,
            x_a1x: num(&rec[5])?,
            p_a1p: num(&rec[6])?,
            a2_basis: rec[7].parse()?,
            a2_value: num(&rec[8])?,
        });
    }
    if shots.len() != meta.n_shots {
        return Err(Error::Parse(format!("header announces {} shots, file has {}", meta.n_shots, shots.len())));
    }
    Ok(ShotSet { seed: meta.seed, shots })
}
