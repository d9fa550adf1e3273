//! Text and CSV rendering of results. Numbers use 17 significant digits.

use std::io::Write;

use cvqkd::analysis::{RootResult, RootStatus};
use cvqkd::sampler::SampledReport;
use cvqkd::{RateReport, Result};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
}

fn rate_fields(r: &RateReport) -> Vec<(&'static str, String)> {
    vec![
        ("variant", r.variant.as_str().to_string()),
        ("beta", num(r.beta)),
        ("I_BA", num(r.i_ba)),
        ("S_E", num(r.s_e)),
        ("S_E_cond", num(r.s_e_cond)),
        ("I_BE", num(r.i_be)),
        ("K_R", num(r.k_r)),
        ("k_used", r.k_used.map(num).unwrap_or_default()),
        ("spectrum", list(&r.spectrum)),
        ("cond_spectrum", list(&r.cond_spectrum)),
    ]
}

fn sampled_fields(s: &SampledReport, seed: u64) -> Vec<(&'static str, String)> {
    let mut f = rate_fields(&s.report);
    f.extend([
        ("K_R_low", num(s.interval.0)),
        ("K_R_high", num(s.interval.1)),
        ("sigma", num(s.sigma)),
        ("n_shots", s.n_shots.to_string()),
        ("seed", seed.to_string()),
        ("failed_resamples", s.failed_resamples.to_string()),
    ]);
    f
}

fn aligned<W: Write>(fields: &[(&str, String)], mut w: W) -> Result<()> {
    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in fields {
        writeln!(w, "{k:<width$}  {v}")?;
    }
    Ok(())
}

fn one_row_csv<W: Write>(fields: &[(&str, String)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(fields.iter().map(|(k, _)| *k))?;
    wr.write_record(fields.iter().map(|(_, v)| v.as_str()))?;
    wr.flush()?;
    Ok(())
}

pub fn rate_text<W: Write>(r: &RateReport, w: W) -> Result<()> {
    aligned(&rate_fields(r), w)
}

pub fn rate_csv<W: Write>(r: &RateReport, w: W) -> Result<()> {
    one_row_csv(&rate_fields(r), w)
}

pub fn sampled_text<W: Write>(s: &SampledReport, seed: u64, w: W) -> Result<()> {
    aligned(&sampled_fields(s, seed), w)
}

pub fn sampled_csv<W: Write>(s: &SampledReport, seed: u64, w: W) -> Result<()> {
    one_row_csv(&sampled_fields(s, seed), w)
}

pub fn root_text<W: Write>(name: &str, r: &RootResult, w: W) -> Result<()> {
    let status = match r.status {
        RootStatus::Ok => "ok",
        RootStatus::NoRoot => "no_root",
    };
    aligned(
        &[
            (name, r.root.map(num).unwrap_or_default()),
            ("status", status.to_string()),
            ("residual", num(r.residual)),
            ("bracket", format!("{} {}", num(r.bracket.0), num(r.bracket.1))),
            ("iterations", r.iterations.to_string()),
        ],
        w,
    )
}
