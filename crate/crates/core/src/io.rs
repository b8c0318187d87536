//! Domain spec files and the CSV artifacts.
//!
//! Every floating-point field is written with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly and makes identical runs
//! byte-identical. Missing values are written as empty fields.

use std::io::{Read, Write};
use std::path::Path;

use crate::conjugacy::ConjugacyJet;
use crate::error::{Error, Result};
use crate::fitting::CoeffProfile;
use crate::geometry::FourierCurvatureSpec;
use crate::rigidity::CurvatureProfile;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Parse and validate a domain spec.
pub fn parse_spec(text: &str) -> Result<FourierCurvatureSpec> {
    let spec: FourierCurvatureSpec =
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("malformed spec: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<FourierCurvatureSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_spec(&text)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row of an orbit dump; Lazutkin columns are optional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitRow {
    pub step: usize,
    pub s: f64,
    pub phi: f64,
    pub lazutkin: Option<(f64, f64)>,
}

pub fn write_orbit_csv<W: Write>(w: W, rows: &[OrbitRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["step", "s", "phi", "x", "y"]).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.step.to_string(),
            fmt(r.s),
            fmt(r.phi),
            fmt_opt(r.lazutkin.map(|q| q.0)),
            fmt_opt(r.lazutkin.map(|q| q.1)),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profile_csv<W: Write>(w: W, profile: &CoeffProfile) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["x", "alpha3", "alpha4", "beta4", "alpha3prime", "source"])
        .map_err(csv_err)?;
    for i in 0..profile.len() {
        out.write_record([
            fmt(profile.x[i]),
            fmt(profile.alpha3[i]),
            fmt(profile.alpha4[i]),
            fmt(profile.beta4[i]),
            fmt_opt(profile.alpha3_prime.as_ref().map(|v| v[i])),
            profile.source.as_str().to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rigidity_csv<W: Write>(w: W, profile: &CurvatureProfile) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["x", "K", "g", "log_rho"]).map_err(csv_err)?;
    for i in 0..profile.len() {
        out.write_record([
            fmt(profile.x[i]),
            fmt_opt(profile.k.as_ref().map(|k| k[i])),
            fmt(profile.g[i]),
            fmt(profile.log_rho[i]),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the `log_rho` column of a rigidity CSV back into a profile.
pub fn read_rigidity_csv<R: Read>(r: R) -> Result<CurvatureProfile> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let col = headers
        .iter()
        .position(|h| h == "log_rho")
        .ok_or_else(|| Error::Io("missing log_rho column".into()))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let field = record.get(col).unwrap_or("");
        values.push(
            field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("bad log_rho value {field:?}: {e}")))?,
        );
    }
    if values.len() < 8 {
        return Err(Error::Grid(format!("profile has {} rows, need at least 8", values.len())));
    }
    Ok(CurvatureProfile::from_log_rho(values))
}

pub fn write_jet_csv<W: Write>(w: W, jet: &ConjugacyJet) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["s", "a0", "a0prime", "b1"]).map_err(csv_err)?;
    for i in 0..jet.len() {
        out.write_record([fmt(jet.s[i]), fmt(jet.a0[i]), fmt(jet.a0_prime[i]), fmt(jet.b1[i])])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
