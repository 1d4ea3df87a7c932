//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! every value parses back to the identical `f64`.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::fourier::FourierCoefficients;
use crate::impedance::CauchyPair;
use crate::operator::CMatrix;
use crate::sampling::{IndicatorGrid, Polyline};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Columns `i, j, re, im`, row-major.
pub fn write_matrix_csv(a: &CMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["i", "j", "re", "im"]).map_err(csv_err)?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            w.write_record([i.to_string(), j.to_string(), fmt_f64(v.re), fmt_f64(v.im)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `x, y, value, flags`.
pub fn write_indicator_csv(ind: &IndicatorGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["x", "y", "value", "flags"]).map_err(csv_err)?;
    for ((p, v), f) in ind.grid.points().iter().zip(&ind.values).zip(&ind.flags) {
        w.write_record([fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v), f.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `id, x, y`; closed polylines repeat their first vertex.
pub fn write_contour_csv(lines: &[Polyline], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["id", "x", "y"]).map_err(csv_err)?;
    for (id, line) in lines.iter().enumerate() {
        for p in &line.points {
            w.write_record([id.to_string(), fmt_f64(p[0]), fmt_f64(p[1])])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PairRow {
    n: i64,
    re_f: f64,
    im_f: f64,
    re_g: f64,
    im_g: f64,
}

/// Reads one Cauchy pair from columns `n, re_f, im_f, re_g, im_g`. Modes not
/// listed are zero; the order is the largest `|n|`.
pub fn read_cauchy_pair_csv(path: &Path) -> Result<CauchyPair> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {}", path.display(), e)))?;
    let rows: Vec<PairRow> = r
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("{}: {}", path.display(), e)))?;
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no Fourier modes", path.display())));
    }
    let order = rows.iter().map(|r| r.n.unsigned_abs() as usize).max().unwrap_or(0);
    let mut f = FourierCoefficients::zeros(order);
    let mut g = FourierCoefficients::zeros(order);
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        if !seen.insert(row.n) {
            return Err(Error::Format(format!("{}: mode {} listed twice", path.display(), row.n)));
        }
        f.set(row.n, Complex64::new(row.re_f, row.im_f))?;
        g.set(row.n, Complex64::new(row.re_g, row.im_g))?;
    }
    CauchyPair::new(f, g)
}

pub fn write_cauchy_pair_csv(pair: &CauchyPair, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["n", "re_f", "im_f", "re_g", "im_g"]).map_err(csv_err)?;
    for (n, fv) in pair.f().iter() {
        let gv = pair.g().get(n);
        w.write_record([n.to_string(), fmt_f64(fv.re), fmt_f64(fv.im), fmt_f64(gv.re), fmt_f64(gv.im)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to rerun a command, plus its summary results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            seed: config.noise.seed,
            outputs: Vec::new(),
            results: serde_json::Value::Null,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
