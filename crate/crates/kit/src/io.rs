//! Charge, zero-sequence and ray files, and the swept-charge CSV format.
//!
//! Charges and zero sequences are JSON (`{"atoms": [...], "r0": ..}` or a
//! bare atom array) or CSV rows `re,im,mult`. Angles are radians.

use std::fs;
use std::path::{Path, PathBuf};

use balayage_core::measures::{ComplexAtom, DiscreteCharge, MeasureError, RaySystem, SweptCharge};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag written into every CSV header and JSON document.
pub const SCHEMA: &str = "balayage-kit/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: row {row}: {message}")]
    Row { path: PathBuf, row: u64, message: String },
    #[error("{path}: atom {index} has no mass")]
    MissingMass { path: PathBuf, index: usize },
    #[error("{path}: zero at the origin is not allowed with genus {genus}")]
    OriginZero { path: PathBuf, genus: u32 },
    #[error("{path}: {source}")]
    Charge { path: PathBuf, source: MeasureError },
    #[error("{path}: CSV error: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Deserialize)]
struct AtomRecord {
    re: f64,
    #[serde(default)]
    im: f64,
    #[serde(default, alias = "mult")]
    mass: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChargeDoc {
    Object {
        atoms: Vec<AtomRecord>,
        #[serde(default)]
        r0: Option<f64>,
    },
    Bare(Vec<AtomRecord>),
}

#[derive(Debug, Deserialize)]
struct RaysDoc {
    angles: Vec<f64>,
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn parse_json_atoms(
    path: &Path,
    text: &str,
    default_mass: Option<f64>,
) -> Result<(Vec<ComplexAtom>, Option<f64>), IoError> {
    let doc: ChargeDoc =
        serde_json::from_str(text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    let (records, r0) = match doc {
        ChargeDoc::Object { atoms, r0 } => (atoms, r0),
        ChargeDoc::Bare(atoms) => (atoms, None),
    };
    let atoms = records
        .into_iter()
        .enumerate()
        .map(|(index, a)| {
            let mass =
                a.mass.or(default_mass).ok_or_else(|| IoError::MissingMass { path: path.to_path_buf(), index })?;
            Ok(ComplexAtom::new(a.re, a.im, mass))
        })
        .collect::<Result<_, IoError>>()?;
    Ok((atoms, r0))
}

/// Rows `re,im[,mult]`; `#` starts a comment and a leading `re,...` header is skipped.
/// Rows are numbered from 1 by their line in the file.
fn parse_csv_atoms(path: &Path, text: &str, default_mass: Option<f64>) -> Result<Vec<ComplexAtom>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut atoms = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| IoError::Csv { path: path.to_path_buf(), source })?;
        let row = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case("re")) {
            continue;
        }
        let bad = |message: String| IoError::Row { path: path.to_path_buf(), row, message };
        if rec.len() < 2 || rec.len() > 3 {
            return Err(bad(format!("expected 2 or 3 fields, found {}", rec.len())));
        }
        let field = |j: usize| -> Result<f64, IoError> {
            let s = &rec[j];
            s.parse::<f64>().map_err(|_| bad(format!("field {} is not a number: {s:?}", j + 1)))
        };
        let mass = match rec.len() {
            3 => field(2)?,
            _ => default_mass.ok_or_else(|| bad("missing mass".into()))?,
        };
        atoms.push(ComplexAtom::new(field(0)?, field(1)?, mass));
    }
    Ok(atoms)
}

fn read_atoms(path: &Path, default_mass: Option<f64>) -> Result<DiscreteCharge, IoError> {
    let text = read_to_string(path)?;
    let (atoms, r0) = if is_csv(path) {
        (parse_csv_atoms(path, &text, default_mass)?, None)
    } else {
        parse_json_atoms(path, &text, default_mass)?
    };
    DiscreteCharge::new(atoms, r0).map_err(|source| IoError::Charge { path: path.to_path_buf(), source })
}

/// A signed charge; every atom needs an explicit mass.
pub fn read_charge(path: &Path) -> Result<DiscreteCharge, IoError> {
    read_atoms(path, None)
}

/// A zero sequence; multiplicities default to 1. Zeros at the origin are
/// rejected when the downstream genus is at least 1.
pub fn read_zero_sequence(path: &Path, genus: u32) -> Result<DiscreteCharge, IoError> {
    let z = read_atoms(path, Some(1.0))?;
    if genus >= 1 && z.has_origin_atom() {
        return Err(IoError::OriginZero { path: path.to_path_buf(), genus });
    }
    Ok(z)
}

/// `{"angles": [...]}` in radians.
pub fn read_rays(path: &Path) -> Result<RaySystem, IoError> {
    let text = read_to_string(path)?;
    let doc: RaysDoc =
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    RaySystem::new(doc.angles).map_err(|source| IoError::Charge { path: path.to_path_buf(), source })
}

/// One row of the swept-charge CSV. `mass` is the ray mass in `(previous t, t]`;
/// a closing row at `t = inf` carries the rest of the ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweptRow {
    pub ray_index: usize,
    pub t: f64,
    pub density: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub mass: f64,
}

/// Samples of every ray of a swept charge on a grid of `t >= 0`.
pub fn swept_rows(swept: &SweptCharge, grid: &[f64], ray_mass: &[f64]) -> Result<Vec<SweptRow>, MeasureError> {
    let mut rows = Vec::with_capacity(swept.rays.len() * (grid.len() + 1));
    for (j, total) in ray_mass.iter().enumerate().take(swept.rays.len()) {
        let mut prev = 0.0;
        for &t in grid {
            let n = swept.distribution(j, t)?;
            rows.push(SweptRow { ray_index: j, t, density: swept.density(j, t)?, n, mass: n - prev });
            prev = n;
        }
        rows.push(SweptRow { ray_index: j, t: f64::INFINITY, density: 0.0, n: *total, mass: total - prev });
    }
    Ok(rows)
}

fn csv_writer<W: std::io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(out)
}

/// Writes `# schema: ...`, a header line and the rows. Floats use the
/// shortest representation that parses back to the same bits.
pub fn write_swept_csv<W: std::io::Write>(mut out: W, rows: &[SweptRow]) -> Result<(), csv::Error> {
    writeln!(out, "# schema: {SCHEMA}")?;
    let mut w = csv_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_swept_csv(path: &Path) -> Result<Vec<SweptRow>, IoError> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(|source| IoError::Csv { path: path.to_path_buf(), source })).collect()
}

/// Generic CSV table: a schema comment, a header and rows of floats.
pub fn write_table<W: std::io::Write>(mut out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<(), csv::Error> {
    writeln!(out, "# schema: {SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Creates or truncates `path`.
pub fn create(path: &Path) -> Result<fs::File, IoError> {
    fs::File::create(path).map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}
