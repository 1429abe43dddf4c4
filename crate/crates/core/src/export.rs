//! SNR map export: CSV tables and plain greyscale PGM images.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Region};
use crate::units::linear_to_db;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Csv,
    Pgm,
}

impl MapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MapFormat::Csv => "csv",
            MapFormat::Pgm => "pgm",
        }
    }
}

/// One data row of a CSV map.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct MapRow {
    pub x: f64,
    pub y: f64,
    pub snr_db: f64,
    #[serde(deserialize_with = "flag")]
    pub valid: bool,
}

fn flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(serde::de::Error::custom(format!("valid flag must be 0 or 1, got {other}"))),
    }
}

pub fn to_db(field: &[f64]) -> Vec<f64> {
    field.iter().map(|&x| linear_to_db(x)).collect()
}

/// Nine significant digits.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn check_dims(field: &[f64], valid: &[bool], grid: GridSpec) -> Result<()> {
    if field.len() != grid.len() || valid.len() != grid.len() {
        return Err(Error::Usage(format!(
            "map has {} values and {} flags, grid {}x{} needs {}",
            field.len(),
            valid.len(),
            grid.nh,
            grid.nv,
            grid.len()
        )));
    }
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let position = e.position().cloned();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: position.map_or(0, |p| p.line() as usize),
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `x,y,snr_db,valid` rows, `u` outer and `v` inner; `field` is linear.
pub fn write_csv_map(
    field: &[f64],
    valid: &[bool],
    grid: GridSpec,
    region: &Region,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    check_dims(field, valid, grid)?;
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer
        .write_record(["x", "y", "snr_db", "valid"])
        .map_err(|e| csv_error(path, e))?;
    for u in 0..grid.nh {
        for v in 0..grid.nv {
            let i = grid.index(u, v);
            writer
                .write_record([
                    sig9(grid.x(u, region)),
                    sig9(grid.y(v, region)),
                    sig9(linear_to_db(field[i])),
                    (valid[i] as u8).to_string(),
                ])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv_map(path: impl AsRef<Path>) -> Result<Vec<MapRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers != vec!["x", "y", "snr_db", "valid"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "expected header `x,y,snr_db,valid`".into(),
        });
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<MapRow>, _>>()
        .map_err(|e| csv_error(path, e))
}

/// Minimum and maximum dB value over valid cells.
pub fn db_window(field: &[f64], valid: &[bool]) -> Option<(f64, f64)> {
    field
        .iter()
        .zip(valid)
        .filter(|(_, ok)| **ok)
        .map(|(x, _)| linear_to_db(*x))
        .fold(None, |acc, db| match acc {
            None => Some((db, db)),
            Some((lo, hi)) => Some((lo.min(db), hi.max(db))),
        })
}

/// Plain `P2` greyscale image, top row at the largest `y`. Valid cells map
/// `[lo, hi]` dB affinely onto 0..=255; invalid cells are 0.
pub fn write_pgm_map(
    field: &[f64],
    valid: &[bool],
    grid: GridSpec,
    window: Option<(f64, f64)>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    check_dims(field, valid, grid)?;
    let (lo, hi) = window.or_else(|| db_window(field, valid)).unwrap_or((0.0, 1.0));
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::Usage(format!("invalid dB window [{lo}, {hi}]")));
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(out, "P2\n# window_db {} {}\n{} {}\n255\n", sig9(lo), sig9(hi), grid.nh, grid.nv).map_err(io)?;
    for v in (0..grid.nv).rev() {
        let row: Vec<String> = (0..grid.nh)
            .map(|u| {
                let i = grid.index(u, v);
                if !valid[i] {
                    return "0".to_string();
                }
                let level = (255.0 * (linear_to_db(field[i]) - lo) / span).round();
                (level.clamp(0.0, 255.0) as u8).to_string()
            })
            .collect();
        writeln!(out, "{}", row.join(" ")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn export_map(
    field: &[f64],
    valid: &[bool],
    grid: GridSpec,
    region: &Region,
    path: impl AsRef<Path>,
    format: MapFormat,
) -> Result<()> {
    match format {
        MapFormat::Csv => write_csv_map(field, valid, grid, region, path),
        MapFormat::Pgm => write_pgm_map(field, valid, grid, None, path),
    }
}

/// Writes a simple CSV table of preformatted cells.
pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
