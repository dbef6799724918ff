//! CSV export of Stokes/AoP/DoLP sample streams.
//!
//! Column schema (fixed): `t_us,X,Y,s0,s1,s2,dolp,aop_deg,method,flags`.
//! Angles are degrees at this boundary; undefined values are emitted as
//! empty fields; `flags` is a `|`-joined subset of `saturated`,
//! `unpolarized`.

use std::io::Write;
use std::path::Path;

use crate::io::EvioError;
use crate::polarization::StokesSample;
use crate::recon::Method;

pub const CSV_HEADER: &str = "t_us,X,Y,s0,s1,s2,dolp,aop_deg,method,flags";

/// One exported sample row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesRow {
    pub t_us: u64,
    pub mx: u16,
    pub my: u16,
    /// Absent for methods without intensity scale (events).
    pub stokes: Option<StokesSample>,
    pub dolp: Option<f64>,
    /// Radians; converted to degrees on export.
    pub aop: Option<f64>,
    pub method: Method,
    pub saturated: bool,
    pub unpolarized: bool,
}

impl StokesRow {
    fn flags(&self) -> String {
        let mut parts = Vec::new();
        if self.saturated {
            parts.push("saturated");
        }
        if self.unpolarized {
            parts.push("unpolarized");
        }
        parts.join("|")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Write rows with the fixed header to any writer.
pub fn export_csv<W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = StokesRow>,
) -> Result<u64, EvioError> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut n = 0u64;
    for row in rows {
        let (s0, s1, s2) = match row.stokes {
            Some(s) => (Some(s.s0), Some(s.s1), Some(s.s2)),
            None => (None, None, None),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.t_us,
            row.mx,
            row.my,
            opt(s0),
            opt(s1),
            opt(s2),
            opt(row.dolp),
            opt(row.aop.map(|a| a.to_degrees())),
            row.method.as_str(),
            row.flags()
        )?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

/// Write rows to a file path.
pub fn export_csv_path(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = StokesRow>,
) -> Result<u64, EvioError> {
    let file = std::fs::File::create(path)?;
    export_csv(std::io::BufWriter::new(file), rows)
}
