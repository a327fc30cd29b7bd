//! Artifact writers shared by the modules and the CLI.
//!
//! PGM heatmaps are plain (P2) 16-bit images. Finite values are mapped
//! linearly onto `0..=65534`; the minimum and maximum used are recorded in a
//! comment line. Missing values (NaN) are written as `65535`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Value written for NaN cells in PGM output.
pub const PGM_NAN: u16 = 65535;

/// Shortest representation that round-trips (`NaN` for missing values).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:?}")
    }
}

/// Write `values` (row-major, `height` rows of `width`) as a P2 heatmap.
pub fn write_pgm<W: Write>(mut out: W, width: usize, height: usize, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), width * height, "pgm size mismatch");
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    writeln!(out, "P2")?;
    writeln!(out, "# min={} max={} nan={PGM_NAN}", fmt_f64(lo), fmt_f64(hi))?;
    writeln!(out, "{width} {height}")?;
    writeln!(out, "{PGM_NAN}")?;
    let span = hi - lo;
    for row in values.chunks(width) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                if !v.is_finite() {
                    PGM_NAN
                } else if span > 0.0 {
                    (((v - lo) / span) * (PGM_NAN - 1) as f64).round() as u16
                } else {
                    0
                }
                .to_string()
            })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    Ok(std::io::BufWriter::new(fs::File::create(path)?))
}
