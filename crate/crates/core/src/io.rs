//! Stable file formats for pipelines.
//!
//! Torrey series travel as CSV: 1D with header `tau_s,s`, 2D in long format
//! with header `tauH_s,tauP_s,s`, row-major in `tauH` then `tauP`. Spectral
//! profiles use `nu_q_hz,S` and `nuH_q_hz,nuP_q_hz,S`. All quantities are
//! SI (seconds, hertz) and numbers carry 16 significant digits so values
//! survive a round trip well below 1e-12. Writers go through a temp file
//! and an atomic rename.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectral::{SpectralProfile, SpectralProfile2D};
use crate::torrey::{TorreySeries, TorreySeries2D};

pub const SERIES_1D_HEADER: &str = "tau_s,s";
pub const SERIES_2D_HEADER: &str = "tauH_s,tauP_s,s";
pub const SPECTRUM_1D_HEADER: &str = "nu_q_hz,S";
pub const SPECTRUM_2D_HEADER: &str = "nuH_q_hz,nuP_q_hz,S";

/// Number of series dimensions in the file at `path` (1 or 2), decided by
/// the header line.
pub fn series_dimensionality(path: &Path) -> Result<usize> {
    use std::io::BufRead;
    let mut header = String::new();
    BufReader::new(File::open(path)?).read_line(&mut header)?;
    match header.trim_end() {
        SERIES_1D_HEADER => Ok(1),
        SERIES_2D_HEADER => Ok(2),
        other => Err(Error::Parse {
            line: 1,
            message: format!(
                "unrecognized header {other:?}; expected {SERIES_1D_HEADER:?} or {SERIES_2D_HEADER:?}"
            ),
        }),
    }
}

pub fn write_series_csv<W: Write>(mut w: W, series: &TorreySeries) -> Result<()> {
    writeln!(w, "{SERIES_1D_HEADER}")?;
    for (tau, value) in series.tau_grid().iter().zip(series.values()) {
        writeln!(w, "{tau:.15e},{value:.15e}")?;
    }
    Ok(())
}

pub fn write_series2d_csv<W: Write>(mut w: W, series: &TorreySeries2D) -> Result<()> {
    writeln!(w, "{SERIES_2D_HEADER}")?;
    for (k, &tau_h) in series.tau_h_grid().iter().enumerate() {
        for (l, &tau_p) in series.tau_p_grid().iter().enumerate() {
            writeln!(w, "{tau_h:.15e},{tau_p:.15e},{:.15e}", series.values()[(k, l)])?;
        }
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(mut w: W, profile: &SpectralProfile) -> Result<()> {
    writeln!(w, "{SPECTRUM_1D_HEADER}")?;
    for (freq, value) in profile.freq_grid().iter().zip(profile.values()) {
        writeln!(w, "{freq:.15e},{value:.15e}")?;
    }
    Ok(())
}

pub fn write_spectrum2d_csv<W: Write>(mut w: W, profile: &SpectralProfile2D) -> Result<()> {
    writeln!(w, "{SPECTRUM_2D_HEADER}")?;
    for (i, &freq_h) in profile.freq_h_grid().iter().enumerate() {
        for (j, &freq_p) in profile.freq_p_grid().iter().enumerate() {
            writeln!(w, "{freq_h:.15e},{freq_p:.15e},{:.15e}", profile.values()[(i, j)])?;
        }
    }
    Ok(())
}

fn parse_field(record: &csv::StringRecord, index: usize, name: &str) -> Result<f64> {
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    let raw = record.get(index).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {name} column"),
    })?;
    raw.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad {name} value {raw:?}: {e}"),
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &str) -> Result<()> {
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let got = headers.iter().collect::<Vec<_>>().join(",");
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {expected:?}, got {got:?}"),
        });
    }
    Ok(())
}

/// Parses a 1D series; the quantum order is not stored in the file and must
/// be supplied by the caller.
pub fn read_series_csv<R: Read>(reader: R, quantum_order: u32) -> Result<TorreySeries> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, SERIES_1D_HEADER)?;
    let mut tau = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        tau.push(parse_field(&record, 0, "tau_s")?);
        values.push(parse_field(&record, 1, "s")?);
    }
    TorreySeries::from_samples(tau, values, quantum_order)
}

/// Parses a long-format 2D series, validating the row-major layout.
pub fn read_series2d_csv<R: Read>(
    reader: R,
    quantum_orders: (u32, u32),
) -> Result<TorreySeries2D> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, SERIES_2D_HEADER)?;
    let mut rows: Vec<(f64, f64, f64, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((
            parse_field(&record, 0, "tauH_s")?,
            parse_field(&record, 1, "tauP_s")?,
            parse_field(&record, 2, "s")?,
            line,
        ));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }

    // The tauP grid is the leading block sharing the first tauH value.
    let first_tau_h = rows[0].0;
    let len_p = rows.iter().take_while(|r| r.0 == first_tau_h).count();
    if len_p < 2 || rows.len() % len_p != 0 {
        return Err(Error::Parse {
            line: rows[0].3,
            message: format!(
                "{} rows do not form complete blocks of {len_p} tauP points",
                rows.len()
            ),
        });
    }
    let len_h = rows.len() / len_p;
    let tau_p_grid: Vec<f64> = rows[..len_p].iter().map(|r| r.1).collect();
    let mut tau_h_grid = Vec::with_capacity(len_h);
    let mut values = Array2::zeros((len_h, len_p));
    for k in 0..len_h {
        let block = &rows[k * len_p..(k + 1) * len_p];
        tau_h_grid.push(block[0].0);
        for (l, row) in block.iter().enumerate() {
            if row.0 != block[0].0 {
                return Err(Error::Parse {
                    line: row.3,
                    message: format!(
                        "tauH changed mid-block: {} vs {}; rows must be row-major in tauH",
                        row.0, block[0].0
                    ),
                });
            }
            if row.1 != tau_p_grid[l] {
                return Err(Error::Parse {
                    line: row.3,
                    message: format!(
                        "tauP grid mismatch: {} vs {} from the first block",
                        row.1, tau_p_grid[l]
                    ),
                });
            }
            values[(k, l)] = row.2;
        }
    }
    TorreySeries2D::from_samples(tau_h_grid, tau_p_grid, values, quantum_orders)
}

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn save_series_csv(path: &Path, series: &TorreySeries) -> Result<()> {
    let mut buf = Vec::new();
    write_series_csv(&mut buf, series)?;
    atomic_write(path, &buf)
}

pub fn save_series2d_csv(path: &Path, series: &TorreySeries2D) -> Result<()> {
    let mut buf = Vec::new();
    write_series2d_csv(&mut buf, series)?;
    atomic_write(path, &buf)
}

pub fn save_spectrum_csv(path: &Path, profile: &SpectralProfile) -> Result<()> {
    let mut buf = Vec::new();
    write_spectrum_csv(&mut buf, profile)?;
    atomic_write(path, &buf)
}

pub fn save_spectrum2d_csv(path: &Path, profile: &SpectralProfile2D) -> Result<()> {
    let mut buf = Vec::new();
    write_spectrum2d_csv(&mut buf, profile)?;
    atomic_write(path, &buf)
}

pub fn load_series_csv(path: &Path, quantum_order: u32) -> Result<TorreySeries> {
    read_series_csv(BufReader::new(File::open(path)?), quantum_order)
}

pub fn load_series2d_csv(path: &Path, quantum_orders: (u32, u32)) -> Result<TorreySeries2D> {
    read_series2d_csv(BufReader::new(File::open(path)?), quantum_orders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torrey::uniform_tau_grid;

    fn sample_series() -> TorreySeries {
        let tau = uniform_tau_grid(16, 1.25e-5);
        let values: Vec<f64> = tau
            .iter()
            .map(|&t| (std::f64::consts::TAU * 3_000.0 * t).sin() * 0.815)
            .collect();
        TorreySeries::from_samples(tau, values, 9).unwrap()
    }

    #[test]
    fn series_round_trip_preserves_values() {
        let series = sample_series();
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &series).unwrap();
        let parsed = read_series_csv(buf.as_slice(), 9).unwrap();
        for (a, b) in series.values().iter().zip(parsed.values()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        for (a, b) in series.tau_grid().iter().zip(parsed.tau_grid()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn series2d_round_trip_preserves_layout() {
        let tau_h = uniform_tau_grid(5, 1.11e-5);
        let tau_p = uniform_tau_grid(4, 5.0e-5);
        let mut values = Array2::zeros((5, 4));
        for k in 0..5 {
            for l in 0..4 {
                values[(k, l)] = (k as f64 - 1.5) * 0.1 + l as f64 * 0.01;
            }
        }
        let series = TorreySeries2D::from_samples(tau_h, tau_p, values, (9, 1)).unwrap();
        let mut buf = Vec::new();
        write_series2d_csv(&mut buf, &series).unwrap();
        let parsed = read_series2d_csv(buf.as_slice(), (9, 1)).unwrap();
        assert_eq!(parsed.values().dim(), (5, 4));
        for (a, b) in series.values().iter().zip(parsed.values()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn malformed_csv_reports_line_number() {
        let text = "tau_s,s\n0.0,0.0\n1.0e-5,not_a_number\n";
        let err = read_series_csv(text.as_bytes(), 1).unwrap_err();
        match err {
            Error::Parse { line, ref message } => {
                assert_eq!(line, 3, "wrong line in {message}");
                assert!(message.contains("not_a_number"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected_with_line_one() {
        let text = "time,amplitude\n0.0,0.0\n";
        match read_series_csv(text.as_bytes(), 1) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected header error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_2d_blocks_are_rejected() {
        let text = "tauH_s,tauP_s,s\n0.0,0.0,0.0\n0.0,5.0e-5,0.1\n1.0e-5,0.0,0.2\n";
        assert!(read_series2d_csv(text.as_bytes(), (9, 1)).is_err());
    }

    #[test]
    fn dimensionality_sniffing() {
        let dir = tempfile::tempdir().unwrap();
        let path1 = dir.path().join("one.csv");
        save_series_csv(&path1, &sample_series()).unwrap();
        assert_eq!(series_dimensionality(&path1).unwrap(), 1);

        let path_bad = dir.path().join("bad.csv");
        std::fs::write(&path_bad, "x,y,z,w\n").unwrap();
        assert!(series_dimensionality(&path_bad).is_err());
    }

    #[test]
    fn atomic_write_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
    }

    #[test]
    fn spectrum_headers_are_exact() {
        let series = sample_series();
        let profile = crate::spectral::transform_1d(&series, 32).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &profile).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("nu_q_hz,S\n"));
    }
}
