//! Admittance sweep CSV interchange.
//!
//! The header row declares the columns; supported sets are
//! `freq_hz,y_re,y_im`, `freq_hz,y_mag_s,y_phase_deg` and
//! `freq_hz,y_mag_db,y_phase_deg` (any column order). Magnitude-dB is
//! interpreted as 20·log10(|Y| / 1 S).

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sweep::{Sweep, YSweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    FreqHz,
    YRe,
    YIm,
    YMagS,
    YMagDb,
    YPhaseDeg,
}

fn column_from_name(name: &str, lineno: usize) -> Result<Column> {
    match name {
        "freq_hz" => Ok(Column::FreqHz),
        "y_re" => Ok(Column::YRe),
        "y_im" => Ok(Column::YIm),
        "y_mag_s" => Ok(Column::YMagS),
        "y_mag_db" => Ok(Column::YMagDb),
        "y_phase_deg" => Ok(Column::YPhaseDeg),
        other => Err(Error::parse(lineno, format!("unknown column `{other}`"))),
    }
}

fn find(cols: &[Column], want: Column) -> Option<usize> {
    cols.iter().position(|&c| c == want)
}

/// Parses an admittance CSV document.
pub fn read_admittance_csv(text: &str) -> Result<YSweep> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_start_matches('\u{feff}').trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty document"))?;
    let cols = header
        .split(',')
        .map(|c| column_from_name(c.trim(), header_line))
        .collect::<Result<Vec<_>>>()?;
    for (i, c) in cols.iter().enumerate() {
        if cols[..i].contains(c) {
            return Err(Error::parse(header_line, "duplicate column"));
        }
    }

    let freq_idx = find(&cols, Column::FreqHz)
        .ok_or_else(|| Error::parse(header_line, "missing `freq_hz` column"))?;
    enum Layout {
        ReIm(usize, usize),
        MagPhase(usize, usize, bool), // value index, phase index, is_db
    }
    let layout = match (
        find(&cols, Column::YRe),
        find(&cols, Column::YIm),
        find(&cols, Column::YMagS),
        find(&cols, Column::YMagDb),
        find(&cols, Column::YPhaseDeg),
    ) {
        (Some(re), Some(im), None, None, None) => Layout::ReIm(re, im),
        (None, None, Some(mag), None, Some(ph)) => Layout::MagPhase(mag, ph, false),
        (None, None, None, Some(db), Some(ph)) => Layout::MagPhase(db, ph, true),
        _ => {
            return Err(Error::parse(
                header_line,
                "inconsistent column set: use (y_re, y_im) or (y_mag_s|y_mag_db, y_phase_deg)",
            ))
        }
    };

    let mut freqs = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let num = |idx: usize| -> Result<f64> {
            let v: f64 = fields[idx]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad number `{}`", fields[idx])))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite number `{}`", fields[idx])));
            }
            Ok(v)
        };
        let f = num(freq_idx)?;
        if f <= 0.0 {
            return Err(Error::parse(lineno, format!("non-positive frequency {f}")));
        }
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(Error::parse(lineno, "frequencies must be strictly increasing"));
            }
        }
        let y = match layout {
            Layout::ReIm(re, im) => Complex64::new(num(re)?, num(im)?),
            Layout::MagPhase(mag, ph, is_db) => {
                let m = if is_db {
                    10f64.powf(num(mag)? / 20.0)
                } else {
                    num(mag)?
                };
                Complex64::from_polar(m, num(ph)?.to_radians())
            }
        };
        if !y.is_finite() {
            return Err(Error::parse(lineno, "non-finite admittance"));
        }
        freqs.push(f);
        data.push(y);
    }
    Sweep::new(freqs, data)
}

/// Writes an admittance sweep in `freq_hz,y_re,y_im` form. Values use the
/// shortest representation that round-trips exactly.
pub fn write_admittance_csv(sweep: &YSweep) -> String {
    let mut out = String::from("freq_hz,y_re,y_im\n");
    for (f, y) in sweep.iter() {
        let _ = writeln!(out, "{},{},{}", f, y.re, y.im);
    }
    out
}
