//! Touchstone v1 reader/writer for one- and two-port S-parameter files.
//!
//! Two-port data rows follow the v1 column order `f S11 S21 S12 S22` with
//! two numbers per parameter in the declared format. Noise-parameter
//! sections (which restart the frequency column) are rejected rather than
//! skipped silently.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::SMatrix;
use crate::sweep::{SSweep, Sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqUnit {
    Hz,
    Khz,
    Mhz,
    Ghz,
}

impl FreqUnit {
    pub fn scale(&self) -> f64 {
        match self {
            FreqUnit::Hz => 1.0,
            FreqUnit::Khz => 1e3,
            FreqUnit::Mhz => 1e6,
            FreqUnit::Ghz => 1e9,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            FreqUnit::Hz => "Hz",
            FreqUnit::Khz => "kHz",
            FreqUnit::Mhz => "MHz",
            FreqUnit::Ghz => "GHz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// real, imaginary
    Ri,
    /// magnitude, angle in degrees
    Ma,
    /// 20·log10(magnitude), angle in degrees
    Db,
}

impl DataFormat {
    fn label(&self) -> &'static str {
        match self {
            DataFormat::Ri => "RI",
            DataFormat::Ma => "MA",
            DataFormat::Db => "DB",
        }
    }
}

/// Option-line fields. Only S-parameters are supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchstoneHeader {
    pub freq_unit: FreqUnit,
    pub format: DataFormat,
    pub reference_ohm: f64,
}

impl Default for TouchstoneHeader {
    fn default() -> Self {
        Self {
            freq_unit: FreqUnit::Ghz,
            format: DataFormat::Ri,
            reference_ohm: 50.0,
        }
    }
}

/// Converts one `(a, b)` pair in the given format to a complex value.
pub fn decode_value(fmt: DataFormat, a: f64, b: f64) -> Complex64 {
    match fmt {
        DataFormat::Ri => Complex64::new(a, b),
        DataFormat::Ma => Complex64::from_polar(a, b.to_radians()),
        DataFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

/// Inverse of [`decode_value`].
pub fn encode_value(fmt: DataFormat, v: Complex64) -> (f64, f64) {
    match fmt {
        DataFormat::Ri => (v.re, v.im),
        DataFormat::Ma => (v.norm(), v.arg().to_degrees()),
        DataFormat::Db => (20.0 * v.norm().max(1e-300).log10(), v.arg().to_degrees()),
    }
}

fn parse_option_line(line: &str, lineno: usize) -> Result<TouchstoneHeader> {
    let mut unit = None;
    let mut format = None;
    let mut reference = None;
    let mut tokens = line[1..].split_whitespace().peekable();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => unit = Some(FreqUnit::Hz),
            "KHZ" => unit = Some(FreqUnit::Khz),
            "MHZ" => unit = Some(FreqUnit::Mhz),
            "GHZ" => unit = Some(FreqUnit::Ghz),
            "S" => {}
            "Y" | "Z" | "G" | "H" => {
                return Err(Error::parse(
                    lineno,
                    format!("only S-parameter files are supported, got `{tok}`"),
                ))
            }
            "RI" => format = Some(DataFormat::Ri),
            "MA" => format = Some(DataFormat::Ma),
            "DB" => format = Some(DataFormat::Db),
            "R" => {
                let val = tokens.next().ok_or_else(|| {
                    Error::parse(lineno, "option line `R` must be followed by a reference")
                })?;
                let r: f64 = val.parse().map_err(|_| {
                    Error::parse(lineno, format!("bad reference impedance `{val}`"))
                })?;
                if !r.is_finite() || r <= 0.0 {
                    return Err(Error::parse(
                        lineno,
                        format!("reference impedance must be > 0, got {r}"),
                    ));
                }
                reference = Some(r);
            }
            other => {
                return Err(Error::parse(
                    lineno,
                    format!("unrecognized option token `{other}`"),
                ))
            }
        }
    }
    // Touchstone v1 defaults for omitted fields.
    Ok(TouchstoneHeader {
        freq_unit: unit.unwrap_or(FreqUnit::Ghz),
        format: format.unwrap_or(DataFormat::Ma),
        reference_ohm: reference.unwrap_or(50.0),
    })
}

fn strip_comment(line: &str) -> &str {
    match line.find('!') {
        Some(pos) => &line[..pos],
        None => line,
    }
    .trim()
}

fn parse_rows(text: &str, values_per_row: usize) -> Result<(TouchstoneHeader, Vec<f64>, Vec<Vec<Complex64>>)> {
    let mut header: Option<TouchstoneHeader> = None;
    let mut freqs: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if header.is_some() {
                return Err(Error::parse(lineno, "duplicate option line"));
            }
            header = Some(parse_option_line(line, lineno)?);
            continue;
        }
        let header = header
            .as_ref()
            .ok_or_else(|| Error::parse(lineno, "data encountered before the option line"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expected = 1 + 2 * values_per_row;
        if fields.len() != expected {
            return Err(Error::parse(
                lineno,
                format!("expected {expected} columns, found {}", fields.len()),
            ));
        }
        let mut nums = Vec::with_capacity(expected);
        for f in &fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad number `{f}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite number `{f}`")));
            }
            nums.push(v);
        }
        let freq_hz = nums[0] * header.freq_unit.scale();
        if freq_hz <= 0.0 {
            return Err(Error::parse(lineno, format!("non-positive frequency {freq_hz} Hz")));
        }
        if let Some(&prev) = freqs.last() {
            if freq_hz <= prev {
                return Err(Error::parse(
                    lineno,
                    "non-monotonic frequency (noise-parameter sections are not supported)",
                ));
            }
        }
        let values: Vec<Complex64> = (0..values_per_row)
            .map(|k| decode_value(header.format, nums[1 + 2 * k], nums[2 + 2 * k]))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(lineno, "decoded value is not finite"));
        }
        freqs.push(freq_hz);
        rows.push(values);
    }

    let header = header.ok_or_else(|| Error::parse(1, "missing Touchstone option line"))?;
    Ok((header, freqs, rows))
}

/// Parses a two-port `.s2p` document.
pub fn read_s2p(text: &str) -> Result<(TouchstoneHeader, SSweep)> {
    let (header, freqs, rows) = parse_rows(text, 4)?;
    let data = rows
        .into_iter()
        .map(|v| SMatrix {
            s11: v[0],
            s21: v[1],
            s12: v[2],
            s22: v[3],
        })
        .collect();
    Ok((header, Sweep::new(freqs, data)?))
}

/// Parses a one-port `.s1p` document into an S11 sweep.
pub fn read_s1p(text: &str) -> Result<(TouchstoneHeader, Sweep<Complex64>)> {
    let (header, freqs, rows) = parse_rows(text, 1)?;
    let data = rows.into_iter().map(|v| v[0]).collect();
    Ok((header, Sweep::new(freqs, data)?))
}

fn fmt_freq(f_hz: f64, unit: FreqUnit) -> String {
    format!("{}", f_hz / unit.scale())
}

fn push_pair(out: &mut String, fmt: DataFormat, v: Complex64) {
    let (a, b) = encode_value(fmt, v);
    let _ = write!(out, " {a:.8e} {b:.8e}");
}

/// Serializes a two-port sweep. Values carry 9 significant digits, so an
/// RI round trip recovers each component within 1e-9.
pub fn write_s2p(header: &TouchstoneHeader, sweep: &SSweep) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} S {} R {}",
        header.freq_unit.label(),
        header.format.label(),
        header.reference_ohm
    );
    for (f, s) in sweep.iter() {
        let _ = write!(out, "{}", fmt_freq(f, header.freq_unit));
        for v in [s.s11, s.s21, s.s12, s.s22] {
            push_pair(&mut out, header.format, v);
        }
        out.push('\n');
    }
    out
}

/// Serializes a one-port S11 sweep.
pub fn write_s1p(header: &TouchstoneHeader, sweep: &Sweep<Complex64>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} S {} R {}",
        header.freq_unit.label(),
        header.format.label(),
        header.reference_ohm
    );
    for (f, s) in sweep.iter() {
        let _ = write!(out, "{}", fmt_freq(f, header.freq_unit));
        push_pair(&mut out, header.format, *s);
        out.push('\n');
    }
    out
}

/// One-port reflection to admittance: `Y = (1/z0)·(1 − S11)/(1 + S11)`.
pub fn s11_to_admittance(s11: Complex64, z0: f64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) + s11;
    if den == Complex64::ZERO {
        return Err(Error::Domain(
            "S11 = -1 corresponds to infinite admittance".into(),
        ));
    }
    let y = (Complex64::new(1.0, 0.0) - s11) / (z0 * den);
    if !y.is_finite() {
        return Err(Error::Domain("non-finite admittance from S11".into()));
    }
    Ok(y)
}

/// Converts a parsed one-port sweep to admittance using its reference.
pub fn s1p_to_admittance(header: &TouchstoneHeader, sweep: &Sweep<Complex64>) -> Result<Sweep<Complex64>> {
    let data = sweep
        .data()
        .iter()
        .map(|&s| s11_to_admittance(s, header.reference_ohm))
        .collect::<Result<Vec<_>>>()?;
    Sweep::new(sweep.freqs().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reads_ri_row() {
        let text = "! example\n# GHz S RI R 50\n38.7 0.1 0.0 0.5 0.0 0.5 0.0 0.1 0.0\n";
        let (h, sweep) = read_s2p(text).unwrap();
        assert_eq!(h.format, DataFormat::Ri);
        assert_eq!(h.reference_ohm, 50.0);
        let (f, s) = sweep.iter().next().unwrap();
        assert_relative_eq!(f, 38.7e9, max_relative = 1e-12);
        assert_relative_eq!(s.s21.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.s21.im, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.s11.re, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn reads_ma_and_db_rows() {
        let v = decode_value(DataFormat::Ma, 0.5, 90.0);
        assert_relative_eq!(v.re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(v.im, 0.5, epsilon = 1e-12);
        let v = decode_value(DataFormat::Db, -6.0205999, 0.0);
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-6);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn format_conversions_compose_to_identity() {
        let v = Complex64::new(-0.3231, 0.744);
        let m = encode_value(DataFormat::Ma, v);
        let v1 = decode_value(DataFormat::Ma, m.0, m.1);
        let d = encode_value(DataFormat::Db, v1);
        let v2 = decode_value(DataFormat::Db, d.0, d.1);
        let r = encode_value(DataFormat::Ri, v2);
        let v3 = decode_value(DataFormat::Ri, r.0, r.1);
        assert_relative_eq!(v3.re, v.re, epsilon = 1e-12);
        assert_relative_eq!(v3.im, v.im, epsilon = 1e-12);
    }

    #[test]
    fn rejects_malformed_documents() {
        // wrong column count, with line number
        let err = read_s2p("# GHz S RI R 50\n1.0 0.1 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        // data before option line
        assert!(read_s2p("1.0 0 0 0 0 0 0 0 0\n").is_err());
        // non-monotonic frequency
        let text = "# Hz S RI R 50\n2 0 0 0 0 0 0 0 0\n1 0 0 0 0 0 0 0 0\n";
        let err = read_s2p(text).unwrap_err();
        assert!(err.to_string().contains("noise-parameter"));
        // unsupported parameter kind
        assert!(read_s2p("# GHz Y RI R 50\n").is_err());
        // bad option token
        assert!(read_s2p("# GHz S XX R 50\n").is_err());
    }

    #[test]
    fn empty_sweep_round_trips() {
        let h = TouchstoneHeader::default();
        let text = write_s2p(&h, &SSweep::new(vec![], vec![]).unwrap());
        let (h2, sweep) = read_s2p(&text).unwrap();
        assert_eq!(h2, h);
        assert!(sweep.is_empty());
    }

    #[test]
    fn ghz_unit_prints_ghz_column() {
        let h = TouchstoneHeader::default();
        let s = SMatrix {
            s11: Complex64::ZERO,
            s12: Complex64::new(1.0, 0.0),
            s21: Complex64::new(1.0, 0.0),
            s22: Complex64::ZERO,
        };
        let text = write_s2p(&h, &SSweep::new(vec![38.7e9], vec![s]).unwrap());
        let row = text.lines().nth(1).unwrap();
        assert!(row.starts_with("38.7 "), "row was `{row}`");
    }

    #[test]
    fn s11_admittance_conversion() {
        // Matched load: S11 = 0 -> Y = 1/z0.
        let y = s11_to_admittance(Complex64::ZERO, 50.0).unwrap();
        assert_relative_eq!(y.re, 0.02, epsilon = 1e-15);
        assert!(s11_to_admittance(Complex64::new(-1.0, 0.0), 50.0).is_err());
    }
}
