//! CSV writer and reader.

use std::io::{self, Write};

use crate::config::CliError;
use crate::run::Block;

pub const HEADER: &str = "# magnon-echo v1";

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: 12 significant digits, trailing zeros dropped, scientific
/// notation outside `1e-4 <= |v| < 1e12`.
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(out: &mut W, config_line: &str, blocks: &[Block]) -> Result<(), CliError> {
    for block in blocks {
        let empty = match block {
            Block::Series { series, .. } => series.samples.is_empty(),
            Block::Dump { rows, .. } => rows.is_empty(),
        };
        if empty {
            return Err(CliError::Runtime("refusing to write an empty series".into()));
        }
    }
    write_blocks(out, config_line, blocks).map_err(|e| CliError::Runtime(format!("write failed: {e}")))
}

fn write_blocks<W: Write>(out: &mut W, config_line: &str, blocks: &[Block]) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "# config: {config_line}")?;
    for block in blocks {
        match block {
            Block::Series { label, series } => {
                writeln!(
                    out,
                    "# series: {label} | {} | columns: {},L",
                    series.description,
                    series.axis.label()
                )?;
                for (x, v) in &series.samples {
                    writeln!(out, "{},{}", format_g(*x), format_g(*v))?;
                }
            }
            Block::Dump { label, description, rows } => {
                writeln!(out, "# series: {label} | {description} | columns: x,n,re,im,abs2")?;
                for (x, n, a) in rows {
                    writeln!(
                        out,
                        "{x},{n},{},{},{}",
                        format_g(a.re),
                        format_g(a.im),
                        format_g(a.norm_sqr())
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// Data rows of an emitted file, grouped by series.
pub fn read_csv(text: &str) -> Result<Vec<Vec<Vec<f64>>>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err("missing header".into());
    }
    let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
    for line in lines {
        if line.starts_with("# series:") {
            out.push(Vec::new());
        } else if line.starts_with('#') {
            continue;
        } else {
            let row = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|_| format!("bad number `{f}`")))
                .collect::<Result<Vec<_>, _>>()?;
            out.last_mut().ok_or("data before the first series")?.push(row);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use magnon_echo::{EchoAxis, EchoSeries};

    #[test]
    fn g_format() {
        assert_eq!(format_g(0.0), "0");
        assert_eq!(format_g(1.0), "1");
        assert_eq!(format_g(0.25), "0.25");
        assert_eq!(format_g(-2.5e-7), "-2.5e-07");
        assert_eq!(format_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g(123456.789), "123456.789");
        assert_eq!(format_g(1e12), "1e+12");
        assert_eq!(format_g(0.99999999999999), "1");
        assert_eq!(format_g(1e-5), "1e-05");
        assert_eq!(format_g(0.0001), "0.0001");
    }

    #[test]
    fn round_trip() {
        let mut s = EchoSeries::new(EchoAxis::T0, "demo");
        for k in 0..20 {
            let x = k as f64 * 0.25;
            s.push(x, (x * 1.7).cos().powi(2) / 3.0);
        }
        let blocks = vec![Block::Series {
            label: "a".into(),
            series: s.clone(),
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, "scenario=demo", &blocks).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n'));
        let parsed = read_csv(&text).unwrap();
        for (row, (x, v)) in parsed[0].iter().zip(&s.samples) {
            assert_eq!(format_g(row[0]), format_g(*x));
            assert_eq!(format_g(row[1]), format_g(*v));
            assert_eq!(row[1], format_g(*v).parse::<f64>().unwrap());
        }
    }

    #[test]
    fn empty_series_rejected() {
        let blocks = vec![Block::Series {
            label: String::new(),
            series: EchoSeries::new(EchoAxis::N, "empty"),
        }];
        assert!(write_csv(&mut Vec::new(), "", &blocks).is_err());
    }
}
