//! Tab-separated tables with a mandatory header line.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// `%g`-style rendering with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&s).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Line-by-line reader that checks the header and the field count.
pub struct TableReader<R> {
    input: R,
    columns: usize,
    line: usize,
    buf: String,
}

impl<R: BufRead> TableReader<R> {
    pub fn new(mut input: R, header: &[&str]) -> Result<Self> {
        let mut buf = String::new();
        if input.read_line(&mut buf)? == 0 {
            return Err(Error::Format { line: 1, reason: "missing header".into() });
        }
        let got: Vec<&str> = buf.trim_end_matches(['\n', '\r']).split('\t').collect();
        if got != header {
            return Err(Error::Format {
                line: 1,
                reason: format!("expected header `{}`, found `{}`", header.join("\t"), got.join("\t")),
            });
        }
        Ok(Self { input, columns: header.len(), line: 1, buf })
    }

    /// Next row as `(line_number, fields)`; blank lines are rejected.
    pub fn next_row(&mut self) -> Result<Option<(usize, Vec<String>)>> {
        self.buf.clear();
        if self.input.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        let fields: Vec<String> = self.buf.trim_end_matches(['\n', '\r']).split('\t').map(str::to_string).collect();
        if fields.len() != self.columns {
            return Err(Error::Format {
                line: self.line,
                reason: format!("expected {} fields, found {}", self.columns, fields.len()),
            });
        }
        Ok(Some((self.line, fields)))
    }
}

pub fn parse_field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format { line, reason: format!("cannot parse {name} `{s}`") })
}

pub fn write_header<W: Write + ?Sized>(w: &mut W, header: &[&str]) -> Result<()> {
    writeln!(w, "{}", header.join("\t"))?;
    Ok(())
}

pub fn write_row<W: Write + ?Sized>(w: &mut W, fields: &[String]) -> Result<()> {
    writeln!(w, "{}", fields.join("\t"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(99999999999.99), "100000000000");
        for x in [std::f64::consts::PI, 1e-300, 7.25e11, 0.000123456789012345] {
            let y: f64 = fmt_sig(x).parse().unwrap();
            assert!((y / x - 1.0).abs() < 1e-11, "{x}");
            assert_eq!(fmt_sig(y), fmt_sig(x));
        }
    }

    #[test]
    fn header_and_width_checks() {
        let data = "a\tb\n1\t2\n3\n";
        let mut r = TableReader::new(data.as_bytes(), &["a", "b"]).unwrap();
        assert_eq!(r.next_row().unwrap().unwrap(), (2, vec!["1".to_string(), "2".to_string()]));
        assert!(matches!(r.next_row(), Err(Error::Format { line: 3, .. })));
        assert!(matches!(TableReader::new("x\ty\n".as_bytes(), &["a", "b"]), Err(Error::Format { line: 1, .. })));
    }
}
