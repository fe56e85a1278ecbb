//! CSV and JSON emission.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// Formats `v` with 12 significant digits. Non-finite values become `nan`,
/// `inf` or `-inf`.
pub fn fmt_num(v: f64) -> String {
    const SIG: i32 = 12;
    if v.is_nan() {
        return "nan".to_owned();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if v == 0.0 {
        return "0".to_owned();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        return format!("{:.*e}", (SIG - 1) as usize, v);
    }
    let decimals = (SIG - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Accumulates rows in memory and writes an RFC 4180 file with a header.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_bytes())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_num(2.378679656440357), "2.37867965644");
        assert_eq!(fmt_num(0.0043), "0.00430000000000");
        assert_eq!(fmt_num(-0.5257783647861), "-0.525778364786");
        assert_eq!(fmt_num(1500.0), "1500.00000000");
        assert_eq!(fmt_num(1.5e-9), "1.50000000000e-9");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn rfc4180_layout() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "a,b\r\n1,\"x,y\"\r\n");
    }
}
