//! Serialization helpers shared by the output writers.
//!
//! Exact rationals are always written as `"numerator/denominator"` strings,
//! never as floats.

use std::fs;
use std::io::Write;
use std::path::Path;

use rug::Rational;
use serde::Serializer;

use crate::error::Result;
use crate::exact_arith::BigFloat;

pub const SCHEMA_VERSION: u32 = 1;

pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering with `digits` significant digits.
pub fn bigfloat_string(f: &BigFloat, digits: usize) -> String {
    f.to_string_radix(10, Some(digits.max(1)))
}

/// Significant decimal digits carried by `prec_bits` bits.
pub fn decimal_digits(prec_bits: u32) -> usize {
    ((prec_bits as f64) * std::f64::consts::LOG10_2).floor() as usize
}

pub fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(r))
}

pub fn ser_rationals<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational_string))
}

pub fn ser_bigfloat<S: Serializer>(f: &BigFloat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&bigfloat_string(f, decimal_digits(f.prec())))
}

pub fn ser_bigfloats<S: Serializer>(v: &[BigFloat], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|f| bigfloat_string(f, decimal_digits(f.prec()))))
}

pub fn ser_opt_bigfloats<S: Serializer>(v: &Option<Vec<BigFloat>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_bigfloats(v, s),
        None => s.serialize_none(),
    }
}

/// Writes `contents` to `path` through a temporary sibling file so that a
/// failed run never leaves a partial output behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Renders rows as CSV with `#`-prefixed comment lines first.
pub fn csv_with_comments(comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_strings() {
        assert_eq!(rational_string(&Rational::from((-7, 3876))), "-7/3876");
        assert_eq!(rational_string(&Rational::from(3)), "3/1");
    }

    #[test]
    fn csv_rendering() {
        let bytes =
            csv_with_comments(&["config a=1".to_string()], &["x", "y"], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "# config a=1\nx,y\n1,2\n");
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"{}").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "{}");
        assert!(!dir.path().join("out.json.tmp").exists());
    }
}
