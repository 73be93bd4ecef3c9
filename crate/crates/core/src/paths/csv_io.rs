//! CSV reading and writing for paths.
//!
//! Numbers are written with `Display`, which for `f32`/`f64` prints the
//! shortest decimal that parses back to the same value.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{BVPath, Path};

/// Parsed numeric CSV with its header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> Table<T> {
    pub fn column(&self, name: &str) -> Option<Vec<T>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Csv(format!("line {}: {e}", p.line())),
        None => Error::Csv(e.to_string()),
    }
}

/// Reads a header row and finite numeric rows of equal width.
pub fn read_table<T: Real, R: Read>(reader: R) -> Result<Table<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = r + 2;
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let v: T = field
                .parse()
                .map_err(|_| Error::Csv(format!("line {line}, column {}: cannot parse {field:?}", c + 1)))?;
            if !v.is_finite() {
                return Err(Error::Csv(format!("line {line}, column {}: non-finite value", c + 1)));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    Ok(Table { headers, rows })
}

/// Checks that headers are `t, <prefix>1, ..., <prefix>d` followed by `tail`,
/// returning `d`.
pub(crate) fn expect_headers(headers: &[String], groups: &[&str], tail: &[&str]) -> Result<usize> {
    if headers.first().map(String::as_str) != Some("t") {
        return Err(Error::Csv("first column must be `t`".into()));
    }
    let body = headers.len().saturating_sub(1 + tail.len());
    if groups.is_empty() || body == 0 || !body.is_multiple_of(groups.len()) {
        return Err(Error::Csv(format!("unexpected header {headers:?}")));
    }
    let d = body / groups.len();
    let mut want = vec!["t".to_owned()];
    for g in groups {
        want.extend((1..=d).map(|i| format!("{g}{i}")));
    }
    want.extend(tail.iter().map(|s| (*s).to_owned()));
    if want != headers {
        return Err(Error::Csv(format!("expected header {want:?}, found {headers:?}")));
    }
    Ok(d)
}

/// Path from `t,x1,...,xd`.
pub fn read_path_csv<T: Real, R: Read>(reader: R) -> Result<Path<T>> {
    let table = read_table::<T, _>(reader)?;
    let d = expect_headers(&table.headers, &["x"], &[])?;
    let times = table.rows.iter().map(|r| r[0]).collect();
    let values = table.rows.iter().flat_map(|r| r[1..=d].iter().copied()).collect();
    Path::new(times, values, d)
}

/// Bounded-variation path from `t,x1,...,xd,cumvar`.
pub fn read_bv_csv<T: Real, R: Read>(reader: R) -> Result<BVPath<T>> {
    let table = read_table::<T, _>(reader)?;
    let d = expect_headers(&table.headers, &["x"], &["cumvar"])?;
    let times = table.rows.iter().map(|r| r[0]).collect();
    let values = table.rows.iter().flat_map(|r| r[1..=d].iter().copied()).collect();
    let cumvar = table.rows.iter().map(|r| r[d + 1]).collect();
    BVPath::new(Path::new(times, values, d)?, cumvar)
}

pub(crate) fn header_row(groups: &[&str], d: usize, tail: &[&str]) -> Vec<String> {
    let mut h = vec!["t".to_owned()];
    for g in groups {
        h.extend((1..=d).map(|i| format!("{g}{i}")));
    }
    h.extend(tail.iter().map(|s| (*s).to_owned()));
    h
}

pub(crate) fn write_rows<W: Write, T: Real>(writer: W, headers: &[String], rows: impl Iterator<Item = Vec<T>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_path_csv<T: Real, W: Write>(writer: W, path: &Path<T>) -> Result<()> {
    let headers = header_row(&["x"], path.dim(), &[]);
    let rows = (0..path.len()).map(|i| {
        let mut r = vec![path.times()[i]];
        r.extend_from_slice(path.value(i));
        r
    });
    write_rows(writer, &headers, rows)
}

pub fn write_bv_csv<T: Real, W: Write>(writer: W, bv: &BVPath<T>) -> Result<()> {
    let path = bv.path();
    let headers = header_row(&["x"], path.dim(), &["cumvar"]);
    let rows = (0..path.len()).map(|i| {
        let mut r = vec![path.times()[i]];
        r.extend_from_slice(path.value(i));
        r.push(bv.cumvar()[i]);
        r
    });
    write_rows(writer, &headers, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let p = Path::new(vec![0.0, 0.1, 0.30000000000000004], vec![0.1, 1.0 / 3.0, -2e-300, 1e100, 7.0, 0.0], 2)
            .unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &p).unwrap();
        let q: Path<f64> = read_path_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        let bv = BVPath::from_path(p);
        let mut buf = Vec::new();
        write_bv_csv(&mut buf, &bv).unwrap();
        let back: BVPath<f64> = read_bv_csv(buf.as_slice()).unwrap();
        assert_eq!(bv, back);
    }

    #[test]
    fn strict_parsing() {
        let bad_nan = "t,x1\n0,0\n1,NaN\n";
        assert!(read_path_csv::<f64, _>(bad_nan.as_bytes()).is_err());
        let bad_order = "t,x1\n0,0\n1,1\n0.5,2\n";
        assert!(read_path_csv::<f64, _>(bad_order.as_bytes()).is_err());
        let bad_header = "t,y1\n0,0\n";
        assert!(read_path_csv::<f64, _>(bad_header.as_bytes()).is_err());
        let ragged = "t,x1\n0,0\n1\n";
        assert!(read_path_csv::<f64, _>(ragged.as_bytes()).is_err());
        let ok = "t, x1, x2\n0, 0, 1\n0.5, 1, 2\n";
        assert_eq!(read_path_csv::<f64, _>(ok.as_bytes()).unwrap().dim(), 2);
    }
}
