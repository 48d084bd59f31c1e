//! CSV and JSON serialization of scan records.
//!
//! Both formats carry the same fields in the same order. Numbers are written
//! as `{:.16e}` (17 significant digits, round-trips every `f64`); cells that
//! do not apply to a family, and NaN values, are empty in CSV and `null` in
//! JSON.

use std::io::Write;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::scanner::ScanRecord;
use crate::surface::Family;

pub const COLUMNS: [&str; 18] = [
    "family",
    "eps",
    "param1",
    "param2",
    "param3",
    "param4",
    "theta",
    "phi",
    "re_z",
    "im_z",
    "re_w",
    "im_w",
    "rho_resid",
    "levi",
    "re_det",
    "im_det",
    "norm_resid",
    "flag",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq)]
enum Cell {
    Text(&'static str),
    Num(String),
    Empty,
}

pub fn format_number(v: f64) -> Option<String> {
    if v.is_nan() {
        None
    } else if v.is_infinite() {
        Some(if v > 0.0 { "inf" } else { "-inf" }.to_string())
    } else {
        Some(format!("{v:.16e}"))
    }
}

fn num(v: Option<f64>) -> Cell {
    match v.and_then(format_number) {
        Some(s) => Cell::Num(s),
        None => Cell::Empty,
    }
}

fn family_columns(f: &Family) -> (Option<f64>, [Option<f64>; 4]) {
    match *f {
        Family::FlatTube { eps } | Family::LogTube { eps } => (Some(eps), [None; 4]),
        Family::Sphere { r } => (None, [Some(r), None, None, None]),
        Family::Ellipsoid { a, b, c, d } => (None, [Some(a), Some(b), Some(c), Some(d)]),
        Family::CartanMu { alpha } => (None, [Some(alpha), None, None, None]),
    }
}

fn cells(r: &ScanRecord) -> [Cell; 18] {
    let (eps, p) = family_columns(&r.family);
    [
        Cell::Text(r.family.kind().tag()),
        num(eps),
        num(p[0]),
        num(p[1]),
        num(p[2]),
        num(p[3]),
        num(r.param.map(|q| q[0])),
        num(r.param.map(|q| q[1])),
        num(Some(r.z.re)),
        num(Some(r.z.im)),
        num(Some(r.w.re)),
        num(Some(r.w.im)),
        num(Some(r.rho_residual)),
        num(Some(r.levi)),
        num(Some(r.det_a3.re)),
        num(Some(r.det_a3.im)),
        num(Some(r.normalized_residual)),
        Cell::Text(r.flag.tag()),
    ]
}

pub fn write_csv<W: Write>(records: &[ScanRecord], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(cells(r).iter().map(|c| match c {
            Cell::Text(s) => *s,
            Cell::Num(s) => s.as_str(),
            Cell::Empty => "",
        }))?;
    }
    w.flush()?;
    Ok(())
}

fn json_cell(c: Cell) -> Value {
    match c {
        Cell::Text(s) => Value::String(s.to_string()),
        // JSON has no infinities
        Cell::Num(s) => s
            .parse::<Number>()
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Cell::Empty => Value::Null,
    }
}

pub fn to_json(records: &[ScanRecord]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = COLUMNS
                    .iter()
                    .zip(cells(r))
                    .map(|(k, c)| (k.to_string(), json_cell(c)))
                    .collect();
                Value::Object(obj)
            })
            .collect(),
    )
}

pub fn write_json<W: Write>(records: &[ScanRecord], mut out: W) -> Result<(), OutputError> {
    serde_json::to_writer_pretty(&mut out, &to_json(records))?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr::UmbilicFlag;
    use num_complex::Complex64;

    fn record() -> ScanRecord {
        ScanRecord {
            family: Family::Ellipsoid {
                a: 1.0,
                b: 2.0,
                c: 1.0,
                d: 3.0,
            },
            level: 0.0,
            param: Some([0.5, 1.25, 2.0]),
            z: Complex64::new(0.1, -0.2),
            w: Complex64::new(1.0 / 3.0, 0.0),
            rho_residual: -1e-17,
            levi: 2.5,
            det_a3: Complex64::new(f64::NAN, 3.0),
            normalized_residual: 0.125,
            flag: UmbilicFlag::Nonumbilic,
            error: None,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&[record()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COLUMNS.join(","));
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 18);
        assert_eq!(cells[0], "ellipsoid");
        assert_eq!(cells[1], "");
        assert_eq!(cells[3], "2.0000000000000000e0");
        assert_eq!(cells[14], "");
        assert_eq!(cells[17], "nonumbilic");
        assert_eq!(cells[10].parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn json_matches_csv_fields() {
        let v = to_json(&[record()]);
        let obj = v[0].as_object().unwrap();
        assert_eq!(
            obj.keys().collect::<Vec<_>>(),
            COLUMNS.iter().collect::<Vec<_>>()
        );
        assert!(obj["eps"].is_null());
        assert!(obj["re_det"].is_null());
        assert_eq!(obj["flag"], "nonumbilic");
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"re_w\":3.3333333333333331e-1"));
        assert_eq!(obj["re_w"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1e-300, 6.02e23, f64::MIN_POSITIVE, 1.0 / 7.0] {
            assert_eq!(format_number(v).unwrap().parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(f64::NAN), None);
    }
}
