//! JSON documents for FDN systems.
//!
//! Output is canonical: object keys sorted, every float written with 17
//! significant digits, so equal systems serialize to identical bytes and
//! load(save(x)) is bit-exact.

use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{FdnError, Result};
use crate::system::{DelayVector, FdnSystem};
use crate::verify::DiagonalSimilarity;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdnDocument {
    pub version: u32,
    pub delays: Vec<usize>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsim: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<Value>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(FdnError::Dimension(format!(
            "{name} row {i} has {} entries, expected {cols}",
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl FdnDocument {
    pub fn from_system(fdn: &FdnSystem, dsim: Option<&DiagonalSimilarity>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            delays: fdn.delays.as_slice().to_vec(),
            a: rows(&fdn.a),
            b: rows(&fdn.b),
            c: rows(&fdn.c),
            d: rows(&fdn.d),
            dsim: dsim.map(|x| x.0.clone()),
            meta: None,
            verify: None,
        }
    }

    pub fn system(&self) -> Result<FdnSystem> {
        if self.version != SCHEMA_VERSION {
            return Err(FdnError::Format(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        let fdn = FdnSystem::new(
            matrix("A", &self.a)?,
            matrix("B", &self.b)?,
            matrix("C", &self.c)?,
            matrix("D", &self.d)?,
            DelayVector::new(self.delays.clone())?,
        )?;
        if let Some(d) = &self.dsim {
            if d.len() != fdn.n() {
                return Err(FdnError::Dimension(format!(
                    "dsim has {} entries for {} delay lines",
                    d.len(),
                    fdn.n()
                )));
            }
        }
        Ok(fdn)
    }

    pub fn dsim(&self) -> Option<DiagonalSimilarity> {
        self.dsim.clone().map(DiagonalSimilarity)
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| FdnError::Format(e.to_string()))?;
        doc.system()?;
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| FdnError::Format(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FdnError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            FdnError::Format(msg) => FdnError::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Objects one key per line, arrays inline, floats as `{:.16e}`.
#[derive(Default)]
struct Canonical {
    depth: usize,
    has_value: bool,
}

impl Canonical {
    fn indent<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        for _ in 0..self.depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.depth += 1;
        self.has_value = false;
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.depth -= 1;
        if self.has_value {
            w.write_all(b"\n")?;
            self.indent(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        w.write_all(if first { b"\n" } else { b",\n" })?;
        self.indent(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

/// Canonical serialization of any value: keys sorted, fixed float format.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // through Value so that keys are sorted
    let value = serde_json::to_value(value).map_err(|e| FdnError::Format(e.to_string()))?;
    if has_non_finite(&value) {
        return Err(FdnError::Format(
            "non-finite values cannot be written as JSON".into(),
        ));
    }
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical::default());
    value
        .serialize(&mut ser)
        .map_err(|e| FdnError::Format(e.to_string()))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| FdnError::Format(e.to_string()))
}

// serde_json maps NaN and infinities to null on the way into a Value
fn has_non_finite(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.iter().any(has_non_finite),
        Value::Object(o) => o.values().any(has_non_finite),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> FdnSystem {
        FdnSystem::siso(
            DMatrix::from_element(1, 1, -0.1),
            &[1.0],
            &[0.99],
            0.1,
            DelayVector::new(vec![7]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let text = FdnDocument::from_system(&first_order(), None)
            .to_json()
            .unwrap();
        let keys: Vec<&str> = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('"').and_then(|l| l.split('"').next()))
            .collect();
        assert_eq!(keys, vec!["A", "B", "C", "D", "delays", "version"]);
        assert!(text.contains("-1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"delays\": [7]"));
    }

    #[test]
    fn round_trip_is_exact() {
        let fdn = first_order();
        let doc = FdnDocument::from_system(&fdn, Some(&DiagonalSimilarity(vec![1.0 / 3.0])));
        let back = FdnDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.system().unwrap(), fdn);
    }

    #[test]
    fn wrong_version_rejected() {
        let mut doc = FdnDocument::from_system(&first_order(), None);
        doc.version = 99;
        assert!(matches!(
            FdnDocument::from_json(&doc.to_json().unwrap()),
            Err(FdnError::Format(_))
        ));
    }

    #[test]
    fn parse_error_has_location() {
        let err = FdnDocument::from_json("{\n  \"version\": 1,\n  oops\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut doc = FdnDocument::from_system(&first_order(), None);
        doc.a = vec![vec![0.1, 0.2]];
        assert!(matches!(doc.system(), Err(FdnError::Dimension(_))));
    }

    #[test]
    fn nan_not_written() {
        let mut doc = FdnDocument::from_system(&first_order(), None);
        doc.d = vec![vec![f64::NAN]];
        assert!(doc.to_json().is_err());
    }
}
