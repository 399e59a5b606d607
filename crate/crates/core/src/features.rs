//! Feature vectors and their CSV interchange format.
//!
//! A row is `source_id, kind, v0, v1, ...` — the format produced by the
//! extraction commands and consumed by training and evaluation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Provenance of a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    /// 14 texture statistics aggregated over 4 directions: 14 means then 14 ranges.
    Haralick28,
    /// Non-negative factorization coefficients (14 basis images by default).
    Nmf14,
    /// Haralick28 followed by Nmf14.
    Concatenated42,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Haralick28 => "haralick28",
            FeatureKind::Nmf14 => "nmf14",
            FeatureKind::Concatenated42 => "concat42",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "haralick28" => Ok(FeatureKind::Haralick28),
            "nmf14" => Ok(FeatureKind::Nmf14),
            "concat42" => Ok(FeatureKind::Concatenated42),
            other => Err(Error::InvalidRecord(format!("unknown feature kind {other:?}"))),
        }
    }
}

/// Fixed-length real feature vector with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
    pub source_id: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, kind: FeatureKind, source_id: impl Into<String>) -> Result<Self> {
        if kind == FeatureKind::Haralick28 && values.len() != 28 {
            return Err(Error::LengthMismatch { expected: 28, actual: values.len() });
        }
        if values.is_empty() {
            return Err(Error::InvalidRecord("empty feature vector".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature component {pos}")));
        }
        Ok(FeatureVector { values, kind, source_id: source_id.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Concatenate a Haralick28 vector with an NMF vector for the same sample.
    pub fn concat(haralick: &FeatureVector, nmf: &FeatureVector) -> Result<FeatureVector> {
        if haralick.kind != FeatureKind::Haralick28 || nmf.kind != FeatureKind::Nmf14 {
            return Err(Error::FeatureKindMismatch {
                expected: "haralick28 + nmf14".into(),
                actual: format!("{} + {}", haralick.kind.as_str(), nmf.kind.as_str()),
            });
        }
        let mut values = haralick.values.clone();
        values.extend_from_slice(&nmf.values);
        FeatureVector::new(values, FeatureKind::Concatenated42, haralick.source_id.clone())
    }
}

/// Write feature vectors as `source_id, kind, v...` rows (no header, the
/// vector length is kind-dependent).
pub fn write_features_csv(path: impl AsRef<Path>, features: &[FeatureVector]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for f in features {
        let mut row = vec![f.source_id.clone(), f.kind.as_str().to_string()];
        // Display for f64 is shortest round-trip, so read_features_csv
        // recovers bit-identical values.
        row.extend(f.values.iter().map(|v| format!("{v}")));
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::InvalidRecord(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(Error::Csv)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(Error::InvalidRecord(format!(
                "feature row needs id, kind and values; got {} fields",
                rec.len()
            )));
        }
        let id = rec[0].to_string();
        let kind = FeatureKind::parse(&rec[1])?;
        let values = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidRecord(format!("bad feature value {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(FeatureVector::new(values, kind, id)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haralick28_length_enforced() {
        assert!(FeatureVector::new(vec![0.0; 27], FeatureKind::Haralick28, "a").is_err());
        assert!(FeatureVector::new(vec![0.0; 28], FeatureKind::Haralick28, "a").is_ok());
    }

    #[test]
    fn non_finite_rejected() {
        let e = FeatureVector::new(vec![1.0, f64::NAN], FeatureKind::Nmf14, "a");
        assert!(matches!(e, Err(Error::NonFinite(_))));
    }

    #[test]
    fn concat_is_42_for_default_nmf() {
        let h = FeatureVector::new(vec![1.0; 28], FeatureKind::Haralick28, "s").unwrap();
        let n = FeatureVector::new(vec![2.0; 14], FeatureKind::Nmf14, "s").unwrap();
        let c = FeatureVector::concat(&h, &n).unwrap();
        assert_eq!(c.len(), 42);
        assert_eq!(c.kind, FeatureKind::Concatenated42);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let fs = vec![
            FeatureVector::new(vec![1.5, -2.25, 3.125], FeatureKind::Nmf14, "s1").unwrap(),
            FeatureVector::new(vec![0.1; 28], FeatureKind::Haralick28, "s2").unwrap(),
        ];
        write_features_csv(&path, &fs).unwrap();
        let back = read_features_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].source_id, "s1");
        assert_eq!(back[0].values, fs[0].values);
        assert_eq!(back[1].kind, FeatureKind::Haralick28);
    }
}
