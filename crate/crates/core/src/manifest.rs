//! Dataset manifests: image sample lists (`id, image_path, mask_path, label`)
//! and risk-factor tables (nine named fields plus a label).
//!
//! Manifest paths may be relative; they resolve against the manifest file's
//! directory, so generated corpora stay relocatable and byte-stable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ann::{RiskLabel, RiskRecord, RISK_FIELDS};
use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Binary class of an image sample; stroke is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassLabel {
    Stroke,
    Normal,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Stroke => "stroke",
            ClassLabel::Normal => "normal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stroke" | "1" | "+1" => Ok(ClassLabel::Stroke),
            "normal" | "no-stroke" | "nostroke" | "0" | "-1" => Ok(ClassLabel::Normal),
            other => Err(Error::InvalidRecord(format!("unknown class label {other:?}"))),
        }
    }

    /// SVM-style sign: stroke = +1, normal = -1.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Stroke => 1.0,
            ClassLabel::Normal => -1.0,
        }
    }

    pub fn from_sign(v: f64) -> ClassLabel {
        if v >= 0.0 {
            ClassLabel::Stroke
        } else {
            ClassLabel::Normal
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    pub label: ClassLabel,
}

/// Read `id, image_path, mask_path, label` rows; relative paths are resolved
/// against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut rdr = csv::Reader::from_path(path).map_err(Error::Csv)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::InvalidRecord(format!(
                "manifest row needs 4 fields, got {}",
                rec.len()
            )));
        }
        let resolve = |s: &str| {
            let p = Path::new(s);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mask = rec[2].trim();
        out.push(ManifestEntry {
            id: rec[0].to_string(),
            image_path: resolve(rec[1].trim()),
            mask_path: (!mask.is_empty()).then(|| resolve(mask)),
            label: ClassLabel::parse(&rec[3])?,
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidRecord("manifest has no samples".into()));
    }
    Ok(out)
}

/// Write a manifest with the given (possibly relative) path strings.
pub fn write_manifest(
    path: impl AsRef<Path>,
    rows: &[(String, String, String, ClassLabel)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["id", "image_path", "mask_path", "label"])?;
    for (id, img, mask, label) in rows {
        wtr.write_record([id.as_str(), img.as_str(), mask.as_str(), label.as_str()])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::InvalidRecord(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Read a risk table: header of the nine field names plus `label`.
pub fn read_risk_csv(path: impl AsRef<Path>) -> Result<Vec<RiskRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(Error::Csv)?;
    {
        let headers = rdr.headers()?;
        let expected: Vec<&str> = RISK_FIELDS.iter().copied().chain(["label"]).collect();
        let actual: Vec<&str> = headers.iter().collect();
        if actual != expected {
            return Err(Error::InvalidRecord(format!(
                "risk csv header {actual:?} does not match {expected:?}"
            )));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRecord(format!("bad numeric field {:?}", &rec[i])))
        };
        let bit = |i: usize| -> Result<u8> {
            match rec[i].trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::InvalidRecord(format!("bad binary field {other:?}"))),
            }
        };
        let r = RiskRecord {
            systolic_bp: num(0)?,
            atrial_fibrillation: bit(1)?,
            smoker: bit(2)?,
            cholesterol: num(3)?,
            diabetic: bit(4)?,
            exercises: bit(5)?,
            obese: bit(6)?,
            family_history: bit(7)?,
            age: num(8)?,
            label: RiskLabel::parse(&rec[9])?,
        };
        r.validate()?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::InvalidRecord("risk csv has no records".into()));
    }
    Ok(out)
}

pub fn write_risk_csv(path: impl AsRef<Path>, records: &[RiskRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = RISK_FIELDS.iter().copied().chain(["label"]).collect();
    wtr.write_record(&header)?;
    for r in records {
        wtr.write_record([
            format!("{}", r.systolic_bp),
            r.atrial_fibrillation.to_string(),
            r.smoker.to_string(),
            format!("{}", r.cholesterol),
            r.diabetic.to_string(),
            r.exercises.to_string(),
            r.obese.to_string(),
            r.family_history.to_string(),
            format!("{}", r.age),
            r.label.as_str().to_string(),
        ])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::InvalidRecord(e.to_string()))?;
    write_atomic(path, &bytes)
}
