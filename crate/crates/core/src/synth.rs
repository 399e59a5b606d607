//! Seeded desk-scale stand-ins for the clinical datasets: two-class textured
//! images with optional disk lesions, and two-class risk-factor tables.
//!
//! The texture model is separable exponential smoothing of seeded uniform
//! noise with class-specific correlation length and orientation. It makes no
//! claim of MRI realism; it only guarantees a tunable, reproducible
//! co-occurrence signature that separates the classes.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ann::{RiskLabel, RiskRecord};
use crate::error::{Error, Result};
use crate::imgio::{write_pgm, GrayImage};
use crate::manifest::{write_manifest, ClassLabel};

/// Stationary texture controls for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureParams {
    /// Base smoothing length in pixels; larger means blobbier texture.
    pub corr_len: f64,
    /// Standard deviation of the output intensity in `[0,1]` units.
    pub contrast: f64,
    /// Anisotropy axis in degrees (0 stretches rows, 90 stretches columns).
    pub orientation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LesionParams {
    pub radius_range: (usize, usize),
    pub count: usize,
}

/// Per-class sampling parameters for the risk table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskClassParams {
    pub bp: (f64, f64),
    pub cholesterol: (f64, f64),
    pub age: (f64, f64),
    pub p_atrial_fibrillation: f64,
    pub p_smoker: f64,
    pub p_diabetic: f64,
    pub p_exercises: f64,
    pub p_obese: f64,
    pub p_family_history: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_per_class: usize,
    pub image_size: (usize, usize),
    /// Texture of the normal class.
    pub texture_normal: TextureParams,
    /// Texture of the stroke class.
    pub texture_stroke: TextureParams,
    pub risk_stroke: RiskClassParams,
    pub risk_normal: RiskClassParams,
    /// Disk lesions stamped on stroke-class masks.
    pub lesion: Option<LesionParams>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_per_class: 15,
            image_size: (64, 64),
            texture_normal: TextureParams { corr_len: 1.0, contrast: 0.18, orientation_deg: 0.0 },
            texture_stroke: TextureParams { corr_len: 4.0, contrast: 0.25, orientation_deg: 90.0 },
            risk_stroke: RiskClassParams {
                bp: (165.0, 20.0),
                cholesterol: (260.0, 40.0),
                age: (68.0, 10.0),
                p_atrial_fibrillation: 0.5,
                p_smoker: 0.6,
                p_diabetic: 0.5,
                p_exercises: 0.2,
                p_obese: 0.5,
                p_family_history: 0.4,
            },
            risk_normal: RiskClassParams {
                bp: (120.0, 15.0),
                cholesterol: (180.0, 30.0),
                age: (45.0, 12.0),
                p_atrial_fibrillation: 0.05,
                p_smoker: 0.2,
                p_diabetic: 0.1,
                p_exercises: 0.6,
                p_obese: 0.15,
                p_family_history: 0.1,
            },
            lesion: Some(LesionParams { radius_range: (3, 6), count: 2 }),
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidConfig("n_per_class must be >= 1".into()));
        }
        let (w, h) = self.image_size;
        if w < 4 || h < 4 {
            return Err(Error::InvalidConfig("image size must be at least 4x4".into()));
        }
        if self.texture_normal == self.texture_stroke {
            return Err(Error::InvalidConfig("class texture parameters must differ".into()));
        }
        if let Some(l) = &self.lesion {
            let (rmin, rmax) = l.radius_range;
            if rmin == 0 || rmin > rmax {
                return Err(Error::InvalidConfig("bad lesion radius range".into()));
            }
            if 2 * rmax >= w.min(h) {
                return Err(Error::InvalidConfig("lesion larger than image".into()));
            }
            // keep co-occurrence matrices non-empty: cap worst-case coverage
            let worst = l.count as f64 * std::f64::consts::PI * (rmax * rmax) as f64;
            if worst >= 0.3 * (w * h) as f64 {
                return Err(Error::InvalidConfig(
                    "lesions would cover >= 30% of the image".into(),
                ));
            }
        }
        Ok(())
    }
}

/// SplitMix64 step, used to derive independent per-item RNG streams.
fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn smooth_axis(field: &mut [f64], w: usize, h: usize, len: f64, along_rows: bool) {
    if len <= 0.05 {
        return;
    }
    let a = (-1.0 / len).exp();
    let lines = if along_rows { h } else { w };
    let span = if along_rows { w } else { h };
    let idx = |line: usize, t: usize| {
        if along_rows {
            line * w + t
        } else {
            t * w + line
        }
    };
    for line in 0..lines {
        let mut prev = field[idx(line, 0)];
        for t in 1..span {
            let i = idx(line, t);
            field[i] = (1.0 - a) * field[i] + a * prev;
            prev = field[i];
        }
        prev = field[idx(line, span - 1)];
        for t in (0..span.saturating_sub(1)).rev() {
            let i = idx(line, t);
            field[i] = (1.0 - a) * field[i] + a * prev;
            prev = field[i];
        }
    }
}

/// Generate one textured image (and its lesion mask image for the stroke
/// class when lesions are configured). Pure given the settings and indices.
pub fn gen_image(spec: &SynthSpec, class: ClassLabel, index: usize) -> (GrayImage, Option<GrayImage>) {
    let (w, h) = spec.image_size;
    let params = match class {
        ClassLabel::Normal => spec.texture_normal,
        ClassLabel::Stroke => spec.texture_stroke,
    };
    let stream = match class {
        ClassLabel::Normal => index as u64,
        ClassLabel::Stroke => 1_000_000 + index as u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, stream));

    let mut field: Vec<f64> = (0..w * h).map(|_| rng.gen::<f64>()).collect();
    let theta = params.orientation_deg.to_radians();
    let aniso = 3.0;
    let len_x = params.corr_len * (1.0 + aniso * theta.cos() * theta.cos());
    let len_y = params.corr_len * (1.0 + aniso * theta.sin() * theta.sin());
    smooth_axis(&mut field, w, h, len_x, true);
    smooth_axis(&mut field, w, h, len_y, false);

    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let var = field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / field.len() as f64;
    let std = var.sqrt().max(1e-12);
    let pixels: Vec<u16> = field
        .iter()
        .map(|v| {
            let z = (v - mean) / std;
            let val = 0.5 + params.contrast * z;
            (val.clamp(0.0, 1.0) * 255.0).round() as u16
        })
        .collect();
    let img = GrayImage::new(w, h, 256, pixels, None).expect("generator invariants");

    let mask = match (&spec.lesion, class) {
        (Some(l), ClassLabel::Stroke) => {
            let mut mpx = vec![0u16; w * h];
            for _ in 0..l.count {
                let r = rng.gen_range(l.radius_range.0..=l.radius_range.1) as isize;
                let cx = rng.gen_range(r as usize..w - r as usize) as isize;
                let cy = rng.gen_range(r as usize..h - r as usize) as isize;
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx * dx + dy * dy <= r * r {
                            mpx[(cy + dy) as usize * w + (cx + dx) as usize] = 255;
                        }
                    }
                }
            }
            Some(GrayImage::new(w, h, 256, mpx, None).expect("mask invariants"))
        }
        _ => None,
    };
    (img, mask)
}

/// Generated corpus layout on disk.
pub struct GeneratedImages {
    pub manifest_path: PathBuf,
    /// ids in manifest order
    pub ids: Vec<String>,
}

/// Write `images/`, `masks/` and `manifest.csv` under `out_dir`. Stroke
/// samples come first, mirroring the positive-class-first report layout.
pub fn gen_images(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<GeneratedImages> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for (class, prefix) in [(ClassLabel::Stroke, "stroke"), (ClassLabel::Normal, "normal")] {
        for i in 0..spec.n_per_class {
            let id = format!("{prefix}_{i:03}");
            let (img, mask) = gen_image(spec, class, i);
            let img_rel = format!("images/{id}.pgm");
            write_pgm(out_dir.join(&img_rel), &img)?;
            let mask_rel = match mask {
                Some(m) => {
                    let rel = format!("masks/{id}.pgm");
                    write_pgm(out_dir.join(&rel), &m)?;
                    rel
                }
                None => String::new(),
            };
            rows.push((id.clone(), img_rel, mask_rel, class));
            ids.push(id);
        }
    }
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &rows)?;
    Ok(GeneratedImages { manifest_path, ids })
}

fn sample_risk(rng: &mut ChaCha8Rng, p: &RiskClassParams, label: RiskLabel) -> RiskRecord {
    let mut draw = |(mean, sd): (f64, f64), lo: f64, hi: f64| {
        let n = Normal::new(mean, sd).expect("sd > 0");
        let v: f64 = n.sample(rng);
        ((v * 10.0).round() / 10.0).clamp(lo, hi)
    };
    RiskRecord {
        systolic_bp: draw(p.bp, 60.0, 300.0),
        cholesterol: draw(p.cholesterol, 50.0, 500.0),
        age: draw(p.age, 1.0, 120.0),
        atrial_fibrillation: u8::from(rng.gen_bool(p.p_atrial_fibrillation)),
        smoker: u8::from(rng.gen_bool(p.p_smoker)),
        diabetic: u8::from(rng.gen_bool(p.p_diabetic)),
        exercises: u8::from(rng.gen_bool(p.p_exercises)),
        obese: u8::from(rng.gen_bool(p.p_obese)),
        family_history: u8::from(rng.gen_bool(p.p_family_history)),
        label,
    }
}

/// Generate the two-class risk table: stroke rows first, then normal rows.
pub fn gen_risk_table(spec: &SynthSpec) -> Result<Vec<RiskRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(2 * spec.n_per_class);
    for i in 0..spec.n_per_class {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 2_000_000 + i as u64));
        out.push(sample_risk(&mut rng, &spec.risk_stroke, RiskLabel::Stroke));
    }
    for i in 0..spec.n_per_class {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 3_000_000 + i as u64));
        out.push(sample_risk(&mut rng, &spec.risk_normal, RiskLabel::NoStroke));
    }
    for r in &out {
        r.validate()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glcm::{compute_glcm, Direction};
    use crate::haralick::compute_stats;
    use crate::imgio::quantize;

    #[test]
    fn images_are_deterministic() {
        let spec = SynthSpec { n_per_class: 2, ..Default::default() };
        let (a1, m1) = gen_image(&spec, ClassLabel::Stroke, 0);
        let (a2, m2) = gen_image(&spec, ClassLabel::Stroke, 0);
        assert_eq!(a1, a2);
        assert_eq!(m1, m2);
        let (b, _) = gen_image(&spec, ClassLabel::Stroke, 1);
        assert_ne!(a1, b);
    }

    #[test]
    fn texture_classes_separate_in_glcm_contrast() {
        let spec = SynthSpec { n_per_class: 10, ..Default::default() };
        let mut per_class = Vec::new();
        for class in [ClassLabel::Normal, ClassLabel::Stroke] {
            let contrasts: Vec<f64> = (0..spec.n_per_class)
                .map(|i| {
                    let (img, _) = gen_image(&spec, class, i);
                    let q = quantize(&img, 4).unwrap();
                    Direction::ALL
                        .iter()
                        .map(|&d| compute_stats(&compute_glcm(&q, d, 1).unwrap()).contrast)
                        .sum::<f64>()
                        / 4.0
                })
                .collect();
            let mean = contrasts.iter().sum::<f64>() / contrasts.len() as f64;
            let var = contrasts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
                / contrasts.len() as f64;
            per_class.push((mean, var.sqrt()));
        }
        let gap = (per_class[0].0 - per_class[1].0).abs();
        let spread = per_class[0].1.max(per_class[1].1);
        assert!(gap > 3.0 * spread, "gap {gap} vs spread {spread}");
    }

    #[test]
    fn lesion_coverage_below_30_percent() {
        let spec = SynthSpec::default();
        for i in 0..spec.n_per_class {
            let (_, mask) = gen_image(&spec, ClassLabel::Stroke, i);
            let mask = mask.unwrap();
            let lesion_px = mask.pixels().iter().filter(|&&v| v != 0).count();
            assert!((lesion_px as f64) < 0.3 * (64.0 * 64.0));
        }
    }

    #[test]
    fn oversized_lesion_rejected() {
        let spec = SynthSpec {
            lesion: Some(LesionParams { radius_range: (40, 40), count: 1 }),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn risk_table_shape_and_determinism() {
        let spec = SynthSpec { n_per_class: 15, ..Default::default() };
        let t1 = gen_risk_table(&spec).unwrap();
        let t2 = gen_risk_table(&spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 30);
        assert_eq!(t1.iter().filter(|r| r.label == RiskLabel::Stroke).count(), 15);
    }

    #[test]
    fn bp_threshold_separates_classes() {
        let spec = SynthSpec { n_per_class: 15, ..Default::default() };
        let table = gen_risk_table(&spec).unwrap();
        let mut best = 0usize;
        for t in 60..300 {
            let correct = table
                .iter()
                .filter(|r| {
                    (r.systolic_bp > t as f64) == (r.label == RiskLabel::Stroke)
                })
                .count();
            best = best.max(correct);
        }
        assert!(
            best as f64 / table.len() as f64 > 0.7,
            "best bp threshold accuracy {best}/{}",
            table.len()
        );
    }

    #[test]
    fn different_seed_changes_content_not_schema() {
        let spec = SynthSpec::default();
        let spec2 = SynthSpec { seed: spec.seed + 1, ..spec.clone() };
        let (a, _) = gen_image(&spec, ClassLabel::Normal, 0);
        let (b, _) = gen_image(&spec2, ClassLabel::Normal, 0);
        assert_ne!(a, b);
        let t1 = gen_risk_table(&spec).unwrap();
        let t2 = gen_risk_table(&spec2).unwrap();
        assert_ne!(t1, t2);
        for r in &t2 {
            r.validate().unwrap();
        }
    }

    #[test]
    fn corpus_written_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec { n_per_class: 2, ..Default::default() };
        let gen = gen_images(&spec, dir.path()).unwrap();
        assert_eq!(gen.ids.len(), 4);
        let entries = crate::manifest::read_manifest(&gen.manifest_path).unwrap();
        assert_eq!(entries.len(), 4);
        let strokes = entries.iter().filter(|e| e.label == ClassLabel::Stroke).count();
        assert_eq!(strokes, 2);
        for e in &entries {
            assert!(e.image_path.exists(), "{:?}", e.image_path);
            if e.label == ClassLabel::Stroke {
                assert!(e.mask_path.as_ref().unwrap().exists());
            } else {
                assert!(e.mask_path.is_none());
            }
        }
    }
}
