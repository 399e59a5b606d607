//! Confusion matrices, sensitivity/specificity/accuracy, and the
//! leave-one-out cross-validation harness for every pipeline variant.
//!
//! Anything fitted from data — feature scalers, factorization bases, network
//! weights — is refit inside each fold on the remaining N-1 samples, so the
//! held-out sample never leaks into its own model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{AnnModel, LmConfig, RiskLabel, RiskRecord};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector};
use crate::fusion::{Chosen, FusedModel};
use crate::haralick::feature_vector_28;
use crate::imgio::{self, GrayImage};
use crate::manifest::{ClassLabel, ManifestEntry};
use crate::nmf::{self, NmfConfig, NmfModel};
use crate::svm::{train, KernelSpec, SvmModel, TrainOptions};
use crate::util::round2;

/// Binary confusion counts; stroke is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u32,
    pub tn: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
}

impl ConfusionMatrix {
    pub fn new(tp: u32, fn_: u32, fp: u32, tn: u32) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u32 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::Stroke, ClassLabel::Stroke) => self.tp += 1,
            (ClassLabel::Stroke, ClassLabel::Normal) => self.fn_ += 1,
            (ClassLabel::Normal, ClassLabel::Stroke) => self.fp += 1,
            (ClassLabel::Normal, ClassLabel::Normal) => self.tn += 1,
        }
    }
}

/// Percentages derived from a confusion matrix. A zero denominator leaves the
/// metric undefined rather than zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsResult {
    pub sn: Option<f64>,
    pub sp: Option<f64>,
    pub ac: Option<f64>,
}

/// `SN = TP/(TP+FN)`, `SP = TN/(TN+FP)`, `AC = (TP+TN)/total`, as percentages.
pub fn metrics(c: &ConfusionMatrix) -> MetricsResult {
    let ratio = |num: u32, den: u32| (den > 0).then(|| 100.0 * f64::from(num) / f64::from(den));
    MetricsResult {
        sn: ratio(c.tp, c.tp + c.fn_),
        sp: ratio(c.tn, c.tn + c.fp),
        ac: ratio(c.tp + c.tn, c.total()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    HaralickOnly,
    NmfOnly,
    Concatenated,
    MultiLevel,
    Tier1Ann,
    Tier2Masked,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::HaralickOnly => "haralick-only",
            Pipeline::NmfOnly => "nmf-only",
            Pipeline::Concatenated => "concatenated",
            Pipeline::MultiLevel => "multi-level",
            Pipeline::Tier1Ann => "tier1-ann",
            Pipeline::Tier2Masked => "tier2-masked",
        }
    }
}

/// Shared settings for the image pipelines.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Target bit depth for the texture path.
    pub bpp: u8,
    /// Common working resolution (width, height).
    pub resize: (usize, usize),
    /// Fraction of brightest pixels whose mean defines the intensity scale.
    pub top_fraction: f64,
    pub nmf: NmfConfig,
    /// Kernel for Haralick-feature models (also concatenated features).
    pub kernel_a: KernelSpec,
    /// Kernel for NMF-feature models.
    pub kernel_b: KernelSpec,
    pub svm: TrainOptions,
    pub ann: LmConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bpp: 4,
            resize: (64, 64),
            top_fraction: 0.001,
            nmf: NmfConfig::default(),
            kernel_a: KernelSpec::Linear,
            kernel_b: KernelSpec::Linear,
            svm: TrainOptions::default(),
            ann: LmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSample {
    pub id: String,
    pub truth: ClassLabel,
    pub predicted: ClassLabel,
    /// Which fused model decided, when the pipeline fuses two.
    pub chosen_model: Option<Chosen>,
    /// Model scores; one entry for single-model pipelines, `[a, b]` for the
    /// fused pipeline, `[p_stroke, p_normal]` for the network.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pipeline: Pipeline,
    pub confusion: ConfusionMatrix,
    pub sn: Option<f64>,
    pub sp: Option<f64>,
    pub ac: Option<f64>,
    pub per_sample: Vec<PerSample>,
}

impl EvalReport {
    fn assemble(pipeline: Pipeline, per_sample: Vec<PerSample>) -> EvalReport {
        let mut confusion = ConfusionMatrix::default();
        for s in &per_sample {
            confusion.record(s.truth, s.predicted);
        }
        let m = metrics(&confusion);
        EvalReport { pipeline, confusion, sn: m.sn, sp: m.sp, ac: m.ac, per_sample }
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        crate::util::write_atomic(path, &json)
    }

    /// Plain-text table mirroring the usual confusion-matrix layout.
    pub fn render_text(&self) -> String {
        let c = &self.confusion;
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{:.2}%", round2(x)),
            None => "undefined".to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!("pipeline: {}\n\n", self.pipeline.as_str()));
        out.push_str("                 predicted\n");
        out.push_str("                  stroke   normal\n");
        out.push_str(&format!("truth  stroke   {:>7}  {:>7}\n", c.tp, c.fn_));
        out.push_str(&format!("truth  normal   {:>7}  {:>7}\n\n", c.fp, c.tn));
        out.push_str(&format!(
            "SN {}   SP {}   AC {}\nsamples: {}\n",
            fmt(self.sn),
            fmt(self.sp),
            fmt(self.ac),
            self.per_sample.len()
        ));
        out
    }
}

/// A manifest entry with its pixels loaded and preprocessed:
/// resampled to the working resolution, then intensity-normalized.
/// `masked` carries the lesion-mask variant when the sample has one.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub id: String,
    pub label: ClassLabel,
    pub plain: GrayImage,
    pub masked: Option<GrayImage>,
}

/// Load and preprocess every manifest entry.
pub fn load_samples(entries: &[ManifestEntry], cfg: &PipelineConfig) -> Result<Vec<LoadedSample>> {
    entries
        .iter()
        .map(|e| {
            let build = || -> Result<LoadedSample> {
                let raw = imgio::load_image_auto(&e.image_path)?;
                let plain = preprocess(&raw, cfg)?;
                let masked = match &e.mask_path {
                    Some(mp) => {
                        let with_mask = imgio::apply_mask(&raw, mp)?;
                        Some(preprocess(&with_mask, cfg)?)
                    }
                    None => None,
                };
                Ok(LoadedSample { id: e.id.clone(), label: e.label, plain, masked })
            };
            build().map_err(|err| err.for_sample(&e.id))
        })
        .collect()
}

fn preprocess(img: &GrayImage, cfg: &PipelineConfig) -> Result<GrayImage> {
    let resized = imgio::resample(img, cfg.resize.0, cfg.resize.1)?;
    imgio::normalize_intensity(&resized, cfg.top_fraction)
}

fn haralick_of(img: &GrayImage, bpp: u8, id: &str) -> Result<FeatureVector> {
    let q = imgio::quantize(img, bpp).map_err(|e| e.for_sample(id))?;
    feature_vector_28(&q, id).map_err(|e| e.for_sample(id))
}

/// Everything trained within one fold; serializable so tests can prove the
/// held-out sample does not influence it.
#[derive(Debug, Clone, Serialize)]
pub enum FoldModel {
    Single(SvmModel),
    WithBasis { svm: SvmModel, basis: NmfModel },
    Fused { fused: FusedModel, basis: NmfModel },
    Ann(AnnModel),
}

fn check_two_per_class(labels: &[ClassLabel]) -> Result<()> {
    let strokes = labels.iter().filter(|&&l| l == ClassLabel::Stroke).count();
    if strokes < 2 || labels.len() - strokes < 2 {
        return Err(Error::InvalidRecord(
            "leave-one-out needs at least 2 samples per class".into(),
        ));
    }
    Ok(())
}

/// Train on all samples except `holdout` and predict the held-out sample.
pub fn run_image_fold(
    samples: &[LoadedSample],
    holdout: usize,
    pipeline: Pipeline,
    cfg: &PipelineConfig,
) -> Result<(FoldModel, PerSample)> {
    let test = &samples[holdout];
    let train_set: Vec<&LoadedSample> =
        samples.iter().enumerate().filter(|(i, _)| *i != holdout).map(|(_, s)| s).collect();
    for class in [ClassLabel::Stroke, ClassLabel::Normal] {
        if !train_set.iter().any(|s| s.label == class) {
            return Err(Error::ClassAbsentInFold(class.as_str().into()));
        }
    }
    // Per-fold factorization seed: independent of execution order.
    let fold_nmf = NmfConfig { seed: cfg.nmf.seed.wrapping_add(holdout as u64), ..cfg.nmf.clone() };

    let haralick_train = || -> Result<Vec<(FeatureVector, f64)>> {
        train_set
            .iter()
            .map(|s| Ok((haralick_of(&s.plain, cfg.bpp, &s.id)?, s.label.sign())))
            .collect()
    };
    let nmf_fit = || -> Result<(NmfModel, Vec<FeatureVector>)> {
        let imgs: Vec<GrayImage> = train_set.iter().map(|s| s.plain.clone()).collect();
        let (basis, h) = nmf::fit_images(&imgs, &fold_nmf)?;
        let feats = train_set
            .iter()
            .enumerate()
            .map(|(j, s)| {
                FeatureVector::new(h.column(j).iter().copied().collect(), FeatureKind::Nmf14, &s.id)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((basis, feats))
    };

    let (model, predicted, chosen, scores) = match pipeline {
        Pipeline::HaralickOnly => {
            let data = haralick_train()?;
            let m = train(&data, cfg.kernel_a, &cfg.svm)?;
            let x = haralick_of(&test.plain, cfg.bpp, &test.id)?;
            let score = m.score(&x).map_err(|e| e.for_sample(&test.id))?;
            (FoldModel::Single(m), ClassLabel::from_sign(score), None, vec![score])
        }
        Pipeline::Tier2Masked => {
            // train on unmasked images, test on the lesion-masked variant
            let data = haralick_train()?;
            let m = train(&data, cfg.kernel_a, &cfg.svm)?;
            let test_img = test.masked.as_ref().unwrap_or(&test.plain);
            let x = haralick_of(test_img, cfg.bpp, &test.id)?;
            let score = m.score(&x).map_err(|e| e.for_sample(&test.id))?;
            (FoldModel::Single(m), ClassLabel::from_sign(score), None, vec![score])
        }
        Pipeline::NmfOnly => {
            let (basis, feats) = nmf_fit()?;
            let data: Vec<(FeatureVector, f64)> = feats
                .into_iter()
                .zip(train_set.iter())
                .map(|(f, s)| (f, s.label.sign()))
                .collect();
            let m = train(&data, cfg.kernel_b, &cfg.svm)?;
            let h = nmf::project_image(&basis, &test.plain).map_err(|e| e.for_sample(&test.id))?;
            let x = FeatureVector::new(h, FeatureKind::Nmf14, &test.id)?;
            let score = m.score(&x).map_err(|e| e.for_sample(&test.id))?;
            (
                FoldModel::WithBasis { svm: m, basis },
                ClassLabel::from_sign(score),
                None,
                vec![score],
            )
        }
        Pipeline::Concatenated => {
            let hdata = haralick_train()?;
            let (basis, nfeats) = nmf_fit()?;
            let data: Vec<(FeatureVector, f64)> = hdata
                .iter()
                .zip(&nfeats)
                .map(|((h, y), n)| Ok((FeatureVector::concat(h, n)?, *y)))
                .collect::<Result<_>>()?;
            let m = train(&data, cfg.kernel_a, &cfg.svm)?;
            let ht = haralick_of(&test.plain, cfg.bpp, &test.id)?;
            let nt = nmf::project_image(&basis, &test.plain).map_err(|e| e.for_sample(&test.id))?;
            let nt = FeatureVector::new(nt, FeatureKind::Nmf14, &test.id)?;
            let x = FeatureVector::concat(&ht, &nt)?;
            let score = m.score(&x).map_err(|e| e.for_sample(&test.id))?;
            (
                FoldModel::WithBasis { svm: m, basis },
                ClassLabel::from_sign(score),
                None,
                vec![score],
            )
        }
        Pipeline::MultiLevel => {
            let hdata = haralick_train()?;
            let model_a = train(&hdata, cfg.kernel_a, &cfg.svm)?;
            let (basis, nfeats) = nmf_fit()?;
            let ndata: Vec<(FeatureVector, f64)> = nfeats
                .into_iter()
                .zip(train_set.iter())
                .map(|(f, s)| (f, s.label.sign()))
                .collect();
            let model_b = train(&ndata, cfg.kernel_b, &cfg.svm)?;
            let fused = FusedModel::new(model_a, model_b)?;
            let xa = haralick_of(&test.plain, cfg.bpp, &test.id)?;
            let hb = nmf::project_image(&basis, &test.plain).map_err(|e| e.for_sample(&test.id))?;
            let xb = FeatureVector::new(hb, FeatureKind::Nmf14, &test.id)?;
            let p = fused.fuse_predict(&xa, &xb).map_err(|e| e.for_sample(&test.id))?;
            (
                FoldModel::Fused { fused, basis },
                ClassLabel::from_sign(p.label),
                Some(p.chosen),
                vec![p.score_a, p.score_b],
            )
        }
        Pipeline::Tier1Ann => {
            return Err(Error::InvalidConfig(
                "tier1-ann runs on a risk table, not an image manifest".into(),
            ))
        }
    };

    Ok((
        model,
        PerSample {
            id: test.id.clone(),
            truth: test.label,
            predicted,
            chosen_model: chosen,
            scores,
        },
    ))
}

/// Leave-one-out over an image dataset.
pub fn loocv_images(
    entries: &[ManifestEntry],
    pipeline: Pipeline,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    let samples = load_samples(entries, cfg)?;
    let labels: Vec<ClassLabel> = samples.iter().map(|s| s.label).collect();
    check_two_per_class(&labels)?;
    let per_sample: Vec<PerSample> = (0..samples.len())
        .into_par_iter()
        .map(|i| run_image_fold(&samples, i, pipeline, cfg).map(|(_, p)| p))
        .collect::<Result<_>>()?;
    Ok(EvalReport::assemble(pipeline, per_sample))
}

/// Leave-one-out for the tier-1 network on a risk table.
pub fn loocv_risk(records: &[RiskRecord], cfg: &LmConfig) -> Result<EvalReport> {
    let strokes = records.iter().filter(|r| r.label == RiskLabel::Stroke).count();
    if strokes < 2 || records.len() - strokes < 2 {
        return Err(Error::InvalidRecord(
            "leave-one-out needs at least 2 records per class".into(),
        ));
    }
    let per_sample: Vec<PerSample> = (0..records.len())
        .into_par_iter()
        .map(|i| {
            let (model, _) = run_risk_fold(records, i, cfg)?;
            let test = &records[i];
            let (p_stroke, p_normal) = model.forward(test)?;
            let predicted =
                if p_stroke >= p_normal { ClassLabel::Stroke } else { ClassLabel::Normal };
            let truth = match test.label {
                RiskLabel::Stroke => ClassLabel::Stroke,
                RiskLabel::NoStroke => ClassLabel::Normal,
            };
            Ok(PerSample {
                id: format!("row-{i}"),
                truth,
                predicted,
                chosen_model: None,
                scores: vec![p_stroke, p_normal],
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport::assemble(Pipeline::Tier1Ann, per_sample))
}

/// Train the tier-1 network on everything except `holdout`.
pub fn run_risk_fold(
    records: &[RiskRecord],
    holdout: usize,
    cfg: &LmConfig,
) -> Result<(AnnModel, crate::ann::LmReport)> {
    let train_set: Vec<RiskRecord> = records
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != holdout)
        .map(|(_, r)| r.clone())
        .collect();
    let fold_cfg = LmConfig { seed: cfg.seed.wrapping_add(holdout as u64), ..*cfg };
    crate::ann::train_lm(&train_set, &fold_cfg)
}
