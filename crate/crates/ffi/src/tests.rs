use std::ffi::{CStr, CString};
use std::ptr;

use strokepipe_core::features::{FeatureKind, FeatureVector};
use strokepipe_core::imgio::{write_pgm, GrayImage};
use strokepipe_core::svm::{train, KernelSpec, TrainOptions};

use super::*;

fn c_path(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn checker_image() -> GrayImage {
    let px: Vec<u16> = (0..64).map(|i| if (i / 8 + i % 8) % 2 == 0 { 40 } else { 220 }).collect();
    GrayImage::new(8, 8, 256, px, None).unwrap()
}

#[test]
fn image_load_query_and_transform() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    write_pgm(&path, &checker_image()).unwrap();

    let cpath = c_path(&path);
    let mut img: *mut SpImage = ptr::null_mut();
    unsafe {
        assert_eq!(sp_image_load(cpath.as_ptr(), &mut img), SpStatus::SpOk);
        assert_eq!(sp_image_width(img), 8);
        assert_eq!(sp_image_height(img), 8);
        assert_eq!(sp_image_levels(img), 256);

        let mut norm: *mut SpImage = ptr::null_mut();
        assert_eq!(sp_image_normalize_intensity(img, 0.01, &mut norm), SpStatus::SpOk);
        let mut q: *mut SpImage = ptr::null_mut();
        assert_eq!(sp_image_quantize(norm, 4, &mut q), SpStatus::SpOk);
        assert_eq!(sp_image_levels(q), 16);
        let mut small: *mut SpImage = ptr::null_mut();
        assert_eq!(sp_image_resample(q, 4, 4, &mut small), SpStatus::SpOk);
        assert_eq!(sp_image_width(small), 4);

        let mut feats = [0.0f64; 28];
        assert_eq!(sp_haralick_features28(q, feats.as_mut_ptr()), SpStatus::SpOk);
        assert!(feats.iter().all(|v| v.is_finite()));
        // direct comparison against the core path
        let core_img = strokepipe_core::imgio::quantize(
            &strokepipe_core::imgio::normalize_intensity(&checker_image(), 0.01).unwrap(),
            4,
        )
        .unwrap();
        let core = strokepipe_core::haralick::feature_vector_28(&core_img, "x").unwrap();
        for (a, b) in feats.iter().zip(&core.values) {
            assert_eq!(a, b);
        }

        sp_image_free(small);
        sp_image_free(q);
        sp_image_free(norm);
        sp_image_free(img);
    }
}

#[test]
fn load_failure_sets_message_and_status() {
    let missing = CString::new("/nonexistent/zzz.pgm").unwrap();
    let mut img: *mut SpImage = ptr::null_mut();
    unsafe {
        assert_eq!(sp_image_load(missing.as_ptr(), &mut img), SpStatus::SpErrIo);
        let msg = CStr::from_ptr(sp_last_error()).to_str().unwrap();
        assert!(msg.contains("zzz.pgm"), "message was {msg:?}");
        assert_eq!(sp_image_load(ptr::null(), &mut img), SpStatus::SpErrNull);
    }
}

#[test]
fn svm_roundtrip_through_ffi() {
    let mk = |v: f64, id: &str| {
        FeatureVector::new(vec![v, v * 0.5], FeatureKind::Nmf14, id).unwrap()
    };
    let data = vec![
        (mk(0.0, "a"), -1.0),
        (mk(0.2, "b"), -1.0),
        (mk(0.8, "c"), 1.0),
        (mk(1.0, "d"), 1.0),
    ];
    let model = train(&data, KernelSpec::Rbf { sigma: 1.0 }, &TrainOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("svm.json");
    model.save_json(&path).unwrap();

    let cpath = c_path(&path);
    let mut h: *mut SpSvmModel = ptr::null_mut();
    unsafe {
        assert_eq!(sp_svm_model_load(cpath.as_ptr(), &mut h), SpStatus::SpOk);
        assert_eq!(sp_svm_dim(h), 2);
        let probe = [0.9f64, 0.45];
        let mut fx = 0.0;
        let mut score = 0.0;
        let mut label = 0i32;
        assert_eq!(sp_svm_decision_value(h, probe.as_ptr(), 2, &mut fx), SpStatus::SpOk);
        assert_eq!(sp_svm_score(h, probe.as_ptr(), 2, &mut score), SpStatus::SpOk);
        assert_eq!(sp_svm_predict(h, probe.as_ptr(), 2, &mut label), SpStatus::SpOk);
        let fv = FeatureVector::new(probe.to_vec(), FeatureKind::Nmf14, "p").unwrap();
        assert_eq!(fx, model.decision_value(&fv).unwrap());
        assert_eq!(score, model.score(&fv).unwrap());
        assert_eq!(label, 1);

        // wrong length is a dimension error, not a crash
        let mut out = 0.0;
        assert_eq!(
            sp_svm_decision_value(h, probe.as_ptr(), 1, &mut out),
            SpStatus::SpErrDimension
        );
        sp_svm_model_free(h);
    }
}

#[test]
fn fuse_scores_rule_via_ffi() {
    let mut label = 0i32;
    let mut chosen = -1i32;
    unsafe {
        assert_eq!(sp_fuse_scores(0.3, -0.9, &mut label, &mut chosen), SpStatus::SpOk);
        assert_eq!((label, chosen), (-1, 1));
        assert_eq!(sp_fuse_scores(0.5, -0.5, &mut label, &mut chosen), SpStatus::SpOk);
        assert_eq!((label, chosen), (1, 0));
    }
}

#[test]
fn metrics_with_undefined_as_nan() {
    let (mut sn, mut sp, mut ac) = (0.0f64, 0.0f64, 0.0f64);
    unsafe {
        assert_eq!(sp_metrics(11, 3, 1, 15, &mut sn, &mut sp, &mut ac), SpStatus::SpOk);
        assert!((sn - 78.5714).abs() < 1e-3);
        assert!((sp - 93.75).abs() < 1e-12);
        assert!((ac - 86.6667).abs() < 1e-3);
        assert_eq!(sp_metrics(0, 0, 2, 3, &mut sn, &mut sp, &mut ac), SpStatus::SpOk);
        assert!(sn.is_nan());
        assert!(!sp.is_nan());
    }
}

#[test]
fn ann_forward_via_ffi() {
    use strokepipe_core::ann::{train_lm, LmConfig, RiskLabel, RiskRecord};
    let rec = |bp: f64, age: f64, label| RiskRecord {
        systolic_bp: bp,
        atrial_fibrillation: 0,
        smoker: 0,
        cholesterol: 180.0,
        diabetic: 0,
        exercises: 1,
        obese: 0,
        family_history: 0,
        age,
        label,
    };
    let records = vec![
        rec(185.0, 70.0, RiskLabel::Stroke),
        rec(175.0, 66.0, RiskLabel::Stroke),
        rec(115.0, 35.0, RiskLabel::NoStroke),
        rec(120.0, 40.0, RiskLabel::NoStroke),
    ];
    let (model, _) = train_lm(&records, &LmConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ann.json");
    model.save_json(&path).unwrap();

    let cpath = c_path(&path);
    let mut h: *mut SpAnnModel = ptr::null_mut();
    unsafe {
        assert_eq!(sp_ann_model_load(cpath.as_ptr(), &mut h), SpStatus::SpOk);
        let high = [180.0, 0.0, 0.0, 180.0, 0.0, 1.0, 0.0, 0.0, 69.0];
        let (mut ps, mut pn) = (0.0, 0.0);
        assert_eq!(sp_ann_forward(h, high.as_ptr(), 9, &mut ps, &mut pn), SpStatus::SpOk);
        assert!(ps > pn, "expected stroke-leaning output, got {ps} vs {pn}");
        // out-of-range blood pressure must be rejected
        let bad = [20.0, 0.0, 0.0, 180.0, 0.0, 1.0, 0.0, 0.0, 69.0];
        assert_eq!(
            sp_ann_forward(h, bad.as_ptr(), 9, &mut ps, &mut pn),
            SpStatus::SpErrInvalidArg
        );
        sp_ann_model_free(h);
    }
}

#[test]
fn nmf_projection_via_ffi() {
    use strokepipe_core::nmf::{fit_images, NmfConfig};
    let imgs: Vec<GrayImage> = (0..6)
        .map(|i| {
            let px: Vec<u16> = (0..64).map(|j| ((i * 37 + j * 11) % 256) as u16).collect();
            GrayImage::new(8, 8, 256, px, None).unwrap()
        })
        .collect();
    let cfg = NmfConfig { k: 3, max_iters: 200, tol: 1e-9, seed: 7, weight: None };
    let (model, _) = fit_images(&imgs, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nmf.json");
    model.save_json(&path).unwrap();
    let img_path = dir.path().join("probe.pgm");
    write_pgm(&img_path, &imgs[0]).unwrap();

    let cpath = c_path(&path);
    let cimg = c_path(&img_path);
    unsafe {
        let mut h: *mut SpNmfModel = ptr::null_mut();
        assert_eq!(sp_nmf_model_load(cpath.as_ptr(), &mut h), SpStatus::SpOk);
        assert_eq!(sp_nmf_k(h), 3);
        let mut img: *mut SpImage = ptr::null_mut();
        assert_eq!(sp_image_load(cimg.as_ptr(), &mut img), SpStatus::SpOk);
        let mut coeffs = [0.0f64; 3];
        assert_eq!(sp_nmf_project_image(h, img, coeffs.as_mut_ptr()), SpStatus::SpOk);
        let expected = strokepipe_core::nmf::project_image(&model, &imgs[0]).unwrap();
        assert_eq!(coeffs.to_vec(), expected);
        sp_image_free(img);
        sp_nmf_model_free(h);
    }
}
