//! C ABI for the stroke prediction toolkit.
//!
//! Conventions:
//! - every fallible function returns an [`SpStatus`] code; `SP_OK` is 0;
//! - objects are opaque handles created by `sp_*_load`/`sp_*_new` functions
//!   and released by the matching `sp_*_free` (null is tolerated);
//! - on failure, a human-readable message is available from
//!   [`sp_last_error`] until the next failing call on the same thread;
//! - undefined metrics are reported as NaN, never as zero.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use strokepipe_core::ann::{AnnModel, RiskLabel, RiskRecord};
use strokepipe_core::error::Error;
use strokepipe_core::eval::{metrics, ConfusionMatrix};
use strokepipe_core::features::FeatureVector;
use strokepipe_core::fusion::{fuse_scores, Chosen, TieBreak};
use strokepipe_core::haralick::feature_vector_28;
use strokepipe_core::imgio::{self, GrayImage};
use strokepipe_core::nmf::{project_image, NmfModel};
use strokepipe_core::svm::SvmModel;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    SpOk = 0,
    SpErrIo = 1,
    SpErrFormat = 2,
    SpErrDimension = 3,
    SpErrMask = 4,
    SpErrEmptyGlcm = 5,
    SpErrInvalidArg = 6,
    SpErrSingleClass = 7,
    SpErrDegenerate = 8,
    SpErrKindMismatch = 9,
    SpErrNonFinite = 10,
    SpErrNull = 11,
    SpErrUtf8 = 12,
    SpErrPanic = 13,
    SpErrOther = 14,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap_or_default());
}

fn status_of(err: &Error) -> SpStatus {
    match err {
        Error::Io { .. } => SpStatus::SpErrIo,
        Error::ImageFormat(_) | Error::MultiChannel | Error::BitDepth(_) | Error::Csv(_) | Error::Json(_) => {
            SpStatus::SpErrFormat
        }
        Error::DimensionMismatch { .. } | Error::LengthMismatch { .. } => SpStatus::SpErrDimension,
        Error::NonBinaryMask | Error::AllMasked | Error::MaskedInput(_) => SpStatus::SpErrMask,
        Error::EmptyCooccurrence => SpStatus::SpErrEmptyGlcm,
        Error::BadBpp { .. }
        | Error::NegativeEntry { .. }
        | Error::RankTooLarge { .. }
        | Error::InvalidRecord(_)
        | Error::InvalidConfig(_)
        | Error::ClassAbsentInFold(_) => SpStatus::SpErrInvalidArg,
        Error::SingleClass => SpStatus::SpErrSingleClass,
        Error::NonFinite(_) => SpStatus::SpErrNonFinite,
        Error::DegenerateModel(_) => SpStatus::SpErrDegenerate,
        Error::FeatureKindMismatch { .. } => SpStatus::SpErrKindMismatch,
        Error::Sample { cause, .. } => status_of(cause),
    }
}

fn fail(err: &Error) -> SpStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run a closure, converting panics into `SP_ERR_PANIC` instead of unwinding
/// across the FFI boundary.
fn guard(f: impl FnOnce() -> SpStatus) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SpStatus::SpErrPanic
        }
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, SpStatus> {
    if ptr.is_null() {
        set_error("null path");
        return Err(SpStatus::SpErrNull);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(SpStatus::SpErrUtf8)
        }
    }
}

// Handle structs are declared literally (not via macro) so cbindgen, which
// does not expand macros, sees them and emits opaque forward declarations.
// They are only ever handled behind a pointer.

/// Grayscale image with optional lesion mask.
pub struct SpImage {
    _private: [u8; 0],
}

/// Trained kernel SVM.
pub struct SpSvmModel {
    _private: [u8; 0],
}

/// Fitted non-negative factorization basis.
pub struct SpNmfModel {
    _private: [u8; 0],
}

/// Trained tier-1 network.
pub struct SpAnnModel {
    _private: [u8; 0],
}

macro_rules! impl_handle {
    ($name:ident wraps $inner:ty) => {
        impl $name {
            fn wrap(v: $inner) -> *mut $name {
                Box::into_raw(Box::new(v)) as *mut $name
            }

            unsafe fn get<'a>(ptr: *const $name) -> Option<&'a $inner> {
                (ptr as *const $inner).as_ref()
            }

            unsafe fn release(ptr: *mut $name) {
                if !ptr.is_null() {
                    drop(Box::from_raw(ptr as *mut $inner));
                }
            }
        }
    };
}

impl_handle!(SpImage wraps GrayImage);
impl_handle!(SpSvmModel wraps SvmModel);
impl_handle!(SpNmfModel wraps NmfModel);
impl_handle!(SpAnnModel wraps AnnModel);

macro_rules! need {
    ($expr:expr, $what:literal) => {
        match $expr {
            Some(v) => v,
            None => {
                set_error(concat!("null ", $what));
                return SpStatus::SpErrNull;
            }
        }
    };
}

macro_rules! try_core {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => return fail(&e),
        }
    };
}

// ---------------------------------------------------------------------------
// images

/// Load an 8-bit grayscale image (`.pgm` or `.png` by extension) into a new
/// handle written to `out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_image_load(path: *const c_char, out: *mut *mut SpImage) -> SpStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null out pointer");
            return SpStatus::SpErrNull;
        }
        let img = try_core!(imgio::load_image_auto(path));
        *out = SpImage::wrap(img);
        SpStatus::SpOk
    })
}

/// Release an image handle. Null is a no-op.
///
/// # Safety
/// `img` must be null or a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_image_free(img: *mut SpImage) {
    SpImage::release(img);
}

/// Image width in pixels; 0 if the handle is null.
///
/// # Safety
/// `img` must be null or a valid image handle.
#[no_mangle]
pub unsafe extern "C" fn sp_image_width(img: *const SpImage) -> usize {
    SpImage::get(img).map_or(0, GrayImage::width)
}

/// Image height in pixels; 0 if the handle is null.
///
/// # Safety
/// `img` must be null or a valid image handle.
#[no_mangle]
pub unsafe extern "C" fn sp_image_height(img: *const SpImage) -> usize {
    SpImage::get(img).map_or(0, GrayImage::height)
}

/// Number of gray levels; 0 if the handle is null.
///
/// # Safety
/// `img` must be null or a valid image handle.
#[no_mangle]
pub unsafe extern "C" fn sp_image_levels(img: *const SpImage) -> usize {
    SpImage::get(img).map_or(0, GrayImage::levels)
}

/// Rescale intensities so the mean of the brightest `top_fraction` of pixels
/// maps to the top bin; result is a new handle.
///
/// # Safety
/// `img` must be a valid image handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_image_normalize_intensity(
    img: *const SpImage,
    top_fraction: f64,
    out: *mut *mut SpImage,
) -> SpStatus {
    guard(|| {
        let img = need!(SpImage::get(img), "image");
        let result = try_core!(imgio::normalize_intensity(img, top_fraction));
        *out = SpImage::wrap(result);
        SpStatus::SpOk
    })
}

/// Reduce bit depth to `target_bpp`; result is a new handle.
///
/// # Safety
/// `img` must be a valid image handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_image_quantize(
    img: *const SpImage,
    target_bpp: u8,
    out: *mut *mut SpImage,
) -> SpStatus {
    guard(|| {
        let img = need!(SpImage::get(img), "image");
        let result = try_core!(imgio::quantize(img, target_bpp));
        *out = SpImage::wrap(result);
        SpStatus::SpOk
    })
}

/// Nearest-neighbor resample to `width` x `height`; result is a new handle.
///
/// # Safety
/// `img` must be a valid image handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_image_resample(
    img: *const SpImage,
    width: usize,
    height: usize,
    out: *mut *mut SpImage,
) -> SpStatus {
    guard(|| {
        let img = need!(SpImage::get(img), "image");
        let result = try_core!(imgio::resample(img, width, height));
        *out = SpImage::wrap(result);
        SpStatus::SpOk
    })
}

/// Mark lesion pixels invalid from a same-size binary mask file
/// (0 = valid, nonzero = lesion); result is a new handle.
///
/// # Safety
/// `img` must be a valid image handle, `mask_path` a valid NUL-terminated
/// string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_image_apply_mask_file(
    img: *const SpImage,
    mask_path: *const c_char,
    out: *mut *mut SpImage,
) -> SpStatus {
    guard(|| {
        let img = need!(SpImage::get(img), "image");
        let path = match path_arg(mask_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let result = try_core!(imgio::apply_mask(img, path));
        *out = SpImage::wrap(result);
        SpStatus::SpOk
    })
}

// ---------------------------------------------------------------------------
// texture features

/// Compute the 28 texture features (14 direction means, 14 direction ranges)
/// of a quantized image into `out_values`, which must hold 28 doubles.
///
/// # Safety
/// `img` must be a valid image handle and `out_values` point to 28 doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_haralick_features28(
    img: *const SpImage,
    out_values: *mut f64,
) -> SpStatus {
    guard(|| {
        let img = need!(SpImage::get(img), "image");
        if out_values.is_null() {
            set_error("null out_values");
            return SpStatus::SpErrNull;
        }
        let fv = try_core!(feature_vector_28(img, "ffi"));
        std::ptr::copy_nonoverlapping(fv.values.as_ptr(), out_values, 28);
        SpStatus::SpOk
    })
}

// ---------------------------------------------------------------------------
// factorization basis

/// Load a fitted basis from its JSON serialization.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_nmf_model_load(
    path: *const c_char,
    out: *mut *mut SpNmfModel,
) -> SpStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let model = try_core!(NmfModel::load_json(path));
        *out = SpNmfModel::wrap(model);
        SpStatus::SpOk
    })
}

/// Release a basis handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from `sp_nmf_model_load`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_nmf_model_free(model: *mut SpNmfModel) {
    SpNmfModel::release(model);
}

/// Number of basis columns (the encoding length).
///
/// # Safety
/// `model` must be null or a valid basis handle.
#[no_mangle]
pub unsafe extern "C" fn sp_nmf_k(model: *const SpNmfModel) -> usize {
    SpNmfModel::get(model).map_or(0, |m| m.k)
}

/// Project an image onto the basis; writes `sp_nmf_k(model)` coefficients.
///
/// # Safety
/// `model` and `img` must be valid handles; `out_values` must point to at
/// least `sp_nmf_k(model)` doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_nmf_project_image(
    model: *const SpNmfModel,
    img: *const SpImage,
    out_values: *mut f64,
) -> SpStatus {
    guard(|| {
        let model = need!(SpNmfModel::get(model), "nmf model");
        let img = need!(SpImage::get(img), "image");
        if out_values.is_null() {
            set_error("null out_values");
            return SpStatus::SpErrNull;
        }
        let h = try_core!(project_image(model, img));
        std::ptr::copy_nonoverlapping(h.as_ptr(), out_values, h.len());
        SpStatus::SpOk
    })
}

// ---------------------------------------------------------------------------
// svm

/// Load a trained SVM from its JSON serialization.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_svm_model_load(
    path: *const c_char,
    out: *mut *mut SpSvmModel,
) -> SpStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let model = try_core!(SvmModel::load_json(path));
        *out = SpSvmModel::wrap(model);
        SpStatus::SpOk
    })
}

/// Release an SVM handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from `sp_svm_model_load`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_svm_model_free(model: *mut SpSvmModel) {
    SpSvmModel::release(model);
}

/// Expected feature dimension of the model.
///
/// # Safety
/// `model` must be null or a valid SVM handle.
#[no_mangle]
pub unsafe extern "C" fn sp_svm_dim(model: *const SpSvmModel) -> usize {
    SpSvmModel::get(model).map_or(0, |m| m.dim)
}

unsafe fn feature_arg(
    model: &SvmModel,
    values: *const f64,
    len: usize,
) -> Result<FeatureVector, SpStatus> {
    if values.is_null() {
        set_error("null feature values");
        return Err(SpStatus::SpErrNull);
    }
    let slice = std::slice::from_raw_parts(values, len);
    FeatureVector::new(slice.to_vec(), model.feature_kind, "ffi").map_err(|e| fail(&e))
}

/// `f(x)`: the raw decision value of the model on a feature array.
///
/// # Safety
/// `model` must be a valid SVM handle; `values` must point to `len` doubles;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_svm_decision_value(
    model: *const SpSvmModel,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let model = need!(SpSvmModel::get(model), "svm model");
        let fv = match feature_arg(model, values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = try_core!(model.decision_value(&fv));
        SpStatus::SpOk
    })
}

/// Normalized score: signed feature-space distance to the hyperplane.
///
/// # Safety
/// Same contract as [`sp_svm_decision_value`].
#[no_mangle]
pub unsafe extern "C" fn sp_svm_score(
    model: *const SpSvmModel,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let model = need!(SpSvmModel::get(model), "svm model");
        let fv = match feature_arg(model, values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = try_core!(model.score(&fv));
        SpStatus::SpOk
    })
}

/// Predicted label, -1 or +1 (an exact zero decision value maps to +1).
///
/// # Safety
/// Same contract as [`sp_svm_decision_value`].
#[no_mangle]
pub unsafe extern "C" fn sp_svm_predict(
    model: *const SpSvmModel,
    values: *const f64,
    len: usize,
    out: *mut i32,
) -> SpStatus {
    guard(|| {
        let model = need!(SpSvmModel::get(model), "svm model");
        let fv = match feature_arg(model, values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = try_core!(model.predict(&fv)) as i32;
        SpStatus::SpOk
    })
}

// ---------------------------------------------------------------------------
// fusion

/// Combine two normalized scores by the multi-level rule: the larger |score|
/// decides; exact ties prefer model A. Writes the fused label (-1/+1) and the
/// choice (0 = A, 1 = B).
///
/// # Safety
/// `out_label` and `out_chosen` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sp_fuse_scores(
    score_a: f64,
    score_b: f64,
    out_label: *mut i32,
    out_chosen: *mut i32,
) -> SpStatus {
    guard(|| {
        if out_label.is_null() || out_chosen.is_null() {
            set_error("null out pointer");
            return SpStatus::SpErrNull;
        }
        let (label, chosen) = fuse_scores(score_a, score_b, TieBreak::PreferA);
        *out_label = label as i32;
        *out_chosen = match chosen {
            Chosen::A => 0,
            Chosen::B => 1,
        };
        SpStatus::SpOk
    })
}

/// Score both representations of one sample and fuse. `a_*` feeds the first
/// model, `b_*` the second.
///
/// # Safety
/// `model_a`/`model_b` must be valid SVM handles; the value arrays must match
/// their declared lengths; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sp_fused_predict(
    model_a: *const SpSvmModel,
    a_values: *const f64,
    a_len: usize,
    model_b: *const SpSvmModel,
    b_values: *const f64,
    b_len: usize,
    out_label: *mut i32,
    out_score_a: *mut f64,
    out_score_b: *mut f64,
) -> SpStatus {
    guard(|| {
        let ma = need!(SpSvmModel::get(model_a), "svm model a");
        let mb = need!(SpSvmModel::get(model_b), "svm model b");
        let fa = match feature_arg(ma, a_values, a_len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let fb = match feature_arg(mb, b_values, b_len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let sa = try_core!(ma.score(&fa));
        let sb = try_core!(mb.score(&fb));
        let (label, _) = fuse_scores(sa, sb, TieBreak::PreferA);
        *out_label = label as i32;
        *out_score_a = sa;
        *out_score_b = sb;
        SpStatus::SpOk
    })
}

// ---------------------------------------------------------------------------
// tier-1 network

/// Load a trained tier-1 network from its JSON serialization.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sp_ann_model_load(
    path: *const c_char,
    out: *mut *mut SpAnnModel,
) -> SpStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let model = try_core!(AnnModel::load_json(path));
        *out = SpAnnModel::wrap(model);
        SpStatus::SpOk
    })
}

/// Release a network handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from `sp_ann_model_load`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_ann_model_free(model: *mut SpAnnModel) {
    SpAnnModel::release(model);
}

/// Score a subject from the nine raw risk inputs, in order: systolic blood
/// pressure (mmHg), atrial fibrillation (0/1), smoker (0/1), cholesterol
/// (mg/dL), diabetic (0/1), exercises (0/1), obese (0/1), family history
/// (0/1), age (years). Writes the two sigmoid outputs.
///
/// # Safety
/// `model` must be a valid network handle; `inputs` must point to `len`
/// doubles; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sp_ann_forward(
    model: *const SpAnnModel,
    inputs: *const f64,
    len: usize,
    out_p_stroke: *mut f64,
    out_p_normal: *mut f64,
) -> SpStatus {
    guard(|| {
        let model = need!(SpAnnModel::get(model), "ann model");
        if inputs.is_null() {
            set_error("null inputs");
            return SpStatus::SpErrNull;
        }
        if len != 9 {
            set_error("expected 9 risk inputs");
            return SpStatus::SpErrDimension;
        }
        let x = std::slice::from_raw_parts(inputs, len);
        let bit = |v: f64| -> u8 { u8::from(v != 0.0) };
        let record = RiskRecord {
            systolic_bp: x[0],
            atrial_fibrillation: bit(x[1]),
            smoker: bit(x[2]),
            cholesterol: x[3],
            diabetic: bit(x[4]),
            exercises: bit(x[5]),
            obese: bit(x[6]),
            family_history: bit(x[7]),
            age: x[8],
            label: RiskLabel::NoStroke,
        };
        let (p_stroke, p_normal) = try_core!(model.forward(&record));
        *out_p_stroke = p_stroke;
        *out_p_normal = p_normal;
        SpStatus::SpOk
    })
}

// ---------------------------------------------------------------------------
// metrics

/// Sensitivity, specificity and accuracy (percentages) from confusion counts.
/// A metric with a zero denominator is written as NaN.
///
/// # Safety
/// `out_sn`, `out_sp` and `out_ac` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sp_metrics(
    tp: u32,
    fn_: u32,
    fp: u32,
    tn: u32,
    out_sn: *mut f64,
    out_sp: *mut f64,
    out_ac: *mut f64,
) -> SpStatus {
    guard(|| {
        if out_sn.is_null() || out_sp.is_null() || out_ac.is_null() {
            set_error("null out pointer");
            return SpStatus::SpErrNull;
        }
        let m = metrics(&ConfusionMatrix::new(tp, fn_, fp, tn));
        *out_sn = m.sn.unwrap_or(f64::NAN);
        *out_sp = m.sp.unwrap_or(f64::NAN);
        *out_ac = m.ac.unwrap_or(f64::NAN);
        SpStatus::SpOk
    })
}

#[cfg(test)]
mod tests;
