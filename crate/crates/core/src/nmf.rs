//! Non-negative matrix factorization by multiplicative updates, with an
//! optional elementwise weight on the reconstruction error, plus projection
//! of unseen vectors onto a fitted basis.
//!
//! The factorization minimizes `||W . (A - V H)||_F^2` over `V, H >= 0`
//! (all-ones weight by default). Updates are the standard alternating
//! multiplicative rules, which never increase the objective.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::GrayImage;

/// Denominator floor for the multiplicative updates.
const DIV_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NmfConfig {
    /// Number of basis columns.
    pub k: usize,
    pub max_iters: usize,
    /// Relative objective-change threshold for early stopping.
    pub tol: f64,
    pub seed: u64,
    /// Optional non-negative weight matrix, same shape as the data.
    pub weight: Option<DMatrix<f64>>,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig { k: 14, max_iters: 500, tol: 1e-5, seed: 42, weight: None }
    }
}

impl NmfConfig {
    fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if self.k > n.min(m) {
            return Err(Error::RankTooLarge { k: self.k, max: n.min(m) });
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if let Some(w) = &self.weight {
            if w.shape() != (n, m) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n}x{m} weight"),
                    actual: format!("{}x{}", w.nrows(), w.ncols()),
                });
            }
            if let Some(pos) = w.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeEntry { row: pos % w.nrows(), col: pos / w.nrows() });
            }
        }
        Ok(())
    }
}

/// Fitted basis. `basis` is `n_pixels x k`, stored row-major for a stable
/// serialized form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NmfModel {
    pub k: usize,
    /// (width, height) used for vectorization when fitted from images.
    pub image_shape: Option<(usize, usize)>,
    pub basis_rows: usize,
    /// Row-major `basis_rows x k` matrix entries.
    pub basis: Vec<f64>,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    /// Weighted Frobenius reconstruction error per iteration, starting with
    /// the error of the initial factors. Non-increasing.
    pub objective_trace: Vec<f64>,
}

impl NmfModel {
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.basis_rows, self.k, &self.basis)
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        crate::util::write_atomic(path, &json)
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

fn check_non_negative(a: &DMatrix<f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] < 0.0 || !a[(i, j)].is_finite() {
                return Err(Error::NegativeEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn weighted_frobenius(a: &DMatrix<f64>, v: &DMatrix<f64>, h: &DMatrix<f64>, u: Option<&DMatrix<f64>>) -> f64 {
    let mut resid = a - v * h;
    if let Some(w) = u {
        resid.component_mul_assign(w);
    }
    resid.norm()
}

fn positive_uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // 1 - U[0,1) lies in (0, 1]; strictly positive init keeps every entry
    // reachable by the multiplicative updates.
    DMatrix::from_fn(rows, cols, |_, _| 1.0 - rng.gen::<f64>())
}

/// Factorize `A ~ V H` with seeded uniform initialization.
pub fn factorize(a: &DMatrix<f64>, cfg: &NmfConfig) -> Result<(NmfModel, DMatrix<f64>)> {
    cfg.validate(a.nrows(), a.ncols())?;
    check_non_negative(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let v0 = positive_uniform(&mut rng, a.nrows(), cfg.k);
    let h0 = positive_uniform(&mut rng, cfg.k, a.ncols());
    factorize_with_init(a, cfg, v0, h0)
}

/// Factorize from explicit initial factors (exposed so tests can control the
/// starting point exactly).
pub fn factorize_with_init(
    a: &DMatrix<f64>,
    cfg: &NmfConfig,
    mut v: DMatrix<f64>,
    mut h: DMatrix<f64>,
) -> Result<(NmfModel, DMatrix<f64>)> {
    cfg.validate(a.nrows(), a.ncols())?;
    check_non_negative(a)?;
    if v.shape() != (a.nrows(), cfg.k) || h.shape() != (cfg.k, a.ncols()) {
        return Err(Error::DimensionMismatch {
            expected: format!("V {}x{} and H {}x{}", a.nrows(), cfg.k, cfg.k, a.ncols()),
            actual: format!("V {}x{} and H {}x{}", v.nrows(), v.ncols(), h.nrows(), h.ncols()),
        });
    }
    // Squared elementwise weight of the Paatero objective.
    let u = cfg.weight.as_ref().map(|w| w.component_mul(w));

    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push(weighted_frobenius(a, &v, &h, u.as_ref()));
    for _ in 0..cfg.max_iters {
        match &u {
            None => {
                // H <- H .* (V^T A) ./ (V^T V H)
                let vt = v.transpose();
                let numer = &vt * a;
                let denom = &vt * &v * &h;
                update_in_place(&mut h, &numer, &denom);
                // V <- V .* (A H^T) ./ (V H H^T)
                let ht = h.transpose();
                let numer = a * &ht;
                let denom = &v * (&h * &ht);
                update_in_place(&mut v, &numer, &denom);
            }
            Some(u) => {
                let ua = u.component_mul(a);
                let uvh = u.component_mul(&(&v * &h));
                let vt = v.transpose();
                let numer = &vt * &ua;
                let denom = &vt * &uvh;
                update_in_place(&mut h, &numer, &denom);
                let uvh = u.component_mul(&(&v * &h));
                let ht = h.transpose();
                let numer = &ua * &ht;
                let denom = &uvh * &ht;
                update_in_place(&mut v, &numer, &denom);
            }
        }
        let obj = weighted_frobenius(a, &v, &h, u.as_ref());
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if (prev - obj) < cfg.tol * prev.max(DIV_FLOOR) {
            break;
        }
    }

    let basis: Vec<f64> = v.transpose().as_slice().to_vec();
    let model = NmfModel {
        k: cfg.k,
        image_shape: None,
        basis_rows: a.nrows(),
        basis,
        seed: cfg.seed,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        objective_trace: trace,
    };
    Ok((model, h))
}

fn update_in_place(x: &mut DMatrix<f64>, numer: &DMatrix<f64>, denom: &DMatrix<f64>) {
    x.zip_zip_apply(numer, denom, |v, n, d| *v *= n / d.max(DIV_FLOOR));
}

/// Encode one non-negative vector against the fitted basis: minimize
/// `||a - V h||_2^2` over `h >= 0` with `V` fixed.
pub fn project(model: &NmfModel, a: &[f64]) -> Result<Vec<f64>> {
    if a.len() != model.basis_rows {
        return Err(Error::LengthMismatch { expected: model.basis_rows, actual: a.len() });
    }
    if let Some(pos) = a.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::NegativeEntry { row: pos, col: 0 });
    }
    let v = model.basis_matrix();
    let a = DVector::from_column_slice(a);
    let vt = v.transpose();
    let vta = &vt * &a;
    let vtv = &vt * &v;

    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut h = DVector::from_fn(model.k, |_, _| 1.0 - rng.gen::<f64>());
    let mut prev = (&a - &v * &h).norm();
    for _ in 0..model.max_iters {
        let denom = &vtv * &h;
        for i in 0..model.k {
            h[i] *= vta[i] / denom[i].max(DIV_FLOOR);
        }
        let obj = (&a - &v * &h).norm();
        let done = (prev - obj) < model.tol * prev.max(DIV_FLOOR);
        prev = obj;
        if done {
            break;
        }
    }
    Ok(h.iter().copied().collect())
}

/// Stack images as columns scaled to `[0, 1]`. All images must share one
/// shape and carry no mask; the factorization path has no notion of
/// missing pixels.
pub fn build_data_matrix(images: &[GrayImage]) -> Result<DMatrix<f64>> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidRecord("no images to factorize".into()))?;
    let (w, h) = (first.width(), first.height());
    let mut a = DMatrix::zeros(w * h, images.len());
    for (j, img) in images.iter().enumerate() {
        if (img.width(), img.height()) != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: format!("{w}x{h}"),
                actual: format!("{}x{}", img.width(), img.height()),
            });
        }
        if img.mask().is_some() {
            return Err(Error::MaskedInput(format!("image column {j}")));
        }
        let scale = (img.levels() - 1) as f64;
        for (i, &px) in img.pixels().iter().enumerate() {
            a[(i, j)] = f64::from(px) / scale;
        }
    }
    Ok(a)
}

/// Inverse of the column flattening in [`build_data_matrix`].
pub fn unflatten_column(col: &[f64], width: usize, height: usize, levels: usize) -> Result<GrayImage> {
    if col.len() != width * height {
        return Err(Error::LengthMismatch { expected: width * height, actual: col.len() });
    }
    let scale = (levels - 1) as f64;
    let pixels = col.iter().map(|&v| (v * scale).round() as u16).collect();
    GrayImage::new(width, height, levels, pixels, None)
}

/// Fit a basis from a set of images, recording the vectorization shape.
pub fn fit_images(images: &[GrayImage], cfg: &NmfConfig) -> Result<(NmfModel, DMatrix<f64>)> {
    let a = build_data_matrix(images)?;
    let (mut model, h) = factorize(&a, cfg)?;
    model.image_shape = Some((images[0].width(), images[0].height()));
    Ok((model, h))
}

/// Project one image onto a fitted basis, checking the vectorization shape.
pub fn project_image(model: &NmfModel, img: &GrayImage) -> Result<Vec<f64>> {
    if let Some((w, h)) = model.image_shape {
        if (img.width(), img.height()) != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: format!("{w}x{h}"),
                actual: format!("{}x{}", img.width(), img.height()),
            });
        }
    }
    if img.mask().is_some() {
        return Err(Error::MaskedInput("projection input".into()));
    }
    let scale = (img.levels() - 1) as f64;
    let col: Vec<f64> = img.pixels().iter().map(|&v| f64::from(v) / scale).collect();
    project(model, &col)
}
