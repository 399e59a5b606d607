//! Binary soft-margin kernel SVMs trained by sequential minimal optimization,
//! with normalized decision scores.
//!
//! The score of a sample is its signed feature-space distance to the decision
//! hyperplane, `f(x) / ||w||`, with `||w||^2 = sum a_i a_j y_i y_j K(x_i, x_j)`.
//! Scores from models with different kernels live on a common scale, which is
//! what the multi-level fusion rule compares.

mod smo;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector};

/// Kernel family and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// `exp(-||u - v||^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
    /// Two-parameter sigmoid: `tanh(scale * u.v + offset)`
    Mlp { scale: f64, offset: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { sigma } if sigma.is_nan() || *sigma <= 0.0 => {
                Err(Error::InvalidConfig(format!("rbf sigma {sigma} must be > 0")))
            }
            _ => Ok(()),
        }
    }
}

/// Evaluate the kernel on two equal-length vectors.
pub fn kernel_eval(spec: KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), actual: v.len() });
    }
    Ok(match spec {
        KernelSpec::Linear => dot(u, v),
        KernelSpec::Rbf { sigma } => {
            let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2 / (2.0 * sigma * sigma)).exp()
        }
        KernelSpec::Mlp { scale, offset } => (scale * dot(u, v) + offset).tanh(),
    })
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Per-dimension min/max ranges fitted on training data; maps features into
/// `[0, 1]`. A constant dimension maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub ranges: Vec<(f64, f64)>,
}

impl Scaler {
    fn fit(rows: &[&[f64]]) -> Scaler {
        let dim = rows[0].len();
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for row in rows {
            for (d, &v) in row.iter().enumerate() {
                ranges[d].0 = ranges[d].0.min(v);
                ranges[d].1 = ranges[d].1.max(v);
            }
        }
        Scaler { ranges }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub c: f64,
    /// KKT violation tolerance for the solver.
    pub tol: f64,
    /// Fit a min-max scaler on the training features (on by default).
    pub scale_features: bool,
    /// Outer-loop pass cap; hitting it reports non-convergence.
    pub max_passes: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { c: 1.0, tol: 1e-3, scale_features: true, max_passes: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub converged: bool,
    pub passes: usize,
}

/// Trained classifier state. Support vectors are stored in the scaled
/// feature space (after `scaler`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub scaler: Option<Scaler>,
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub labels: Vec<f64>,
    pub bias: f64,
    pub w_norm_sq: f64,
    pub feature_kind: FeatureKind,
    pub dim: usize,
    pub diagnostics: TrainDiagnostics,
}

/// Train a binary SVM. Labels must be -1 or +1 and both classes present.
/// Deterministic for a fixed sample order.
pub fn train(
    data: &[(FeatureVector, f64)],
    spec: KernelSpec,
    opts: &TrainOptions,
) -> Result<SvmModel> {
    spec.validate()?;
    if opts.c.is_nan() || opts.c <= 0.0 {
        return Err(Error::InvalidConfig(format!("C {} must be > 0", opts.c)));
    }
    if data.len() < 2 {
        return Err(Error::InvalidRecord("need at least 2 samples".into()));
    }
    let kind = data[0].0.kind;
    let dim = data[0].0.len();
    for (f, y) in data {
        if f.kind != kind || f.len() != dim {
            return Err(Error::FeatureKindMismatch {
                expected: format!("{} ({dim} dims)", kind.as_str()),
                actual: format!("{} ({} dims)", f.kind.as_str(), f.len()),
            });
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("features of sample {}", f.source_id)));
        }
        if *y != 1.0 && *y != -1.0 {
            return Err(Error::InvalidRecord(format!("label {y} is not -1/+1")));
        }
    }
    let labels: Vec<f64> = data.iter().map(|(_, y)| *y).collect();
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::SingleClass);
    }

    let raw: Vec<&[f64]> = data.iter().map(|(f, _)| f.values.as_slice()).collect();
    let scaler = opts.scale_features.then(|| Scaler::fit(&raw));
    let rows: Vec<Vec<f64>> = match &scaler {
        Some(s) => raw.iter().map(|r| s.apply(r)).collect(),
        None => raw.iter().map(|r| r.to_vec()).collect(),
    };

    let n = rows.len();
    let gram = DMatrix::from_fn(n, n, |i, j| kernel_eval(spec, &rows[i], &rows[j]).unwrap());
    let sol = smo::Smo::new(&gram, &labels, opts.c, opts.tol).solve(opts.max_passes);

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut sv_labels = Vec::new();
    for i in 0..n {
        if sol.alpha[i] > 1e-12 {
            support_vectors.push(rows[i].clone());
            alphas.push(sol.alpha[i]);
            sv_labels.push(labels[i]);
        }
    }
    let mut w_norm_sq = 0.0;
    for i in 0..alphas.len() {
        for j in 0..alphas.len() {
            w_norm_sq += alphas[i]
                * alphas[j]
                * sv_labels[i]
                * sv_labels[j]
                * kernel_eval(spec, &support_vectors[i], &support_vectors[j])?;
        }
    }

    Ok(SvmModel {
        kernel: spec,
        c: opts.c,
        scaler,
        support_vectors,
        alphas,
        labels: sv_labels,
        bias: sol.bias,
        w_norm_sq,
        feature_kind: kind,
        dim,
        diagnostics: TrainDiagnostics { converged: sol.converged, passes: sol.passes },
    })
}

impl SvmModel {
    fn check_input(&self, x: &FeatureVector) -> Result<()> {
        if x.kind != self.feature_kind {
            return Err(Error::FeatureKindMismatch {
                expected: self.feature_kind.as_str().into(),
                actual: x.kind.as_str().into(),
            });
        }
        if x.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(())
    }

    /// `f(x) = sum_i a_i y_i K(x_i, x) + b` in the scaled feature space.
    pub fn decision_value(&self, x: &FeatureVector) -> Result<f64> {
        self.check_input(x)?;
        let xs = match &self.scaler {
            Some(s) => s.apply(&x.values),
            None => x.values.clone(),
        };
        let mut f = self.bias;
        for ((sv, &a), &y) in self.support_vectors.iter().zip(&self.alphas).zip(&self.labels) {
            f += a * y * kernel_eval(self.kernel, sv, &xs)?;
        }
        Ok(f)
    }

    /// Signed feature-space distance to the hyperplane: `f(x) / ||w||`.
    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        if self.w_norm_sq.is_nan() || self.w_norm_sq <= 0.0 {
            return Err(Error::DegenerateModel(format!(
                "w_norm_sq = {} is not positive",
                self.w_norm_sq
            )));
        }
        Ok(self.decision_value(x)? / self.w_norm_sq.sqrt())
    }

    /// `sign(f(x))`; an exact zero maps to +1.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        Ok(if self.decision_value(x)? >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Value of the dual objective at the trained multipliers.
    pub fn dual_objective(&self) -> f64 {
        self.alphas.iter().sum::<f64>() - 0.5 * self.w_norm_sq
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
