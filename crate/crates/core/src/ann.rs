//! Tier-1 risk scoring: a 9-6-2 sigmoid feed-forward network trained with
//! Levenberg-Marquardt damping on the squared output error.
//!
//! The nine inputs are the eight tabulated risk factors plus age. Targets are
//! one-hot over (stroke, no-stroke); the stroke output doubles as the risk
//! score and argmax decides the class.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RISK_FIELDS: [&str; 9] = [
    "systolic_bp",
    "atrial_fibrillation",
    "smoker",
    "cholesterol",
    "diabetic",
    "exercises",
    "obese",
    "family_history",
    "age",
];

/// Indices of the binary fields within [`RISK_FIELDS`].
const BINARY_FIELDS: [usize; 6] = [1, 2, 4, 5, 6, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskLabel {
    Stroke,
    NoStroke,
}

impl RiskLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskLabel::Stroke => "stroke",
            RiskLabel::NoStroke => "no-stroke",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stroke" | "1" => Ok(RiskLabel::Stroke),
            "no-stroke" | "nostroke" | "normal" | "0" => Ok(RiskLabel::NoStroke),
            other => Err(Error::InvalidRecord(format!("unknown risk label {other:?}"))),
        }
    }
}

/// One subject's risk factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub systolic_bp: f64,
    pub atrial_fibrillation: u8,
    pub smoker: u8,
    pub cholesterol: f64,
    pub diabetic: u8,
    pub exercises: u8,
    pub obese: u8,
    pub family_history: u8,
    pub age: f64,
    pub label: RiskLabel,
}

impl RiskRecord {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.systolic_bp, 60.0, 300.0, "systolic_bp"),
            (self.cholesterol, 50.0, 500.0, "cholesterol"),
            (self.age, 1.0, 120.0, "age"),
        ];
        for (v, lo, hi, name) in checks {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::InvalidRecord(format!("{name} {v} outside [{lo}, {hi}]")));
            }
        }
        for (v, name) in [
            (self.atrial_fibrillation, "atrial_fibrillation"),
            (self.smoker, "smoker"),
            (self.diabetic, "diabetic"),
            (self.exercises, "exercises"),
            (self.obese, "obese"),
            (self.family_history, "family_history"),
        ] {
            if v > 1 {
                return Err(Error::InvalidRecord(format!("{name} {v} is not 0/1")));
            }
        }
        Ok(())
    }

    /// The nine inputs in [`RISK_FIELDS`] order.
    pub fn inputs(&self) -> [f64; 9] {
        [
            self.systolic_bp,
            f64::from(self.atrial_fibrillation),
            f64::from(self.smoker),
            self.cholesterol,
            f64::from(self.diabetic),
            f64::from(self.exercises),
            f64::from(self.obese),
            f64::from(self.family_history),
            self.age,
        ]
    }
}

/// Per-field min-max ranges; continuous fields map into `[0, 1]`, binary
/// fields pass through on a pinned `(0, 1)` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub ranges: Vec<(f64, f64)>,
}

/// A scaled network input. Only [`InputScaler::apply`] constructs this,
/// so a record cannot be normalized twice.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledInput(Vec<f64>);

impl ScaledInput {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl InputScaler {
    fn fit(records: &[RiskRecord]) -> InputScaler {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); 9];
        for r in records {
            for (d, v) in r.inputs().into_iter().enumerate() {
                ranges[d].0 = ranges[d].0.min(v);
                ranges[d].1 = ranges[d].1.max(v);
            }
        }
        for d in BINARY_FIELDS {
            ranges[d] = (0.0, 1.0);
        }
        InputScaler { ranges }
    }

    pub fn apply(&self, r: &RiskRecord) -> ScaledInput {
        let scaled = r
            .inputs()
            .into_iter()
            .zip(&self.ranges)
            .map(|(v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect();
        ScaledInput(scaled)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmConfig {
    /// Initial damping.
    pub mu0: f64,
    /// Damping multiplier after an accepted step.
    pub mu_dec: f64,
    /// Damping multiplier after a rejected step.
    pub mu_inc: f64,
    /// Damping ceiling; crossing it stops training as non-converged.
    pub mu_max: f64,
    pub max_epochs: usize,
    pub goal_mse: f64,
    pub seed: u64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            mu0: 0.1,
            mu_dec: 0.5,
            mu_inc: 10.0,
            mu_max: 1e10,
            max_epochs: 200,
            goal_mse: 1e-4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GoalReached,
    MaxEpochs,
    MuOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmReport {
    pub epochs: usize,
    pub final_mse: f64,
    pub converged: bool,
    pub stop: StopReason,
}

/// Trained network: logistic sigmoid everywhere, weights stored with the bias
/// as the last column of each layer matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnModel {
    pub layer_sizes: [usize; 3],
    /// hidden x (inputs + 1)
    pub w1: Vec<Vec<f64>>,
    /// outputs x (hidden + 1)
    pub w2: Vec<Vec<f64>>,
    pub input_scaler: Option<InputScaler>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl AnnModel {
    /// Forward pass on a raw (already scaled) input vector.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.layer_sizes[0] {
            return Err(Error::LengthMismatch { expected: self.layer_sizes[0], actual: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        let hidden: Vec<f64> = self
            .w1
            .iter()
            .map(|row| {
                let z: f64 =
                    row[..x.len()].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + row[x.len()];
                sigmoid(z)
            })
            .collect();
        Ok(self
            .w2
            .iter()
            .map(|row| {
                let z: f64 = row[..hidden.len()]
                    .iter()
                    .zip(&hidden)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + row[hidden.len()];
                sigmoid(z)
            })
            .collect())
    }

    /// Forward pass on a pre-scaled input.
    pub fn forward_scaled(&self, x: &ScaledInput) -> Result<(f64, f64)> {
        let out = self.forward_raw(x.values())?;
        Ok((out[0], out[1]))
    }

    /// Score a record: returns `(p_stroke, p_normal)`. The model's stored
    /// scaler is applied exactly once here.
    pub fn forward(&self, r: &RiskRecord) -> Result<(f64, f64)> {
        r.validate()?;
        let scaled = match &self.input_scaler {
            Some(s) => s.apply(r),
            None => ScaledInput(r.inputs().to_vec()),
        };
        self.forward_scaled(&scaled)
    }

    pub fn predict(&self, r: &RiskRecord) -> Result<RiskLabel> {
        let (p_stroke, p_normal) = self.forward(r)?;
        Ok(if p_stroke >= p_normal { RiskLabel::Stroke } else { RiskLabel::NoStroke })
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

/// Train the 9-6-2 network on risk records.
pub fn train_lm(records: &[RiskRecord], cfg: &LmConfig) -> Result<(AnnModel, LmReport)> {
    if records.len() < 2 {
        return Err(Error::InvalidRecord("need at least 2 records".into()));
    }
    for r in records {
        r.validate()?;
    }
    let has_stroke = records.iter().any(|r| r.label == RiskLabel::Stroke);
    let has_normal = records.iter().any(|r| r.label == RiskLabel::NoStroke);
    if !has_stroke || !has_normal {
        return Err(Error::SingleClass);
    }
    let scaler = InputScaler::fit(records);
    let inputs: Vec<Vec<f64>> = records.iter().map(|r| scaler.apply(r).0).collect();
    let targets: Vec<Vec<f64>> = records
        .iter()
        .map(|r| match r.label {
            RiskLabel::Stroke => vec![1.0, 0.0],
            RiskLabel::NoStroke => vec![0.0, 1.0],
        })
        .collect();
    let (mut model, report) = train_lm_raw(&inputs, &targets, [9, 6, 2], cfg)?;
    model.input_scaler = Some(scaler);
    Ok((model, report))
}

/// Core trainer on raw input/target vectors with an arbitrary 3-layer shape.
pub fn train_lm_raw(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    layer_sizes: [usize; 3],
    cfg: &LmConfig,
) -> Result<(AnnModel, LmReport)> {
    let [n_in, n_hidden, n_out] = layer_sizes;
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::InvalidRecord("inputs/targets length mismatch or empty".into()));
    }
    for (x, t) in inputs.iter().zip(targets) {
        if x.len() != n_in || t.len() != n_out {
            return Err(Error::DimensionMismatch {
                expected: format!("{n_in} inputs / {n_out} targets"),
                actual: format!("{} / {}", x.len(), t.len()),
            });
        }
    }

    let n_params = n_hidden * (n_in + 1) + n_out * (n_hidden + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta: Vec<f64> = (0..n_params).map(|_| rng.gen_range(-0.5..0.5)).collect();

    let mut mu = cfg.mu0;
    let mut mse = mse_of(&theta, inputs, targets, layer_sizes);
    let mut epochs = 0;
    let (converged, stop) = loop {
        if mse <= cfg.goal_mse {
            break (true, StopReason::GoalReached);
        }
        if epochs >= cfg.max_epochs {
            break (mse <= cfg.goal_mse, StopReason::MaxEpochs);
        }
        let (jac, resid) = jacobian_and_residuals(&theta, inputs, targets, layer_sizes);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &resid;

        // Retry with stronger damping until the step reduces the error.
        let accepted = loop {
            let damped = &jtj + DMatrix::identity(n_params, n_params) * mu;
            let step = damped.cholesky().map(|ch| ch.solve(&(-&jtr)));
            if let Some(delta) = step {
                let candidate: Vec<f64> =
                    theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
                let new_mse = mse_of(&candidate, inputs, targets, layer_sizes);
                if new_mse < mse {
                    theta = candidate;
                    mse = new_mse;
                    mu *= cfg.mu_dec;
                    break true;
                }
            }
            mu *= cfg.mu_inc;
            if mu > cfg.mu_max {
                break false;
            }
        };
        epochs += 1;
        if !accepted {
            break (false, StopReason::MuOverflow);
        }
    };

    let model = model_from_params(&theta, layer_sizes);
    Ok((model, LmReport { epochs, final_mse: mse, converged, stop }))
}

/// Materialize a model from the packed parameter vector: the rows of the
/// hidden layer (each with its trailing bias) followed by the output rows.
pub fn model_from_params(theta: &[f64], layer_sizes: [usize; 3]) -> AnnModel {
    let [n_in, n_hidden, n_out] = layer_sizes;
    let mut idx = 0;
    let mut take_row = |len: usize| {
        let row: Vec<f64> = theta[idx..idx + len].to_vec();
        idx += len;
        row
    };
    let w1: Vec<Vec<f64>> = (0..n_hidden).map(|_| take_row(n_in + 1)).collect();
    let w2: Vec<Vec<f64>> = (0..n_out).map(|_| take_row(n_hidden + 1)).collect();
    AnnModel { layer_sizes, w1, w2, input_scaler: None }
}

fn mse_of(
    theta: &[f64],
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    layer_sizes: [usize; 3],
) -> f64 {
    let model = model_from_params(theta, layer_sizes);
    let mut sum = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let out = model.forward_raw(x).expect("validated shapes");
        sum += out.iter().zip(t).map(|(o, y)| (o - y) * (o - y)).sum::<f64>();
    }
    sum / (inputs.len() * layer_sizes[2]) as f64
}

/// Residual vector `r = output - target` stacked over samples and outputs,
/// and its analytic Jacobian with respect to the packed parameters (see
/// [`model_from_params`] for the packing). Public so gradient checks can be
/// written against it.
pub fn jacobian_and_residuals(
    theta: &[f64],
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    layer_sizes: [usize; 3],
) -> (DMatrix<f64>, DVector<f64>) {
    let [n_in, n_hidden, n_out] = layer_sizes;
    let model = model_from_params(theta, layer_sizes);
    let n_params = theta.len();
    let w1_len = n_hidden * (n_in + 1);
    let n_rows = inputs.len() * n_out;
    let mut jac = DMatrix::zeros(n_rows, n_params);
    let mut resid = DVector::zeros(n_rows);

    for (s, (x, t)) in inputs.iter().zip(targets).enumerate() {
        // forward with cached activations
        let hidden: Vec<f64> = model
            .w1
            .iter()
            .map(|row| {
                let z: f64 =
                    row[..n_in].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + row[n_in];
                sigmoid(z)
            })
            .collect();
        let outputs: Vec<f64> = model
            .w2
            .iter()
            .map(|row| {
                let z: f64 = row[..n_hidden]
                    .iter()
                    .zip(&hidden)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + row[n_hidden];
                sigmoid(z)
            })
            .collect();

        for k in 0..n_out {
            let row_idx = s * n_out + k;
            resid[row_idx] = outputs[k] - t[k];
            let dout = outputs[k] * (1.0 - outputs[k]);
            // output-layer weights (only row k is live)
            let base2 = w1_len + k * (n_hidden + 1);
            for j in 0..n_hidden {
                jac[(row_idx, base2 + j)] = dout * hidden[j];
            }
            jac[(row_idx, base2 + n_hidden)] = dout;
            // hidden-layer weights through the chain rule
            for (j, &hj) in hidden.iter().enumerate() {
                let dh = dout * model.w2[k][j] * hj * (1.0 - hj);
                let base1 = j * (n_in + 1);
                for i in 0..n_in {
                    jac[(row_idx, base1 + i)] = dh * x[i];
                }
                jac[(row_idx, base1 + n_in)] = dh;
            }
        }
    }
    (jac, resid)
}
