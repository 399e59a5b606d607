//! Multi-level SVM: two kernel models, one per feature family, combined by
//! trusting whichever produced the larger absolute normalized score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::svm::SvmModel;

/// Which model decided a fused prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chosen {
    A,
    B,
}

/// Deterministic behavior on an exact |score| tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TieBreak {
    #[default]
    PreferA,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusedModel {
    pub model_a: SvmModel,
    pub model_b: SvmModel,
    pub tie_break: TieBreak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedPrediction {
    pub label: f64,
    pub chosen: Chosen,
    pub score_a: f64,
    pub score_b: f64,
}

impl FusedModel {
    pub fn new(model_a: SvmModel, model_b: SvmModel) -> Result<Self> {
        if model_a.feature_kind == model_b.feature_kind {
            return Err(Error::FeatureKindMismatch {
                expected: "two distinct feature kinds".into(),
                actual: model_a.feature_kind.as_str().into(),
            });
        }
        Ok(FusedModel { model_a, model_b, tie_break: TieBreak::PreferA })
    }

    /// Score the two representations of one sample and trust the model with
    /// the larger |score|. A degenerate model is an error, never silently
    /// replaced by the other model.
    pub fn fuse_predict(&self, x_a: &FeatureVector, x_b: &FeatureVector) -> Result<FusedPrediction> {
        let score_a = self.model_a.score(x_a)?;
        let score_b = self.model_b.score(x_b)?;
        let (label, chosen) = fuse_scores(score_a, score_b, self.tie_break);
        Ok(FusedPrediction { label, chosen, score_a, score_b })
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

/// The fusion rule on bare scores: argmax of |score| decides, sign of the
/// chosen score is the label (an exact zero counts as +1), exact ties go to A.
pub fn fuse_scores(score_a: f64, score_b: f64, _tie: TieBreak) -> (f64, Chosen) {
    let chosen = if score_b.abs() > score_a.abs() { Chosen::B } else { Chosen::A };
    let s = match chosen {
        Chosen::A => score_a,
        Chosen::B => score_b,
    };
    (if s >= 0.0 { 1.0 } else { -1.0 }, chosen)
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn agreement_dominance(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            prop_assume!(a != 0.0 && b != 0.0);
            let (label, _) = fuse_scores(a, b, TieBreak::PreferA);
            if a.signum() == b.signum() {
                prop_assert_eq!(label, a.signum());
            }
        }

        #[test]
        fn argmax_consistency(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let (label, chosen) = fuse_scores(a, b, TieBreak::PreferA);
            if a.abs() > b.abs() {
                prop_assert_eq!(chosen, Chosen::A);
                prop_assert_eq!(label, if a >= 0.0 { 1.0 } else { -1.0 });
            } else if b.abs() > a.abs() {
                prop_assert_eq!(chosen, Chosen::B);
                prop_assert_eq!(label, if b >= 0.0 { 1.0 } else { -1.0 });
            } else {
                prop_assert_eq!(chosen, Chosen::A);
            }
        }
    }
}
