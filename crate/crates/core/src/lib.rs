//! Two-tier stroke prediction toolkit.
//!
//! Tier 1 scores tabular risk factors with a small feed-forward network
//! trained by Levenberg-Marquardt. Tier 2 classifies brain MRI textures with
//! mask-aware gray-level co-occurrence statistics, non-negative matrix
//! factorization coefficients, kernel SVMs, and a confidence-score fusion
//! rule, all evaluated by leave-one-out cross-validation.

#![forbid(unsafe_code)]

pub mod ann;
pub mod error;
pub mod eval;
pub mod features;
pub mod fusion;
pub mod glcm;
pub mod haralick;
pub mod imgio;
pub mod manifest;
pub mod nmf;
pub mod svm;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
