//! The 14 co-occurrence texture statistics and the 28-dimensional feature
//! vector (per-statistic mean and range over the four adjacency directions).
//!
//! Conventions, fixed once here and relied on by the tests:
//! - logarithms are natural; any `p * log(p)` term with `p = 0` contributes 0;
//! - gray levels enter formulas with 1-based indices, so pair sums range over
//!   `2..=2*N_g` and the matrix is stored 0-based internally;
//! - difference variance is the raw second moment of the difference
//!   distribution, exactly as the source formula states it;
//! - `HX`, `HY`, `HXY1`, `HXY2` and the `Q` matrix follow Haralick's 1973
//!   definitions, and the maximal correlation coefficient is the square root
//!   of the second-largest eigenvalue of `Q` restricted to gray levels with
//!   nonzero marginal probability.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::features::{FeatureKind, FeatureVector};
use crate::glcm::{self, Direction, Glcm};
use crate::imgio::GrayImage;

/// Statistics that can degenerate on pathological inputs; the affected value
/// is reported as 0 with its flag set instead of aborting the feature vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DegeneracyFlags {
    /// sigma_x or sigma_y was zero (single effective gray level).
    pub correlation: bool,
    /// max(HX, HY) was zero.
    pub imc1: bool,
    /// Q had fewer than 2 levels with nonzero marginals.
    pub max_corr_coeff: bool,
}

/// All 14 statistics of one co-occurrence matrix plus the shared
/// intermediates they are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct HaralickStats {
    pub asm: f64,
    pub contrast: f64,
    pub correlation: f64,
    pub variance: f64,
    pub idm: f64,
    pub sum_average: f64,
    pub sum_variance: f64,
    pub sum_entropy: f64,
    pub entropy: f64,
    pub difference_variance: f64,
    pub difference_entropy: f64,
    pub imc1: f64,
    pub imc2: f64,
    pub max_corr_coeff: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub hx: f64,
    pub hy: f64,
    pub hxy: f64,
    pub hxy1: f64,
    pub hxy2: f64,
    pub flags: DegeneracyFlags,
}

impl HaralickStats {
    /// The 14 statistics in their canonical order.
    pub fn values(&self) -> [f64; 14] {
        [
            self.asm,
            self.contrast,
            self.correlation,
            self.variance,
            self.idm,
            self.sum_average,
            self.sum_variance,
            self.sum_entropy,
            self.entropy,
            self.difference_variance,
            self.difference_entropy,
            self.imc1,
            self.imc2,
            self.max_corr_coeff,
        ]
    }
}

fn xlnx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Compute all 14 statistics of a co-occurrence matrix.
pub fn compute_stats(g: &Glcm) -> HaralickStats {
    let n = g.n_levels();
    let m = glcm::marginals(g);
    let mut flags = DegeneracyFlags::default();

    // Marginal moments with 1-based level values.
    let mu_x: f64 = m.p_x.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum();
    let mu_y: f64 = m.p_y.iter().enumerate().map(|(j, p)| (j + 1) as f64 * p).sum();
    let var_x: f64 =
        m.p_x.iter().enumerate().map(|(i, p)| ((i + 1) as f64 - mu_x).powi(2) * p).sum();
    let var_y: f64 =
        m.p_y.iter().enumerate().map(|(j, p)| ((j + 1) as f64 - mu_y).powi(2) * p).sum();
    let sigma_x = var_x.sqrt();
    let sigma_y = var_y.sqrt();

    let mut asm = 0.0;
    let mut cross_moment = 0.0;
    let mut variance = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut hxy1 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = g.p(i, j);
            asm += p * p;
            cross_moment += ((i + 1) * (j + 1)) as f64 * p;
            variance += (((i + 1) as f64) - mu_x).powi(2) * p;
            idm += p / (1.0 + (i as f64 - j as f64).powi(2));
            entropy -= xlnx(p);
            let pp = m.p_x[i] * m.p_y[j];
            if pp > 0.0 {
                hxy1 -= p * pp.ln();
            }
        }
    }

    let correlation = if sigma_x > 0.0 && sigma_y > 0.0 {
        (cross_moment - mu_x * mu_y) / (sigma_x * sigma_y)
    } else {
        flags.correlation = true;
        0.0
    };

    // Sum/difference distributions; `p_sum[t]` carries 1-based pair sum t+2.
    let sum_average: f64 =
        m.p_sum.iter().enumerate().map(|(t, p)| (t + 2) as f64 * p).sum();
    let sum_entropy: f64 = -m.p_sum.iter().map(|&p| xlnx(p)).sum::<f64>();
    let sum_variance: f64 = m
        .p_sum
        .iter()
        .enumerate()
        .map(|(t, p)| ((t + 2) as f64 - sum_entropy).powi(2) * p)
        .sum();
    let difference_variance: f64 =
        m.p_diff.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
    let difference_entropy: f64 = -m.p_diff.iter().map(|&p| xlnx(p)).sum::<f64>();
    let contrast = difference_variance;

    let hx: f64 = -m.p_x.iter().map(|&p| xlnx(p)).sum::<f64>();
    let hy: f64 = -m.p_y.iter().map(|&p| xlnx(p)).sum::<f64>();
    let hxy = entropy;
    let mut hxy2 = 0.0;
    for &px in &m.p_x {
        for &py in &m.p_y {
            hxy2 -= xlnx(px * py);
        }
    }

    let imc1 = {
        let denom = hx.max(hy);
        if denom > 0.0 {
            (hxy - hxy1) / denom
        } else {
            flags.imc1 = true;
            0.0
        }
    };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    let max_corr_coeff = match second_q_eigenvalue(g, &m.p_x, &m.p_y) {
        Some(lambda2) => lambda2.clamp(0.0, 1.0).sqrt(),
        None => {
            flags.max_corr_coeff = true;
            0.0
        }
    };

    HaralickStats {
        asm,
        contrast,
        correlation,
        variance,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        entropy,
        difference_variance,
        difference_entropy,
        imc1,
        imc2,
        max_corr_coeff,
        mu_x,
        mu_y,
        sigma_x,
        sigma_y,
        hx,
        hy,
        hxy,
        hxy1,
        hxy2,
        flags,
    }
}

/// Second-largest eigenvalue of `Q(i,j) = sum_k p(i,k) p(j,k) / (p_x(i) p_y(k))`
/// over levels with nonzero marginals.
///
/// `Q` is similar to the symmetric positive semi-definite `M M^T` with
/// `M(i,k) = p(i,k) / sqrt(p_x(i) p_y(k))`, so the spectrum is computed from
/// that form, which is numerically robust and keeps eigenvalues real.
fn second_q_eigenvalue(g: &Glcm, p_x: &[f64], p_y: &[f64]) -> Option<f64> {
    let rows: Vec<usize> = (0..p_x.len()).filter(|&i| p_x[i] > 0.0).collect();
    let cols: Vec<usize> = (0..p_y.len()).filter(|&j| p_y[j] > 0.0).collect();
    if rows.len() < 2 || cols.is_empty() {
        return None;
    }
    let m = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        g.p(rows[a], cols[b]) / (p_x[rows[a]] * p_y[cols[b]]).sqrt()
    });
    let sym = &m * m.transpose();
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Some(eigs[1])
}

/// Per-statistic mean and range over the four directional matrices at unit
/// distance, concatenated as `[14 means | 14 ranges]`.
pub fn feature_vector_28(img: &GrayImage, source_id: impl Into<String>) -> Result<FeatureVector> {
    let mut per_dir = Vec::with_capacity(4);
    for dir in Direction::ALL {
        let g = glcm::compute_glcm(img, dir, 1)?;
        per_dir.push(compute_stats(&g).values());
    }
    let mut values = Vec::with_capacity(28);
    for s in 0..14 {
        values.push(per_dir.iter().map(|v| v[s]).sum::<f64>() / 4.0);
    }
    for s in 0..14 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in &per_dir {
            min = min.min(v[s]);
            max = max.max(v[s]);
        }
        values.push(max - min);
    }
    FeatureVector::new(values, FeatureKind::Haralick28, source_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgio::GrayImage;
    use nalgebra::DMatrix;

    fn glcm_from(p: DMatrix<f64>) -> Glcm {
        Glcm::from_probabilities(p, 1).unwrap()
    }

    #[test]
    fn constant_image_statistics() {
        let mut p = DMatrix::zeros(2, 2);
        p[(0, 0)] = 1.0;
        let s = compute_stats(&glcm_from(p));
        assert_eq!(s.asm, 1.0);
        assert_eq!(s.contrast, 0.0);
        assert_eq!(s.entropy, 0.0);
        assert_eq!(s.idm, 1.0);
        assert!(s.flags.correlation);
        assert!(s.flags.max_corr_coeff);
        assert_eq!(s.max_corr_coeff, 0.0);
    }

    #[test]
    fn checkerboard_statistics() {
        let mut p = DMatrix::zeros(2, 2);
        p[(0, 1)] = 0.5;
        p[(1, 0)] = 0.5;
        let s = compute_stats(&glcm_from(p));
        assert!((s.asm - 0.5).abs() < 1e-15);
        assert!((s.contrast - 1.0).abs() < 1e-15);
        assert!((s.entropy - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((s.correlation + 1.0).abs() < 1e-12);
        assert!((s.sum_average - 3.0).abs() < 1e-15);
        assert!((s.max_corr_coeff - 1.0).abs() < 1e-12);
        assert!(!s.flags.correlation);
    }

    #[test]
    fn sum_entropy_bounded_by_entropy_relation() {
        // f8 <= f9 + log 2 for any distribution folded from pairs
        let mut p = DMatrix::zeros(4, 4);
        p[(0, 1)] = 0.25;
        p[(1, 0)] = 0.25;
        p[(2, 3)] = 0.2;
        p[(3, 2)] = 0.2;
        p[(1, 1)] = 0.1;
        let s = compute_stats(&glcm_from(p));
        assert!(s.sum_entropy <= s.entropy + 1e-12);
    }

    #[test]
    fn isotropic_image_has_zero_ranges() {
        let img = GrayImage::new(4, 4, 4, vec![2; 16], None).unwrap();
        let f = feature_vector_28(&img, "iso").unwrap();
        assert_eq!(f.len(), 28);
        for r in &f.values[14..] {
            assert_eq!(*r, 0.0);
        }
    }

    #[test]
    fn vertical_stripes_have_directional_contrast_range() {
        // columns alternate 0,3 -> horizontal pairs differ, vertical pairs equal
        let px: Vec<u16> = (0..16).map(|i| if i % 2 == 0 { 0 } else { 3 }).collect();
        let img = GrayImage::new(4, 4, 4, px, None).unwrap();
        let f = feature_vector_28(&img, "stripes").unwrap();
        let contrast_range = f.values[14 + 1];
        assert!(contrast_range > 0.0, "expected directional contrast spread");
    }

    #[test]
    fn rotating_ninety_degrees_preserves_mean_block() {
        let px: Vec<u16> = (0..64).map(|i| ((i * 7 + i / 8 * 3) % 16) as u16).collect();
        let img = GrayImage::new(8, 8, 16, px.clone(), None).unwrap();
        // rotate 90 degrees clockwise: (r, c) -> (c, h - 1 - r)
        let mut rot = vec![0u16; 64];
        for r in 0..8 {
            for c in 0..8 {
                rot[c * 8 + (8 - 1 - r)] = px[r * 8 + c];
            }
        }
        let rimg = GrayImage::new(8, 8, 16, rot, None).unwrap();
        let f = feature_vector_28(&img, "a").unwrap();
        let g = feature_vector_28(&rimg, "b").unwrap();
        for (a, b) in f.values[..14].iter().zip(&g.values[..14]) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn masked_image_features_stay_finite() {
        let px: Vec<u16> = (0..64).map(|i| (i % 16) as u16).collect();
        let mut mask = vec![true; 64];
        for i in 0..20 {
            mask[(i * 3) % 64] = false;
        }
        let img = GrayImage::new(8, 8, 16, px, Some(mask)).unwrap();
        let f = feature_vector_28(&img, "masked").unwrap();
        assert!(f.values.iter().all(|v| v.is_finite()));
    }
}
