//! Independent oracles used by the integration and acceptance suites.
//!
//! Everything here is written directly from the defining formulas with its
//! own code path — no helper is shared with the implementations under test.

#![allow(dead_code)]
// index loops deliberately transliterate the defining summations
#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strokepipe_core::glcm::{Direction, Glcm};
use strokepipe_core::imgio::GrayImage;

/// All 14 texture statistics computed by direct summation over the full
/// matrix, with 1-based gray-level indices wherever an index value enters a
/// formula. Returns values in the canonical order.
pub fn naive_haralick(g: &Glcm) -> [f64; 14] {
    let n = g.n_levels();
    let p = |i: usize, j: usize| g.p(i, j);

    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            px[i] += p(i, j);
            py[j] += p(i, j);
        }
    }
    // p_sum indexed by the 1-based pair sum k = 2..=2n
    let mut p_sum = vec![0.0; 2 * n + 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            p_sum[(i + 1) + (j + 1)] += p(i, j);
            p_diff[i.abs_diff(j)] += p(i, j);
        }
    }

    // f1 angular second moment
    let mut f1 = 0.0;
    for i in 0..n {
        for j in 0..n {
            f1 += p(i, j) * p(i, j);
        }
    }
    // f2 contrast = sum over d of d^2 * P(|i-j| = d)
    let mut f2 = 0.0;
    for (d, &pd) in p_diff.iter().enumerate() {
        f2 += (d * d) as f64 * pd;
    }
    // f3 correlation with 1-based indices
    let mu_x: f64 = px.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    let mu_y: f64 = py.iter().enumerate().map(|(j, v)| (j + 1) as f64 * v).sum();
    let sd_x: f64 = px
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64 - mu_x).powi(2) * v)
        .sum::<f64>()
        .sqrt();
    let sd_y: f64 = py
        .iter()
        .enumerate()
        .map(|(j, v)| ((j + 1) as f64 - mu_y).powi(2) * v)
        .sum::<f64>()
        .sqrt();
    let f3 = if sd_x > 0.0 && sd_y > 0.0 {
        let mut cross = 0.0;
        for i in 0..n {
            for j in 0..n {
                cross += ((i + 1) * (j + 1)) as f64 * p(i, j);
            }
        }
        (cross - mu_x * mu_y) / (sd_x * sd_y)
    } else {
        0.0
    };
    // f4 sum of squares variance around mu_x
    let mut f4 = 0.0;
    for i in 0..n {
        for j in 0..n {
            f4 += ((i + 1) as f64 - mu_x).powi(2) * p(i, j);
        }
    }
    // f5 inverse difference moment
    let mut f5 = 0.0;
    for i in 0..n {
        for j in 0..n {
            f5 += p(i, j) / (1.0 + ((i as f64) - (j as f64)).powi(2));
        }
    }
    // f6 sum average, f8 sum entropy, f7 sum variance around f8
    let mut f6 = 0.0;
    let mut f8 = 0.0;
    for k in 2..=2 * n {
        f6 += k as f64 * p_sum[k];
        if p_sum[k] > 0.0 {
            f8 -= p_sum[k] * p_sum[k].ln();
        }
    }
    let mut f7 = 0.0;
    for k in 2..=2 * n {
        f7 += (k as f64 - f8).powi(2) * p_sum[k];
    }
    // f9 entropy
    let mut f9 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if p(i, j) > 0.0 {
                f9 -= p(i, j) * p(i, j).ln();
            }
        }
    }
    // f10 difference variance (second moment, as printed), f11 difference entropy
    let mut f10 = 0.0;
    let mut f11 = 0.0;
    for (d, &pd) in p_diff.iter().enumerate() {
        f10 += (d * d) as f64 * pd;
        if pd > 0.0 {
            f11 -= pd * pd.ln();
        }
    }
    // f12/f13 information measures of correlation
    let hx: f64 = -px.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
    let hy: f64 = -py.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= p(i, j) * q.ln();
                hxy2 -= q * q.ln();
            }
        }
    }
    let denom = hx.max(hy);
    let f12 = if denom > 0.0 { (f9 - hxy1) / denom } else { 0.0 };
    let f13 = (1.0 - (-2.0 * (hxy2 - f9)).exp()).max(0.0).sqrt();

    let f14 = naive_max_corr_coeff(g, &px, &py);

    [f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14]
}

/// sqrt of the second-largest eigenvalue of
/// `Q(i,j) = sum_k p(i,k) p(j,k) / (p_x(i) p_y(k))`, computed by a general
/// (Schur-based) eigenvalue solve on `Q` itself.
fn naive_max_corr_coeff(g: &Glcm, px: &[f64], py: &[f64]) -> f64 {
    let support: Vec<usize> = (0..g.n_levels()).filter(|&i| px[i] > 0.0).collect();
    let cols: Vec<usize> = (0..g.n_levels()).filter(|&j| py[j] > 0.0).collect();
    if support.len() < 2 {
        return 0.0;
    }
    let q = DMatrix::from_fn(support.len(), support.len(), |a, b| {
        let (i, j) = (support[a], support[b]);
        cols.iter()
            .map(|&k| g.p(i, k) * g.p(j, k) / (px[i] * py[k]))
            .sum::<f64>()
    });
    let eigs = q.complex_eigenvalues();
    let mut re: Vec<f64> = eigs
        .iter()
        .map(|c| {
            assert!(c.im.abs() < 1e-9, "Q eigenvalue has imaginary part {}", c.im);
            c.re
        })
        .collect();
    re.sort_by(|a, b| b.partial_cmp(a).unwrap());
    re[1].max(0.0).sqrt()
}

/// Co-occurrence counting by brute force: every ordered pixel pair is
/// examined and counted when its displacement is the direction offset or its
/// reverse and both endpoints are unmasked.
pub fn naive_glcm_counts(
    img: &GrayImage,
    dir: Direction,
    distance: usize,
) -> (DMatrix<u64>, u64) {
    let n = img.levels();
    let (dr, dc) = dir.offset(distance);
    let mut counts = DMatrix::<u64>::zeros(n, n);
    let mut total = 0u64;
    for r1 in 0..img.height() {
        for c1 in 0..img.width() {
            for r2 in 0..img.height() {
                for c2 in 0..img.width() {
                    let delta = (r2 as isize - r1 as isize, c2 as isize - c1 as isize);
                    if delta != (dr, dc) && delta != (-dr, -dc) {
                        continue;
                    }
                    if !img.is_valid(r1, c1) || !img.is_valid(r2, c2) {
                        continue;
                    }
                    counts[(usize::from(img.get(r1, c1)), usize::from(img.get(r2, c2)))] += 1;
                    total += 1;
                }
            }
        }
    }
    (counts, total)
}

/// Dual objective `W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], k: &DMatrix<f64>) -> f64 {
    let mut w: f64 = alpha.iter().sum();
    for i in 0..alpha.len() {
        for j in 0..alpha.len() {
            w -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    w
}

/// Exhaustive maximization of the 2-point dual on a grid over the equality
/// constraint (y1 != y2 forces a1 = a2).
pub fn grid_dual_2pt(k: &DMatrix<f64>, y: &[f64], c: f64, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for s in 0..=steps {
        let a = c * s as f64 / steps as f64;
        best = best.max(dual_objective(&[a, a], y, k));
    }
    best
}

/// Exhaustive maximization of the 4-point dual: grid the first three
/// multipliers, solve the fourth from the equality constraint, then refine
/// around the best coarse point.
pub fn grid_dual_4pt(k: &DMatrix<f64>, y: &[f64], c: f64, steps: usize) -> f64 {
    let solve_a4 = |a: &[f64; 3]| -> f64 {
        -(a[0] * y[0] + a[1] * y[1] + a[2] * y[2]) * y[3]
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_a = [0.0f64; 3];
    let scan = |lo: [f64; 3], hi: [f64; 3], steps: usize, best: &mut f64, best_a: &mut [f64; 3]| {
        for s0 in 0..=steps {
            let a0 = lo[0] + (hi[0] - lo[0]) * s0 as f64 / steps as f64;
            for s1 in 0..=steps {
                let a1 = lo[1] + (hi[1] - lo[1]) * s1 as f64 / steps as f64;
                for s2 in 0..=steps {
                    let a2 = lo[2] + (hi[2] - lo[2]) * s2 as f64 / steps as f64;
                    let a3 = solve_a4(&[a0, a1, a2]);
                    if !(0.0..=c).contains(&a3) {
                        continue;
                    }
                    let w = dual_objective(&[a0, a1, a2, a3], y, k);
                    if w > *best {
                        *best = w;
                        *best_a = [a0, a1, a2];
                    }
                }
            }
        }
    };
    scan([0.0; 3], [c; 3], steps, &mut best, &mut best_a);
    // refine around the coarse optimum
    let h = c / steps as f64;
    let lo = [
        (best_a[0] - h).max(0.0),
        (best_a[1] - h).max(0.0),
        (best_a[2] - h).max(0.0),
    ];
    let hi = [
        (best_a[0] + h).min(c),
        (best_a[1] + h).min(c),
        (best_a[2] + h).min(c),
    ];
    scan(lo, hi, steps, &mut best, &mut best_a);
    best
}

/// Seeded random image; `mask_prob` masks each pixel independently.
pub fn random_image(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    levels: usize,
    mask_prob: Option<f64>,
) -> GrayImage {
    let pixels: Vec<u16> = (0..w * h).map(|_| rng.gen_range(0..levels) as u16).collect();
    let mask = mask_prob.map(|p| (0..w * h).map(|_| !rng.gen_bool(p)).collect());
    GrayImage::new(w, h, levels, pixels, mask).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
