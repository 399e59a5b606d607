//! Mask-aware gray-level co-occurrence matrices.
//!
//! A pixel pair contributes only when both endpoints are unmasked; masked
//! pixels are neglected entirely in the formation of the matrix. Counting is
//! symmetric: each adjacent pair is recorded in both orders, so `p` is a
//! symmetric probability matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::imgio::GrayImage;

/// The four canonical adjacency directions at unit angle steps of 45 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// 0 degrees: (0, +1)
    Horizontal,
    /// 90 degrees: (+1, 0)
    Vertical,
    /// 45 degrees: (-1, +1)
    DiagRight,
    /// 135 degrees: (-1, -1)
    DiagLeft,
}

impl Direction {
    pub const ALL: [Direction; 4] =
        [Direction::Horizontal, Direction::Vertical, Direction::DiagRight, Direction::DiagLeft];

    /// Row/column displacement at the given pixel distance.
    pub fn offset(self, distance: usize) -> (isize, isize) {
        let d = distance as isize;
        match self {
            Direction::Horizontal => (0, d),
            Direction::Vertical => (d, 0),
            Direction::DiagRight => (-d, d),
            Direction::DiagLeft => (-d, -d),
        }
    }
}

/// Normalized co-occurrence probabilities for one direction/offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    n_levels: usize,
    p: DMatrix<f64>,
    pair_count: u64,
}

impl Glcm {
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// Probability of gray level `i` co-occurring with level `j`.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Total counted ordered pairs (both orders of every adjacency).
    pub fn pair_count(&self) -> u64 {
        self.pair_count
    }

    /// Build directly from a probability matrix; test and tooling hook.
    pub fn from_probabilities(p: DMatrix<f64>, pair_count: u64) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                actual: format!("{}x{}", p.nrows(), p.ncols()),
            });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidRecord("probabilities must be >= 0 and sum to 1".into()));
        }
        Ok(Glcm { n_levels: p.nrows(), p, pair_count })
    }
}

/// Count co-occurrences of `img` along `dir` at `distance`, skipping any pair
/// with a masked endpoint, and normalize by the total pair count.
pub fn compute_glcm(img: &GrayImage, dir: Direction, distance: usize) -> Result<Glcm> {
    if distance == 0 {
        return Err(Error::InvalidConfig("distance must be >= 1".into()));
    }
    let n = img.levels();
    let (dr, dc) = dir.offset(distance);
    let mut counts = DMatrix::<u64>::zeros(n, n);
    let mut pair_count: u64 = 0;
    for r in 0..img.height() {
        for c in 0..img.width() {
            let (r2, c2) = (r as isize + dr, c as isize + dc);
            if r2 < 0 || c2 < 0 || r2 >= img.height() as isize || c2 >= img.width() as isize {
                continue;
            }
            let (r2, c2) = (r2 as usize, c2 as usize);
            if !img.is_valid(r, c) || !img.is_valid(r2, c2) {
                continue;
            }
            let a = usize::from(img.get(r, c));
            let b = usize::from(img.get(r2, c2));
            counts[(a, b)] += 1;
            counts[(b, a)] += 1;
            pair_count += 2;
        }
    }
    if pair_count == 0 {
        return Err(Error::EmptyCooccurrence);
    }
    let p = counts.map(|c| c as f64 / pair_count as f64);
    Ok(Glcm { n_levels: n, p, pair_count })
}

/// Marginal distributions of a co-occurrence matrix.
///
/// `p_sum[t]` is the probability that two paired levels sum to `t + 2` under
/// the 1-based indexing the texture statistics use; `p_diff[k]` is the
/// probability of an absolute level difference of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
    pub p_sum: Vec<f64>,
    pub p_diff: Vec<f64>,
}

impl Marginals {
    /// Probability mass at 1-based pair sum `k` (valid for `k` in `2..=2*N_g`).
    pub fn sum_at(&self, k: usize) -> f64 {
        self.p_sum[k - 2]
    }
}

pub fn marginals(g: &Glcm) -> Marginals {
    let n = g.n_levels;
    let mut p_x = vec![0.0; n];
    let mut p_y = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = g.p(i, j);
            p_x[i] += v;
            p_y[j] += v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }
    Marginals { p_x, p_y, p_sum, p_diff }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgio::GrayImage;

    fn img(w: usize, h: usize, levels: usize, px: &[u16]) -> GrayImage {
        GrayImage::new(w, h, levels, px.to_vec(), None).unwrap()
    }

    #[test]
    fn constant_image_single_mass() {
        let g = compute_glcm(&img(2, 2, 2, &[0, 0, 0, 0]), Direction::Horizontal, 1).unwrap();
        assert_eq!(g.pair_count(), 4);
        assert_eq!(g.p(0, 0), 1.0);
    }

    #[test]
    fn two_column_image_split_mass() {
        let g = compute_glcm(&img(2, 2, 2, &[0, 1, 0, 1]), Direction::Horizontal, 1).unwrap();
        assert_eq!(g.pair_count(), 4);
        assert_eq!(g.p(0, 1), 0.5);
        assert_eq!(g.p(1, 0), 0.5);
        assert_eq!(g.p(0, 0), 0.0);
    }

    #[test]
    fn masked_center_empties_cooccurrence() {
        let im = GrayImage::new(3, 1, 4, vec![0, 1, 2], Some(vec![true, false, true])).unwrap();
        assert!(matches!(
            compute_glcm(&im, Direction::Horizontal, 1),
            Err(Error::EmptyCooccurrence)
        ));
    }

    #[test]
    fn diagonal_offsets_match_definition() {
        assert_eq!(Direction::Horizontal.offset(1), (0, 1));
        assert_eq!(Direction::Vertical.offset(1), (1, 0));
        assert_eq!(Direction::DiagRight.offset(1), (-1, 1));
        assert_eq!(Direction::DiagLeft.offset(1), (-1, -1));
        assert_eq!(Direction::DiagLeft.offset(3), (-3, -3));
    }

    #[test]
    fn symmetric_and_unit_sum_all_directions() {
        let im = img(4, 4, 4, &[0, 1, 2, 3, 3, 2, 1, 0, 0, 0, 1, 1, 2, 2, 3, 3]);
        for dir in Direction::ALL {
            let g = compute_glcm(&im, dir, 1).unwrap();
            let total: f64 = g.matrix().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(g.p(i, j), g.p(j, i));
                }
            }
        }
    }

    #[test]
    fn marginals_symmetric_glcm_px_equals_py() {
        let im = img(4, 4, 4, &[0, 1, 2, 3, 3, 2, 1, 0, 0, 0, 1, 1, 2, 2, 3, 3]);
        let g = compute_glcm(&im, Direction::Vertical, 1).unwrap();
        let m = marginals(&g);
        for (a, b) in m.p_x.iter().zip(&m.p_y) {
            assert!((a - b).abs() < 1e-15);
        }
        let s: f64 = m.p_sum.iter().sum();
        let d: f64 = m.p_diff.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_checkerboard_mass_positions() {
        let g = compute_glcm(&img(2, 2, 2, &[0, 1, 0, 1]), Direction::Horizontal, 1).unwrap();
        let m = marginals(&g);
        // all mass at 0-based i+j = 1, i.e. 1-based pair sum 3
        assert_eq!(m.sum_at(3), 1.0);
        assert_eq!(m.sum_at(2), 0.0);
        assert_eq!(m.p_diff[1], 1.0);
    }

    #[test]
    fn masking_never_increases_pair_count() {
        let base = img(4, 4, 4, &[0, 1, 2, 3, 3, 2, 1, 0, 0, 0, 1, 1, 2, 2, 3, 3]);
        for dir in Direction::ALL {
            let full = compute_glcm(&base, dir, 1).unwrap().pair_count();
            for kill in 0..16usize {
                let mut mask = vec![true; 16];
                mask[kill] = false;
                let masked = GrayImage::new(4, 4, 4, base.pixels().to_vec(), Some(mask)).unwrap();
                let count = match compute_glcm(&masked, dir, 1) {
                    Ok(g) => g.pair_count(),
                    Err(Error::EmptyCooccurrence) => 0,
                    Err(e) => panic!("unexpected error {e}"),
                };
                assert!(count <= full);
            }
        }
    }

    #[test]
    fn distance_two_skips_neighbors() {
        let g = compute_glcm(&img(3, 1, 3, &[0, 1, 2]), Direction::Horizontal, 2).unwrap();
        assert_eq!(g.pair_count(), 2);
        assert_eq!(g.p(0, 2), 0.5);
        assert_eq!(g.p(2, 0), 0.5);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use crate::imgio::GrayImage;
    use proptest::prelude::*;

    fn arb_masked_image() -> impl Strategy<Value = GrayImage> {
        (3usize..=8, 3usize..=8).prop_flat_map(|(w, h)| {
            (
                Just(w),
                Just(h),
                proptest::collection::vec(0u16..8, w * h),
                proptest::collection::vec(prop::bool::weighted(0.85), w * h),
            )
                .prop_map(|(w, h, px, mask)| {
                    GrayImage::new(w, h, 8, px, Some(mask)).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn symmetric_unit_sum_on_random_masked_images(img in arb_masked_image()) {
            for dir in Direction::ALL {
                if let Ok(g) = compute_glcm(&img, dir, 1) {
                    let total: f64 = g.matrix().iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-12);
                    for i in 0..g.n_levels() {
                        for j in 0..i {
                            prop_assert_eq!(g.p(i, j), g.p(j, i));
                        }
                    }
                }
            }
        }
    }
}
