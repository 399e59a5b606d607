//! Sequential minimal optimization over a precomputed Gram matrix.
//!
//! Deterministic variant of Platt's algorithm: the second multiplier is
//! chosen by the max |E1 - E2| heuristic with index order as the tie break,
//! and the fallback scans run in index order instead of from a random start,
//! so identical inputs always produce identical models.

use nalgebra::DMatrix;

/// Minimum relative progress for a pair step to count.
const STEP_EPS: f64 = 1e-12;

pub struct SmoResult {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub passes: usize,
}

pub struct Smo<'a> {
    k: &'a DMatrix<f64>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    b: f64,
}

impl<'a> Smo<'a> {
    pub fn new(k: &'a DMatrix<f64>, y: &'a [f64], c: f64, tol: f64) -> Self {
        Smo { k, y, c, tol, alpha: vec![0.0; y.len()], b: 0.0 }
    }

    pub fn solve(mut self, max_passes: usize) -> SmoResult {
        let n = self.y.len();
        let mut examine_all = true;
        let mut passes = 0;
        let mut converged = false;
        while passes < max_passes {
            passes += 1;
            let mut changed = 0;
            for i in 0..n {
                if examine_all || self.is_free(i) {
                    changed += usize::from(self.examine(i));
                }
            }
            if examine_all {
                if changed == 0 {
                    converged = true;
                    break;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
        SmoResult { alpha: self.alpha, bias: self.b, converged, passes }
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn decision(&self, i: usize) -> f64 {
        let mut f = self.b;
        for j in 0..self.y.len() {
            if self.alpha[j] > 0.0 {
                f += self.alpha[j] * self.y[j] * self.k[(j, i)];
            }
        }
        f
    }

    fn error(&self, i: usize) -> f64 {
        self.decision(i) - self.y[i]
    }

    fn examine(&mut self, i2: usize) -> bool {
        let e2 = self.error(i2);
        let r2 = e2 * self.y[i2];
        let violates = (r2 < -self.tol && self.alpha[i2] < self.c)
            || (r2 > self.tol && self.alpha[i2] > 0.0);
        if !violates {
            return false;
        }
        // best |E1 - E2| over free multipliers first
        let mut best: Option<(usize, f64)> = None;
        for i1 in 0..self.y.len() {
            if i1 != i2 && self.is_free(i1) {
                let gap = (self.error(i1) - e2).abs();
                if best.is_none_or(|(_, g)| gap > g) {
                    best = Some((i1, gap));
                }
            }
        }
        if let Some((i1, _)) = best {
            if self.step(i1, i2) {
                return true;
            }
        }
        for i1 in 0..self.y.len() {
            if i1 != i2 && self.is_free(i1) && self.step(i1, i2) {
                return true;
            }
        }
        for i1 in 0..self.y.len() {
            if i1 != i2 && self.step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn step(&mut self, i1: usize, i2: usize) -> bool {
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a1_old + a2_old - self.c).max(0.0), (a1_old + a2_old).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let e1 = self.error(i1);
        let e2 = self.error(i2);
        let k11 = self.k[(i1, i1)];
        let k12 = self.k[(i1, i2)];
        let k22 = self.k[(i2, i2)];
        let eta = k11 + k22 - 2.0 * k12;

        let a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Indefinite kernel: evaluate the objective at both clip bounds.
            let f1 = y1 * (e1 + self.b) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 + self.b) - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let obj_lo = l1 * f1 + lo * f2
                + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22
                + s * lo * l1 * k12;
            let obj_hi = h1 * f1 + hi * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22
                + s * hi * h1 * k12;
            if obj_lo < obj_hi - STEP_EPS {
                lo
            } else if obj_hi < obj_lo - STEP_EPS {
                hi
            } else {
                a2_old
            }
        };
        if (a2 - a2_old).abs() < STEP_EPS * (a2 + a2_old + STEP_EPS) {
            return false;
        }
        let a1 = (a1_old + s * (a2_old - a2)).clamp(0.0, self.c);

        let b1 = self.b - e1 - y1 * (a1 - a1_old) * k11 - y2 * (a2 - a2_old) * k12;
        let b2 = self.b - e2 - y1 * (a1 - a1_old) * k12 - y2 * (a2 - a2_old) * k22;
        self.b = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        true
    }
}
