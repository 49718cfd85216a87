//! Binary linear C-SVM trained by sequential minimal optimization.
//!
//! Solves the dual of `min ½‖w‖² + C Σ max(0, 1 - y (w·x + b))` with an
//! unregularized bias, using second-order working-set selection over a
//! precomputed Gram matrix (datasets here are a few hundred windows).

use super::{FeatureError, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_C: f64 = 1.0;
const TAU: f64 = 1e-12;
const STOP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmBinary {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl LinearSvmBinary {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// `½‖w‖² + C Σ hinge` on the given data.
    pub fn primal_objective(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let reg = 0.5 * self.weights.iter().map(|w| w * w).sum::<f64>();
        let loss: f64 = xs.iter().zip(ys).map(|(x, y)| (1.0 - y * self.decision(x)).max(0.0)).sum();
        reg + self.c * loss
    }
}

/// Trains on `xs` with labels `ys ∈ {-1, +1}`. Features are used as given.
pub fn train_linear_svm(xs: &[Vec<f64>], ys: &[f64], c: f64) -> Result<LinearSvmBinary> {
    if xs.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    if xs.len() != ys.len() {
        return Err(FeatureError::LengthMismatch(xs.len(), ys.len()));
    }
    let d = xs[0].len();
    for (i, x) in xs.iter().enumerate() {
        if x.len() != d {
            return Err(FeatureError::FeatureCount { expected: d, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
    }
    if !ys.iter().any(|&y| y > 0.0) || !ys.iter().any(|&y| y < 0.0) {
        return Err(FeatureError::SingleClass);
    }
    let y: Vec<f64> = ys.iter().map(|&v| if v > 0.0 { 1.0 } else { -1.0 }).collect();
    let alpha = Smo::new(xs, &y, c).solve();

    let mut weights = vec![0.0; d];
    for ((a, yi), x) in alpha.alpha.iter().zip(&y).zip(xs) {
        if *a != 0.0 {
            for (w, v) in weights.iter_mut().zip(x) {
                *w += a * yi * v;
            }
        }
    }
    Ok(LinearSvmBinary { weights, bias: -alpha.rho, c })
}

struct SmoSolution {
    alpha: Vec<f64>,
    rho: f64,
}

struct Smo<'a> {
    y: &'a [f64],
    c: f64,
    /// Gram matrix `x_i · x_j`, row-major.
    kernel: Vec<f64>,
    n: usize,
}

impl<'a> Smo<'a> {
    fn new(xs: &[Vec<f64>], y: &'a [f64], c: f64) -> Self {
        let n = xs.len();
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k: f64 = xs[i].iter().zip(&xs[j]).map(|(a, b)| a * b).sum();
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }
        Self { y, c, kernel, n }
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n + j]
    }

    fn solve(&self) -> SmoSolution {
        let (n, c, y) = (self.n, self.c, self.y);
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let upper = |a: f64| a >= c;
        let lower = |a: f64| a <= 0.0;
        let max_iter = (100 * n).max(10_000_000);

        for _ in 0..max_iter {
            // i: maximal violator in I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = None;
            for t in 0..n {
                let v = -y[t] * grad[t];
                let eligible = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
                if eligible && v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
            let Some(i) = i_sel else { break };

            // j: second-order selection in I_low
            let mut gmax2 = f64::NEG_INFINITY;
            let mut obj_min = f64::INFINITY;
            let mut j_sel = None;
            let kii = self.k(i, i);
            for t in 0..n {
                let eligible = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !eligible {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let grad_diff = gmax + v;
                if grad_diff > 0.0 {
                    let quad = (kii + self.k(t, t) - 2.0 * self.k(i, t)).max(TAU);
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
            let Some(j) = j_sel else { break };
            if gmax + gmax2 < STOP_EPS {
                break;
            }

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let quad = (kii + self.k(j, j) - 2.0 * self.k(i, j)).max(TAU);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }

            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * self.k(t, i) * di + y[j] * self.k(t, j) * dj);
            }
        }

        SmoSolution { rho: self.rho(&alpha, &grad), alpha }
    }

    fn rho(&self, alpha: &[f64], grad: &[f64]) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..self.n {
            let yg = self.y[t] * grad[t];
            let pos = self.y[t] > 0.0;
            if alpha[t] >= self.c {
                if pos {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if alpha[t] <= 0.0 {
                if pos {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        if free > 0 {
            sum_free / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}
