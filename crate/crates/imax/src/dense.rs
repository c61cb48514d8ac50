//! Small dense-table containers shared by the tabular and verification paths.

use serde::{Deserialize, Serialize};

/// Row-major `(s, a, s')` table of f64, used for transition kernels,
/// Q-tables, imitation policies and occupancy weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    n_states: usize,
    n_actions: usize,
    n_next: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n_states: usize, n_actions: usize, n_next: usize) -> Self {
        Tensor3 { n_states, n_actions, n_next, data: vec![0.0; n_states * n_actions * n_next] }
    }

    pub fn filled(n_states: usize, n_actions: usize, n_next: usize, value: f64) -> Self {
        Tensor3 { n_states, n_actions, n_next, data: vec![value; n_states * n_actions * n_next] }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_states, self.n_actions, self.n_next)
    }

    #[inline]
    pub fn at(&self, s: usize, a: usize, sp: usize) -> f64 {
        self.data[(s * self.n_actions + a) * self.n_next + sp]
    }

    #[inline]
    pub fn at_mut(&mut self, s: usize, a: usize, sp: usize) -> &mut f64 {
        &mut self.data[(s * self.n_actions + a) * self.n_next + sp]
    }

    /// The `(s, a)` row over next states.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.n_actions + a) * self.n_next;
        &self.data[base..base + self.n_next]
    }

    #[inline]
    pub fn row_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let base = (s * self.n_actions + a) * self.n_next;
        &mut self.data[base..base + self.n_next]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Row-major `(s, a)` matrix; used for per-state ally action distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Numerically stable log-sum-exp; max-subtraction keeps `exp` in range.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = values.iter().map(|&v| (v - m).exp()).sum();
    m + sum.ln()
}

/// Stable softmax over `values`.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|&v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
