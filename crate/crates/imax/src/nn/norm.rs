//! Running normalization of return targets.

use serde::{Deserialize, Serialize};

const NORM_EPS: f64 = 1e-8;

/// Running mean/variance over all values ever pushed (Welford / Chan merge).
///
/// `normalize` and `denormalize` form an inverse pair with the statistics
/// frozen between calls.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunningNorm {
    mean: f64,
    m2: f64,
    count: f64,
}

impl RunningNorm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance; 0 before any data.
    pub fn variance(&self) -> f64 {
        if self.count > 0.0 {
            (self.m2 / self.count).max(0.0)
        } else {
            0.0
        }
    }

    /// Folds a batch into the running statistics.
    pub fn update(&mut self, batch: &[f64]) {
        if batch.is_empty() {
            return;
        }
        let n = batch.len() as f64;
        let mean = batch.iter().sum::<f64>() / n;
        let m2 = batch.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>();
        if self.count == 0.0 {
            self.mean = mean;
            self.m2 = m2;
            self.count = n;
        } else {
            let delta = mean - self.mean;
            let total = self.count + n;
            self.mean += delta * n / total;
            self.m2 += m2 + delta * delta * self.count * n / total;
            self.count = total;
        }
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.mean) / (self.variance() + NORM_EPS).sqrt()
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        y * (self.variance() + NORM_EPS).sqrt() + self.mean
    }

    /// Updates with the batch, then returns it normalized.
    pub fn running_normalize(&mut self, batch: &[f64]) -> Vec<f64> {
        self.update(batch);
        batch.iter().map(|&x| self.normalize(x)).collect()
    }
}
