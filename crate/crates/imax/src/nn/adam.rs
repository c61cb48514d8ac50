//! Adaptive-moment optimizer and global-norm gradient clipping.

use super::NnError;
use serde::{Deserialize, Serialize};

/// Adam state for one parameter vector.
///
/// Decoupled weight decay; bias-corrected moment estimates. Defaults follow
/// the trainer's hyperparameter table (epsilon 1e-5, weight decay 0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl OptimState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        OptimState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-5,
            weight_decay: 0.0,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One optimizer step. Rejects non-finite gradients without touching
    /// parameters or moments.
    pub fn adam_step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        if grads.len() != self.m.len() || params.len() != self.m.len() {
            return Err(NnError::GradientShape { expected: self.m.len(), got: grads.len() });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient { index });
        }
        self.step += 1;
        let b1t = 1.0 - self.beta1.powi(self.step as i32);
        let b2t = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * params[i]);
            if !params[i].is_finite() {
                return Err(NnError::NonFiniteParameter { index: i });
            }
        }
        Ok(())
    }
}

/// Scales `grads` in place so the global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn zero_grad_leaves_params_unchanged() {
        let mut opt = OptimState::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 0.5];
        opt.adam_step(&mut p, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // With a constant gradient the bias-corrected first step is
        // -lr * g/(|g| + eps) which is close to -lr * sign(g).
        let mut opt = OptimState::new(2, 0.01);
        let mut p = vec![0.0, 0.0];
        opt.adam_step(&mut p, &[3.0, -0.2]).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-4, "{}", p[0]);
        assert!((p[1] - 0.01).abs() < 1e-3, "{}", p[1]);
    }

    #[test]
    fn nan_gradient_rejected() {
        let mut opt = OptimState::new(2, 0.01);
        let mut p = vec![1.0, 2.0];
        let err = opt.adam_step(&mut p, &[0.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, NnError::NonFiniteGradient { index: 1 }));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(opt.step_count(), 0);
    }

    /// Independent scalar Adam simulation for f(x) = x^2.
    fn scalar_adam_oracle(steps: usize, lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9, 0.999, 1e-5);
        let (mut m, mut v, mut x) = (0.0, 0.0, 1.0f64);
        for t in 1..=steps {
            let g = 2.0 * x;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1_pow(b1, t));
            let vh = v / (1.0 - b1_pow(b2, t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        x
    }

    fn b1_pow(b: f64, t: usize) -> f64 {
        b.powi(t as i32)
    }

    #[test]
    fn quadratic_converges_and_matches_oracle() {
        let mut opt = OptimState::new(1, 0.1);
        let mut p = vec![1.0];
        for _ in 0..100 {
            let g = 2.0 * p[0];
            opt.adam_step(&mut p, &[g]).unwrap();
        }
        assert!(p[0].abs() < 0.05, "x after 100 steps: {}", p[0]);
        let oracle = scalar_adam_oracle(100, 0.1);
        assert!((p[0] - oracle).abs() < 1e-12, "{} vs {}", p[0], oracle);
    }

    #[test]
    fn clip_leaves_small_gradients_alone() {
        let mut g = vec![3.0, 4.0];
        let norm = clip_global_norm(&mut g, 10.0);
        assert_eq!(norm, 5.0);
        assert_eq!(g, vec![3.0, 4.0]);
    }

    #[test]
    fn clip_halves_oversized_gradients() {
        let mut g = vec![12.0, 16.0];
        let norm = clip_global_norm(&mut g, 10.0);
        assert_eq!(norm, 20.0);
        assert_eq!(g, vec![6.0, 8.0]);
    }

    #[test]
    fn post_clip_norm_bounded() {
        let mut rng = rng::stream(5, "clip", 0);
        for _ in 0..50 {
            let mut g: Vec<f64> = (0..37).map(|_| rng.gen_range(-8.0..8.0)).collect();
            clip_global_norm(&mut g, 10.0);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 10.0 + 1e-9, "post-clip norm {norm}");
        }
    }
}
