//! Masked categorical distributions over discrete actions.

use crate::rng::Rng;
use rand::Rng as _;

/// Stable softmax restricted to unmasked actions; masked entries get exact
/// probability zero.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    debug_assert_eq!(logits.len(), mask.len());
    let m = logits
        .iter()
        .zip(mask.iter())
        .filter(|(_, &ok)| ok)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for (i, (&l, &ok)) in logits.iter().zip(mask.iter()).enumerate() {
        if ok {
            let e = (l - m).exp();
            probs[i] = e;
            sum += e;
        }
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    probs
}

pub fn sample(probs: &[f64], rng: &mut Rng) -> usize {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_valid = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_valid = i;
            acc += p;
            if draw < acc {
                return i;
            }
        }
    }
    last_valid
}

pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Entropy over the unmasked support.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// `KL(p || q)` in nats over the shared support.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q.iter())
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b.max(1e-300)).ln())
        .sum()
}
