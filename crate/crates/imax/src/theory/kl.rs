//! Per-state KL divergence (in bits) and bounded-perturbation policy pairs.
//!
//! The perturbation bounds carry a `sqrt(2 ln2 eps)` factor, which is the
//! Pinsker-style step `||p - q||_inf <= sqrt(2 ln2 KL_bits)`; KL is computed
//! in bits throughout so that the constant is valid.

use crate::imitation::AllyPolicy;
use crate::rng::Rng;
use rand_distr::{Distribution, StandardNormal};

/// KL(p || q) in bits; +inf when q has a zero where p has mass.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut nats = 0.0;
    for (&a, &b) in p.iter().zip(q.iter()) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            nats += a * (a / b).ln();
        }
    }
    nats / std::f64::consts::LN_2
}

/// Max over states of the per-state KL between two ally policies, in bits.
pub fn kl_per_state_max(pol: &AllyPolicy, other: &AllyPolicy) -> f64 {
    assert_eq!(pol.probs.dims(), other.probs.dims(), "policy tables must share shape");
    let (n, _) = pol.probs.dims();
    (0..n).map(|s| kl_bits(pol.probs.row(s), other.probs.row(s))).fold(0.0, f64::max)
}

fn tilt(base: &AllyPolicy, direction: &[f64], t: f64) -> AllyPolicy {
    let (n, a) = base.probs.dims();
    let mut out = AllyPolicy::uniform(n, a);
    for s in 0..n {
        let mut sum = 0.0;
        for ai in 0..a {
            let w = base.probs.at(s, ai) * (t * direction[s * a + ai]).exp();
            *out.probs.at_mut(s, ai) = w;
            sum += w;
        }
        for ai in 0..a {
            *out.probs.at_mut(s, ai) /= sum;
        }
    }
    out
}

/// Builds a perturbed copy of `base` whose max per-state KL (in bits,
/// perturbed relative to base) lands in `[0.9 eps, eps]`, by bisecting the
/// magnitude of an exponential tilt along a random direction.
pub fn tilted_pair(base: &AllyPolicy, eps_bits: f64, rng: &mut Rng) -> (AllyPolicy, f64) {
    assert!(eps_bits > 0.0, "eps must be positive");
    let (n, a) = base.probs.dims();
    let direction: Vec<f64> =
        (0..n * a).map(|_| StandardNormal.sample(rng)).collect();
    let max_kl = |t: f64| kl_per_state_max(&tilt(base, &direction, t), base);

    let mut hi = 1.0;
    while max_kl(hi) < eps_bits && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let kl = max_kl(mid);
        if kl > eps_bits {
            hi = mid;
        } else {
            lo = mid;
            if kl >= 0.9 * eps_bits {
                break;
            }
        }
    }
    let tilted = tilt(base, &direction, lo);
    let kl = kl_per_state_max(&tilted, base);
    (tilted, kl)
}
