//! Generalized advantage estimation.

use super::MarlError;

/// Standard reverse-recursion GAE over one rollout segment.
///
/// `bootstrap_value` is the critic's value of the state after the final
/// step; `dones` gates both the TD error and the recursion. Returns
/// `(advantages, return targets)` with `R = A + V`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), MarlError> {
    if rewards.len() != values.len() || rewards.len() != dones.len() {
        return Err(MarlError::LengthMismatch {
            rewards: rewards.len(),
            values: values.len(),
            dones: dones.len(),
        });
    }
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let cont = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap_value };
        let delta = rewards[t] + gamma * next_value * cont - values[t];
        acc = delta + gamma * lambda * cont * acc;
        advantages[t] = acc;
    }
    let returns = advantages.iter().zip(values.iter()).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// In-place standardization to zero mean, unit variance.
pub fn normalize_advantages(advantages: &mut [f64]) {
    let n = advantages.len() as f64;
    if n < 2.0 {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for a in advantages.iter_mut() {
        *a = (*a - mean) / std;
    }
}
