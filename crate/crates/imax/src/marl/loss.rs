//! Clipped PPO objectives with analytic gradients.

use super::policy::{entropy, masked_softmax};
use super::MarlError;
use crate::nn::ParamNet;

/// Per-sample references for the actor update. Advantages are expected to be
/// normalized already.
pub struct ActorBatch<'a> {
    pub inputs: &'a [Vec<f64>],
    pub masks: &'a [Vec<bool>],
    pub actions: &'a [usize],
    pub logp_old: &'a [f64],
    pub advantages: &'a [f64],
}

#[derive(Debug, Clone, Copy)]
pub struct ActorLossStats {
    /// Minimized loss: negative clipped surrogate minus the entropy bonus.
    pub loss: f64,
    pub surrogate: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Pessimistic clipped surrogate `min(r A, clip(r) A)` plus an entropy
/// bonus, returned as a loss to minimize. Gradients accumulate into `grads`.
pub fn ppo_actor_loss(
    net: &ParamNet,
    batch: &ActorBatch<'_>,
    clip_ratio: f64,
    entropy_coef: f64,
    grads: &mut [f64],
) -> Result<ActorLossStats, MarlError> {
    let n = batch.inputs.len();
    if n == 0 {
        return Err(MarlError::EmptyBatch);
    }
    let w = 1.0 / n as f64;
    let mut surrogate = 0.0;
    let mut entropy_sum = 0.0;
    let mut clipped = 0usize;
    for i in 0..n {
        let (logits, trace) = net.forward_traced(&batch.inputs[i])?;
        let probs = masked_softmax(&logits, &batch.masks[i]);
        let action = batch.actions[i];
        let logp = probs[action].max(1e-300).ln();
        let ratio = (logp - batch.logp_old[i]).exp();
        let adv = batch.advantages[i];
        let unclipped = ratio * adv;
        let clipped_obj = ratio.clamp(1.0 - clip_ratio, 1.0 + clip_ratio) * adv;
        let h = entropy(&probs);
        surrogate += w * unclipped.min(clipped_obj);
        entropy_sum += w * h;

        // d(-objective)/d logits, flowing only through the unclipped branch
        // when it is the active minimum.
        let mut out_grad = vec![0.0; logits.len()];
        let through = unclipped <= clipped_obj;
        if !through {
            clipped += 1;
        }
        for (k, g) in out_grad.iter_mut().enumerate() {
            if !batch.masks[i][k] {
                continue;
            }
            let dlogp = (if k == action { 1.0 } else { 0.0 }) - probs[k];
            let mut dv = 0.0;
            if through {
                dv -= w * ratio * adv * dlogp;
            }
            // Entropy bonus: dH/dz_k = -p_k (ln p_k + H).
            if probs[k] > 0.0 {
                dv += w * entropy_coef * probs[k] * (probs[k].ln() + h);
            }
            *g = dv;
        }
        net.backward(&trace, &out_grad, grads)?;
    }
    let loss = -(surrogate + entropy_coef * entropy_sum);
    if !loss.is_finite() {
        return Err(MarlError::NonFiniteLoss { what: "actor".into() });
    }
    Ok(ActorLossStats {
        loss,
        surrogate,
        entropy: entropy_sum,
        clip_fraction: clipped as f64 / n as f64,
    })
}

/// Per-sample references for the critic update, all in normalized value
/// space.
pub struct CriticBatch<'a> {
    pub inputs: &'a [Vec<f64>],
    pub targets: &'a [f64],
    pub v_old: &'a [f64],
}

/// Clipped value loss: the elementwise max of the unclipped and clipped
/// squared errors, averaged and scaled by `value_coef`.
pub fn ppo_critic_loss(
    net: &ParamNet,
    batch: &CriticBatch<'_>,
    clip_ratio: f64,
    value_coef: f64,
    grads: &mut [f64],
) -> Result<f64, MarlError> {
    let n = batch.inputs.len();
    if n == 0 {
        return Err(MarlError::EmptyBatch);
    }
    let w = value_coef / n as f64;
    let mut loss = 0.0;
    for i in 0..n {
        let (out, trace) = net.forward_traced(&batch.inputs[i])?;
        let v = out[0];
        let target = batch.targets[i];
        let v_old = batch.v_old[i];
        let v_clip = v.clamp(v_old - clip_ratio, v_old + clip_ratio);
        let unclipped = (v - target) * (v - target);
        let clipped = (v_clip - target) * (v_clip - target);
        let dv = if unclipped >= clipped {
            loss += w * unclipped;
            2.0 * (v - target)
        } else {
            loss += w * clipped;
            // Gradient flows through the clipped branch only inside the band.
            if (v_old - clip_ratio..=v_old + clip_ratio).contains(&v) {
                2.0 * (v_clip - target)
            } else {
                0.0
            }
        };
        net.backward(&trace, &[w * dv], grads)?;
    }
    if !loss.is_finite() {
        return Err(MarlError::NonFiniteLoss { what: "critic".into() });
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::rng;
    use rand::Rng as _;

    fn random_net(widths: &[usize], seed: u64) -> ParamNet {
        let mut net = ParamNet::new(widths, false, Activation::Relu);
        let mut rng = rng::stream(seed, "loss-net", 0);
        for p in net.params_mut() {
            *p = rng.gen_range(-0.6..0.6);
        }
        net
    }

    #[test]
    fn clip_arithmetic_matches_hand_values() {
        // r=1.5, eps=0.2, A=1 -> clipped objective 1.2;
        // r=0.5, eps=0.2, A=-1 -> min(-0.5, -0.8) = -0.8.
        for (r, adv, want) in [(1.5f64, 1.0f64, 1.2f64), (0.5, -1.0, -0.8)] {
            let unclipped = r * adv;
            let clipped = r.clamp(0.8, 1.2) * adv;
            assert!((unclipped.min(clipped) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_at_old_policy_equals_mean_advantage() {
        // theta = theta_old: every ratio is exactly 1, no clipping active.
        let net = random_net(&[4, 8, 3], 3);
        let mut rng = rng::stream(4, "batch", 0);
        let inputs: Vec<Vec<f64>> =
            (0..16).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let masks = vec![vec![true; 3]; 16];
        let mut actions = Vec::new();
        let mut logp_old = Vec::new();
        for input in &inputs {
            let probs = masked_softmax(&net.forward(input).unwrap(), &masks[0]);
            let a = rng.gen_range(0..3);
            actions.push(a);
            logp_old.push(probs[a].ln());
        }
        let advantages: Vec<f64> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut grads = vec![0.0; net.num_params()];
        let stats = ppo_actor_loss(
            &net,
            &ActorBatch {
                inputs: &inputs,
                masks: &masks,
                actions: &actions,
                logp_old: &logp_old,
                advantages: &advantages,
            },
            0.2,
            0.0,
            &mut grads,
        )
        .unwrap();
        let mean_adv = advantages.iter().sum::<f64>() / 16.0;
        assert!((stats.surrogate - mean_adv).abs() < 1e-10);
        assert_eq!(stats.clip_fraction, 0.0);

        // At the no-clip point the gradient is the vanilla policy-gradient
        // estimator: mean over samples of A * d(log pi)/d theta. Check via
        // the score-function oracle on a few parameters.
        let h = 1e-6;
        let mut net_fd = net.clone();
        for idx in [0usize, 7, 19] {
            let orig = net_fd.params()[idx];
            let eval = |net: &ParamNet| -> f64 {
                // Score-function objective at fixed actions: mean A * log pi.
                inputs
                    .iter()
                    .zip(actions.iter())
                    .zip(advantages.iter())
                    .map(|((input, &a), &adv)| {
                        let probs = masked_softmax(&net.forward(input).unwrap(), &masks[0]);
                        adv * probs[a].ln()
                    })
                    .sum::<f64>()
                    / 16.0
            };
            net_fd.params_mut()[idx] = orig + h;
            let up = eval(&net_fd);
            net_fd.params_mut()[idx] = orig - h;
            let dn = eval(&net_fd);
            net_fd.params_mut()[idx] = orig;
            let fd = (up - dn) / (2.0 * h);
            // grads hold d(loss)/d theta = -d(surrogate)/d theta.
            assert!(
                (grads[idx] + fd).abs() < 1e-5,
                "param {idx}: analytic {} vs score-fn {fd}",
                -grads[idx]
            );
        }
    }

    #[test]
    fn pessimism_bounds_the_surrogate() {
        let mut rng = rng::stream(9, "pess", 0);
        for _ in 0..2000 {
            let r: f64 = rng.gen_range(0.0..3.0);
            let adv: f64 = rng.gen_range(-2.0..2.0);
            let clipped = r.clamp(0.8, 1.2) * adv;
            assert!((r * adv).min(clipped) <= r * adv + 1e-15);
        }
    }

    #[test]
    fn critic_loss_known_values() {
        // V = target = V_old -> zero loss.
        let mut net = ParamNet::new(&[1, 1], false, Activation::Identity);
        net.params_mut().copy_from_slice(&[1.0, 0.0]); // identity net
        let inputs = vec![vec![0.5]];
        let mut grads = vec![0.0; net.num_params()];
        let loss = ppo_critic_loss(
            &net,
            &CriticBatch { inputs: &inputs, targets: &[0.5], v_old: &[0.5] },
            0.2,
            1.0,
            &mut grads,
        )
        .unwrap();
        assert_eq!(loss, 0.0);

        // V=1.0, V_old=0.5, eps=0.2, target=2.0: V_clip=0.7,
        // loss = max(1.0, 1.69) = 1.69.
        let inputs = vec![vec![1.0]];
        let mut grads = vec![0.0; net.num_params()];
        let loss = ppo_critic_loss(
            &net,
            &CriticBatch { inputs: &inputs, targets: &[2.0], v_old: &[0.5] },
            0.2,
            1.0,
            &mut grads,
        )
        .unwrap();
        assert!((loss - 1.69).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn critic_max_identity_holds_elementwise() {
        let net = random_net(&[3, 6, 1], 11);
        let mut rng = rng::stream(12, "crit", 0);
        for _ in 0..200 {
            let input: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = net.forward(&input).unwrap()[0];
            let target = rng.gen_range(-2.0..2.0);
            let v_old = rng.gen_range(-2.0..2.0);
            let v_clip = v.clamp(v_old - 0.2, v_old + 0.2);
            let mut grads = vec![0.0; net.num_params()];
            let loss = ppo_critic_loss(
                &net,
                &CriticBatch {
                    inputs: &[input.clone()],
                    targets: &[target],
                    v_old: &[v_old],
                },
                0.2,
                1.0,
                &mut grads,
            )
            .unwrap();
            let want = ((v - target) * (v - target)).max((v_clip - target) * (v_clip - target));
            assert!((loss - want).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let mut rng = rng::stream(21, "fd", 0);
        // Actor.
        let mut net = random_net(&[5, 10, 4], 22);
        let inputs: Vec<Vec<f64>> =
            (0..12).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let masks: Vec<Vec<bool>> = (0..12)
            .map(|i| (0..4).map(|k| !(i % 5 == 0 && k == 2)).collect())
            .collect();
        let mut actions = Vec::new();
        let mut logp_old = Vec::new();
        for (input, mask) in inputs.iter().zip(masks.iter()) {
            let probs = masked_softmax(&net.forward(input).unwrap(), mask);
            let a = super::super::policy::sample(&probs, &mut rng);
            actions.push(a);
            // Slightly stale old log-probs so ratios are not all 1.
            logp_old.push(probs[a].ln() + rng.gen_range(-0.08..0.08));
        }
        let advantages: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let batch = ActorBatch {
            inputs: &inputs,
            masks: &masks,
            actions: &actions,
            logp_old: &logp_old,
            advantages: &advantages,
        };
        let mut grads = vec![0.0; net.num_params()];
        ppo_actor_loss(&net, &batch, 0.2, 0.01, &mut grads).unwrap();
        let h = 1e-6;
        for _ in 0..30 {
            let i = rng.gen_range(0..net.num_params());
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let mut sink = vec![0.0; net.num_params()];
            let up = ppo_actor_loss(&net, &batch, 0.2, 0.01, &mut sink).unwrap().loss;
            net.params_mut()[i] = orig - h;
            let mut sink2 = vec![0.0; net.num_params()];
            let dn = ppo_actor_loss(&net, &batch, 0.2, 0.01, &mut sink2).unwrap().loss;
            net.params_mut()[i] = orig;
            let fd = (up - dn) / (2.0 * h);
            let denom = grads[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grads[i] - fd).abs() / denom < 1e-3,
                "actor param {i}: {} vs {fd}",
                grads[i]
            );
        }

        // Critic.
        let mut vnet = random_net(&[4, 8, 1], 23);
        let vinputs: Vec<Vec<f64>> =
            (0..10).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let targets: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v_old: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vbatch = CriticBatch { inputs: &vinputs, targets: &targets, v_old: &v_old };
        let mut vgrads = vec![0.0; vnet.num_params()];
        ppo_critic_loss(&vnet, &vbatch, 0.2, 0.5, &mut vgrads).unwrap();
        for _ in 0..30 {
            let i = rng.gen_range(0..vnet.num_params());
            let orig = vnet.params()[i];
            vnet.params_mut()[i] = orig + h;
            let mut sink = vec![0.0; vnet.num_params()];
            let up = ppo_critic_loss(&vnet, &vbatch, 0.2, 0.5, &mut sink).unwrap();
            vnet.params_mut()[i] = orig - h;
            let mut sink2 = vec![0.0; vnet.num_params()];
            let dn = ppo_critic_loss(&vnet, &vbatch, 0.2, 0.5, &mut sink2).unwrap();
            vnet.params_mut()[i] = orig;
            let fd = (up - dn) / (2.0 * h);
            let denom = vgrads[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (vgrads[i] - fd).abs() / denom < 1e-3,
                "critic param {i}: {} vs {fd}",
                vgrads[i]
            );
        }
    }
}
