//! Local-observation imitator: shared policy and Q nets over per-slot
//! next-state atoms.
//!
//! Both nets map `(encoded observation, ally action one-hot)` to one logit
//! (or soft-Q value) per enemy slot per atom. The joint prediction
//! factorizes across slots, so the log-sum-exp value and the softmax policy
//! decompose into per-slot terms.
//!
//! The objective mirrors the tabular compact form, summed over ally agents
//! and estimated from buffer samples:
//!
//! `J = E[ Qhat(target | o, a) - gamma V(o') ] - (1 - gamma) E_start[ V(o0) ]`
//!
//! where `V(o) = sum_a pi^a(a|o) sum_slots lse_c Qhat(c | o, a)`.

use super::atoms::N_ATOMS;
use super::buffer::{LocalBatch, LocalExpertBuffer, LocalTuple};
use super::tabular::ImitationError;
use crate::dense::{log_sum_exp, softmax};
use crate::nn::{clip_global_norm, orthogonal_init_layer, Activation, OptimState, ParamNet};
use crate::rng::Rng;
use rand::Rng as _;

/// Action probabilities an ally assigns at an encoded observation. The
/// trainer passes its pre-prediction policy snapshot; pure imitation fits
/// pass a uniform rule.
pub trait ActionDist {
    fn probs(&self, agent: usize, obs: &[f64], mask: &[bool]) -> Vec<f64>;
}

/// Uniform over the valid actions, for imitation fits decoupled from policy
/// training.
pub struct UniformActions(pub usize);

impl ActionDist for UniformActions {
    fn probs(&self, _agent: usize, _obs: &[f64], mask: &[bool]) -> Vec<f64> {
        let valid = mask.iter().filter(|&&ok| ok).count().max(1);
        (0..self.0).map(|a| if mask[a] { 1.0 / valid as f64 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictMode {
    /// Argmax of the per-slot distribution; deterministic.
    Mode,
    Sample,
}

/// The imitator parameter pair: soft-Q net and explicit policy net.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ImitatorNets {
    pub q_net: ParamNet,
    pub pi_net: ParamNet,
    pub n_slots: usize,
    pub n_actions: usize,
    pub obs_width: usize,
}

impl ImitatorNets {
    pub fn new(
        obs_width: usize,
        n_actions: usize,
        n_slots: usize,
        hidden: &[usize],
        head_gain: f64,
        rng: &mut Rng,
    ) -> Self {
        let mut widths = vec![obs_width + n_actions];
        widths.extend_from_slice(hidden);
        widths.push(n_slots * N_ATOMS);
        let mut q_net = ParamNet::new(&widths, false, Activation::Relu);
        let mut pi_net = ParamNet::new(&widths, false, Activation::Relu);
        for net in [&mut q_net, &mut pi_net] {
            for layer in 0..net.num_layers() - 1 {
                orthogonal_init_layer(net, layer, 2f64.sqrt(), rng);
            }
            let last = net.num_layers() - 1;
            orthogonal_init_layer(net, last, head_gain, rng);
        }
        ImitatorNets { q_net, pi_net, n_slots, n_actions, obs_width }
    }

    /// Net input: observation encoding followed by the action one-hot.
    pub fn input(&self, obs: &[f64], action: usize) -> Vec<f64> {
        debug_assert_eq!(obs.len(), self.obs_width);
        let mut x = Vec::with_capacity(self.obs_width + self.n_actions);
        x.extend_from_slice(obs);
        for a in 0..self.n_actions {
            x.push(if a == action { 1.0 } else { 0.0 });
        }
        x
    }

    /// Per-slot categorical prediction of the enemies' next-state atoms.
    /// Slots absent from the observation are masked to `None`.
    pub fn predict_next_enemy_states(
        &self,
        obs: &[f64],
        action: usize,
        present: &[bool],
        mode: PredictMode,
        rng: &mut Rng,
    ) -> Vec<Option<usize>> {
        let logits = self.pi_net.forward(&self.input(obs, action)).expect("imitator forward");
        (0..self.n_slots)
            .map(|slot| {
                if !present[slot] {
                    return None;
                }
                let seg = &logits[slot * N_ATOMS..(slot + 1) * N_ATOMS];
                Some(match mode {
                    PredictMode::Mode => {
                        let mut best = 0;
                        for c in 1..N_ATOMS {
                            if seg[c] > seg[best] {
                                best = c;
                            }
                        }
                        best
                    }
                    PredictMode::Sample => {
                        let probs = softmax(seg);
                        let draw: f64 = rng.gen();
                        let mut acc = 0.0;
                        let mut choice = N_ATOMS - 1;
                        for (c, &p) in probs.iter().enumerate() {
                            acc += p;
                            if draw < acc {
                                choice = c;
                                break;
                            }
                        }
                        choice
                    }
                })
            })
            .collect()
    }

    /// Mean KL between the explicit policy and the softmax of the Q net at
    /// the given inputs, summed over slots.
    pub fn kl_pi_to_softmax_q(&self, inputs: &[(usize, Vec<f64>)]) -> f64 {
        let mut total = 0.0;
        for (action, obs) in inputs {
            let x = self.input(obs, *action);
            let pi = self.pi_net.forward(&x).unwrap();
            let q = self.q_net.forward(&x).unwrap();
            for slot in 0..self.n_slots {
                let p = softmax(&pi[slot * N_ATOMS..(slot + 1) * N_ATOMS]);
                let q_seg = &q[slot * N_ATOMS..(slot + 1) * N_ATOMS];
                let lse = log_sum_exp(q_seg);
                for c in 0..N_ATOMS {
                    if p[c] > 0.0 {
                        total += p[c] * (p[c].ln() - (q_seg[c] - lse));
                    }
                }
            }
        }
        total / inputs.len() as f64
    }
}

/// Soft value of an observation under the Q net with the softmax policy:
/// `sum_a pi(a|o) sum_slots lse_c Qhat(c|o,a)`.
pub fn v_local(nets: &ImitatorNets, probs: &[f64], obs: &[f64]) -> f64 {
    let mut v = 0.0;
    for (a, &pa) in probs.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let out = nets.q_net.forward(&nets.input(obs, a)).expect("imitator forward");
        for slot in 0..nets.n_slots {
            v += pa * log_sum_exp(&out[slot * N_ATOMS..(slot + 1) * N_ATOMS]);
        }
    }
    v
}

fn accumulate_v_grad(
    nets: &ImitatorNets,
    probs: &[f64],
    obs: &[f64],
    coeff: f64,
    j: &mut f64,
    grads: &mut [f64],
) {
    for (a, &pa) in probs.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let x = nets.input(obs, a);
        let (out, trace) = nets.q_net.forward_traced(&x).expect("imitator forward");
        let mut out_grad = vec![0.0; out.len()];
        for slot in 0..nets.n_slots {
            let seg = &out[slot * N_ATOMS..(slot + 1) * N_ATOMS];
            *j += coeff * pa * log_sum_exp(seg);
            let sm = softmax(seg);
            for c in 0..N_ATOMS {
                out_grad[slot * N_ATOMS + c] = coeff * pa * sm[c];
            }
        }
        nets.q_net.backward(&trace, &out_grad, grads).expect("imitator backward");
    }
}

/// The local-observation objective over a sampled batch, with its exact
/// gradient in the Q-net parameters. Gradient *of J*: ascend it (or descend
/// its negation) to train the imitator.
///
/// Expert expectations are over the discounted occupancy, so each tuple is
/// weighted by `gamma^step` (self-normalized over the batch), and the
/// discounted value bootstraps unconditionally: horizon ends are truncation,
/// not absorption. Truncation also pairs the initial-state term with its
/// finite-window counterpart,
/// `(1-gamma)/(1-gamma^T) (E[V(o_0)] - gamma^T E[V(o_T)])`,
/// which telescopes exactly against the weighted sample term; without these
/// three pieces the up/down pressure on Q is unbalanced and Q drifts.
pub fn j_local(
    nets: &ImitatorNets,
    action_dist: &dyn ActionDist,
    batch: &LocalBatch<'_>,
    gamma: f64,
) -> Result<(f64, Vec<f64>), ImitationError> {
    if batch.tuples.is_empty() || batch.starts.is_empty() {
        return Err(ImitationError::EmptyBuffer);
    }
    let mut j = 0.0;
    let mut grads = vec![0.0; nets.q_net.num_params()];
    let z: f64 = batch.tuples.iter().map(|t| gamma.powi(t.step as i32)).sum();
    if z <= 0.0 {
        return Err(ImitationError::EmptyBuffer);
    }
    for tuple in &batch.tuples {
        let w = gamma.powi(tuple.step as i32) / z;
        if w == 0.0 {
            continue;
        }
        let x = nets.input(&tuple.obs, tuple.action);
        let (out, trace) = nets.q_net.forward_traced(&x).expect("imitator forward");
        let mut out_grad = vec![0.0; out.len()];
        for (slot, &target) in tuple.targets.iter().enumerate() {
            j += w * out[slot * N_ATOMS + target];
            out_grad[slot * N_ATOMS + target] += w;
        }
        nets.q_net.backward(&trace, &out_grad, &mut grads).expect("imitator backward");

        if gamma > 0.0 {
            let probs = action_dist.probs(tuple.agent, &tuple.next_obs, &tuple.next_mask);
            accumulate_v_grad(nets, &probs, &tuple.next_obs, -gamma * w, &mut j, &mut grads);
        }
    }
    let gamma_t = gamma.powi(batch.horizon as i32);
    let scale = if batch.ends.is_empty() {
        1.0 - gamma
    } else {
        (1.0 - gamma) / (1.0 - gamma_t)
    };
    let w0 = scale / batch.starts.len() as f64;
    for entry in &batch.starts {
        let probs = action_dist.probs(entry.agent, &entry.obs, &entry.mask);
        accumulate_v_grad(nets, &probs, &entry.obs, -w0, &mut j, &mut grads);
    }
    if !batch.ends.is_empty() {
        let w_end = scale * gamma_t / batch.ends.len() as f64;
        for entry in &batch.ends {
            let probs = action_dist.probs(entry.agent, &entry.obs, &entry.mask);
            accumulate_v_grad(nets, &probs, &entry.obs, w_end, &mut j, &mut grads);
        }
    }
    Ok((j, grads))
}

/// One SAC-style actor step: descends `E[ ln pi - Qhat ]` under the explicit
/// policy, pulling it toward the softmax of the Q net. Returns the loss.
pub fn sac_actor_update(
    nets: &mut ImitatorNets,
    opt: &mut OptimState,
    action_dist: &dyn ActionDist,
    tuples: &[&LocalTuple],
    max_grad_norm: f64,
) -> Result<f64, ImitationError> {
    if tuples.is_empty() {
        return Err(ImitationError::EmptyBuffer);
    }
    let mut loss = 0.0;
    let mut grads = vec![0.0; nets.pi_net.num_params()];
    let w = 1.0 / tuples.len() as f64;
    for tuple in tuples {
        let probs = action_dist.probs(tuple.agent, &tuple.next_obs, &tuple.next_mask);
        for (a, &pa) in probs.iter().enumerate() {
            if pa <= 0.0 {
                continue;
            }
            let x = nets.input(&tuple.next_obs, a);
            let (pi_out, pi_trace) = nets.pi_net.forward_traced(&x).expect("imitator forward");
            let q_out = nets.q_net.forward(&x).expect("imitator forward");
            let mut out_grad = vec![0.0; pi_out.len()];
            for slot in 0..nets.n_slots {
                let seg = &pi_out[slot * N_ATOMS..(slot + 1) * N_ATOMS];
                let p = softmax(seg);
                let q_seg = &q_out[slot * N_ATOMS..(slot + 1) * N_ATOMS];
                let mut mean_u = 0.0;
                let mut us = [0.0; N_ATOMS];
                for c in 0..N_ATOMS {
                    if p[c] > 0.0 {
                        us[c] = p[c].ln() - q_seg[c];
                        mean_u += p[c] * us[c];
                        loss += w * pa * p[c] * us[c];
                    }
                }
                for c in 0..N_ATOMS {
                    if p[c] > 0.0 {
                        out_grad[slot * N_ATOMS + c] = w * pa * p[c] * (us[c] - mean_u);
                    }
                }
            }
            nets.pi_net.backward(&pi_trace, &out_grad, &mut grads).expect("imitator backward");
        }
    }
    if !loss.is_finite() {
        return Err(ImitationError::FixedPointDiverged { sweeps: 0 });
    }
    clip_global_norm(&mut grads, max_grad_norm);
    opt.adam_step(nets.pi_net.params_mut(), &grads).expect("pi update");
    Ok(loss)
}

/// Fraction of present-slot atom targets the mode prediction gets right.
pub fn prediction_accuracy(nets: &ImitatorNets, tuples: &[&LocalTuple]) -> Option<f64> {
    let mut rng = crate::rng::stream(0, "accuracy-unused", 0);
    let mut correct = 0usize;
    let mut total = 0usize;
    for tuple in tuples {
        let pred = nets.predict_next_enemy_states(
            &tuple.obs,
            tuple.action,
            &tuple.present,
            PredictMode::Mode,
            &mut rng,
        );
        for (slot, p) in pred.iter().enumerate() {
            if let Some(atom) = p {
                total += 1;
                if *atom == tuple.targets[slot] {
                    correct += 1;
                }
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(correct as f64 / total as f64)
    }
}

/// Configuration for a standalone imitation fit.
#[derive(Debug, Clone)]
pub struct ImitatorFitConfig {
    pub hidden: Vec<usize>,
    pub head_gain: f64,
    pub lr_q: f64,
    pub lr_pi: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub updates: usize,
    pub max_grad_norm: f64,
    pub gamma: f64,
}

impl Default for ImitatorFitConfig {
    fn default() -> Self {
        ImitatorFitConfig {
            hidden: vec![64, 64],
            head_gain: 0.01,
            lr_q: 5e-4,
            lr_pi: 5e-4,
            adam_eps: 1e-5,
            batch_size: 256,
            updates: 2000,
            max_grad_norm: 10.0,
            gamma: 0.9,
        }
    }
}

/// Fits the imitator nets on a fixed expert buffer: interleaved ascent on
/// the local objective and SAC policy steps, one of each per update.
pub fn fit_imitator(
    obs_width: usize,
    n_actions: usize,
    n_slots: usize,
    buffer: &LocalExpertBuffer,
    action_dist: &dyn ActionDist,
    cfg: &ImitatorFitConfig,
    rng: &mut Rng,
) -> Result<ImitatorNets, ImitationError> {
    let mut nets = ImitatorNets::new(obs_width, n_actions, n_slots, &cfg.hidden, cfg.head_gain, rng);
    let mut opt_q = OptimState::new(nets.q_net.num_params(), cfg.lr_q).with_eps(cfg.adam_eps);
    let mut opt_pi = OptimState::new(nets.pi_net.num_params(), cfg.lr_pi).with_eps(cfg.adam_eps);
    for _ in 0..cfg.updates {
        let batch = buffer.sample_batch(cfg.batch_size, 64, rng);
        let (_, grad_j) = j_local(&nets, action_dist, &batch, cfg.gamma)?;
        let mut loss_grads: Vec<f64> = grad_j.iter().map(|g| -g).collect();
        clip_global_norm(&mut loss_grads, cfg.max_grad_norm);
        opt_q.adam_step(nets.q_net.params_mut(), &loss_grads).expect("q update");
        sac_actor_update(&mut nets, &mut opt_pi, action_dist, &batch.tuples, cfg.max_grad_norm)?;
    }
    Ok(nets)
}

/// Rolls a game under uniform random valid ally actions and fills a local
/// expert buffer with per-ally tuples.
pub fn collect_local_expert(
    game: &dyn crate::game::Game,
    n_steps: usize,
    capacity: usize,
    rng: &mut Rng,
) -> LocalExpertBuffer {
    use crate::game::{observe, step, JointAllyAction};
    let spec = game.spec();
    let mut buffer = LocalExpertBuffer::new(capacity, spec.horizon);
    let mut state = game.initial_state(rng);
    let mut episode_start = true;
    let mut collected = 0usize;
    while collected < n_steps {
        let action = JointAllyAction(
            (0..spec.n_allies)
                .map(|i| {
                    let mask = game.action_mask(&state, i);
                    let valid: Vec<usize> =
                        (0..spec.ally_action_count).filter(|&a| mask[a]).collect();
                    valid[rng.gen_range(0..valid.len())]
                })
                .collect(),
        );
        let t = step(game, &state, &action, rng).expect("rollout step");
        for i in 0..spec.n_allies {
            let obs = &t.obs_before[i];
            let start_mask = game.action_mask(&state, i);
            buffer.push(
                LocalTuple {
                    agent: i,
                    obs: obs.encode(),
                    action: t.action.0[i],
                    targets: super::atoms::atom_targets(game, &t, i),
                    present: obs.enemy_slots.iter().map(|s| s.present).collect(),
                    next_obs: t.obs_after[i].encode(),
                    next_mask: game.action_mask(&t.next_state, i),
                    step: t.state.step,
                    episode_start,
                    terminal: t.terminal,
                },
                &start_mask,
            );
        }
        collected += 1;
        if t.terminal {
            state = game.initial_state(rng);
            let _ = observe(game, &state, 0);
            episode_start = true;
        } else {
            state = t.next_state;
            episode_start = false;
        }
    }
    buffer
}
