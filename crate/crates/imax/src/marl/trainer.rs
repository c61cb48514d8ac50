//! The augmented-PPO training loop.
//!
//! Each iteration: rollout workers collect fixed-length segments with the
//! prediction in the loop (draw a provisional action from the policy at a
//! zero augmentation, predict the neighboring enemies' next-state atoms from
//! it, then act from the policy at the augmented input); the learner then
//! updates, in order, the imitator Q net (ascent on the local objective),
//! the imitator policy net (SAC-style step), the actor (clipped surrogate)
//! and the centralized critic (clipped value loss).
//!
//! The baseline arm is the same loop with the augmentation block forced to
//! the zero mask; nothing else changes, so its update trace is step-for-step
//! identical to a plain multi-agent PPO run and the augmented input is the
//! only difference between the arms.
//!
//! Determinism: each worker owns one environment and two seeded streams;
//! batches concatenate in worker order; all updates run on the learner
//! thread. With a fixed worker count and root seed, runs are bit-identical.

use super::augment::{augment_input, augmented_width};
use super::gae::{gae, normalize_advantages};
use super::loss::{ppo_actor_loss, ppo_critic_loss, ActorBatch, CriticBatch};
use super::policy::{kl_divergence, masked_softmax, sample};
use super::MarlError;
use crate::game::{observe, step, Game, GlobalState, JointAllyAction};
use crate::imitation::{
    atom_targets, j_local, prediction_accuracy, sac_actor_update, ActionDist, ImitatorNets,
    LocalExpertBuffer, LocalTuple, PredictMode,
};
use crate::nn::{
    clip_global_norm, orthogonal_init_layer, Activation, OptimState, ParamNet, RunningNorm,
};
use crate::rng::{self, Rng};
use serde::{Deserialize, Serialize};

/// Trainer hyperparameters. Defaults follow the reference table: clip 0.2,
/// gamma 0.99, lambda 0.95, 5 mini epochs, one minibatch, learning rate
/// 5e-4, Adam epsilon 1e-5, weight decay 0, value coefficient 0.5, entropy
/// coefficient 0.01, max gradient norm 10, orthogonal gain 0.01 on output
/// heads (hidden layers use sqrt 2), rollout length 1024.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub seed: u64,
    /// Force the augmentation block to the zero mask (the baseline arm).
    pub zero_mask_augmentation: bool,
    pub rollout_length: usize,
    pub workers: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub mini_epochs: usize,
    pub minibatch_count: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_il_q: f64,
    pub lr_il_pi: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub orthogonal_gain: f64,
    pub hidden: Vec<usize>,
    pub il_batch_size: usize,
    pub buffer_capacity: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            seed: 0,
            zero_mask_augmentation: false,
            rollout_length: 1024,
            workers: 1,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            mini_epochs: 5,
            minibatch_count: 1,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 10.0,
            lr_actor: 5e-4,
            lr_critic: 5e-4,
            lr_il_q: 5e-4,
            lr_il_pi: 5e-4,
            adam_eps: 1e-5,
            weight_decay: 0.0,
            orthogonal_gain: 0.01,
            hidden: vec![64, 64],
            il_batch_size: 512,
            buffer_capacity: 100_000,
        }
    }
}

/// Per-iteration training metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iter: u64,
    pub env_steps: u64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub il_loss: f64,
    pub il_accuracy: Option<f64>,
    pub kl_old_new: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub mean_team_reward: f64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorkerState {
    state: GlobalState,
    episode_start: bool,
    env_rng: Rng,
    act_rng: Rng,
}

/// Everything that must survive a checkpoint/resume cycle.
#[derive(Clone, Serialize, Deserialize)]
pub struct TrainerSnapshot {
    pub policy: ParamNet,
    pub critic: ParamNet,
    pub imitator: ImitatorNets,
    pub opt_actor: OptimState,
    pub opt_critic: OptimState,
    pub opt_il_q: OptimState,
    pub opt_il_pi: OptimState,
    pub value_norm: RunningNorm,
    pub buffer: LocalExpertBuffer,
    workers: Vec<WorkerState>,
    learner_rng: Rng,
    pub iter: u64,
    pub env_steps: u64,
}

pub struct Trainer<'g> {
    pub cfg: TrainerConfig,
    game: &'g dyn Game,
    pub policy: ParamNet,
    pub critic: ParamNet,
    pub imitator: ImitatorNets,
    opt_actor: OptimState,
    opt_critic: OptimState,
    opt_il_q: OptimState,
    opt_il_pi: OptimState,
    pub value_norm: RunningNorm,
    pub buffer: LocalExpertBuffer,
    workers: Vec<WorkerState>,
    learner_rng: Rng,
    pub iter: u64,
    pub env_steps: u64,
}

/// Builds the actor input: encoded observation, augmentation block, agent
/// one-hot.
pub fn policy_input(
    obs_enc: &[f64],
    predictions: &[Option<usize>],
    agent: usize,
    n_allies: usize,
    n_slots: usize,
) -> Vec<f64> {
    let mut x = augment_input(obs_enc, predictions, n_slots).expect("aligned predictions");
    for i in 0..n_allies {
        x.push(if i == agent { 1.0 } else { 0.0 });
    }
    x
}

pub fn policy_input_width(game: &dyn Game) -> usize {
    let spec = game.spec();
    augmented_width(crate::game::encoded_obs_width(game), spec.n_enemies) + spec.n_allies
}

/// Action distribution used inside the imitator objective: the current
/// policy snapshot evaluated at the zero-mask augmentation, matching the
/// provisional draw in rollouts.
struct SnapshotDist<'a> {
    policy: &'a ParamNet,
    n_allies: usize,
    n_slots: usize,
}

impl ActionDist for SnapshotDist<'_> {
    fn probs(&self, agent: usize, obs: &[f64], mask: &[bool]) -> Vec<f64> {
        let input = policy_input(obs, &vec![None; self.n_slots], agent, self.n_allies, self.n_slots);
        let logits = self.policy.forward(&input).expect("policy forward");
        masked_softmax(&logits, mask)
    }
}

/// One worker's rollout segment.
struct Segment {
    inputs: Vec<Vec<f64>>,
    masks: Vec<Vec<bool>>,
    actions: Vec<usize>,
    logp_old: Vec<f64>,
    probs_old: Vec<Vec<f64>>,
    step_rewards: Vec<f64>,
    step_values: Vec<f64>,
    step_dones: Vec<bool>,
    state_enc: Vec<Vec<f64>>,
    bootstrap_value: f64,
    tuples: Vec<(LocalTuple, Vec<bool>)>,
}

impl<'g> Trainer<'g> {
    pub fn new(game: &'g dyn Game, cfg: TrainerConfig) -> Self {
        let spec = game.spec();
        let mut init_rng = rng::stream(cfg.seed, "init", 0);

        let mut policy_widths = vec![policy_input_width(game)];
        policy_widths.extend_from_slice(&cfg.hidden);
        policy_widths.push(spec.ally_action_count);
        let mut policy = ParamNet::new(&policy_widths, false, Activation::Relu);

        let mut critic_widths = vec![game.global_width()];
        critic_widths.extend_from_slice(&cfg.hidden);
        critic_widths.push(1);
        let mut critic = ParamNet::new(&critic_widths, false, Activation::Relu);

        for net in [&mut policy, &mut critic] {
            for layer in 0..net.num_layers() - 1 {
                orthogonal_init_layer(net, layer, 2f64.sqrt(), &mut init_rng);
            }
        }
        let last = policy.num_layers() - 1;
        orthogonal_init_layer(&mut policy, last, cfg.orthogonal_gain, &mut init_rng);
        let last = critic.num_layers() - 1;
        orthogonal_init_layer(&mut critic, last, 1.0, &mut init_rng);

        let imitator = ImitatorNets::new(
            crate::game::encoded_obs_width(game),
            spec.ally_action_count,
            spec.n_enemies,
            &cfg.hidden,
            cfg.orthogonal_gain,
            &mut init_rng,
        );

        let workers = (0..cfg.workers)
            .map(|k| {
                let mut env_rng = rng::stream(cfg.seed, "env", k as u64);
                let act_rng = rng::stream(cfg.seed, "rollout", k as u64);
                let state = game.initial_state(&mut env_rng);
                WorkerState { state, episode_start: true, env_rng, act_rng }
            })
            .collect();

        let mk_opt = |n: usize, lr: f64| {
            OptimState::new(n, lr).with_eps(cfg.adam_eps).with_weight_decay(cfg.weight_decay)
        };
        Trainer {
            opt_actor: mk_opt(policy.num_params(), cfg.lr_actor),
            opt_critic: mk_opt(critic.num_params(), cfg.lr_critic),
            opt_il_q: mk_opt(imitator.q_net.num_params(), cfg.lr_il_q),
            opt_il_pi: mk_opt(imitator.pi_net.num_params(), cfg.lr_il_pi),
            value_norm: RunningNorm::new(),
            buffer: LocalExpertBuffer::new(cfg.buffer_capacity, spec.horizon),
            workers,
            learner_rng: rng::stream(cfg.seed, "learner", 0),
            iter: 0,
            env_steps: 0,
            policy,
            critic,
            imitator,
            game,
            cfg,
        }
    }

    pub fn snapshot(&self) -> TrainerSnapshot {
        TrainerSnapshot {
            policy: self.policy.clone(),
            critic: self.critic.clone(),
            imitator: self.imitator.clone(),
            opt_actor: self.opt_actor.clone(),
            opt_critic: self.opt_critic.clone(),
            opt_il_q: self.opt_il_q.clone(),
            opt_il_pi: self.opt_il_pi.clone(),
            value_norm: self.value_norm.clone(),
            buffer: self.buffer.clone(),
            workers: self.workers.clone(),
            learner_rng: self.learner_rng.clone(),
            iter: self.iter,
            env_steps: self.env_steps,
        }
    }

    pub fn from_snapshot(game: &'g dyn Game, cfg: TrainerConfig, snap: TrainerSnapshot) -> Self {
        Trainer {
            policy: snap.policy,
            critic: snap.critic,
            imitator: snap.imitator,
            opt_actor: snap.opt_actor,
            opt_critic: snap.opt_critic,
            opt_il_q: snap.opt_il_q,
            opt_il_pi: snap.opt_il_pi,
            value_norm: snap.value_norm,
            buffer: snap.buffer,
            workers: snap.workers,
            learner_rng: snap.learner_rng,
            iter: snap.iter,
            env_steps: snap.env_steps,
            game,
            cfg,
        }
    }

    fn collect_segment(&self, worker: &mut WorkerState) -> Segment {
        let game = self.game;
        let spec = game.spec();
        let (n_allies, n_slots) = (spec.n_allies, spec.n_enemies);
        let mut seg = Segment {
            inputs: Vec::new(),
            masks: Vec::new(),
            actions: Vec::new(),
            logp_old: Vec::new(),
            probs_old: Vec::new(),
            step_rewards: Vec::new(),
            step_values: Vec::new(),
            step_dones: Vec::new(),
            state_enc: Vec::new(),
            bootstrap_value: 0.0,
            tuples: Vec::new(),
        };
        for _ in 0..self.cfg.rollout_length {
            let state = worker.state.clone();
            let none_preds = vec![None; n_slots];
            let mut joint = Vec::with_capacity(n_allies);
            let mut obs_encs = Vec::with_capacity(n_allies);
            let mut presents = Vec::with_capacity(n_allies);
            for i in 0..n_allies {
                let obs = observe(game, &state, i);
                let enc = obs.encode();
                let mask = game.action_mask(&state, i);

                // Provisional draw at the zero augmentation.
                let input0 = policy_input(&enc, &none_preds, i, n_allies, n_slots);
                let logits0 = self.policy.forward(&input0).expect("policy forward");
                let provisional = sample(&masked_softmax(&logits0, &mask), &mut worker.act_rng);

                // Predict the neighbors' next-state atoms from it.
                let present: Vec<bool> = obs.enemy_slots.iter().map(|s| s.present).collect();
                let preds = self.imitator.predict_next_enemy_states(
                    &enc,
                    provisional,
                    &present,
                    PredictMode::Sample,
                    &mut worker.act_rng,
                );

                // Act from the augmented input (zero mask on the baseline arm).
                let used = if self.cfg.zero_mask_augmentation { none_preds.clone() } else { preds };
                let input = policy_input(&enc, &used, i, n_allies, n_slots);
                let logits = self.policy.forward(&input).expect("policy forward");
                let probs = masked_softmax(&logits, &mask);
                let action = sample(&probs, &mut worker.act_rng);

                seg.logp_old.push(probs[action].max(1e-300).ln());
                seg.probs_old.push(probs);
                seg.inputs.push(input);
                seg.masks.push(mask);
                seg.actions.push(action);
                joint.push(action);
                obs_encs.push(enc);
                presents.push(present);
            }

            let enc_state = game.global_encoding(&state);
            let v_raw =
                self.value_norm.denormalize(self.critic.forward(&enc_state).expect("critic")[0]);
            let t = step(game, &state, &JointAllyAction(joint), &mut worker.env_rng)
                .expect("rollout step");
            seg.step_rewards.push(t.rewards.iter().sum());
            seg.step_values.push(v_raw);
            seg.step_dones.push(t.terminal);
            seg.state_enc.push(enc_state);

            for i in 0..n_allies {
                let start_mask = &seg.masks[seg.masks.len() - n_allies + i];
                seg.tuples.push((
                    LocalTuple {
                        agent: i,
                        obs: obs_encs[i].clone(),
                        action: t.action.0[i],
                        targets: atom_targets(game, &t, i),
                        present: presents[i].clone(),
                        next_obs: t.obs_after[i].encode(),
                        next_mask: game.action_mask(&t.next_state, i),
                        step: state.step,
                        episode_start: worker.episode_start,
                        terminal: t.terminal,
                    },
                    start_mask.clone(),
                ));
            }

            if t.terminal {
                worker.state = game.initial_state(&mut worker.env_rng);
                worker.episode_start = true;
            } else {
                worker.state = t.next_state;
                worker.episode_start = false;
            }
        }
        let enc_final = game.global_encoding(&worker.state);
        seg.bootstrap_value =
            self.value_norm.denormalize(self.critic.forward(&enc_final).expect("critic")[0]);
        seg
    }

    fn collect(&mut self) -> Vec<Segment> {
        let mut workers = std::mem::take(&mut self.workers);
        let segments: Vec<Segment> = if workers.len() == 1 {
            vec![self.collect_segment(&mut workers[0])]
        } else {
            std::thread::scope(|scope| {
                let this: &Trainer = self;
                let handles: Vec<_> = workers
                    .iter_mut()
                    .map(|w| scope.spawn(move || this.collect_segment(w)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        self.workers = workers;
        segments
    }

    /// One full training iteration. Parameter updates happen in the fixed
    /// order: imitator Q, imitator policy, actor, critic.
    pub fn train_iteration(&mut self) -> Result<IterationMetrics, MarlError> {
        let t0 = std::time::Instant::now();
        let spec = self.game.spec();
        let segments = self.collect();
        self.env_steps += (self.cfg.rollout_length * self.cfg.workers) as u64;

        // Ingest expert tuples; measure imitator accuracy on the fresh data
        // before updating it.
        let fresh: Vec<&LocalTuple> = segments.iter().flat_map(|s| s.tuples.iter().map(|(t, _)| t)).collect();
        let il_accuracy = prediction_accuracy(&self.imitator, &fresh);
        for seg in &segments {
            for (tuple, start_mask) in &seg.tuples {
                self.buffer.push(tuple.clone(), start_mask);
            }
        }

        // Imitator updates (one phase per policy phase).
        let mut il_loss = 0.0;
        {
            let dist = SnapshotDist {
                policy: &self.policy,
                n_allies: spec.n_allies,
                n_slots: spec.n_enemies,
            };
            for _ in 0..self.cfg.mini_epochs {
                let batch = self.buffer.sample_batch(
                    self.cfg.il_batch_size.min(self.buffer.len()),
                    64,
                    &mut self.learner_rng,
                );
                let (j, grad_j) = j_local(&self.imitator, &dist, &batch, self.cfg.gamma)
                    .map_err(|e| MarlError::NonFiniteLoss { what: format!("imitator: {e}") })?;
                il_loss = -j;
                if !il_loss.is_finite() {
                    return Err(MarlError::NonFiniteLoss { what: "imitator objective".into() });
                }
                let mut grads: Vec<f64> = grad_j.iter().map(|g| -g).collect();
                clip_global_norm(&mut grads, self.cfg.max_grad_norm);
                self.opt_il_q
                    .adam_step(self.imitator.q_net.params_mut(), &grads)
                    .map_err(|e| MarlError::NonFiniteLoss { what: format!("imitator Q: {e}") })?;
                sac_actor_update(
                    &mut self.imitator,
                    &mut self.opt_il_pi,
                    &dist,
                    &batch.tuples,
                    self.cfg.max_grad_norm,
                )
                .map_err(|e| MarlError::NonFiniteLoss { what: format!("imitator pi: {e}") })?;
            }
        }

        // Advantages and return targets per worker segment, concatenated in
        // worker order.
        let mut advantages = Vec::new();
        let mut returns = Vec::new();
        for seg in &segments {
            let (adv, ret) = gae(
                &seg.step_rewards,
                &seg.step_values,
                &seg.step_dones,
                seg.bootstrap_value,
                self.cfg.gamma,
                self.cfg.gae_lambda,
            )?;
            advantages.extend(adv);
            returns.extend(ret);
        }
        normalize_advantages(&mut advantages);

        // Flatten per-agent samples; each agent sample carries its step's
        // team advantage.
        let n_allies = spec.n_allies;
        let mut inputs = Vec::new();
        let mut masks = Vec::new();
        let mut actions = Vec::new();
        let mut logp_old = Vec::new();
        let mut probs_old = Vec::new();
        let mut sample_adv = Vec::new();
        let mut step_offset = 0;
        for seg in &segments {
            for t in 0..seg.step_rewards.len() {
                for i in 0..n_allies {
                    let row = t * n_allies + i;
                    inputs.push(seg.inputs[row].clone());
                    masks.push(seg.masks[row].clone());
                    actions.push(seg.actions[row]);
                    logp_old.push(seg.logp_old[row]);
                    probs_old.push(seg.probs_old[row].clone());
                    sample_adv.push(advantages[step_offset + t]);
                }
            }
            step_offset += seg.step_rewards.len();
        }

        // Actor updates.
        let mut actor_loss = 0.0;
        let mut entropy = 0.0;
        let mut clip_fraction = 0.0;
        let chunk = (inputs.len() / self.cfg.minibatch_count.max(1)).max(1);
        for _ in 0..self.cfg.mini_epochs {
            for start in (0..inputs.len()).step_by(chunk) {
                let end = (start + chunk).min(inputs.len());
                let batch = ActorBatch {
                    inputs: &inputs[start..end],
                    masks: &masks[start..end],
                    actions: &actions[start..end],
                    logp_old: &logp_old[start..end],
                    advantages: &sample_adv[start..end],
                };
                let mut grads = vec![0.0; self.policy.num_params()];
                let stats = ppo_actor_loss(
                    &self.policy,
                    &batch,
                    self.cfg.clip_ratio,
                    self.cfg.entropy_coef,
                    &mut grads,
                )?;
                clip_global_norm(&mut grads, self.cfg.max_grad_norm);
                self.opt_actor
                    .adam_step(self.policy.params_mut(), &grads)
                    .map_err(|e| MarlError::NonFiniteLoss { what: format!("actor: {e}") })?;
                actor_loss = stats.loss;
                entropy = stats.entropy;
                clip_fraction = stats.clip_fraction;
            }
        }

        // Critic updates on normalized targets.
        self.value_norm.update(&returns);
        let targets: Vec<f64> = returns.iter().map(|&r| self.value_norm.normalize(r)).collect();
        let mut state_inputs = Vec::new();
        let mut v_old_norm = Vec::new();
        for seg in &segments {
            for (enc, &v) in seg.state_enc.iter().zip(seg.step_values.iter()) {
                state_inputs.push(enc.clone());
                v_old_norm.push(self.value_norm.normalize(v));
            }
        }
        let mut critic_loss = 0.0;
        for _ in 0..self.cfg.mini_epochs {
            for start in (0..state_inputs.len()).step_by(chunk.max(1)) {
                let end = (start + chunk).min(state_inputs.len());
                let batch = CriticBatch {
                    inputs: &state_inputs[start..end],
                    targets: &targets[start..end],
                    v_old: &v_old_norm[start..end],
                };
                let mut grads = vec![0.0; self.critic.num_params()];
                critic_loss = ppo_critic_loss(
                    &self.critic,
                    &batch,
                    self.cfg.clip_ratio,
                    self.cfg.value_coef,
                    &mut grads,
                )?;
                clip_global_norm(&mut grads, self.cfg.max_grad_norm);
                self.opt_critic
                    .adam_step(self.critic.params_mut(), &grads)
                    .map_err(|e| MarlError::NonFiniteLoss { what: format!("critic: {e}") })?;
            }
        }

        // KL between the sampling-time policy and the updated one.
        let mut kl = 0.0;
        for ((input, mask), old) in inputs.iter().zip(masks.iter()).zip(probs_old.iter()) {
            let probs = masked_softmax(&self.policy.forward(input)?, mask);
            kl += kl_divergence(old, &probs);
        }
        kl /= inputs.len() as f64;

        self.iter += 1;
        let steps = returns.len() as f64;
        let mean_team_reward =
            segments.iter().flat_map(|s| s.step_rewards.iter()).sum::<f64>() / steps;
        Ok(IterationMetrics {
            iter: self.iter,
            env_steps: self.env_steps,
            actor_loss,
            critic_loss,
            il_loss,
            il_accuracy,
            kl_old_new: kl,
            entropy,
            clip_fraction,
            mean_team_reward,
            wall_ms: t0.elapsed().as_millis(),
        })
    }
}
