//! Win-rate evaluation over seeded rounds.

use super::policy::{argmax, masked_softmax, sample};
use super::trainer::policy_input;
use crate::envs::Outcome;
use crate::game::{observe, step, Game, GameError, GlobalState, JointAllyAction};
use crate::imitation::{ImitatorNets, PredictMode};
use crate::nn::ParamNet;
use crate::rng::{self, Rng};
use serde::{Deserialize, Serialize};

/// Games with a terminal win judgment.
pub trait Versus: Game {
    fn outcome(&self, terminal_state: &GlobalState) -> Result<Outcome, GameError>;
}

impl Versus for crate::envs::GridMiner {
    fn outcome(&self, terminal_state: &GlobalState) -> Result<Outcome, GameError> {
        self.win_check(terminal_state)
    }
}

impl Versus for crate::envs::ChainGame {
    /// The ally wins by ending on the goal cell; the enemy wins by ending on
    /// top of the ally; anything else is a draw.
    fn outcome(&self, terminal_state: &GlobalState) -> Result<Outcome, GameError> {
        let spec = self.spec();
        if terminal_state.step < spec.horizon {
            return Err(GameError::NotTerminal {
                step: terminal_state.step,
                horizon: spec.horizon,
            });
        }
        let ally = terminal_state.allies[0][0];
        let enemy = terminal_state.enemies[0][0];
        Ok(if ally == self.goal() {
            Outcome::AllyWin
        } else if enemy == ally {
            Outcome::EnemyWin
        } else {
            Outcome::Draw
        })
    }
}

/// How an ally chooses actions during evaluation.
pub trait AgentPolicy {
    fn act(&self, game: &dyn Game, state: &GlobalState, agent: usize, rng: &mut Rng) -> usize;
}

/// A trained actor with its imitator in the loop.
///
/// Predictions always use the mode (argmax atom); evaluation rounds differ
/// through sampled actions unless `greedy_actions` pins them to the argmax.
pub struct NetAgent<'a> {
    pub policy: &'a ParamNet,
    pub imitator: &'a ImitatorNets,
    pub zero_mask_augmentation: bool,
    pub greedy_actions: bool,
}

impl AgentPolicy for NetAgent<'_> {
    fn act(&self, game: &dyn Game, state: &GlobalState, agent: usize, rng: &mut Rng) -> usize {
        let spec = game.spec();
        let (n_allies, n_slots) = (spec.n_allies, spec.n_enemies);
        let obs = observe(game, state, agent);
        let enc = obs.encode();
        let mask = game.action_mask(state, agent);
        let none_preds = vec![None; n_slots];

        let input0 = policy_input(&enc, &none_preds, agent, n_allies, n_slots);
        let probs0 = masked_softmax(&self.policy.forward(&input0).expect("policy"), &mask);
        let provisional = if self.greedy_actions { argmax(&probs0) } else { sample(&probs0, rng) };

        let present: Vec<bool> = obs.enemy_slots.iter().map(|s| s.present).collect();
        let preds = self.imitator.predict_next_enemy_states(
            &enc,
            provisional,
            &present,
            PredictMode::Mode,
            rng,
        );
        let used = if self.zero_mask_augmentation { none_preds } else { preds };

        let input = policy_input(&enc, &used, agent, n_allies, n_slots);
        let probs = masked_softmax(&self.policy.forward(&input).expect("policy"), &mask);
        if self.greedy_actions {
            argmax(&probs)
        } else {
            sample(&probs, rng)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WinRateReport {
    pub episodes: usize,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub win_rate: f64,
    /// Wilson 95% interval on the win rate.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Plays `episodes` seeded rounds to the horizon and reports the win rate
/// with its Wilson interval. Draws count against the win rate.
pub fn evaluate_winrate(
    game: &dyn Versus,
    agent: &dyn AgentPolicy,
    episodes: usize,
    seed: u64,
) -> WinRateReport {
    assert!(episodes >= 1, "need at least one evaluation episode");
    let spec = game.spec();
    let mut wins = 0;
    let mut draws = 0;
    let mut losses = 0;
    for episode in 0..episodes {
        let mut env_rng = rng::stream(seed, "eval-env", episode as u64);
        let mut act_rng = rng::stream(seed, "eval-act", episode as u64);
        let mut state = game.initial_state(&mut env_rng);
        while state.step < spec.horizon {
            let joint = JointAllyAction(
                (0..spec.n_allies).map(|i| agent.act(game, &state, i, &mut act_rng)).collect(),
            );
            state = step(game, &state, &joint, &mut env_rng).expect("eval step").next_state;
        }
        match game.outcome(&state).expect("terminal state") {
            Outcome::AllyWin => wins += 1,
            Outcome::Draw => draws += 1,
            Outcome::EnemyWin => losses += 1,
        }
    }
    let (ci_low, ci_high) = wilson_interval(wins, episodes);
    WinRateReport {
        episodes,
        wins,
        draws,
        losses,
        win_rate: wins as f64 / episodes as f64,
        ci_low,
        ci_high,
    }
}
