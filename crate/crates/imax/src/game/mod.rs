//! Competitive Markov game abstraction.
//!
//! Scripted enemy policies are folded into the transition dynamics: a step
//! first draws the joint enemy action from the game's script, then applies
//! the deterministic environment rules. Allies receive neighborhood-limited
//! observations; the learner may additionally read the full global state for
//! a centralized critic.
//!
//! Environment instances are independent: each rollout worker owns one game
//! value and one seeded stream, and nothing here shares mutable state.

use crate::dense::Tensor3;
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
    #[error("ally {agent} action {action} out of range (count {count})")]
    InvalidAction { agent: usize, action: usize, count: usize },
    #[error("joint action has {got} entries, game has {expected} allies")]
    ActionArity { expected: usize, got: usize },
    #[error("step on terminal state (step index {step} >= horizon {horizon})")]
    TerminalState { step: u32, horizon: u32 },
    #[error("state space is generative; exact enumeration unsupported")]
    NotEnumerable,
    #[error("state is not terminal (step {step} < horizon {horizon})")]
    NotTerminal { step: u32, horizon: u32 },
}

/// Whether the full state space can be enumerated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateSpaceKind {
    Enumerable,
    Generative,
}

/// Static description of a game instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    pub n_allies: usize,
    pub n_enemies: usize,
    /// Discrete actions available to each ally agent.
    pub ally_action_count: usize,
    pub state_space: StateSpaceKind,
    pub horizon: u32,
    /// Discount factor in (0, 1).
    pub discount: f64,
    /// Chebyshev radius of each ally's observation neighborhood.
    pub neighborhood_radius: i32,
}

impl GameSpec {
    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(GameError::InvalidSpec(format!(
                "discount must be in (0,1), got {}",
                self.discount
            )));
        }
        if self.horizon < 1 {
            return Err(GameError::InvalidSpec("horizon must be >= 1".into()));
        }
        if self.n_allies < 1 || self.n_enemies < 1 || self.ally_action_count < 1 {
            return Err(GameError::InvalidSpec("agent and action counts must be >= 1".into()));
        }
        if self.neighborhood_radius < 0 {
            return Err(GameError::InvalidSpec("neighborhood radius must be >= 0".into()));
        }
        Ok(())
    }
}

/// Full game state: per-agent integer local states plus environment scalars.
///
/// Keeping the state integral makes enumeration, hashing and bit-exact
/// replay trivial; observations encode to floats.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalState {
    pub allies: Vec<Vec<i32>>,
    pub enemies: Vec<Vec<i32>>,
    pub env: Vec<i32>,
    pub step: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentId {
    Ally(usize),
    Enemy(usize),
}

/// One observation slot: a presence flag plus the observed agent's encoded
/// local state. Masked slots hold the sentinel (flag 0, all-zero fields) so
/// nothing about hidden agents leaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub present: bool,
    pub state: Vec<f64>,
}

/// An ally's neighborhood-limited view of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub self_state: Vec<f64>,
    /// One slot per other ally, ordered by agent id.
    pub ally_slots: Vec<Slot>,
    /// One slot per enemy, ordered by agent id.
    pub enemy_slots: Vec<Slot>,
}

impl Observation {
    /// Fixed-width flat encoding: self fields, then `(flag, fields..)` per
    /// ally slot, then per enemy slot.
    pub fn encode(&self) -> Vec<f64> {
        let mut out = self.self_state.clone();
        for slot in self.ally_slots.iter().chain(self.enemy_slots.iter()) {
            out.push(if slot.present { 1.0 } else { 0.0 });
            out.extend_from_slice(&slot.state);
        }
        out
    }

    pub fn encoded_width(self_width: usize, slot_width: usize, n_slots: usize) -> usize {
        self_width + n_slots * (1 + slot_width)
    }
}

/// One discrete action index per ally agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAllyAction(pub Vec<usize>);

/// One action index per enemy agent.
pub type JointEnemyAction = Vec<usize>;

/// Deterministic-or-stochastic rule mapping a global state to a joint enemy
/// action distribution. Scripts are part of the environment: their draws
/// come from the environment's seed stream.
pub trait EnemyScript: Send + Sync {
    /// Support and probabilities; must sum to 1 for every state.
    fn distribution(&self, state: &GlobalState) -> Vec<(JointEnemyAction, f64)>;
}

/// Everything recorded about one environment step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub state: GlobalState,
    pub action: JointAllyAction,
    pub next_state: GlobalState,
    /// Per-ally reward.
    pub rewards: Vec<f64>,
    pub obs_before: Vec<Observation>,
    pub obs_after: Vec<Observation>,
    /// Per ally: `(enemy id, next local state)` for exactly the enemies in
    /// the ally's neighborhood at the pre-step state.
    pub enemy_next: Vec<Vec<(usize, Vec<i32>)>>,
    pub terminal: bool,
}

/// Game rules: deterministic dynamics plus a scripted enemy side.
pub trait Game: Send + Sync {
    fn spec(&self) -> &GameSpec;

    fn initial_state(&self, rng: &mut Rng) -> GlobalState;

    /// Environment dynamics given both joint actions. Deterministic; any
    /// stochasticity lives in the enemy script. Returns the next state
    /// (step index not yet advanced) and per-ally rewards.
    fn apply(
        &self,
        state: &GlobalState,
        ally: &JointAllyAction,
        enemy: &JointEnemyAction,
    ) -> (GlobalState, Vec<f64>);

    fn script(&self) -> &dyn EnemyScript;

    /// Grid position used for Chebyshev neighborhood tests.
    fn position(&self, state: &GlobalState, agent: AgentId) -> (i32, i32);

    /// Encoded local state of an agent as it appears in observation slots.
    fn slot_encoding(&self, state: &GlobalState, agent: AgentId) -> Vec<f64>;

    /// Encoded own state, including any local environment features.
    fn self_encoding(&self, state: &GlobalState, ally: usize) -> Vec<f64>;

    fn slot_width(&self) -> usize;

    fn self_width(&self) -> usize;

    /// Global-state encoding for the centralized critic.
    fn global_encoding(&self, state: &GlobalState) -> Vec<f64>;

    fn global_width(&self) -> usize;

    /// Per-ally valid-action mask; masked actions must never be sampled.
    fn action_mask(&self, state: &GlobalState, ally: usize) -> Vec<bool>;

    /// Exact enumeration support, if the state space allows it.
    fn enumerable(&self) -> Option<&dyn EnumerableGame>;
}

/// Extension for games whose state space can be enumerated exactly.
pub trait EnumerableGame: Game {
    fn num_states(&self) -> usize;

    /// State for a dense index; stable ordering, step index 0.
    fn state_at(&self, index: usize) -> GlobalState;

    /// Dense index of a state (the step index is ignored).
    fn state_index(&self, state: &GlobalState) -> usize;

    /// All joint ally actions in index order.
    fn joint_ally_actions(&self) -> Vec<JointAllyAction>;

    /// All joint enemy actions that any script may emit.
    fn joint_enemy_actions(&self) -> Vec<JointEnemyAction>;
}

pub fn encoded_obs_width(game: &dyn Game) -> usize {
    let spec = game.spec();
    Observation::encoded_width(
        game.self_width(),
        game.slot_width(),
        spec.n_allies - 1 + spec.n_enemies,
    )
}

fn chebyshev(a: (i32, i32), b: (i32, i32)) -> i32 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Builds ally `agent`'s observation of `state`. Pure function of its
/// arguments: repeated calls are bit-identical.
pub fn observe(game: &dyn Game, state: &GlobalState, agent: usize) -> Observation {
    let spec = game.spec();
    assert!(agent < spec.n_allies, "ally index {agent} out of range");
    let radius = spec.neighborhood_radius;
    let own = game.position(state, AgentId::Ally(agent));
    let slot = |id: AgentId| -> Slot {
        if chebyshev(own, game.position(state, id)) <= radius {
            Slot { present: true, state: game.slot_encoding(state, id) }
        } else {
            Slot { present: false, state: vec![0.0; game.slot_width()] }
        }
    };
    Observation {
        self_state: game.self_encoding(state, agent),
        ally_slots: (0..spec.n_allies).filter(|&j| j != agent).map(|j| slot(AgentId::Ally(j))).collect(),
        enemy_slots: (0..spec.n_enemies).map(|j| slot(AgentId::Enemy(j))).collect(),
    }
}

/// Enemy ids within ally `agent`'s neighborhood at `state`, in id order.
pub fn neighborhood_enemies(game: &dyn Game, state: &GlobalState, agent: usize) -> Vec<usize> {
    let spec = game.spec();
    let own = game.position(state, AgentId::Ally(agent));
    (0..spec.n_enemies)
        .filter(|&j| chebyshev(own, game.position(state, AgentId::Enemy(j))) <= spec.neighborhood_radius)
        .collect()
}

fn sample_enemy_action(
    script: &dyn EnemyScript,
    state: &GlobalState,
    rng: &mut Rng,
) -> JointEnemyAction {
    let dist = script.distribution(state);
    debug_assert!(
        (dist.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-9,
        "enemy script distribution must sum to 1"
    );
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (action, p) in &dist {
        acc += p;
        if draw < acc {
            return action.clone();
        }
    }
    dist.last().expect("enemy script distribution is empty").0.clone()
}

/// Advances the game one step: draws the enemy joint action from the script,
/// applies the environment dynamics, and fills rewards, observations and the
/// per-ally enemy-neighborhood next states.
pub fn step(
    game: &dyn Game,
    state: &GlobalState,
    action: &JointAllyAction,
    rng: &mut Rng,
) -> Result<Transition, GameError> {
    let spec = game.spec();
    if state.step >= spec.horizon {
        return Err(GameError::TerminalState { step: state.step, horizon: spec.horizon });
    }
    if action.0.len() != spec.n_allies {
        return Err(GameError::ActionArity { expected: spec.n_allies, got: action.0.len() });
    }
    for (agent, &a) in action.0.iter().enumerate() {
        if a >= spec.ally_action_count {
            return Err(GameError::InvalidAction { agent, action: a, count: spec.ally_action_count });
        }
    }

    let enemy_action = sample_enemy_action(game.script(), state, rng);
    let (mut next_state, rewards) = game.apply(state, action, &enemy_action);
    next_state.step = state.step + 1;

    let obs_before: Vec<Observation> =
        (0..spec.n_allies).map(|i| observe(game, state, i)).collect();
    let obs_after: Vec<Observation> =
        (0..spec.n_allies).map(|i| observe(game, &next_state, i)).collect();
    let enemy_next: Vec<Vec<(usize, Vec<i32>)>> = (0..spec.n_allies)
        .map(|i| {
            neighborhood_enemies(game, state, i)
                .into_iter()
                .map(|j| (j, next_state.enemies[j].clone()))
                .collect()
        })
        .collect();

    let terminal = next_state.step >= spec.horizon;
    Ok(Transition {
        state: state.clone(),
        action: action.clone(),
        next_state,
        rewards,
        obs_before,
        obs_after,
        enemy_next,
        terminal,
    })
}

/// Exact enemy-marginalized transition table `P(s' | s, a)`.
///
/// Every row sums over the script's joint enemy action distribution, so row
/// sums are 1 up to float rounding. Generative games are rejected.
pub fn marginalized_transition_matrix(game: &dyn Game) -> Result<Tensor3, GameError> {
    let en = game.enumerable().ok_or(GameError::NotEnumerable)?;
    let n = en.num_states();
    let actions = en.joint_ally_actions();
    let mut p = Tensor3::zeros(n, actions.len(), n);
    for s in 0..n {
        let state = en.state_at(s);
        let dist = en.script().distribution(&state);
        for (a, ally_action) in actions.iter().enumerate() {
            for (enemy_action, prob) in &dist {
                let (next, _) = en.apply(&state, ally_action, enemy_action);
                *p.at_mut(s, a, en.state_index(&next)) += prob;
            }
        }
    }
    Ok(p)
}
