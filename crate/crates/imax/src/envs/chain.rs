//! ChainGame: a 1-D pursuit game small enough to enumerate exactly.
//!
//! One ally and one enemy move on a line of `n_positions` cells. The ally
//! earns +1 whenever it occupies the goal cell (the rightmost one); the
//! scripted enemy chases the ally. States are `(ally_pos, enemy_pos)` pairs,
//! so the whole kernel is a few hundred rows and every solver in the crate
//! can run against exact tables.

use crate::game::{
    AgentId, EnemyScript, EnumerableGame, Game, GameError, GameSpec, GlobalState,
    JointAllyAction, JointEnemyAction, StateSpaceKind,
};
use crate::rng::Rng;

pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_STAY: usize = 1;
pub const CHAIN_RIGHT: usize = 2;

fn delta(action: usize) -> i32 {
    match action {
        CHAIN_LEFT => -1,
        CHAIN_STAY => 0,
        CHAIN_RIGHT => 1,
        _ => unreachable!("chain action out of range"),
    }
}

/// Enemy movement rule.
#[derive(Debug, Clone)]
pub enum ChainScript {
    /// Move to minimize distance to the ally; ties break toward the
    /// leftmost-moving action.
    Greedy,
    /// Uniform over the given move set.
    UniformOver(Vec<usize>),
    /// Greedy with probability `1 - eps`, otherwise uniform over all moves.
    EpsilonGreedy { eps: f64 },
}

#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub n_positions: usize,
    pub horizon: u32,
    pub discount: f64,
    pub neighborhood_radius: i32,
    pub script: ChainScript,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            n_positions: 8,
            horizon: 20,
            discount: 0.9,
            // Full visibility by default; the chain exists for exact math.
            neighborhood_radius: 8,
            script: ChainScript::Greedy,
        }
    }
}

pub struct ChainGame {
    spec: GameSpec,
    n_positions: i32,
    script: ChainScriptImpl,
}

struct ChainScriptImpl {
    n_positions: i32,
    kind: ChainScript,
}

impl ChainGame {
    pub fn new(chain: ChainSpec) -> Result<Self, GameError> {
        if chain.n_positions < 2 {
            return Err(GameError::InvalidSpec("chain needs at least 2 positions".into()));
        }
        let spec = GameSpec {
            n_allies: 1,
            n_enemies: 1,
            ally_action_count: 3,
            state_space: StateSpaceKind::Enumerable,
            horizon: chain.horizon,
            discount: chain.discount,
            neighborhood_radius: chain.neighborhood_radius,
        };
        spec.validate()?;
        if let ChainScript::EpsilonGreedy { eps } = chain.script {
            if !(0.0..=1.0).contains(&eps) {
                return Err(GameError::InvalidSpec("eps must be in [0,1]".into()));
            }
        }
        Ok(ChainGame {
            spec,
            n_positions: chain.n_positions as i32,
            script: ChainScriptImpl { n_positions: chain.n_positions as i32, kind: chain.script },
        })
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions as usize
    }

    pub fn goal(&self) -> i32 {
        self.n_positions - 1
    }

    fn clamp(&self, pos: i32) -> i32 {
        pos.clamp(0, self.n_positions - 1)
    }

    fn ally_pos(state: &GlobalState) -> i32 {
        state.allies[0][0]
    }

    fn enemy_pos(state: &GlobalState) -> i32 {
        state.enemies[0][0]
    }

    fn make_state(&self, ally: i32, enemy: i32) -> GlobalState {
        GlobalState { allies: vec![vec![ally]], enemies: vec![vec![enemy]], env: vec![], step: 0 }
    }
}

impl ChainScriptImpl {
    fn greedy_action(&self, ally: i32, enemy: i32) -> usize {
        // Minimize post-move distance to the ally; preference order left,
        // stay, right resolves ties (including clamped boundary moves).
        let mut best = CHAIN_LEFT;
        let mut best_dist = i32::MAX;
        for action in [CHAIN_LEFT, CHAIN_STAY, CHAIN_RIGHT] {
            let next = (enemy + delta(action)).clamp(0, self.n_positions - 1);
            let dist = (next - ally).abs();
            if dist < best_dist {
                best = action;
                best_dist = dist;
            }
        }
        best
    }
}

impl EnemyScript for ChainScriptImpl {
    fn distribution(&self, state: &GlobalState) -> Vec<(JointEnemyAction, f64)> {
        let ally = ChainGame::ally_pos(state);
        let enemy = ChainGame::enemy_pos(state);
        match &self.kind {
            ChainScript::Greedy => vec![(vec![self.greedy_action(ally, enemy)], 1.0)],
            ChainScript::UniformOver(actions) => {
                let p = 1.0 / actions.len() as f64;
                actions.iter().map(|&a| (vec![a], p)).collect()
            }
            ChainScript::EpsilonGreedy { eps } => {
                let greedy = self.greedy_action(ally, enemy);
                let mut dist = vec![(vec![greedy], 1.0 - eps)];
                for a in [CHAIN_LEFT, CHAIN_STAY, CHAIN_RIGHT] {
                    dist.push((vec![a], eps / 3.0));
                }
                dist
            }
        }
    }
}

impl Game for ChainGame {
    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn initial_state(&self, _rng: &mut Rng) -> GlobalState {
        self.make_state(0, self.n_positions - 1)
    }

    fn apply(
        &self,
        state: &GlobalState,
        ally: &JointAllyAction,
        enemy: &JointEnemyAction,
    ) -> (GlobalState, Vec<f64>) {
        let next_ally = self.clamp(Self::ally_pos(state) + delta(ally.0[0]));
        let next_enemy = self.clamp(Self::enemy_pos(state) + delta(enemy[0]));
        let mut next = self.make_state(next_ally, next_enemy);
        next.step = state.step;
        let reward = if next_ally == self.goal() { 1.0 } else { 0.0 };
        (next, vec![reward])
    }

    fn script(&self) -> &dyn EnemyScript {
        &self.script
    }

    fn position(&self, state: &GlobalState, agent: AgentId) -> (i32, i32) {
        match agent {
            AgentId::Ally(i) => (state.allies[i][0], 0),
            AgentId::Enemy(j) => (state.enemies[j][0], 0),
        }
    }

    fn slot_encoding(&self, state: &GlobalState, agent: AgentId) -> Vec<f64> {
        let (x, _) = self.position(state, agent);
        vec![f64::from(x) / f64::from(self.n_positions - 1)]
    }

    fn self_encoding(&self, state: &GlobalState, ally: usize) -> Vec<f64> {
        vec![
            f64::from(state.allies[ally][0]) / f64::from(self.n_positions - 1),
            f64::from(state.step) / f64::from(self.spec.horizon),
        ]
    }

    fn slot_width(&self) -> usize {
        1
    }

    fn self_width(&self) -> usize {
        2
    }

    fn global_encoding(&self, state: &GlobalState) -> Vec<f64> {
        vec![
            f64::from(Self::ally_pos(state)) / f64::from(self.n_positions - 1),
            f64::from(Self::enemy_pos(state)) / f64::from(self.n_positions - 1),
            f64::from(state.step) / f64::from(self.spec.horizon),
        ]
    }

    fn global_width(&self) -> usize {
        3
    }

    fn action_mask(&self, _state: &GlobalState, _ally: usize) -> Vec<bool> {
        vec![true; 3]
    }

    fn enumerable(&self) -> Option<&dyn EnumerableGame> {
        Some(self)
    }
}

impl EnumerableGame for ChainGame {
    fn num_states(&self) -> usize {
        (self.n_positions * self.n_positions) as usize
    }

    fn state_at(&self, index: usize) -> GlobalState {
        let n = self.n_positions as usize;
        assert!(index < n * n, "state index out of range");
        self.make_state((index / n) as i32, (index % n) as i32)
    }

    fn state_index(&self, state: &GlobalState) -> usize {
        let n = self.n_positions as usize;
        Self::ally_pos(state) as usize * n + Self::enemy_pos(state) as usize
    }

    fn joint_ally_actions(&self) -> Vec<JointAllyAction> {
        (0..3).map(|a| JointAllyAction(vec![a])).collect()
    }

    fn joint_enemy_actions(&self) -> Vec<JointEnemyAction> {
        (0..3).map(|a| vec![a]).collect()
    }
}
