//! GridMiner: two allies race two scripted enemies for gold on a small grid.
//!
//! Agents move in the four cardinal directions or mine the pile they stand
//! on. Mining extracts one unit per step; when a pile cannot serve every
//! claimant in a step, allies take priority (then lower agent id). The team
//! with more mined gold at the horizon wins. Total gold is conserved:
//! `mined_allies + mined_enemies + remaining == initial`.

use crate::game::{
    AgentId, EnemyScript, EnumerableGame, Game, GameError, GameSpec, GlobalState,
    JointAllyAction, JointEnemyAction, StateSpaceKind,
};
use crate::rng::{self, Rng};
use serde::{Deserialize, Serialize};

pub const MOVE_UP: usize = 0;
pub const MOVE_DOWN: usize = 1;
pub const MOVE_LEFT: usize = 2;
pub const MOVE_RIGHT: usize = 3;
pub const MINE: usize = 4;

pub const MINER_ACTIONS: usize = 5;

fn move_delta(action: usize) -> (i32, i32) {
    match action {
        MOVE_UP => (0, -1),
        MOVE_DOWN => (0, 1),
        MOVE_LEFT => (-1, 0),
        MOVE_RIGHT => (1, 0),
        MINE => (0, 0),
        _ => unreachable!("miner action out of range"),
    }
}

/// Enemy behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    /// Greedy shortest path to the nearest remaining pile.
    Easy,
    /// Greedy with a 2-step lookahead over its own actions.
    Hard,
    /// Uniform random actions; only useful for tests and sanity baselines.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pile {
    pub x: i32,
    pub y: i32,
    pub amount: i32,
}

/// Where the gold sits.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Piles placed by a seeded stream: `n_piles` distinct non-start cells,
    /// total gold split with every pile getting at least one unit.
    Seeded { seed: u64, n_piles: usize, total_gold: i32 },
    Explicit(Vec<Pile>),
}

#[derive(Debug, Clone)]
pub struct GridMinerSpec {
    pub width: i32,
    pub height: i32,
    pub horizon: u32,
    pub discount: f64,
    pub neighborhood_radius: i32,
    pub difficulty: Difficulty,
    pub layout: Layout,
}

impl Default for GridMinerSpec {
    fn default() -> Self {
        GridMinerSpec {
            width: 8,
            height: 8,
            horizon: 64,
            discount: 0.99,
            neighborhood_radius: 4,
            difficulty: Difficulty::Easy,
            layout: Layout::Seeded { seed: 0, n_piles: 4, total_gold: 12 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    AllyWin,
    EnemyWin,
    Draw,
}

pub struct GridMiner {
    spec: GameSpec,
    width: i32,
    height: i32,
    piles: Vec<Pile>,
    total_gold: i32,
    script: MinerScript,
}

struct MinerScript {
    difficulty: Difficulty,
}

const N_ALLIES: usize = 2;
const N_ENEMIES: usize = 2;

impl GridMiner {
    pub fn new(ms: GridMinerSpec) -> Result<Self, GameError> {
        if ms.width < 2 || ms.height < 2 {
            return Err(GameError::InvalidSpec("grid must be at least 2x2".into()));
        }
        let starts = Self::start_cells(ms.width, ms.height);
        let piles = match &ms.layout {
            Layout::Seeded { seed, n_piles, total_gold } => {
                generate_layout(ms.width, ms.height, *n_piles, *total_gold, &starts, *seed)?
            }
            Layout::Explicit(piles) => {
                for p in piles {
                    if p.x < 0 || p.x >= ms.width || p.y < 0 || p.y >= ms.height {
                        return Err(GameError::InvalidSpec(format!(
                            "pile ({},{}) outside the grid",
                            p.x, p.y
                        )));
                    }
                    if p.amount < 1 {
                        return Err(GameError::InvalidSpec("pile amounts must be >= 1".into()));
                    }
                }
                piles.clone()
            }
        };
        let total_gold = piles.iter().map(|p| p.amount).sum();
        let spec = GameSpec {
            n_allies: N_ALLIES,
            n_enemies: N_ENEMIES,
            ally_action_count: MINER_ACTIONS,
            state_space: StateSpaceKind::Generative,
            horizon: ms.horizon,
            discount: ms.discount,
            neighborhood_radius: ms.neighborhood_radius,
        };
        spec.validate()?;
        Ok(GridMiner {
            spec,
            width: ms.width,
            height: ms.height,
            piles,
            total_gold,
            script: MinerScript { difficulty: ms.difficulty },
        })
    }

    fn start_cells(width: i32, height: i32) -> [(i32, i32); 4] {
        // Allies on the left edge, enemies mirrored on the right.
        [(0, 0), (0, height - 1), (width - 1, 0), (width - 1, height - 1)]
    }

    pub fn n_piles(&self) -> usize {
        self.piles.len()
    }

    pub fn total_gold(&self) -> i32 {
        self.total_gold
    }

    fn pile_amounts(state: &GlobalState) -> &[i32] {
        &state.env
    }

    /// (mined by allies, mined by enemies, remaining in piles).
    pub fn gold_totals(&self, state: &GlobalState) -> (i32, i32, i32) {
        let allies: i32 = state.allies.iter().map(|a| a[2]).sum();
        let enemies: i32 = state.enemies.iter().map(|e| e[2]).sum();
        let remaining: i32 = Self::pile_amounts(state).iter().sum();
        (allies, enemies, remaining)
    }

    /// Compares team totals at the horizon; draw when equal.
    pub fn win_check(&self, state: &GlobalState) -> Result<Outcome, GameError> {
        if state.step < self.spec.horizon {
            return Err(GameError::NotTerminal { step: state.step, horizon: self.spec.horizon });
        }
        let (allies, enemies, _) = self.gold_totals(state);
        Ok(match allies.cmp(&enemies) {
            std::cmp::Ordering::Greater => Outcome::AllyWin,
            std::cmp::Ordering::Less => Outcome::EnemyWin,
            std::cmp::Ordering::Equal => Outcome::Draw,
        })
    }

    fn agent_xy(state: &GlobalState, agent: AgentId) -> (i32, i32) {
        match agent {
            AgentId::Ally(i) => (state.allies[i][0], state.allies[i][1]),
            AgentId::Enemy(j) => (state.enemies[j][0], state.enemies[j][1]),
        }
    }

    fn clamp_xy(&self, x: i32, y: i32) -> (i32, i32) {
        (x.clamp(0, self.width - 1), y.clamp(0, self.height - 1))
    }

    fn pile_index_at(&self, amounts: &[i32], x: i32, y: i32) -> Option<usize> {
        self.piles
            .iter()
            .enumerate()
            .find(|(k, p)| p.x == x && p.y == y && amounts[*k] > 0)
            .map(|(k, _)| k)
    }

    /// The scripted enemy decision for one enemy agent.
    pub fn greedy_enemy_action(
        &self,
        state: &GlobalState,
        enemy: usize,
        difficulty: Difficulty,
    ) -> usize {
        let (x, y) = Self::agent_xy(state, AgentId::Enemy(enemy));
        let amounts = Self::pile_amounts(state);
        match difficulty {
            Difficulty::Easy => self.easy_action(x, y, amounts),
            Difficulty::Hard => self.hard_action(x, y, amounts),
            Difficulty::Uniform => unreachable!("uniform difficulty has no greedy action"),
        }
    }

    /// Nearest live pile by Manhattan distance; ties break toward the
    /// smaller column, then the smaller row.
    fn nearest_pile(&self, x: i32, y: i32, amounts: &[i32]) -> Option<(usize, i32)> {
        let mut best: Option<(usize, i32)> = None;
        for (k, p) in self.piles.iter().enumerate() {
            if amounts[k] <= 0 {
                continue;
            }
            let d = (p.x - x).abs() + (p.y - y).abs();
            let better = match best {
                None => true,
                Some((bk, bd)) => {
                    let b = &self.piles[bk];
                    d < bd || (d == bd && (p.x < b.x || (p.x == b.x && p.y < b.y)))
                }
            };
            if better {
                best = Some((k, d));
            }
        }
        best
    }

    fn easy_action(&self, x: i32, y: i32, amounts: &[i32]) -> usize {
        match self.nearest_pile(x, y, amounts) {
            None => MINE, // nothing left to chase; mining off-pile is a no-op
            Some((k, d)) => {
                if d == 0 {
                    return MINE;
                }
                let p = &self.piles[k];
                if p.x != x {
                    if p.x < x {
                        MOVE_LEFT
                    } else {
                        MOVE_RIGHT
                    }
                } else if p.y < y {
                    MOVE_UP
                } else {
                    MOVE_DOWN
                }
            }
        }
    }

    /// Exhaustive search over this enemy's own next two actions, others
    /// frozen. Score: units mined, then the richest reachable context at the
    /// final cell (nearest-pile amount, then proximity).
    fn hard_action(&self, x: i32, y: i32, amounts: &[i32]) -> usize {
        let mut best_action = MINE;
        let mut best_score = (i32::MIN, i32::MIN, i32::MIN);
        for a1 in 0..MINER_ACTIONS {
            for a2 in 0..MINER_ACTIONS {
                let mut amts = amounts.to_vec();
                let (mut cx, mut cy) = (x, y);
                let mut mined = 0;
                for action in [a1, a2] {
                    if action == MINE {
                        if let Some(k) = self.pile_index_at(&amts, cx, cy) {
                            amts[k] -= 1;
                            mined += 1;
                        }
                    } else {
                        let (dx, dy) = move_delta(action);
                        let (nx, ny) = self.clamp_xy(cx + dx, cy + dy);
                        cx = nx;
                        cy = ny;
                    }
                }
                let (amt, dist) = match self.nearest_pile(cx, cy, &amts) {
                    Some((k, d)) => (amts[k], d),
                    None => (0, 0),
                };
                let score = (mined, amt, -dist);
                if score > best_score {
                    best_score = score;
                    best_action = a1;
                }
            }
        }
        best_action
    }
}

impl EnemyScript for MinerScript {
    fn distribution(&self, _state: &GlobalState) -> Vec<(JointEnemyAction, f64)> {
        unreachable!("GridMiner builds enemy joint actions through the game")
    }
}

/// Joint enemy distribution: the product of per-enemy decisions.
struct MinerJointScript<'a> {
    game: &'a GridMiner,
}

impl EnemyScript for GridMiner {
    fn distribution(&self, state: &GlobalState) -> Vec<(JointEnemyAction, f64)> {
        MinerJointScript { game: self }.distribution(state)
    }
}

impl EnemyScript for MinerJointScript<'_> {
    fn distribution(&self, state: &GlobalState) -> Vec<(JointEnemyAction, f64)> {
        let per_enemy: Vec<Vec<(usize, f64)>> = (0..N_ENEMIES)
            .map(|j| match self.game.script.difficulty {
                Difficulty::Uniform => {
                    // Same validity rule as the allies' action mask: mining
                    // only counts as an option on a live pile.
                    let (x, y) = GridMiner::agent_xy(state, AgentId::Enemy(j));
                    let mine_ok = self.game.pile_index_at(&state.env, x, y).is_some();
                    let valid: Vec<usize> = (0..MINER_ACTIONS)
                        .filter(|&a| a != MINE || mine_ok)
                        .collect();
                    let p = 1.0 / valid.len() as f64;
                    valid.into_iter().map(|a| (a, p)).collect()
                }
                d => vec![(self.game.greedy_enemy_action(state, j, d), 1.0)],
            })
            .collect();
        let mut joint: Vec<(JointEnemyAction, f64)> = vec![(Vec::new(), 1.0)];
        for dist in per_enemy {
            let mut next = Vec::with_capacity(joint.len() * dist.len());
            for (prefix, p) in &joint {
                for (a, q) in &dist {
                    let mut action = prefix.clone();
                    action.push(*a);
                    next.push((action, p * q));
                }
            }
            joint = next;
        }
        joint
    }
}

impl Game for GridMiner {
    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn initial_state(&self, _rng: &mut Rng) -> GlobalState {
        let starts = Self::start_cells(self.width, self.height);
        GlobalState {
            allies: vec![vec![starts[0].0, starts[0].1, 0], vec![starts[1].0, starts[1].1, 0]],
            enemies: vec![vec![starts[2].0, starts[2].1, 0], vec![starts[3].0, starts[3].1, 0]],
            env: self.piles.iter().map(|p| p.amount).collect(),
            step: 0,
        }
    }

    fn apply(
        &self,
        state: &GlobalState,
        ally: &JointAllyAction,
        enemy: &JointEnemyAction,
    ) -> (GlobalState, Vec<f64>) {
        let mut next = state.clone();
        let mut rewards = vec![0.0; N_ALLIES];

        // Mining first: claims resolve at pre-move positions, allies before
        // enemies, lower id first.
        let mut claims: Vec<(bool, usize)> = Vec::new();
        for (i, &a) in ally.0.iter().enumerate() {
            if a == MINE {
                claims.push((true, i));
            }
        }
        for (j, &a) in enemy.iter().enumerate() {
            if a == MINE {
                claims.push((false, j));
            }
        }
        for (is_ally, idx) in claims {
            let (x, y) = if is_ally {
                (next.allies[idx][0], next.allies[idx][1])
            } else {
                (next.enemies[idx][0], next.enemies[idx][1])
            };
            if let Some(k) = self.pile_index_at(&next.env, x, y) {
                next.env[k] -= 1;
                if is_ally {
                    next.allies[idx][2] += 1;
                    rewards[idx] += 1.0;
                } else {
                    next.enemies[idx][2] += 1;
                }
            }
        }

        // Then simultaneous movement with boundary clamping.
        for (i, &a) in ally.0.iter().enumerate() {
            if a != MINE {
                let (dx, dy) = move_delta(a);
                let (x, y) = self.clamp_xy(next.allies[i][0] + dx, next.allies[i][1] + dy);
                next.allies[i][0] = x;
                next.allies[i][1] = y;
            }
        }
        for (j, &a) in enemy.iter().enumerate() {
            if a != MINE {
                let (dx, dy) = move_delta(a);
                let (x, y) = self.clamp_xy(next.enemies[j][0] + dx, next.enemies[j][1] + dy);
                next.enemies[j][0] = x;
                next.enemies[j][1] = y;
            }
        }

        (next, rewards)
    }

    fn script(&self) -> &dyn EnemyScript {
        self
    }

    fn position(&self, state: &GlobalState, agent: AgentId) -> (i32, i32) {
        Self::agent_xy(state, agent)
    }

    fn slot_encoding(&self, state: &GlobalState, agent: AgentId) -> Vec<f64> {
        let (x, y) = Self::agent_xy(state, agent);
        let mined = match agent {
            AgentId::Ally(i) => state.allies[i][2],
            AgentId::Enemy(j) => state.enemies[j][2],
        };
        vec![
            f64::from(x) / f64::from(self.width - 1),
            f64::from(y) / f64::from(self.height - 1),
            f64::from(mined) / f64::from(self.total_gold.max(1)),
        ]
    }

    fn self_encoding(&self, state: &GlobalState, ally: usize) -> Vec<f64> {
        let (x, y) = (state.allies[ally][0], state.allies[ally][1]);
        let mut out = self.slot_encoding(state, AgentId::Ally(ally));
        for (k, p) in self.piles.iter().enumerate() {
            out.push(f64::from(p.x - x) / f64::from(self.width - 1));
            out.push(f64::from(p.y - y) / f64::from(self.height - 1));
            out.push(f64::from(state.env[k]) / f64::from(self.total_gold.max(1)));
        }
        out.push(f64::from(state.step) / f64::from(self.spec.horizon));
        out
    }

    fn slot_width(&self) -> usize {
        3
    }

    fn self_width(&self) -> usize {
        3 + 3 * self.piles.len() + 1
    }

    fn global_encoding(&self, state: &GlobalState) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.global_width());
        for i in 0..N_ALLIES {
            out.extend(self.slot_encoding(state, AgentId::Ally(i)));
        }
        for j in 0..N_ENEMIES {
            out.extend(self.slot_encoding(state, AgentId::Enemy(j)));
        }
        for (k, p) in self.piles.iter().enumerate() {
            out.push(f64::from(p.x) / f64::from(self.width - 1));
            out.push(f64::from(p.y) / f64::from(self.height - 1));
            out.push(f64::from(state.env[k]) / f64::from(self.total_gold.max(1)));
        }
        out.push(f64::from(state.step) / f64::from(self.spec.horizon));
        out
    }

    fn global_width(&self) -> usize {
        3 * (N_ALLIES + N_ENEMIES) + 3 * self.piles.len() + 1
    }

    fn action_mask(&self, state: &GlobalState, ally: usize) -> Vec<bool> {
        let (x, y) = (state.allies[ally][0], state.allies[ally][1]);
        let mut mask = vec![true; MINER_ACTIONS];
        mask[MINE] = self.pile_index_at(&state.env, x, y).is_some();
        mask
    }

    fn enumerable(&self) -> Option<&dyn EnumerableGame> {
        None
    }
}

fn generate_layout(
    width: i32,
    height: i32,
    n_piles: usize,
    total_gold: i32,
    starts: &[(i32, i32)],
    seed: u64,
) -> Result<Vec<Pile>, GameError> {
    if n_piles == 0 || total_gold < n_piles as i32 {
        return Err(GameError::InvalidSpec("need total gold >= piles >= 1".into()));
    }
    let free_cells = (width * height) as usize - starts.len();
    if n_piles > free_cells {
        return Err(GameError::InvalidSpec("more piles than free cells".into()));
    }
    let mut stream = rng::stream(seed, "layout", 0);
    use rand::Rng as _;
    let mut cells: Vec<(i32, i32)> = Vec::with_capacity(n_piles);
    while cells.len() < n_piles {
        let c = (stream.gen_range(0..width), stream.gen_range(0..height));
        if !starts.contains(&c) && !cells.contains(&c) {
            cells.push(c);
        }
    }
    let mut amounts = vec![1i32; n_piles];
    for _ in 0..(total_gold - n_piles as i32) {
        amounts[stream.gen_range(0..n_piles)] += 1;
    }
    Ok(cells
        .into_iter()
        .zip(amounts)
        .map(|((x, y), amount)| Pile { x, y, amount })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{marginalized_transition_matrix, observe, step};
    use crate::rng;
    use rand::Rng as _;

    fn miner_with(piles: Vec<Pile>, difficulty: Difficulty) -> GridMiner {
        GridMiner::new(GridMinerSpec {
            layout: Layout::Explicit(piles),
            difficulty,
            ..GridMinerSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn seeded_layout_conserves_requested_total() {
        let g = GridMiner::new(GridMinerSpec::default()).unwrap();
        assert_eq!(g.total_gold(), 12);
        assert_eq!(g.n_piles(), 4);
    }

    #[test]
    fn adjacent_easy_enemy_moves_onto_gold_then_mines() {
        let g = miner_with(vec![Pile { x: 6, y: 0, amount: 2 }], Difficulty::Easy);
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        // Enemy 0 starts at (7, 0); pile is adjacent at (6, 0).
        assert_eq!(g.greedy_enemy_action(&s, 0, Difficulty::Easy), MOVE_LEFT);
        s.enemies[0][0] = 6;
        assert_eq!(g.greedy_enemy_action(&s, 0, Difficulty::Easy), MINE);
    }

    #[test]
    fn equidistant_piles_tie_break_to_smaller_column() {
        let g = miner_with(
            vec![Pile { x: 2, y: 4, amount: 1 }, Pile { x: 6, y: 4, amount: 1 }],
            Difficulty::Easy,
        );
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        s.enemies[0][0] = 4;
        s.enemies[0][1] = 4;
        assert_eq!(g.greedy_enemy_action(&s, 0, Difficulty::Easy), MOVE_LEFT);
    }

    #[test]
    fn easy_script_move_never_increases_nearest_gold_distance() {
        let g = GridMiner::new(GridMinerSpec::default()).unwrap();
        let mut stream = rng::stream(3, "easy-invariant", 0);
        for _ in 0..500 {
            let mut s = g.initial_state(&mut stream);
            s.enemies[0][0] = stream.gen_range(0..8);
            s.enemies[0][1] = stream.gen_range(0..8);
            let (x, y) = (s.enemies[0][0], s.enemies[0][1]);
            let before = g.nearest_pile(x, y, &s.env).map(|(_, d)| d).unwrap();
            let action = g.greedy_enemy_action(&s, 0, Difficulty::Easy);
            if action == MINE {
                assert_eq!(before, 0);
            } else {
                let (dx, dy) = move_delta(action);
                let after = g.nearest_pile(x + dx, y + dy, &s.env).map(|(_, d)| d).unwrap();
                assert!(after < before, "easy move {action} did not approach gold");
            }
        }
    }

    /// Independent 2-ply search used as the oracle for the hard script.
    fn two_ply_oracle(g: &GridMiner, s: &GlobalState, enemy: usize) -> usize {
        let (sx, sy) = (s.enemies[enemy][0], s.enemies[enemy][1]);
        let mut best = (i32::MIN, i32::MIN, i32::MIN);
        let mut best_first = MINE;
        for first in 0..MINER_ACTIONS {
            for second in 0..MINER_ACTIONS {
                let mut amts = s.env.clone();
                let (mut x, mut y) = (sx, sy);
                let mut mined = 0;
                for a in [first, second] {
                    if a == MINE {
                        if let Some(k) = g.pile_index_at(&amts, x, y) {
                            amts[k] -= 1;
                            mined += 1;
                        }
                    } else {
                        let (dx, dy) = move_delta(a);
                        x = (x + dx).clamp(0, 7);
                        y = (y + dy).clamp(0, 7);
                    }
                }
                let (amt, dist) = match g.nearest_pile(x, y, &amts) {
                    Some((k, d)) => (amts[k], d),
                    None => (0, 0),
                };
                if (mined, amt, -dist) > best {
                    best = (mined, amt, -dist);
                    best_first = first;
                }
            }
        }
        best_first
    }

    #[test]
    fn hard_script_beats_greedy_on_two_step_trap() {
        // Equidistant piles: greedy tie-breaks to the poorer left pile, the
        // 2-ply script walks toward the richer right one.
        let g = miner_with(
            vec![Pile { x: 2, y: 4, amount: 1 }, Pile { x: 6, y: 4, amount: 3 }],
            Difficulty::Hard,
        );
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        s.enemies[0][0] = 4;
        s.enemies[0][1] = 4;
        let easy = g.greedy_enemy_action(&s, 0, Difficulty::Easy);
        let hard = g.greedy_enemy_action(&s, 0, Difficulty::Hard);
        assert_eq!(easy, MOVE_LEFT);
        assert_eq!(hard, MOVE_RIGHT);
        assert_eq!(hard, two_ply_oracle(&g, &s, 0));
    }

    #[test]
    fn hard_script_matches_two_ply_oracle_on_random_states() {
        let g = GridMiner::new(GridMinerSpec {
            difficulty: Difficulty::Hard,
            ..GridMinerSpec::default()
        })
        .unwrap();
        let mut stream = rng::stream(11, "hard-oracle", 0);
        for _ in 0..200 {
            let mut s = g.initial_state(&mut stream);
            s.enemies[1][0] = stream.gen_range(0..8);
            s.enemies[1][1] = stream.gen_range(0..8);
            for amt in s.env.iter_mut() {
                *amt = stream.gen_range(0..4);
            }
            assert_eq!(
                g.greedy_enemy_action(&s, 1, Difficulty::Hard),
                two_ply_oracle(&g, &s, 1)
            );
        }
    }

    #[test]
    fn win_check_compares_totals() {
        let g = GridMiner::new(GridMinerSpec::default()).unwrap();
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        s.step = g.spec().horizon;
        s.allies[0][2] = 5;
        s.enemies[0][2] = 3;
        assert_eq!(g.win_check(&s).unwrap(), Outcome::AllyWin);
        s.allies[0][2] = 4;
        s.enemies[0][2] = 4;
        assert_eq!(g.win_check(&s).unwrap(), Outcome::Draw);
        s.allies[0][2] = 0;
        s.enemies[0][2] = 1;
        assert_eq!(g.win_check(&s).unwrap(), Outcome::EnemyWin);
    }

    #[test]
    fn win_check_rejects_non_terminal_states() {
        let g = GridMiner::new(GridMinerSpec::default()).unwrap();
        let s = g.initial_state(&mut rng::stream(0, "env", 0));
        assert!(matches!(g.win_check(&s), Err(GameError::NotTerminal { .. })));
    }

    #[test]
    fn gold_is_conserved_through_random_play() {
        let g = GridMiner::new(GridMinerSpec {
            difficulty: Difficulty::Uniform,
            ..GridMinerSpec::default()
        })
        .unwrap();
        let mut env_rng = rng::stream(5, "env", 0);
        let mut act_rng = rng::stream(5, "act", 0);
        let mut s = g.initial_state(&mut env_rng);
        let initial = g.total_gold();
        while s.step < g.spec().horizon {
            let a = JointAllyAction(vec![act_rng.gen_range(0..5), act_rng.gen_range(0..5)]);
            let t = step(&g, &s, &a, &mut env_rng).unwrap();
            s = t.next_state;
            let (ma, me, rem) = g.gold_totals(&s);
            assert_eq!(ma + me + rem, initial);
        }
    }

    #[test]
    fn contested_final_unit_goes_to_the_ally() {
        let g = miner_with(vec![Pile { x: 3, y: 3, amount: 1 }], Difficulty::Uniform);
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        s.allies[0][0] = 3;
        s.allies[0][1] = 3;
        s.enemies[0][0] = 3;
        s.enemies[0][1] = 3;
        let (next, rewards) =
            g.apply(&s, &JointAllyAction(vec![MINE, MOVE_UP]), &vec![MINE, MOVE_UP]);
        assert_eq!(next.allies[0][2], 1);
        assert_eq!(next.enemies[0][2], 0);
        assert_eq!(rewards, vec![1.0, 0.0]);
        assert_eq!(next.env[0], 0);
    }

    #[test]
    fn mine_masked_off_gold() {
        let g = miner_with(vec![Pile { x: 3, y: 3, amount: 2 }], Difficulty::Easy);
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        assert!(!g.action_mask(&s, 0)[MINE]);
        s.allies[0][0] = 3;
        s.allies[0][1] = 3;
        assert!(g.action_mask(&s, 0)[MINE]);
    }

    #[test]
    fn enemy_outside_chebyshev_radius_is_masked() {
        let g = GridMiner::new(GridMinerSpec {
            neighborhood_radius: 1,
            layout: Layout::Explicit(vec![Pile { x: 4, y: 4, amount: 2 }]),
            ..GridMinerSpec::default()
        })
        .unwrap();
        // Brute-force the distance check over all enemy placements.
        let mut s = g.initial_state(&mut rng::stream(0, "env", 0));
        s.allies[0][0] = 4;
        s.allies[0][1] = 4;
        for x in 0..8 {
            for y in 0..8 {
                s.enemies[0][0] = x;
                s.enemies[0][1] = y;
                let obs = observe(&g, &s, 0);
                let dist = (x - 4).abs().max((y - 4).abs());
                assert_eq!(obs.enemy_slots[0].present, dist <= 1, "enemy at ({x},{y})");
            }
        }
    }

    #[test]
    fn generative_state_space_rejects_enumeration() {
        let g = GridMiner::new(GridMinerSpec::default()).unwrap();
        assert!(matches!(
            marginalized_transition_matrix(&g),
            Err(GameError::NotEnumerable)
        ));
    }
}
