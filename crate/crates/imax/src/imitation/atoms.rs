//! Discrete next-state atoms for enemy prediction.
//!
//! Predicting raw coordinates would not give a proper distribution whose log
//! can appear in the soft value, so each enemy slot predicts a categorical
//! relative-move class instead: the four cardinal moves, staying put, or the
//! vanish sentinel used for slots with no visible enemy.

use crate::game::{AgentId, Game, Transition};

pub const N_ATOMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum MoveAtom {
    Stay = 0,
    Up = 1,
    Down = 2,
    Left = 3,
    Right = 4,
    /// Sentinel for slots whose enemy is not in the neighborhood.
    Vanish = 5,
}

impl MoveAtom {
    pub fn from_index(index: usize) -> MoveAtom {
        match index {
            0 => MoveAtom::Stay,
            1 => MoveAtom::Up,
            2 => MoveAtom::Down,
            3 => MoveAtom::Left,
            4 => MoveAtom::Right,
            5 => MoveAtom::Vanish,
            _ => panic!("atom index {index} out of range"),
        }
    }

    /// Classifies a single-cell cardinal move (or staying put).
    pub fn classify(prev: (i32, i32), next: (i32, i32)) -> MoveAtom {
        match (next.0 - prev.0, next.1 - prev.1) {
            (0, 0) => MoveAtom::Stay,
            (0, -1) => MoveAtom::Up,
            (0, 1) => MoveAtom::Down,
            (-1, 0) => MoveAtom::Left,
            (1, 0) => MoveAtom::Right,
            (dx, dy) => panic!("non-cardinal move ({dx},{dy}) cannot be classified"),
        }
    }

    /// Predicted next cell for an enemy currently at `pos`. `Vanish` keeps
    /// the position (the slot is masked downstream anyway).
    pub fn apply(self, pos: (i32, i32)) -> (i32, i32) {
        match self {
            MoveAtom::Stay | MoveAtom::Vanish => pos,
            MoveAtom::Up => (pos.0, pos.1 - 1),
            MoveAtom::Down => (pos.0, pos.1 + 1),
            MoveAtom::Left => (pos.0 - 1, pos.1),
            MoveAtom::Right => (pos.0 + 1, pos.1),
        }
    }
}

/// Atom targets for ally `agent` over one transition: the realized move
/// class for enemies visible at the pre-step observation, vanish otherwise.
pub fn atom_targets(game: &dyn Game, t: &Transition, agent: usize) -> Vec<usize> {
    let obs = &t.obs_before[agent];
    (0..game.spec().n_enemies)
        .map(|j| {
            if obs.enemy_slots[j].present {
                let prev = game.position(&t.state, AgentId::Enemy(j));
                let next = game.position(&t.next_state, AgentId::Enemy(j));
                MoveAtom::classify(prev, next) as usize
            } else {
                MoveAtom::Vanish as usize
            }
        })
        .collect()
}
