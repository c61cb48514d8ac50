//! Concrete games: the exactly enumerable ChainGame for math verification
//! and the GridMiner benchmark against scripted enemies.

pub mod chain;
pub mod miner;

pub use chain::{ChainGame, ChainScript, ChainSpec, CHAIN_LEFT, CHAIN_RIGHT, CHAIN_STAY};
pub use miner::{
    Difficulty, GridMiner, GridMinerSpec, Layout, Outcome, Pile, MINE, MINER_ACTIONS, MOVE_DOWN,
    MOVE_LEFT, MOVE_RIGHT, MOVE_UP,
};
