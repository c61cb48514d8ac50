//! Run configuration: strict TOML with validated defaults.
//!
//! Unknown keys are rejected so typos cannot silently fall back to defaults.
//! The default values mirror the reference hyperparameter table: learning
//! rate 5e-4, Adam epsilon 1e-5, clip 0.2, gamma 0.99, lambda 0.95, 5 mini
//! epochs, value coefficient 0.5, max gradient norm 10, weight decay 0,
//! orthogonal gain 0.01, 32 evaluation episodes, 1 minibatch, 1024-step
//! rollouts.

use crate::envs::{
    ChainGame, ChainSpec, Difficulty, GridMiner, GridMinerSpec, Layout,
};
use crate::game::Game;
use crate::marl::{TrainerConfig, Versus};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum EnvName {
    GridMiner,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub name: EnvName,
    /// GridMiner enemy difficulty.
    pub difficulty: Difficulty,
    pub width: i32,
    pub height: i32,
    pub horizon: u32,
    pub layout_seed: u64,
    pub n_piles: usize,
    pub total_gold: i32,
    pub neighborhood_radius: i32,
    /// Chain length (chain env only).
    pub n_positions: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            name: EnvName::GridMiner,
            difficulty: Difficulty::Easy,
            width: 8,
            height: 8,
            horizon: 64,
            layout_seed: 0,
            n_piles: 4,
            total_gold: 12,
            neighborhood_radius: 4,
            n_positions: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Algorithm {
    ImaxPpo,
    MappoBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmConfig {
    pub name: Algorithm,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig { name: Algorithm::ImaxPpo }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoSection {
    pub clip_ratio: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub mini_epochs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub minibatch_count: usize,
    pub rollout_length: usize,
    pub workers: usize,
    pub learning_rate: f64,
    pub critic_learning_rate: f64,
    pub adam_epsilon: f64,
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    /// Orthogonal gain applied to output heads; hidden layers use sqrt(2).
    pub orthogonal_gain: f64,
    pub hidden: Vec<usize>,
    /// Force the augmentation block to zero (set implicitly by the baseline
    /// algorithm; may also be set explicitly on the imax arm).
    pub zero_mask_augmentation: bool,
}

impl Default for PpoSection {
    fn default() -> Self {
        PpoSection {
            clip_ratio: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            mini_epochs: 5,
            entropy_coef: 0.01,
            value_coef: 0.5,
            minibatch_count: 1,
            rollout_length: 1024,
            workers: 1,
            learning_rate: 5e-4,
            critic_learning_rate: 5e-4,
            adam_epsilon: 1e-5,
            weight_decay: 0.0,
            max_grad_norm: 10.0,
            orthogonal_gain: 0.01,
            hidden: vec![64, 64],
            zero_mask_augmentation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImitationSection {
    pub buffer_capacity: usize,
    pub q_learning_rate: f64,
    pub policy_learning_rate: f64,
    pub batch_size: usize,
}

impl Default for ImitationSection {
    fn default() -> Self {
        ImitationSection {
            buffer_capacity: 100_000,
            q_learning_rate: 5e-4,
            policy_learning_rate: 5e-4,
            batch_size: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub total_steps: u64,
    pub eval_episodes: usize,
    /// Win-rate evaluation cadence in iterations.
    pub eval_interval: u64,
    /// Checkpoint cadence in iterations (a final checkpoint is always
    /// written).
    pub checkpoint_interval: u64,
    pub seeds: Vec<u64>,
    pub out_dir: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            total_steps: 200_000,
            eval_episodes: 32,
            eval_interval: 10,
            checkpoint_interval: 50,
            seeds: vec![1],
            out_dir: "runs/out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub algorithm: AlgorithmConfig,
    pub ppo: PpoSection,
    pub imitation: ImitationSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.ppo.gamma > 0.0 && self.ppo.gamma < 1.0) {
            return e(format!("ppo.gamma must be in (0,1), got {}", self.ppo.gamma));
        }
        if !(self.ppo.clip_ratio > 0.0 && self.ppo.clip_ratio < 1.0) {
            return e(format!("ppo.clip_ratio must be in (0,1), got {}", self.ppo.clip_ratio));
        }
        if !(0.0..=1.0).contains(&self.ppo.gae_lambda) {
            return e(format!("ppo.gae_lambda must be in [0,1], got {}", self.ppo.gae_lambda));
        }
        for (name, v) in [
            ("ppo.learning_rate", self.ppo.learning_rate),
            ("ppo.critic_learning_rate", self.ppo.critic_learning_rate),
            ("ppo.adam_epsilon", self.ppo.adam_epsilon),
            ("ppo.entropy_coef", self.ppo.entropy_coef),
            ("ppo.value_coef", self.ppo.value_coef),
            ("ppo.max_grad_norm", self.ppo.max_grad_norm),
            ("ppo.weight_decay", self.ppo.weight_decay),
            ("imitation.q_learning_rate", self.imitation.q_learning_rate),
            ("imitation.policy_learning_rate", self.imitation.policy_learning_rate),
        ] {
            if !v.is_finite() || v < 0.0 {
                return e(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.ppo.workers == 0 || self.ppo.rollout_length == 0 {
            return e("ppo.workers and ppo.rollout_length must be >= 1".into());
        }
        if self.ppo.mini_epochs == 0 || self.ppo.minibatch_count == 0 {
            return e("ppo.mini_epochs and ppo.minibatch_count must be >= 1".into());
        }
        if self.imitation.batch_size == 0 || self.imitation.buffer_capacity == 0 {
            return e("imitation.batch_size and imitation.buffer_capacity must be >= 1".into());
        }
        if self.run.eval_episodes == 0 {
            return e("run.eval_episodes must be >= 1".into());
        }
        if self.run.eval_interval == 0 || self.run.checkpoint_interval == 0 {
            return e("run.eval_interval and run.checkpoint_interval must be >= 1".into());
        }
        if self.run.seeds.is_empty() {
            return e("run.seeds must list at least one seed".into());
        }
        if self.env.horizon == 0 {
            return e("env.horizon must be >= 1".into());
        }
        Ok(())
    }

    /// Stable hex digest of the parsed config; insensitive to key order in
    /// the source file because it hashes the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }

    /// Digest of the sections that shape the training trajectory. Resume
    /// checks this one, so runs may legitimately extend `total_steps` or
    /// move the output directory without invalidating checkpoints.
    pub fn training_hash(&self) -> String {
        let canonical = serde_json::to_string(&(
            &self.env,
            &self.algorithm,
            &self.ppo,
            &self.imitation,
        ))
        .expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }

    /// Whether the augmentation block is forced to zero for this run.
    pub fn zero_mask(&self) -> bool {
        self.algorithm.name == Algorithm::MappoBaseline || self.ppo.zero_mask_augmentation
    }

    pub fn trainer_config(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            seed,
            zero_mask_augmentation: self.zero_mask(),
            rollout_length: self.ppo.rollout_length,
            workers: self.ppo.workers,
            gamma: self.ppo.gamma,
            gae_lambda: self.ppo.gae_lambda,
            clip_ratio: self.ppo.clip_ratio,
            mini_epochs: self.ppo.mini_epochs,
            minibatch_count: self.ppo.minibatch_count,
            entropy_coef: self.ppo.entropy_coef,
            value_coef: self.ppo.value_coef,
            max_grad_norm: self.ppo.max_grad_norm,
            lr_actor: self.ppo.learning_rate,
            lr_critic: self.ppo.critic_learning_rate,
            lr_il_q: self.imitation.q_learning_rate,
            lr_il_pi: self.imitation.policy_learning_rate,
            adam_eps: self.ppo.adam_epsilon,
            weight_decay: self.ppo.weight_decay,
            orthogonal_gain: self.ppo.orthogonal_gain,
            hidden: self.ppo.hidden.clone(),
            il_batch_size: self.imitation.batch_size,
            buffer_capacity: self.imitation.buffer_capacity,
        }
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses and validates a config file; unknown keys and out-of-range values
/// are rejected with the offending location.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

/// A validated game instance owning either environment.
pub enum BuiltGame {
    Miner(GridMiner),
    Chain(ChainGame),
}

impl BuiltGame {
    pub fn as_game(&self) -> &dyn Game {
        match self {
            BuiltGame::Miner(g) => g,
            BuiltGame::Chain(g) => g,
        }
    }

    pub fn as_versus(&self) -> &dyn Versus {
        match self {
            BuiltGame::Miner(g) => g,
            BuiltGame::Chain(g) => g,
        }
    }
}

pub fn build_game(env: &EnvConfig) -> Result<BuiltGame, ConfigError> {
    match env.name {
        EnvName::GridMiner => GridMiner::new(GridMinerSpec {
            width: env.width,
            height: env.height,
            horizon: env.horizon,
            discount: 0.99,
            neighborhood_radius: env.neighborhood_radius,
            difficulty: env.difficulty,
            layout: Layout::Seeded {
                seed: env.layout_seed,
                n_piles: env.n_piles,
                total_gold: env.total_gold,
            },
        })
        .map(BuiltGame::Miner)
        .map_err(|e| ConfigError::Invalid(e.to_string())),
        EnvName::Chain => ChainGame::new(ChainSpec {
            n_positions: env.n_positions,
            horizon: env.horizon.min(40),
            neighborhood_radius: env.neighborhood_radius.max(env.n_positions as i32),
            ..ChainSpec::default()
        })
        .map(BuiltGame::Chain)
        .map_err(|e| ConfigError::Invalid(e.to_string())),
    }
}
