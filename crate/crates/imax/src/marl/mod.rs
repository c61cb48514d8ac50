//! Multi-agent PPO machinery and its integration with the opponent
//! imitator: GAE, clipped actor and critic losses, input augmentation with
//! predicted enemy next states, the training loop and win-rate evaluation.

pub mod augment;
pub mod eval;
pub mod gae;
pub mod loss;
pub mod policy;
pub mod trainer;

pub use augment::{augment_input, augmentation_width, augmented_width};
pub use eval::{evaluate_winrate, wilson_interval, AgentPolicy, NetAgent, Versus, WinRateReport};
pub use gae::{gae, normalize_advantages};
pub use loss::{ppo_actor_loss, ppo_critic_loss, ActorBatch, ActorLossStats, CriticBatch};
pub use policy::{argmax, entropy, kl_divergence, masked_softmax, sample};
pub use trainer::{
    policy_input, policy_input_width, IterationMetrics, Trainer, TrainerConfig, TrainerSnapshot,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarlError {
    #[error("array length mismatch: rewards {rewards}, values {values}, dones {dones}")]
    LengthMismatch { rewards: usize, values: usize, dones: usize },
    #[error("prediction slots misaligned: expected {expected}, got {got}")]
    SlotMisalignment { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss in {what}; iteration aborted")]
    NonFiniteLoss { what: String },
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}
