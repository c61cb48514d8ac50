//! Competitive multi-agent RL with opponent next-state imitation.
//!
//! The crate trains PPO allies against scripted enemies while a state-only
//! inverse-soft-Q imitation model learns to predict the enemies' next local
//! states from each ally's partial observations. The predictions augment the
//! allies' policy inputs (the IMAX-PPO scheme); disabling the augmentation
//! reduces the trainer exactly to the MAPPO baseline.
//!
//! Module map:
//! - [`game`]: competitive Markov game abstraction, scripted enemies folded
//!   into the dynamics, neighborhood-limited observations.
//! - [`envs`]: ChainGame (exactly enumerable) and GridMiner.
//! - [`nn`]: feed-forward nets with analytic gradients, Adam, orthogonal
//!   init, running value normalization, checkpoints.
//! - [`imitation`]: soft operators, the compact imitation objective, the
//!   exact tabular solver and the local-observation imitator nets.
//! - [`marl`]: GAE, clipped PPO losses, input augmentation, the training
//!   loop and win-rate evaluation.
//! - [`theory`]: exact occupancy computations and numerical verification of
//!   the operator/objective properties and perturbation bounds.
//! - [`harness`]: configuration, seeding, persistence and the train / eval /
//!   verify / summarize workflows behind the CLI.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod dense;
pub mod envs;
pub mod game;
pub mod harness;
pub mod imitation;
pub mod marl;
pub mod nn;
pub mod rng;
pub mod theory;
