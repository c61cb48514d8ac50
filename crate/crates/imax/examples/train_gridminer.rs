//! A short augmented-PPO training run on GridMiner against the easy greedy
//! script, with periodic win-rate evaluation.
//!
//! Run with: `cargo run --release --example train_gridminer`

use imax::envs::{Difficulty, GridMiner, GridMinerSpec};
use imax::marl::{evaluate_winrate, NetAgent, Trainer, TrainerConfig};
use imax::rng;

fn main() {
    let game = GridMiner::new(GridMinerSpec {
        difficulty: Difficulty::Easy,
        ..GridMinerSpec::default()
    })
    .unwrap();
    let cfg = TrainerConfig { seed: 1, buffer_capacity: 30_000, ..TrainerConfig::default() };
    let mut trainer = Trainer::new(&game, cfg);

    println!("iter | mean reward | il accuracy | win rate");
    for iter in 1..=40u64 {
        let metrics = trainer.train_iteration().unwrap();
        if iter % 5 == 0 {
            let agent = NetAgent {
                policy: &trainer.policy,
                imitator: &trainer.imitator,
                zero_mask_augmentation: false,
                greedy_actions: false,
            };
            let report =
                evaluate_winrate(&game, &agent, 32, rng::derive_seed(1, "eval", iter));
            println!(
                "{iter:>4} | {:>11.3} | {:>11.3} | {:.3} [{:.2}, {:.2}]",
                metrics.mean_team_reward,
                metrics.il_accuracy.unwrap_or(f64::NAN),
                report.win_rate,
                report.ci_low,
                report.ci_high
            );
        }
    }
}
