//! Paired comparison of the augmented arm against the zero-mask baseline
//! arm over a short budget. The two trainers share every seed and
//! hyperparameter; only the augmentation block differs.
//!
//! Run with: `cargo run --release --example ablation_pair`

use imax::envs::{Difficulty, GridMiner, GridMinerSpec};
use imax::marl::{evaluate_winrate, NetAgent, Trainer, TrainerConfig};
use imax::rng;

fn run_arm(game: &GridMiner, seed: u64, zero_mask: bool, iters: u64) -> f64 {
    let cfg = TrainerConfig {
        seed,
        zero_mask_augmentation: zero_mask,
        buffer_capacity: 30_000,
        ..TrainerConfig::default()
    };
    let mut trainer = Trainer::new(game, cfg);
    for _ in 0..iters {
        trainer.train_iteration().unwrap();
    }
    let agent = NetAgent {
        policy: &trainer.policy,
        imitator: &trainer.imitator,
        zero_mask_augmentation: zero_mask,
        greedy_actions: false,
    };
    evaluate_winrate(game, &agent, 32, rng::derive_seed(seed, "eval", iters)).win_rate
}

fn main() {
    let game = GridMiner::new(GridMinerSpec {
        difficulty: Difficulty::Easy,
        ..GridMinerSpec::default()
    })
    .unwrap();
    let iters = 30;
    println!("seed | augmented | baseline");
    let mut sums = (0.0, 0.0);
    for seed in [101u64, 102, 103] {
        let augmented = run_arm(&game, seed, false, iters);
        let baseline = run_arm(&game, seed, true, iters);
        sums.0 += augmented;
        sums.1 += baseline;
        println!("{seed} |     {augmented:.3} |    {baseline:.3}");
    }
    println!("mean |     {:.3} |    {:.3}", sums.0 / 3.0, sums.1 / 3.0);
}
