//! Local-observation imitator nets: fit the shared Q and policy networks on
//! chain-game rollouts and predict the scripted enemy's next cell from each
//! ally's partial view.
//!
//! Run with: `cargo run --release --example imitator_networks`

use imax::envs::{ChainGame, ChainSpec};
use imax::imitation::{
    collect_local_expert, fit_imitator, prediction_accuracy, ImitatorFitConfig, LocalTuple,
    MoveAtom, PredictMode, UniformActions,
};
use imax::rng;

fn main() {
    let game = ChainGame::new(ChainSpec::default()).unwrap();
    let obs_width = imax::game::encoded_obs_width(&game);

    let mut stream = rng::stream(11, "imitator-example", 0);
    let buffer = collect_local_expert(&game, 20_000, 22_000, &mut stream);
    println!("expert buffer: {} tuples", buffer.len());

    let cfg = ImitatorFitConfig {
        updates: 2000,
        batch_size: 256,
        lr_q: 2e-3,
        lr_pi: 2e-3,
        ..ImitatorFitConfig::default()
    };
    let nets = fit_imitator(obs_width, 3, 1, &buffer, &UniformActions(3), &cfg, &mut stream)
        .unwrap();

    let eval = collect_local_expert(&game, 1000, 1100, &mut rng::stream(12, "eval", 0));
    let tuples: Vec<&LocalTuple> = eval.tuples.iter().collect();
    let accuracy = prediction_accuracy(&nets, &tuples).unwrap();
    println!("top-1 next-move accuracy against the deterministic script: {accuracy:.3}");

    // Show a few predictions: enemy chasing from the right should move left.
    let mut shown = 0;
    let mut predict_rng = rng::stream(13, "predict", 0);
    for tuple in &tuples {
        if !tuple.present[0] || shown >= 4 {
            continue;
        }
        let pred = nets.predict_next_enemy_states(
            &tuple.obs,
            tuple.action,
            &tuple.present,
            PredictMode::Mode,
            &mut predict_rng,
        );
        println!(
            "ally at {:.2}, enemy at {:.2} -> predicted {:?}, actual {:?}",
            tuple.obs[0],
            tuple.obs[3],
            pred[0].map(MoveAtom::from_index),
            MoveAtom::from_index(tuple.targets[0])
        );
        shown += 1;
    }
}
