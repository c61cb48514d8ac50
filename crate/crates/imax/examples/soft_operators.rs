//! Soft-operator basics on the exactly enumerable chain game: contraction of
//! the soft Bellman operator, convergence to its fixed point, and reward
//! recovery through the inverse operator.
//!
//! Run with: `cargo run --release --example soft_operators`

use imax::dense::Tensor3;
use imax::envs::{ChainGame, ChainSpec};
use imax::game::EnumerableGame;
use imax::imitation::{
    inverse_soft_bellman_table, policy_table_from_q, soft_bellman_table, soft_fixed_point,
    v_soft, AllyPolicy, QTable,
};
use imax::rng;
use rand::Rng as _;

fn main() {
    let game = ChainGame::new(ChainSpec::default()).unwrap();
    let n = game.num_states();
    let gamma = 0.9;
    let mut stream = rng::stream(42, "operators-example", 0);
    let ally = AllyPolicy::random(n, 3, &mut stream);

    // Contraction factor over random Q pairs.
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let q1 = QTable::random(n, 3, gamma, -2.0, 2.0, &mut stream);
        let q2 = QTable::random(n, 3, gamma, -2.0, 2.0, &mut stream);
        let r = Tensor3::zeros(n, 3, n);
        let num = soft_bellman_table(&q1, &r, &ally)
            .values
            .max_abs_diff(&soft_bellman_table(&q2, &r, &ally).values);
        let den = q1.values.max_abs_diff(&q2.values);
        worst = worst.max(num / den);
    }
    println!("measured contraction factor over 20 random pairs: {worst:.6} (gamma = {gamma})");

    // Fixed point of the soft Bellman operator for a random reward, and the
    // reward recovered by the inverse operator.
    let mut reward = Tensor3::zeros(n, 3, n);
    for v in reward.data_mut() {
        *v = stream.gen_range(-1.0..1.0);
    }
    let q_star = soft_fixed_point(&reward, &ally, gamma, 1e-13, 20_000).unwrap();
    let recovered = inverse_soft_bellman_table(&q_star, &ally);
    println!(
        "fixed point reached; inverse operator recovers the reward to {:.2e} (sup norm)",
        recovered.max_abs_diff(&reward)
    );

    // The softmax policy of the fixed point is a valid distribution and the
    // log-sum-exp value matches the closed form on constant tables.
    let pi = policy_table_from_q(&q_star);
    println!("softmax policy rows valid: {}", pi.validate(1e-9));
    let qc = QTable::filled(n, 3, gamma, 1.5);
    let v = v_soft(&qc, &ally, 0);
    println!(
        "equal-logits identity: V = c + ln N -> {v:.12} vs {:.12}",
        1.5 + (n as f64).ln()
    );
}
