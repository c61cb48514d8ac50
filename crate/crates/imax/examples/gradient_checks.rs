//! Finite-difference verification of every analytic gradient path: the raw
//! net backprop, the local imitation objective, and the clipped PPO losses.
//!
//! Run with: `cargo run --release --example gradient_checks`

use imax::envs::{ChainGame, ChainSpec};
use imax::imitation::{collect_local_expert, j_local, ImitatorNets, UniformActions};
use imax::marl::{masked_softmax, ppo_actor_loss, sample, ActorBatch};
use imax::nn::{Activation, ParamNet};
use imax::rng;
use rand::Rng as _;

fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd.iter())
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn main() {
    let mut stream = rng::stream(5, "gradient-example", 0);

    // Raw net: d(output . g)/d params.
    let mut net = ParamNet::new(&[6, 16, 4], false, Activation::Relu);
    for p in net.params_mut() {
        *p = stream.gen_range(-0.7..0.7);
    }
    let x: Vec<f64> = (0..6).map(|_| stream.gen_range(-1.0..1.0)).collect();
    let g: Vec<f64> = (0..4).map(|_| stream.gen_range(-1.0..1.0)).collect();
    let (_, trace) = net.forward_traced(&x).unwrap();
    let mut grads = vec![0.0; net.num_params()];
    net.backward(&trace, &g, &mut grads).unwrap();
    let h = 1e-5;
    let mut fd = vec![0.0; net.num_params()];
    for i in 0..net.num_params() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up: f64 = net.forward(&x).unwrap().iter().zip(&g).map(|(y, gi)| y * gi).sum();
        net.params_mut()[i] = orig - h;
        let dn: f64 = net.forward(&x).unwrap().iter().zip(&g).map(|(y, gi)| y * gi).sum();
        net.params_mut()[i] = orig;
        fd[i] = (up - dn) / (2.0 * h);
    }
    println!("net backprop     max relative error: {:.2e}", max_rel_err(&grads, &fd));

    // Local imitation objective in the Q-net parameters.
    let game = ChainGame::new(ChainSpec::default()).unwrap();
    let buffer = collect_local_expert(&game, 50, 64, &mut stream);
    let obs_w = imax::game::encoded_obs_width(&game);
    let mut nets = ImitatorNets::new(obs_w, 3, 1, &[10, 8], 0.5, &mut stream);
    let batch = buffer.full_batch();
    let dist = UniformActions(3);
    let (_, jg) = j_local(&nets, &dist, &batch, 0.9).unwrap();
    let picks: Vec<usize> = (0..60).map(|_| stream.gen_range(0..nets.q_net.num_params())).collect();
    let mut fd = Vec::new();
    for &i in &picks {
        let orig = nets.q_net.params()[i];
        nets.q_net.params_mut()[i] = orig + h;
        let up = j_local(&nets, &dist, &batch, 0.9).unwrap().0;
        nets.q_net.params_mut()[i] = orig - h;
        let dn = j_local(&nets, &dist, &batch, 0.9).unwrap().0;
        nets.q_net.params_mut()[i] = orig;
        fd.push((up - dn) / (2.0 * h));
    }
    let analytic: Vec<f64> = picks.iter().map(|&i| jg[i]).collect();
    println!("imitation loss   max relative error: {:.2e}", max_rel_err(&analytic, &fd));

    // Clipped actor surrogate.
    let mut policy = ParamNet::new(&[5, 12, 3], false, Activation::Relu);
    for p in policy.params_mut() {
        *p = stream.gen_range(-0.6..0.6);
    }
    let inputs: Vec<Vec<f64>> =
        (0..20).map(|_| (0..5).map(|_| stream.gen_range(-1.0..1.0)).collect()).collect();
    let masks = vec![vec![true; 3]; 20];
    let mut actions = Vec::new();
    let mut logp_old = Vec::new();
    for input in &inputs {
        let probs = masked_softmax(&policy.forward(input).unwrap(), &masks[0]);
        let a = sample(&probs, &mut stream);
        actions.push(a);
        logp_old.push(probs[a].ln() + stream.gen_range(-0.05..0.05));
    }
    let advantages: Vec<f64> = (0..20).map(|_| stream.gen_range(-1.0..1.0)).collect();
    let batch = ActorBatch {
        inputs: &inputs,
        masks: &masks,
        actions: &actions,
        logp_old: &logp_old,
        advantages: &advantages,
    };
    let mut agrads = vec![0.0; policy.num_params()];
    ppo_actor_loss(&policy, &batch, 0.2, 0.01, &mut agrads).unwrap();
    let picks: Vec<usize> = (0..60).map(|_| stream.gen_range(0..policy.num_params())).collect();
    let mut fd = Vec::new();
    for &i in &picks {
        let orig = policy.params()[i];
        let mut eval = |p: &mut ParamNet| {
            let mut sink = vec![0.0; p.num_params()];
            ppo_actor_loss(p, &batch, 0.2, 0.01, &mut sink).unwrap().loss
        };
        policy.params_mut()[i] = orig + h;
        let up = eval(&mut policy);
        policy.params_mut()[i] = orig - h;
        let dn = eval(&mut policy);
        policy.params_mut()[i] = orig;
        fd.push((up - dn) / (2.0 * h));
    }
    let analytic: Vec<f64> = picks.iter().map(|&i| agrads[i]).collect();
    println!("actor loss       max relative error: {:.2e}", max_rel_err(&analytic, &fd));
}
