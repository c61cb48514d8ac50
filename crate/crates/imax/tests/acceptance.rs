//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its runtime against the stated budget.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use imax::envs::{ChainGame, ChainSpec};
use imax::harness::{parse_config, run_train, MetricsRecord};
use imax::imitation::{
    collect_local_expert, collect_tabular_expert, fit_imitator, j_local, policy_table_from_q,
    prediction_accuracy, total_variation, AllyPolicy, ExpertStats, ImitatorFitConfig,
    ImitatorNets, LocalTuple, QTable, TabularIqLearner, UniformActions,
};
use imax::marl::{ppo_actor_loss, ppo_critic_loss, ActorBatch, CriticBatch};
use imax::nn::{Activation, ParamNet};
use imax::rng;
use imax::theory::{
    bound_rhs, bounds_check, cor2_check, operators_check, prop1_check, prop2_check, prop3_check,
    SuiteConfig, TabularGame,
};
use rand::Rng as _;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::Instant;

static GATE: Mutex<()> = Mutex::new(());

fn criterion(number: usize, description: &str, budget_secs: f64, body: impl FnOnce() -> String) {
    let _lock = GATE.lock().unwrap_or_else(|poison| poison.into_inner());
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!(
                "[PASS] criterion {number}: {description} | {detail} | {elapsed:.1}s (budget {budget_secs}s)"
            );
            assert!(
                elapsed <= budget_secs,
                "criterion {number} exceeded its runtime budget: {elapsed:.1}s > {budget_secs}s"
            );
        }
        Err(panic) => {
            println!("[FAIL] criterion {number}: {description} | {elapsed:.1}s");
            resume_unwind(panic);
        }
    }
}

fn chain_data() -> TabularGame {
    let game = ChainGame::new(ChainSpec::default()).unwrap();
    TabularGame::from_game(&game).unwrap()
}

#[test]
fn criterion_1_operator_suite() {
    criterion(1, "soft-operator suite", 10.0, || {
        let report = operators_check(&chain_data(), 100, 0xC1);
        assert_eq!(report.violations, 0, "operator violations: {:?}", report);
        format!("100 pairs, worst ratio {:.3e}", report.worst_ratio)
    });
}

#[test]
fn criterion_2_prop1_equivalence() {
    criterion(2, "reward/Q fixed-point equivalence", 60.0, || {
        let report = prop1_check(&chain_data(), 50, 0xC2);
        assert_eq!(report.violations, 0, "{report:?}");
        format!("50 rewards, worst ratio {:.3e}", report.worst_ratio)
    });
}

#[test]
fn criterion_3_prop2_telescoping() {
    criterion(3, "compact vs occupancy-form objective", 60.0, || {
        let report = prop2_check(&chain_data(), 50, 0xC3);
        assert_eq!(report.violations, 0, "{report:?}");
        format!("50 draws, worst ratio {:.3e}", report.worst_ratio)
    });
}

#[test]
fn criterion_4_prop3_concavity() {
    criterion(4, "midpoint concavity of the Q objective", 30.0, || {
        let report = prop3_check(&chain_data(), 100, 0xC4);
        assert_eq!(report.violations, 0, "{report:?}");
        format!("100 pairs, worst ratio {:.3e}", report.worst_ratio)
    });
}

#[test]
fn criterion_5_perturbation_bounds() {
    criterion(5, "policy-perturbation bound suite", 300.0, || {
        let data = chain_data();
        let grid = [1e-4, 1e-3, 1e-2];
        let bounds = bounds_check(&data, 100, &grid, 0xC5, &bound_rhs);
        assert_eq!(bounds.violations, 0, "{bounds:?}");
        let slope = bounds.notes["slope"].as_f64().unwrap();
        assert!(slope <= 0.6, "log-log slope {slope}");
        let cor2 = cor2_check(&data, 4, &grid, 0xC5, &bound_rhs);
        assert_eq!(cor2.violations, 0, "{cor2:?}");
        format!(
            "{} bound trials (slope {slope:.3}), {} max-objective trials, worst ratios {:.3e} / {:.3e}",
            bounds.trials, cor2.trials, bounds.worst_ratio, cor2.worst_ratio
        )
    });
}

/// Central finite differences over a parameter vector.
fn finite_difference(
    params: &mut [f64],
    indices: &[usize],
    mut eval: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let h = 1e-5;
    indices
        .iter()
        .map(|&i| {
            let orig = params[i];
            params[i] = orig + h;
            let up = eval(params);
            params[i] = orig - h;
            let down = eval(params);
            params[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn assert_close_rel(analytic: &[f64], fd: &[f64], tol: f64, what: &str) {
    for (k, (a, f)) in analytic.iter().zip(fd.iter()).enumerate() {
        let denom = a.abs().max(f.abs()).max(1e-6);
        assert!((a - f).abs() / denom < tol, "{what} grad {k}: analytic {a} vs fd {f}");
    }
}

#[test]
fn criterion_6_gradient_integrity() {
    criterion(6, "loss gradients vs central finite differences", 60.0, || {
        let mut rng = rng::stream(0xC6, "fd", 0);

        // Local imitation objective.
        let game = ChainGame::new(ChainSpec::default()).unwrap();
        let buffer = collect_local_expert(&game, 30, 64, &mut rng::stream(0xC6, "buf", 0));
        let obs_w = imax::game::encoded_obs_width(&game);
        let mut nets = ImitatorNets::new(obs_w, 3, 1, &[8, 8], 0.5, &mut rng);
        let batch = buffer.full_batch();
        let dist = UniformActions(3);
        let (_, grads) = j_local(&nets, &dist, &batch, 0.9).unwrap();
        let picks: Vec<usize> =
            (0..40).map(|_| rng.gen_range(0..nets.q_net.num_params())).collect();
        let analytic: Vec<f64> = picks.iter().map(|&i| grads[i]).collect();
        let fd = {
            let mut probe = nets.q_net.clone();
            let n = probe.num_params();
            let mut flat = probe.params().to_vec();
            finite_difference(&mut flat, &picks, |p| {
                probe.params_mut().copy_from_slice(&p[..n]);
                nets.q_net = probe.clone();
                j_local(&nets, &dist, &batch, 0.9).unwrap().0
            })
        };
        assert_close_rel(&analytic, &fd, 1e-3, "j_local");

        // Clipped actor loss.
        let mut policy = ParamNet::new(&[6, 10, 4], false, Activation::Relu);
        for p in policy.params_mut() {
            *p = rng.gen_range(-0.6..0.6);
        }
        let inputs: Vec<Vec<f64>> =
            (0..16).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let masks: Vec<Vec<bool>> =
            (0..16).map(|i| (0..4).map(|k| !(i % 4 == 0 && k == 3)).collect()).collect();
        let mut actions = Vec::new();
        let mut logp_old = Vec::new();
        for (input, mask) in inputs.iter().zip(masks.iter()) {
            let probs = imax::marl::masked_softmax(&policy.forward(input).unwrap(), mask);
            let a = imax::marl::sample(&probs, &mut rng);
            actions.push(a);
            logp_old.push(probs[a].ln() + rng.gen_range(-0.05..0.05));
        }
        let advantages: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let batch = ActorBatch {
            inputs: &inputs,
            masks: &masks,
            actions: &actions,
            logp_old: &logp_old,
            advantages: &advantages,
        };
        let mut grads = vec![0.0; policy.num_params()];
        ppo_actor_loss(&policy, &batch, 0.2, 0.01, &mut grads).unwrap();
        let picks: Vec<usize> = (0..40).map(|_| rng.gen_range(0..policy.num_params())).collect();
        let analytic: Vec<f64> = picks.iter().map(|&i| grads[i]).collect();
        let fd = {
            let mut flat = policy.params().to_vec();
            let mut probe = policy.clone();
            finite_difference(&mut flat, &picks, |p| {
                probe.params_mut().copy_from_slice(p);
                let mut sink = vec![0.0; probe.num_params()];
                ppo_actor_loss(&probe, &batch, 0.2, 0.01, &mut sink).unwrap().loss
            })
        };
        assert_close_rel(&analytic, &fd, 1e-3, "actor loss");

        // Clipped critic loss.
        let mut critic = ParamNet::new(&[5, 10, 1], false, Activation::Relu);
        for p in critic.params_mut() {
            *p = rng.gen_range(-0.6..0.6);
        }
        let vinputs: Vec<Vec<f64>> =
            (0..12).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let targets: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v_old: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vbatch = CriticBatch { inputs: &vinputs, targets: &targets, v_old: &v_old };
        let mut vgrads = vec![0.0; critic.num_params()];
        ppo_critic_loss(&critic, &vbatch, 0.2, 0.5, &mut vgrads).unwrap();
        let picks: Vec<usize> = (0..40).map(|_| rng.gen_range(0..critic.num_params())).collect();
        let analytic: Vec<f64> = picks.iter().map(|&i| vgrads[i]).collect();
        let fd = {
            let mut flat = critic.params().to_vec();
            let mut probe = critic.clone();
            finite_difference(&mut flat, &picks, |p| {
                probe.params_mut().copy_from_slice(p);
                let mut sink = vec![0.0; probe.num_params()];
                ppo_critic_loss(&probe, &vbatch, 0.2, 0.5, &mut sink).unwrap()
            })
        };
        assert_close_rel(&analytic, &fd, 1e-3, "critic loss");

        "imitation, actor and critic gradients within 1e-3 of central differences".into()
    });
}

#[test]
fn criterion_7_imitator_fidelity() {
    criterion(7, "imitator fidelity on the chain game", 600.0, || {
        // Exact tabular path: 1e5 expert samples, softmax policy within
        // expert-weighted TV 0.05 of the true marginalized kernel.
        let game = ChainGame::new(ChainSpec::default()).unwrap();
        let n = 64;
        let behavior = AllyPolicy::uniform(n, 3);
        let (triples, starts) =
            collect_tabular_expert(&game, &behavior, 100_000, &mut rng::stream(0xC7, "tab", 0))
                .unwrap();
        let stats = ExpertStats::from_samples(n, 3, &triples, &starts).unwrap();
        let mut learner = TabularIqLearner::new(QTable::zeros(n, 3, 0.9), 10.0);
        for _ in 0..6000 {
            learner.step(&behavior, &stats);
        }
        let pi = policy_table_from_q(&learner.q);
        let kernel = imax::game::marginalized_transition_matrix(&game).unwrap();
        let mut tv = 0.0;
        for s in 0..n {
            for a in 0..3 {
                let mass: f64 = stats.weights.row(s, a).iter().sum();
                if mass > 0.0 {
                    tv += mass * total_variation(pi.probs.row(s, a), kernel.row(s, a));
                }
            }
        }
        assert!(tv < 0.05, "expert-weighted TV {tv}");

        // Function-approximation path: mode prediction of the deterministic
        // script's next cell.
        let buffer = collect_local_expert(&game, 50_000, 60_000, &mut rng::stream(0xC7, "fn", 0));
        let cfg = ImitatorFitConfig {
            updates: 2500,
            batch_size: 256,
            lr_q: 2e-3,
            lr_pi: 2e-3,
            ..ImitatorFitConfig::default()
        };
        let obs_w = imax::game::encoded_obs_width(&game);
        let nets = fit_imitator(
            obs_w,
            3,
            1,
            &buffer,
            &UniformActions(3),
            &cfg,
            &mut rng::stream(0xC7, "fit", 0),
        )
        .unwrap();
        let eval = collect_local_expert(&game, 2000, 2100, &mut rng::stream(0xC7, "eval", 0));
        let tuples: Vec<&LocalTuple> = eval.tuples.iter().collect();
        let accuracy = prediction_accuracy(&nets, &tuples).unwrap();
        assert!(accuracy >= 0.90, "next-cell prediction accuracy {accuracy}");
        format!("tabular weighted TV {tv:.4}, net top-1 accuracy {accuracy:.3}")
    });
}

fn experiment_config(algorithm: &str, out_dir: &str) -> String {
    format!(
        r#"
[env]
name = "grid_miner"
difficulty = "easy"
layout_seed = 0

[algorithm]
name = "{algorithm}"

[ppo]
rollout_length = 1024
workers = 1

[imitation]
buffer_capacity = 30000

[run]
total_steps = 200000
eval_interval = 39
eval_episodes = 160
checkpoint_interval = 500
seeds = [101, 102, 103, 104, 105]
out_dir = "{out_dir}"
"#
    )
}

fn read_metrics(dir: &std::path::Path, seed: u64) -> Vec<MetricsRecord> {
    let path = dir.join(format!("seed_{seed}")).join("metrics.jsonl");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn strip_wall(records: &[MetricsRecord]) -> Vec<serde_json::Value> {
    records
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).unwrap();
            v.as_object_mut().unwrap().remove("wall_ms");
            v
        })
        .collect()
}

#[test]
fn criterion_8_directional_improvement() {
    criterion(8, "augmented arm vs baseline arm on GridMiner-easy", 7200.0, || {
        let dir = tempfile::tempdir().unwrap();
        let imax_dir = dir.path().join("imax");
        let mappo_dir = dir.path().join("mappo");

        let imax_cfg =
            parse_config(&experiment_config("imax_ppo", imax_dir.to_str().unwrap())).unwrap();
        let mappo_cfg =
            parse_config(&experiment_config("mappo_baseline", mappo_dir.to_str().unwrap()))
                .unwrap();

        let handle = std::thread::spawn(move || run_train(&mappo_cfg, false).unwrap());
        run_train(&imax_cfg, false).unwrap();
        handle.join().unwrap();

        let seeds = [101u64, 102, 103, 104, 105];
        let final_rate = |dir: &std::path::Path, seed: u64| {
            imax::harness::final_win_rate(dir, seed).unwrap()
        };
        let imax_rates: Vec<f64> = seeds.iter().map(|&s| final_rate(&imax_dir, s)).collect();
        let mappo_rates: Vec<f64> = seeds.iter().map(|&s| final_rate(&mappo_dir, s)).collect();
        let imax_mean = imax_rates.iter().sum::<f64>() / 5.0;
        let mappo_mean = mappo_rates.iter().sum::<f64>() / 5.0;
        println!(
            "    paired final win rates (augmented vs baseline): {:?}",
            imax_rates.iter().zip(mappo_rates.iter()).collect::<Vec<_>>()
        );
        assert!(
            imax_mean >= mappo_mean,
            "augmented mean {imax_mean:.3} < baseline mean {mappo_mean:.3}"
        );

        // The zero-mask ablation arm must be update-trace-identical to the
        // baseline algorithm: same metrics stream (modulo wall time) and
        // bit-identical final parameters.
        let ablation_dir = dir.path().join("ablation");
        let baseline_dir = dir.path().join("baseline_short");
        let mut short_a = experiment_config("imax_ppo", ablation_dir.to_str().unwrap());
        short_a = short_a.replace("total_steps = 200000", "total_steps = 3072");
        short_a = short_a.replace("workers = 1", "workers = 1\nzero_mask_augmentation = true");
        short_a = short_a.replace("seeds = [101, 102, 103, 104, 105]", "seeds = [101]");
        let mut short_b = experiment_config("mappo_baseline", baseline_dir.to_str().unwrap());
        short_b = short_b.replace("total_steps = 200000", "total_steps = 3072");
        short_b = short_b.replace("seeds = [101, 102, 103, 104, 105]", "seeds = [101]");
        run_train(&parse_config(&short_a).unwrap(), false).unwrap();
        run_train(&parse_config(&short_b).unwrap(), false).unwrap();
        assert_eq!(
            strip_wall(&read_metrics(&ablation_dir, 101)),
            strip_wall(&read_metrics(&baseline_dir, 101)),
            "zero-mask ablation trace differs from the baseline arm"
        );
        for net in ["theta.net", "theta_v.net", "psi_Q.net", "psi_pi.net"] {
            let a = std::fs::read(ablation_dir.join("seed_101/ckpt_final").join(net)).unwrap();
            let b = std::fs::read(baseline_dir.join("seed_101/ckpt_final").join(net)).unwrap();
            assert_eq!(a, b, "{net} differs between ablation and baseline");
        }
        format!(
            "augmented mean {imax_mean:.3} >= baseline mean {mappo_mean:.3} over 5 paired seeds; ablation trace identical"
        )
    });
}

#[test]
fn criterion_9_reproducibility() {
    criterion(9, "bit-identical runs and checkpoint resume", 600.0, || {
        let dir = tempfile::tempdir().unwrap();
        let config_text = |out: &str, total: u64| {
            format!(
                r#"
[env]
name = "grid_miner"
difficulty = "easy"
horizon = 24

[ppo]
rollout_length = 256
workers = 1
hidden = [16, 16]

[imitation]
buffer_capacity = 4096
batch_size = 128

[run]
total_steps = {total}
eval_interval = 3
eval_episodes = 8
checkpoint_interval = 2
seeds = [7]
out_dir = "{out}"
"#
            )
        };
        let dir_a = dir.path().join("a");
        let dir_b = dir.path().join("b");
        let dir_c = dir.path().join("c");

        // Two uninterrupted executions.
        run_train(&parse_config(&config_text(dir_a.to_str().unwrap(), 1536)).unwrap(), false)
            .unwrap();
        run_train(&parse_config(&config_text(dir_c.to_str().unwrap(), 1536)).unwrap(), false)
            .unwrap();
        // Interrupted-and-resumed execution: half the steps, then resume to
        // the full budget.
        run_train(&parse_config(&config_text(dir_b.to_str().unwrap(), 768)).unwrap(), false)
            .unwrap();
        run_train(&parse_config(&config_text(dir_b.to_str().unwrap(), 1536)).unwrap(), true)
            .unwrap();

        let a = strip_wall(&read_metrics(&dir_a, 7));
        let b = strip_wall(&read_metrics(&dir_b, 7));
        let c = strip_wall(&read_metrics(&dir_c, 7));
        assert_eq!(a, c, "two executions of the same run differ");
        assert_eq!(a, b, "resumed run differs from the uninterrupted one");

        for net in ["theta.net", "theta_v.net", "psi_Q.net", "psi_pi.net"] {
            let pa = std::fs::read(dir_a.join("seed_7/ckpt_final").join(net)).unwrap();
            let pb = std::fs::read(dir_b.join("seed_7/ckpt_final").join(net)).unwrap();
            let pc = std::fs::read(dir_c.join("seed_7/ckpt_final").join(net)).unwrap();
            assert_eq!(pa, pc, "{net} differs across executions");
            assert_eq!(pa, pb, "{net} differs after resume");
        }
        "metrics streams and final checkpoints bit-identical across reruns and resume".into()
    });
}

#[test]
fn verify_suite_defaults_pass() {
    // The CLI-facing suite with its default sizes; doubles as a smoke test
    // that the report schema carries the KL convention header.
    let _lock = GATE.lock().unwrap_or_else(|poison| poison.into_inner());
    let data = chain_data();
    let cfg = SuiteConfig::default();
    let reports = imax::theory::run_suite(&data, &cfg, None);
    assert_eq!(reports.len(), 7);
    for report in &reports {
        assert_eq!(report.violations, 0, "{} failed: {report:?}", report.check_name);
    }
}
