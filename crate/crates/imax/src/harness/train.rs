//! Training orchestration: seeding, checkpoints, metrics, evaluation.

use super::config::{Algorithm, EnvName, RunConfig};
use super::manifest::{timestamp, RunManifest};
use crate::marl::{evaluate_winrate, IterationMetrics, NetAgent, Trainer, TrainerSnapshot};
use crate::nn::save_net;
use crate::rng;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One metrics stream record; a JSON line per training iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iter: u64,
    pub env_steps: u64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub il_loss: f64,
    pub il_accuracy: Option<f64>,
    pub win_rate: Option<f64>,
    pub kl_old_new: f64,
    pub wall_ms: u128,
}

impl MetricsRecord {
    fn from_iteration(m: &IterationMetrics, win_rate: Option<f64>) -> Self {
        MetricsRecord {
            iter: m.iter,
            env_steps: m.env_steps,
            actor_loss: m.actor_loss,
            critic_loss: m.critic_loss,
            il_loss: m.il_loss,
            il_accuracy: m.il_accuracy,
            win_rate,
            kl_old_new: m.kl_old_new,
            wall_ms: m.wall_ms,
        }
    }
}

/// Wire format of the resumable trainer checkpoint.
#[derive(Serialize, Deserialize)]
struct TrainerCheckpoint {
    config_hash: String,
    snapshot: TrainerSnapshot,
}

fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed_{seed}"))
}

fn write_checkpoint(
    dir: &Path,
    config: &RunConfig,
    trainer: &Trainer<'_>,
    artifacts: &mut Vec<String>,
    rel: &str,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let blob =
        TrainerCheckpoint { config_hash: config.training_hash(), snapshot: trainer.snapshot() };
    fs::write(dir.join("trainer_state.bin"), bincode::serialize(&blob)?)?;
    save_net(&trainer.policy, "theta", &dir.join("theta.net"))?;
    save_net(&trainer.critic, "theta_v", &dir.join("theta_v.net"))?;
    save_net(&trainer.imitator.q_net, "psi_Q", &dir.join("psi_Q.net"))?;
    save_net(&trainer.imitator.pi_net, "psi_pi", &dir.join("psi_pi.net"))?;
    fs::write(dir.join("config.toml"), toml::to_string_pretty(config)?)?;
    for name in [
        "trainer_state.bin",
        "theta.net",
        "theta.net.json",
        "theta_v.net",
        "theta_v.net.json",
        "psi_Q.net",
        "psi_Q.net.json",
        "psi_pi.net",
        "psi_pi.net.json",
        "config.toml",
    ] {
        artifacts.push(format!("{rel}/{name}"));
    }
    Ok(())
}

fn load_checkpoint(dir: &Path, config: &RunConfig) -> Result<TrainerSnapshot> {
    let bytes = fs::read(dir.join("trainer_state.bin"))
        .with_context(|| format!("reading checkpoint in {}", dir.display()))?;
    let blob: TrainerCheckpoint = bincode::deserialize(&bytes)?;
    anyhow::ensure!(
        blob.config_hash == config.training_hash(),
        "checkpoint was written by a different training config (hash mismatch)"
    );
    Ok(blob.snapshot)
}

fn latest_checkpoint(dir: &Path) -> Option<PathBuf> {
    let final_dir = dir.join("ckpt_final");
    if final_dir.join("trainer_state.bin").exists() {
        return Some(final_dir);
    }
    let mut best: Option<(u64, PathBuf)> = None;
    if let Ok(entries) = fs::read_dir(dir) {
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(num) = name.strip_prefix("ckpt_iter") {
                if let Ok(iter) = num.parse::<u64>() {
                    if entry.path().join("trainer_state.bin").exists()
                        && best.as_ref().map_or(true, |(b, _)| iter > *b)
                    {
                        best = Some((iter, entry.path()));
                    }
                }
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Rewrites the metrics stream keeping only records up to `iter`, so a
/// resumed run continues the stream exactly where the checkpoint left it.
fn truncate_metrics(path: &Path, iter: u64) -> Result<Vec<MetricsRecord>> {
    let mut kept = Vec::new();
    if path.exists() {
        for line in fs::read_to_string(path)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let record: MetricsRecord = serde_json::from_str(line)?;
            if record.iter <= iter {
                kept.push(record);
            }
        }
    }
    let mut out = fs::File::create(path)?;
    for record in &kept {
        writeln!(out, "{}", serde_json::to_string(record)?)?;
    }
    Ok(kept)
}

/// Result of training one seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub iterations: u64,
    pub env_steps: u64,
    pub final_win_rate: Option<f64>,
}

/// Trains every configured seed, writing metrics, periodic checkpoints and
/// win-rate evaluations under the run directory. With `resume`, seeds
/// continue from their newest checkpoint; an aborted run therefore loses at
/// most one checkpoint interval.
pub fn run_train(config: &RunConfig, resume: bool) -> Result<RunManifest> {
    config.validate()?;
    let out_dir = PathBuf::from(&config.run.out_dir);
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("config.toml"), toml::to_string_pretty(config)?)?;

    let mut manifest = RunManifest {
        config_hash: config.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        env_name: match config.env.name {
            EnvName::GridMiner => "grid_miner".into(),
            EnvName::Chain => "chain".into(),
        },
        difficulty: format!("{:?}", config.env.difficulty).to_lowercase(),
        algorithm: match config.algorithm.name {
            Algorithm::ImaxPpo => "imax_ppo".into(),
            Algorithm::MappoBaseline => "mappo_baseline".into(),
        },
        seeds: config.run.seeds.clone(),
        started_at: timestamp(),
        finished_at: None,
        artifacts: vec!["config.toml".into()],
    };
    // Partial manifest first so an aborted run still documents itself.
    manifest.write(&out_dir)?;

    let mut results = Vec::new();
    for &seed in &config.run.seeds {
        let result = run_seed(config, seed, resume, &mut manifest.artifacts)?;
        results.push(result);
        manifest.write(&out_dir)?;
    }

    manifest.finished_at = Some(timestamp());
    manifest.write(&out_dir)?;
    fs::write(out_dir.join("results.json"), serde_json::to_string_pretty(&results)?)?;
    if !manifest.artifacts.iter().any(|a| a == "results.json") {
        manifest.artifacts.push("results.json".into());
        manifest.artifacts.push("manifest.json".into());
        manifest.write(&out_dir)?;
    }
    Ok(manifest)
}

fn run_seed(
    config: &RunConfig,
    seed: u64,
    resume: bool,
    artifacts: &mut Vec<String>,
) -> Result<SeedResult> {
    let out_dir = PathBuf::from(&config.run.out_dir);
    let dir = seed_dir(&out_dir, seed);
    fs::create_dir_all(&dir)?;
    let game = super::config::build_game(&config.env)?;
    let trainer_cfg = config.trainer_config(seed);

    let mut trainer = if resume {
        match latest_checkpoint(&dir) {
            Some(ckpt) => {
                let snapshot = load_checkpoint(&ckpt, config)?;
                Trainer::from_snapshot(game.as_game(), trainer_cfg, snapshot)
            }
            None => Trainer::new(game.as_game(), trainer_cfg),
        }
    } else {
        Trainer::new(game.as_game(), trainer_cfg)
    };

    let metrics_path = dir.join("metrics.jsonl");
    let mut records = if resume {
        truncate_metrics(&metrics_path, trainer.iter)?
    } else {
        let _ = fs::remove_file(&metrics_path);
        Vec::new()
    };
    let rel = format!("seed_{seed}");
    for name in ["metrics.jsonl", "winrate.csv"] {
        let entry = format!("{rel}/{name}");
        if !artifacts.contains(&entry) {
            artifacts.push(entry);
        }
    }

    let mut metrics_file =
        fs::OpenOptions::new().create(true).append(true).open(&metrics_path)?;
    let steps_per_iter = (config.ppo.rollout_length * config.ppo.workers) as u64;
    let total_iters = config.run.total_steps / steps_per_iter.max(1);

    let eval = |trainer: &Trainer<'_>, at: u64| {
        let agent = NetAgent {
            policy: &trainer.policy,
            imitator: &trainer.imitator,
            zero_mask_augmentation: config.zero_mask(),
            greedy_actions: false,
        };
        evaluate_winrate(
            game.as_versus(),
            &agent,
            config.run.eval_episodes,
            rng::derive_seed(seed, "eval", at),
        )
    };

    while trainer.iter < total_iters {
        let metrics = trainer.train_iteration().map_err(|e| {
            // Leave a diagnostic dump next to the metrics before aborting.
            let dump = dir.join("abort_dump.json");
            let _ = fs::write(
                &dump,
                serde_json::json!({
                    "error": e.to_string(),
                    "iter": trainer.iter,
                    "env_steps": trainer.env_steps,
                })
                .to_string(),
            );
            anyhow::anyhow!("training aborted at iteration {}: {e}", trainer.iter)
        })?;
        let win_rate = if metrics.iter % config.run.eval_interval == 0
            || metrics.iter == total_iters
        {
            Some(eval(&trainer, metrics.iter).win_rate)
        } else {
            None
        };
        let record = MetricsRecord::from_iteration(&metrics, win_rate);
        writeln!(metrics_file, "{}", serde_json::to_string(&record)?)?;
        records.push(record);

        if metrics.iter % config.run.checkpoint_interval == 0 && metrics.iter < total_iters {
            let name = format!("ckpt_iter{}", metrics.iter);
            write_checkpoint(&dir.join(&name), config, &trainer, artifacts, &format!("{rel}/{name}"))?;
        }
    }

    write_checkpoint(&dir.join("ckpt_final"), config, &trainer, artifacts, &format!("{rel}/ckpt_final"))?;

    // Final evaluation (also covers the total_steps = 0 case).
    let final_report = eval(&trainer, trainer.iter + 1);
    fs::write(dir.join("final_eval.json"), serde_json::to_string_pretty(&final_report)?)?;
    let entry = format!("{rel}/final_eval.json");
    if !artifacts.contains(&entry) {
        artifacts.push(entry);
    }

    // Plot data: evaluation points only.
    let mut csv = String::from("iter,win_rate_mean,win_rate_ci\n");
    for record in records.iter().filter(|r| r.win_rate.is_some()) {
        let (lo, hi) = crate::marl::wilson_interval(
            (record.win_rate.unwrap() * config.run.eval_episodes as f64).round() as usize,
            config.run.eval_episodes,
        );
        csv.push_str(&format!(
            "{},{},{}\n",
            record.iter,
            record.win_rate.unwrap(),
            (hi - lo) / 2.0
        ));
    }
    fs::write(dir.join("winrate.csv"), csv)?;

    Ok(SeedResult {
        seed,
        iterations: trainer.iter,
        env_steps: trainer.env_steps,
        final_win_rate: Some(final_report.win_rate),
    })
}

/// Loads the policy and imitator from a checkpoint directory and evaluates
/// the win rate over `episodes` seeded rounds.
pub fn run_eval(checkpoint: &Path, episodes: usize, seed: u64) -> Result<crate::marl::WinRateReport> {
    let config = super::config::load_config(&checkpoint.join("config.toml"))?;
    let game = super::config::build_game(&config.env)?;
    let (policy, header) = crate::nn::load_net(&checkpoint.join("theta.net"))?;
    anyhow::ensure!(header.role == "theta", "expected a policy checkpoint, found {}", header.role);
    let (pi_net, _) = crate::nn::load_net(&checkpoint.join("psi_pi.net"))?;
    let (q_net, _) = crate::nn::load_net(&checkpoint.join("psi_Q.net"))?;
    let spec = game.as_game().spec();
    let imitator = crate::imitation::ImitatorNets {
        obs_width: crate::game::encoded_obs_width(game.as_game()),
        n_actions: spec.ally_action_count,
        n_slots: spec.n_enemies,
        q_net,
        pi_net,
    };
    let agent = NetAgent {
        policy: &policy,
        imitator: &imitator,
        zero_mask_augmentation: config.zero_mask(),
        greedy_actions: false,
    };
    Ok(evaluate_winrate(game.as_versus(), &agent, episodes, seed))
}
