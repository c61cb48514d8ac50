//! End-to-end checks of the command-line interface: exit codes, the verify
//! report schema, and the train / eval / summarize round trip.

use std::path::Path;
use std::process::Command;

fn imax_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_imax"))
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[ppo]\ngamma = 1.5\n").unwrap();
    let output = imax_bin().args(["train", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("gamma must be in (0,1)"), "{stderr}");

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[ppo]\ngama = 0.9\n").unwrap();
    let output = imax_bin().args(["train", "--config"]).arg(&typo).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_writes_a_schema_conformant_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = imax_bin()
        .args(["verify", "--suite", "rhs_monotonicity", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS rhs_monotonicity"), "{stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["kl_log_base"], "bits");
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for check in checks {
        for field in ["check_name", "trials", "violations", "worst_ratio", "runtime_ms"] {
            assert!(check.get(field).is_some(), "missing field {field}");
        }
    }
}

#[test]
fn train_eval_summarize_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config = format!(
        r#"
[env]
name = "grid_miner"
horizon = 16

[ppo]
rollout_length = 128
hidden = [8, 8]

[imitation]
buffer_capacity = 1024
batch_size = 64

[run]
total_steps = 256
eval_interval = 1
eval_episodes = 4
checkpoint_interval = 1
seeds = [3]
out_dir = "{}"
"#,
        out_dir.display()
    );
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, config).unwrap();

    let output = imax_bin().args(["train", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    // Manifest lists every artifact, and the listed files exist.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for artifact in artifacts {
        let path = out_dir.join(artifact.as_str().unwrap());
        assert!(path.exists(), "missing artifact {}", path.display());
    }
    // And conversely: everything written is listed.
    fn walk(dir: &Path, base: &Path, found: &mut Vec<String>) {
        for entry in std::fs::read_dir(dir).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(&path, base, found);
            } else {
                found.push(path.strip_prefix(base).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    let mut written = Vec::new();
    walk(&out_dir, &out_dir, &mut written);
    for file in &written {
        assert!(
            artifacts.iter().any(|a| a.as_str() == Some(file.as_str())),
            "file {file} not listed in the manifest"
        );
    }

    // Metrics records carry the documented fields.
    let metrics = std::fs::read_to_string(out_dir.join("seed_3/metrics.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(metrics.lines().next().unwrap()).unwrap();
    for field in [
        "iter",
        "env_steps",
        "actor_loss",
        "critic_loss",
        "il_loss",
        "il_accuracy",
        "win_rate",
        "kl_old_new",
        "wall_ms",
    ] {
        assert!(first.get(field).is_some(), "metrics record missing {field}");
    }

    // Eval on the final checkpoint.
    let ckpt = out_dir.join("seed_3/ckpt_final");
    let output =
        imax_bin().args(["eval", "--episodes", "4", "--checkpoint"]).arg(&ckpt).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["episodes"], 4);

    // Summary CSV has the documented header and one row.
    let output = imax_bin().args(["summarize"]).arg(&out_dir).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let csv = String::from_utf8_lossy(&output.stdout);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("env,difficulty,algorithm,mean_win_rate,ci,seeds"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("grid_miner,easy,imax_ppo,"), "{row}");
}

#[test]
fn zero_total_steps_yields_initial_checkpoint_only() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run0");
    let config = format!(
        r#"
[env]
name = "grid_miner"
horizon = 16

[ppo]
rollout_length = 128
hidden = [8, 8]

[run]
total_steps = 0
eval_episodes = 2
seeds = [1]
out_dir = "{}"
"#,
        out_dir.display()
    );
    let config_path = dir.path().join("zero.toml");
    std::fs::write(&config_path, config).unwrap();
    let output = imax_bin().args(["train", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(out_dir.join("seed_1/ckpt_final/trainer_state.bin").exists());
    let metrics = std::fs::read_to_string(out_dir.join("seed_1/metrics.jsonl")).unwrap();
    assert!(metrics.trim().is_empty(), "no iterations should have run");
}
