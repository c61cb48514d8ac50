//! Cross-run summary tables.

use super::manifest::RunManifest;
use super::train::MetricsRecord;
use anyhow::{Context, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub env: String,
    pub difficulty: String,
    pub algorithm: String,
    pub mean_win_rate: f64,
    /// Normal-approximation 95% half-width over seeds.
    pub ci: f64,
    pub seeds: Vec<u64>,
}

/// Final win rate of one seed: the last evaluated record in its metrics
/// stream.
pub fn final_win_rate(run_dir: &Path, seed: u64) -> Result<f64> {
    let path = run_dir.join(format!("seed_{seed}")).join("metrics.jsonl");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("missing metrics file {}", path.display()))?;
    let mut last = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let record: MetricsRecord = serde_json::from_str(line)?;
        if let Some(rate) = record.win_rate {
            last = Some(rate);
        }
    }
    // Fall back to the post-training evaluation when the run had no
    // in-training eval points (e.g. total_steps = 0).
    if last.is_none() {
        let final_path = run_dir.join(format!("seed_{seed}")).join("final_eval.json");
        if final_path.exists() {
            let report: crate::marl::WinRateReport =
                serde_json::from_str(&std::fs::read_to_string(final_path)?)?;
            last = Some(report.win_rate);
        }
    }
    last.with_context(|| format!("no win-rate records for seed {seed}"))
}

/// One row per run directory: mean final win rate across seeds with a 95%
/// normal interval.
pub fn summarize(run_dirs: &[&Path]) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for dir in run_dirs {
        let manifest = RunManifest::read(dir)
            .with_context(|| format!("reading manifest in {}", dir.display()))?;
        let rates: Vec<f64> = manifest
            .seeds
            .iter()
            .map(|&seed| final_win_rate(dir, seed))
            .collect::<Result<_>>()?;
        let n = rates.len() as f64;
        let mean = rates.iter().sum::<f64>() / n;
        let ci = if rates.len() > 1 {
            let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
            1.959_963_984_540_054 * (var / n).sqrt()
        } else {
            0.0
        };
        rows.push(SummaryRow {
            env: manifest.env_name,
            difficulty: manifest.difficulty,
            algorithm: manifest.algorithm,
            mean_win_rate: mean,
            ci,
            seeds: manifest.seeds,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("env,difficulty,algorithm,mean_win_rate,ci,seeds\n");
    for row in rows {
        let seeds =
            row.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.env, row.difficulty, row.algorithm, row.mean_win_rate, row.ci, seeds
        ));
    }
    out
}
