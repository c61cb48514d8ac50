//! Numerical verification of the policy-perturbation bounds: for ally
//! policy pairs within a per-state KL cap (measured in bits), the imitation
//! objective moves by at most the stated right-hand side, and the observed
//! differences scale like the square root of the cap.
//!
//! Run with: `cargo run --release --example bound_verification`

use imax::envs::{ChainGame, ChainSpec};
use imax::theory::{bound_rhs, bounds_check, cor2_check, run_suite, SuiteConfig, TabularGame};

fn main() {
    let game = ChainGame::new(ChainSpec::default()).unwrap();
    let data = TabularGame::from_game(&game).unwrap();
    let grid = [1e-4, 1e-3, 1e-2];

    let bounds = bounds_check(&data, 50, &grid, 0, &bound_rhs);
    println!(
        "perturbation bounds: {} trials, {} violations, worst LHS/RHS {:.3}, slope {:.3}",
        bounds.trials,
        bounds.violations,
        bounds.worst_ratio,
        bounds.notes["slope"].as_f64().unwrap()
    );
    println!(
        "mean |Phi difference| per eps {:?}: {:?}",
        grid,
        bounds.notes["mean_lhs_per_eps"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| format!("{:.3e}", v.as_f64().unwrap()))
            .collect::<Vec<_>>()
    );

    let cor2 = cor2_check(&data, 2, &grid, 0, &bound_rhs);
    println!(
        "maximized-objective stability: {} trials, {} violations, worst ratio {:.3e}",
        cor2.trials, cor2.violations, cor2.worst_ratio
    );

    // The rest of the suite at reduced sizes.
    let cfg = SuiteConfig {
        operator_pairs: 25,
        prop1_trials: 10,
        prop2_trials: 10,
        prop3_pairs: 25,
        ..SuiteConfig::default()
    };
    for name in ["operators", "prop1_equivalence", "prop2_telescoping", "prop3_concavity"] {
        for report in run_suite(&data, &cfg, Some(name)) {
            println!(
                "{:<20} trials {:>4}  violations {}  worst ratio {:.3e}  ({} ms)",
                report.check_name,
                report.trials,
                report.violations,
                report.worst_ratio,
                report.runtime_ms
            );
        }
    }
}
