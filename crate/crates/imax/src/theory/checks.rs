//! The numerical verification suite.
//!
//! Every check draws randomized instances on an enumerable game, evaluates
//! both sides of a claimed identity or inequality with exact (linear-solve)
//! oracles, and reports trials, violations and the worst observed
//! LHS-to-allowance ratio. Trials are independent and run in a parallel map;
//! per-trial streams make reports reproducible regardless of thread count.

use super::bounds::{bound_rhs, entropy_floor, BoundForm, BoundInputs, TheoryError};
use super::kl::tilted_pair;
use super::objectives::{j_occupancy, phi_objective, phi_objective_explicit, phi_via_compact};
use super::occupancy::{occupancy, TabularGame};
use super::solver::max_q_objective;
use crate::dense::Tensor3;
use crate::imitation::{
    inverse_soft_bellman_table, j_compact, policy_from_q, policy_table_from_q, soft_bellman_table,
    soft_fixed_point, v_soft, AllyPolicy, ExpertStats, ImitationPolicy, QTable,
};
use crate::rng;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::time::Instant;

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub trials: usize,
    pub violations: usize,
    /// Worst observed LHS / allowance; at most 1 when the check passes.
    pub worst_ratio: f64,
    pub runtime_ms: u128,
    /// Check-specific extras (slopes, counterexamples).
    pub notes: serde_json::Value,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn random_policy(n: usize, a: usize, rng: &mut rng::Rng) -> AllyPolicy {
    AllyPolicy::random(n, a, rng)
}

fn random_imitation_policy(n: usize, a: usize, rng: &mut rng::Rng) -> ImitationPolicy {
    let mut probs = Tensor3::zeros(n, a, n);
    for s in 0..n {
        for ai in 0..a {
            let row = probs.row_mut(s, ai);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = rng.gen_range(0.02f64..1.0);
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }
    ImitationPolicy { probs }
}

/// Soft-operator properties: contraction factor, softmax validity and shift
/// invariance, and the equal-logits log-sum-exp identity.
pub fn operators_check(data: &TabularGame, n_pairs: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let gamma = data.gamma;
    let (n, a) = (data.n_states, data.n_actions);
    let results: Vec<(usize, f64)> = (0..n_pairs)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, "operators", trial as u64);
            let mut violations = 0usize;
            let mut worst = 0.0f64;
            let q1 = QTable::random(n, a, gamma, -2.0, 2.0, &mut rng);
            let q2 = QTable::random(n, a, gamma, -2.0, 2.0, &mut rng);
            let ally = random_policy(n, a, &mut rng);
            let r = Tensor3::zeros(n, a, n);

            // Contraction in the sup norm.
            let b1 = soft_bellman_table(&q1, &r, &ally);
            let b2 = soft_bellman_table(&q2, &r, &ally);
            let num = b1.values.max_abs_diff(&b2.values);
            let den = q1.values.max_abs_diff(&q2.values);
            let ratio = num / (gamma * den + 1e-9);
            worst = worst.max(ratio);
            if num > gamma * den + 1e-9 {
                violations += 1;
            }

            // Softmax rows are distributions.
            let pi = policy_table_from_q(&q1);
            if !pi.validate(1e-9) {
                violations += 1;
            }

            // Shift invariance at the distribution level.
            let shift = rng.gen_range(-40.0f64..40.0);
            let mut shifted = q1.clone();
            for v in shifted.values.data_mut() {
                *v += shift;
            }
            for s in 0..n {
                for ai in 0..a {
                    let p = policy_from_q(&q1, s, ai);
                    let ps = policy_from_q(&shifted, s, ai);
                    let diff =
                        p.iter().zip(ps.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    worst = worst.max(diff / 1e-12);
                    if diff > 1e-12 {
                        violations += 1;
                    }
                }
            }

            // Equal-logits identity: V = c + ln N, exact to 1e-12.
            let c = rng.gen_range(-3.0f64..3.0);
            let qc = QTable::filled(n, a, gamma, c);
            let v = v_soft(&qc, &ally, rng.gen_range(0..n));
            let err = (v - (c + (n as f64).ln())).abs();
            worst = worst.max(err / 1e-12);
            if err > 1e-12 {
                violations += 1;
            }

            // Softmax optimality: the log-sum-exp value dominates the
            // expectation-form value of any explicit policy.
            let explicit = random_imitation_policy(n, a, &mut rng);
            for s in 0..n {
                let dominated = crate::imitation::v_expectation(&q1, &ally, &explicit, s);
                let optimal = v_soft(&q1, &ally, s);
                if dominated > optimal + 1e-10 {
                    violations += 1;
                }
            }
            (violations, worst)
        })
        .collect();
    let violations = results.iter().map(|(v, _)| v).sum();
    let worst_ratio = results.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    CheckReport {
        check_name: "operators".into(),
        trials: n_pairs,
        violations,
        worst_ratio,
        runtime_ms: start.elapsed().as_millis(),
        notes: json!({}),
    }
}

/// Reward-to-Q equivalence at the soft fixed point: `L(Pi, R) = J(Pi, Q*)`
/// and the inverse operator recovers R entrywise.
pub fn prop1_check(data: &TabularGame, n_trials: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let gamma = data.gamma;
    let (n, a) = (data.n_states, data.n_actions);
    let results: Vec<(usize, f64, Option<serde_json::Value>)> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, "prop1", trial as u64);
            let mut r = Tensor3::zeros(n, a, n);
            for v in r.data_mut() {
                *v = rng.gen_range(-1.0f64..1.0);
            }
            let ally = random_policy(n, a, &mut rng);
            let q_star = match soft_fixed_point(&r, &ally, gamma, 1e-13, 20_000) {
                Ok(q) => q,
                Err(_) => {
                    return (1, f64::INFINITY, Some(json!({"trial": trial, "error": "no fixed point"})))
                }
            };
            let t = inverse_soft_bellman_table(&q_star, &ally);
            let t_err = t.max_abs_diff(&r);
            let pi = policy_table_from_q(&q_star);
            let l = super::objectives::l_objective(&r, &pi, &ally, &data.kernel, &data.p0, gamma);
            let j = j_occupancy(&q_star, &pi, &ally, &data.kernel, &data.p0);
            let lj_err = (l - j).abs();
            let worst = (lj_err / 1e-6).max(t_err / 1e-8);
            let violated = lj_err > 1e-6 || t_err > 1e-8;
            let note = violated
                .then(|| json!({"trial": trial, "lj_err": lj_err, "t_err": t_err}));
            (usize::from(violated), worst, note)
        })
        .collect();
    report_from_results("prop1_equivalence", n_trials, results, start)
}

/// Telescoping: the compact objective equals the occupancy-form objective.
pub fn prop2_check(data: &TabularGame, n_trials: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let (n, a) = (data.n_states, data.n_actions);
    let results: Vec<(usize, f64, Option<serde_json::Value>)> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, "prop2", trial as u64);
            let ally = random_policy(n, a, &mut rng);
            let q = QTable::random(n, a, 0.9, -2.0, 2.0, &mut rng);
            let pi = policy_table_from_q(&q);
            let occupancy_route = j_occupancy(&q, &pi, &ally, &data.kernel, &data.p0);
            let compact_route = phi_via_compact(&q, &ally, &data.kernel, &data.p0);
            let err = (occupancy_route - compact_route).abs();
            let violated = err > 1e-6;
            let note = violated.then(|| json!({"trial": trial, "err": err}));
            (usize::from(violated), err / 1e-6, note)
        })
        .collect();
    report_from_results("prop2_telescoping", n_trials, results, start)
}

/// Midpoint concavity of `g(Q) = J(Pi^Q, Q)` along random pairs.
pub fn prop3_check(data: &TabularGame, n_pairs: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let (n, a) = (data.n_states, data.n_actions);
    let results: Vec<(usize, f64, Option<serde_json::Value>)> = (0..n_pairs)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, "prop3", trial as u64);
            let ally = random_policy(n, a, &mut rng);
            let occ = occupancy(&data.kernel, &ally, &data.p0, 0.9);
            let stats = ExpertStats::from_exact(&occ.rho, &data.p0);
            let q1 = QTable::random(n, a, 0.9, -2.0, 2.0, &mut rng);
            let q2 = QTable::random(n, a, 0.9, -2.0, 2.0, &mut rng);
            let g = |q: &QTable| j_compact(q, &ally, &stats);
            let g1 = g(&q1);
            let g2 = g(&q2);
            let mut worst = 0.0f64;
            let mut violated = false;
            for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let mut mix = QTable::zeros(n, a, 0.9);
                for ((m, &a1), &a2) in
                    mix.values.data_mut().iter_mut().zip(q1.values.data()).zip(q2.values.data())
                {
                    *m = lambda * a1 + (1.0 - lambda) * a2;
                }
                let gap = lambda * g1 + (1.0 - lambda) * g2 - g(&mix);
                worst = worst.max(gap / 1e-9);
                if gap > 1e-9 {
                    violated = true;
                }
            }
            let note = violated.then(|| json!({"trial": trial}));
            (usize::from(violated), worst, note)
        })
        .collect();
    report_from_results("prop3_concavity", n_pairs, results, start)
}

pub type RhsFn = dyn Fn(&BoundInputs, BoundForm) -> Result<f64, TheoryError> + Sync;

/// Policy-perturbation bounds, discrete and continuous forms, plus the
/// square-root scaling of the observed differences in the KL cap.
///
/// Q-tables are drawn nonnegative: the objective difference is invariant to
/// shifting Q while the stated right-hand side is not, so the bound reads Q
/// as a nonnegative soft return.
pub fn bounds_check(
    data: &TabularGame,
    trials_per_eps: usize,
    eps_grid: &[f64],
    seed: u64,
    rhs_fn: &RhsFn,
) -> CheckReport {
    let start = Instant::now();
    let (n, a) = (data.n_states, data.n_actions);
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    let mut counterexamples = Vec::new();
    let mut mean_lhs_per_eps = Vec::new();
    for (ei, &eps) in eps_grid.iter().enumerate() {
        let results: Vec<(usize, f64, f64, Option<serde_json::Value>)> = (0..trials_per_eps)
            .into_par_iter()
            .map(|trial| {
                let mut rng = rng::stream(seed, "bounds", (ei * trials_per_eps + trial) as u64);
                let q = QTable::random(n, a, data.gamma, 0.0, 3.0, &mut rng);
                let base = random_policy(n, a, &mut rng);
                let (tilted, measured) = tilted_pair(&base, eps, &mut rng);
                let actor = random_imitation_policy(n, a, &mut rng);
                let inputs =
                    BoundInputs::new(&q, &tilted, &base, eps, entropy_floor(&actor)).unwrap();

                let mut trial_violations = 0usize;
                let mut trial_worst = 0.0f64;
                let mut note = None;

                // Pinsker-style step on the constructed pair: the sup-norm
                // row difference is bounded by sqrt(2 ln2 KL_bits).
                for s in 0..n {
                    let p = tilted.probs.row(s);
                    let b = base.probs.row(s);
                    let sup =
                        p.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    let kl = super::kl::kl_bits(p, b);
                    if sup > (2.0 * std::f64::consts::LN_2 * kl).sqrt() + 1e-12 {
                        trial_violations += 1;
                    }
                }

                let lhs_d = (phi_objective(&q, &tilted, &data.kernel, &data.p0).value
                    - phi_objective(&q, &base, &data.kernel, &data.p0).value)
                    .abs();
                let rhs_d = rhs_fn(&inputs, BoundForm::Discrete).unwrap();
                trial_worst = trial_worst.max(lhs_d / rhs_d);
                if lhs_d > rhs_d {
                    trial_violations += 1;
                    note = Some(json!({
                        "form": "discrete", "eps": eps, "trial": trial,
                        "lhs": lhs_d, "rhs": rhs_d, "kl_measured": measured,
                        "q_max": inputs.q_max,
                    }));
                }

                let lhs_c = (phi_objective_explicit(&q, &tilted, &actor, &data.kernel, &data.p0)
                    .value
                    - phi_objective_explicit(&q, &base, &actor, &data.kernel, &data.p0).value)
                    .abs();
                let rhs_c = rhs_fn(&inputs, BoundForm::Continuous).unwrap();
                trial_worst = trial_worst.max(lhs_c / rhs_c);
                if lhs_c > rhs_c {
                    trial_violations += 1;
                    note = Some(json!({
                        "form": "continuous", "eps": eps, "trial": trial,
                        "lhs": lhs_c, "rhs": rhs_c, "kl_measured": measured,
                    }));
                }
                (trial_violations, trial_worst, lhs_d, note)
            })
            .collect();
        violations += results.iter().map(|(v, ..)| v).sum::<usize>();
        worst = worst.max(results.iter().map(|(_, w, ..)| *w).fold(0.0, f64::max));
        let mean_lhs =
            results.iter().map(|(_, _, l, _)| l).sum::<f64>() / trials_per_eps as f64;
        mean_lhs_per_eps.push(mean_lhs);
        counterexamples.extend(results.into_iter().filter_map(|(.., note)| note));
    }

    // Empirical scaling: log-log slope of the mean LHS in eps.
    let slope = log_log_slope(eps_grid, &mean_lhs_per_eps);
    if slope > 0.6 {
        violations += 1;
    }
    CheckReport {
        check_name: "prop4_prop5_bounds".into(),
        trials: trials_per_eps * eps_grid.len(),
        violations,
        worst_ratio: worst.max(slope / 0.6),
        runtime_ms: start.elapsed().as_millis(),
        notes: json!({
            "slope": slope,
            "mean_lhs_per_eps": mean_lhs_per_eps,
            "eps_grid": eps_grid,
            "counterexamples": counterexamples,
        }),
    }
}

/// Stability of the maximized objective: maxima over a Q box under the two
/// policies differ by at most the discrete bound at the box cap.
pub fn cor2_check(
    data: &TabularGame,
    trials_per_eps: usize,
    eps_grid: &[f64],
    seed: u64,
    rhs_fn: &RhsFn,
) -> CheckReport {
    let start = Instant::now();
    let (n, a) = (data.n_states, data.n_actions);
    let q_cap = 3.0;
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    let mut counterexamples = Vec::new();
    for (ei, &eps) in eps_grid.iter().enumerate() {
        let results: Vec<(usize, f64, Option<serde_json::Value>)> = (0..trials_per_eps)
            .into_par_iter()
            .map(|trial| {
                let mut rng = rng::stream(seed, "cor2", (ei * trials_per_eps + trial) as u64);
                let base = random_policy(n, a, &mut rng);
                let (tilted, measured) = tilted_pair(&base, eps, &mut rng);
                let max_phi = |pol: &AllyPolicy| {
                    let occ = occupancy(&data.kernel, pol, &data.p0, data.gamma);
                    max_q_objective(&occ.rho, pol, data.gamma, &data.p0, 0.0, q_cap).1
                };
                let v1 = max_phi(&tilted);
                let v2 = max_phi(&base);
                let lhs = (v1.value - v2.value).abs();
                let inputs = BoundInputs {
                    gamma: data.gamma,
                    kl_eps: eps,
                    q_max: q_cap,
                    n_states: n,
                    entropy_floor: 0.0,
                };
                let rhs = rhs_fn(&inputs, BoundForm::Discrete).unwrap();
                let violated = lhs > rhs;
                let note = violated.then(|| {
                    json!({"eps": eps, "trial": trial, "lhs": lhs, "rhs": rhs,
                           "kl_measured": measured,
                           "projected_grad": v1.worst_projected_grad.max(v2.worst_projected_grad)})
                });
                (usize::from(violated), lhs / rhs, note)
            })
            .collect();
        violations += results.iter().map(|(v, ..)| v).sum::<usize>();
        worst = worst.max(results.iter().map(|(_, w, _)| *w).fold(0.0, f64::max));
        counterexamples.extend(results.into_iter().filter_map(|(.., note)| note));
    }
    CheckReport {
        check_name: "cor2_stability".into(),
        trials: trials_per_eps * eps_grid.len(),
        violations,
        worst_ratio: worst,
        runtime_ms: start.elapsed().as_millis(),
        notes: json!({"q_cap": q_cap, "counterexamples": counterexamples}),
    }
}

/// Direct monotonicity assertions on the bound right-hand side.
pub fn rhs_monotonicity_check(seed: u64) -> CheckReport {
    let start = Instant::now();
    let mut violations = 0usize;
    let mut trials = 0usize;
    let mut rng = rng::stream(seed, "rhs-monotone", 0);
    for _ in 0..50 {
        let gamma = rng.gen_range(0.1f64..0.95);
        let q_max = rng.gen_range(0.1f64..5.0);
        let n_states = rng.gen_range(2usize..512);
        let eps = rng.gen_range(1e-5f64..1e-1);
        let base = BoundInputs { gamma, kl_eps: eps, q_max, n_states, entropy_floor: 0.0 };
        let rhs = bound_rhs(&base, BoundForm::Discrete).unwrap();
        let mut bump = |f: &dyn Fn(&mut BoundInputs)| {
            let mut b = base.clone();
            f(&mut b);
            trials += 1;
            if bound_rhs(&b, BoundForm::Discrete).unwrap() <= rhs {
                violations += 1;
            }
        };
        bump(&|b| b.kl_eps *= 2.0);
        bump(&|b| b.q_max += 1.0);
        bump(&|b| b.n_states *= 2);
    }
    CheckReport {
        check_name: "rhs_monotonicity".into(),
        trials,
        violations,
        worst_ratio: if violations == 0 { 0.0 } else { f64::INFINITY },
        runtime_ms: start.elapsed().as_millis(),
        notes: json!({}),
    }
}

fn report_from_results(
    name: &str,
    trials: usize,
    results: Vec<(usize, f64, Option<serde_json::Value>)>,
    start: Instant,
) -> CheckReport {
    let violations = results.iter().map(|(v, ..)| v).sum();
    let worst_ratio = results.iter().map(|(_, w, _)| *w).fold(0.0, f64::max);
    let counterexamples: Vec<serde_json::Value> =
        results.into_iter().filter_map(|(.., n)| n).collect();
    CheckReport {
        check_name: name.into(),
        trials,
        violations,
        worst_ratio,
        runtime_ms: start.elapsed().as_millis(),
        notes: json!({ "counterexamples": counterexamples }),
    }
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Suite configuration; defaults match the acceptance gate.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub operator_pairs: usize,
    pub prop1_trials: usize,
    pub prop2_trials: usize,
    pub prop3_pairs: usize,
    pub bound_trials_per_eps: usize,
    pub cor2_trials_per_eps: usize,
    pub eps_grid: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            operator_pairs: 100,
            prop1_trials: 50,
            prop2_trials: 50,
            prop3_pairs: 100,
            bound_trials_per_eps: 100,
            cor2_trials_per_eps: 4,
            eps_grid: vec![1e-4, 1e-3, 1e-2],
        }
    }
}

/// Runs every check (optionally filtered by name substring) on the given
/// tabular game.
pub fn run_suite(data: &TabularGame, cfg: &SuiteConfig, filter: Option<&str>) -> Vec<CheckReport> {
    let wanted = |name: &str| filter.map_or(true, |f| name.contains(f));
    let mut reports = Vec::new();
    if wanted("operators") {
        reports.push(operators_check(data, cfg.operator_pairs, cfg.seed));
    }
    if wanted("prop1_equivalence") {
        reports.push(prop1_check(data, cfg.prop1_trials, cfg.seed));
    }
    if wanted("prop2_telescoping") {
        reports.push(prop2_check(data, cfg.prop2_trials, cfg.seed));
    }
    if wanted("prop3_concavity") {
        reports.push(prop3_check(data, cfg.prop3_pairs, cfg.seed));
    }
    if wanted("prop4_prop5_bounds") {
        reports.push(bounds_check(
            data,
            cfg.bound_trials_per_eps,
            &cfg.eps_grid,
            cfg.seed,
            &bound_rhs,
        ));
    }
    if wanted("cor2_stability") {
        reports.push(cor2_check(data, cfg.cor2_trials_per_eps, &cfg.eps_grid, cfg.seed, &bound_rhs));
    }
    if wanted("rhs_monotonicity") {
        reports.push(rhs_monotonicity_check(cfg.seed));
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{ChainGame, ChainSpec};

    fn small_data() -> TabularGame {
        let game = ChainGame::new(ChainSpec { n_positions: 5, ..ChainSpec::default() }).unwrap();
        TabularGame::from_game(&game).unwrap()
    }

    #[test]
    fn small_suite_passes() {
        let data = small_data();
        let cfg = SuiteConfig {
            operator_pairs: 10,
            prop1_trials: 5,
            prop2_trials: 5,
            prop3_pairs: 5,
            bound_trials_per_eps: 5,
            cor2_trials_per_eps: 1,
            eps_grid: vec![1e-3, 1e-2],
            ..SuiteConfig::default()
        };
        for report in run_suite(&data, &cfg, None) {
            assert!(
                report.passed(),
                "{} failed: {} violations, worst {}",
                report.check_name,
                report.violations,
                report.worst_ratio
            );
        }
    }

    #[test]
    fn max_stability_lemma() {
        // |max f - max g| <= eps whenever |f - g| <= eps pointwise; the
        // step the maximized-objective stability check rests on.
        let mut rng = crate::rng::stream(3, "lemma", 0);
        for _ in 0..200 {
            let f: Vec<f64> = (0..40).map(|_| rng.gen_range(-5.0f64..5.0)).collect();
            let eps = rng.gen_range(0.0f64..0.5);
            let g: Vec<f64> =
                f.iter().map(|v| v + rng.gen_range(-eps..eps)).collect();
            let max_f = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let max_g = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((max_f - max_g).abs() <= eps + 1e-12);
        }
    }

    #[test]
    fn sign_flipped_rhs_is_caught() {
        // Self-test of the tester: a corrupted bound must produce
        // violations.
        let data = small_data();
        let flipped = |inputs: &BoundInputs, form: BoundForm| -> Result<f64, TheoryError> {
            bound_rhs(inputs, form).map(|v| -v)
        };
        let report = bounds_check(&data, 3, &[1e-3], 0, &flipped);
        assert!(report.violations > 0);
        assert!(!report.notes["counterexamples"].as_array().unwrap().is_empty());
    }
}
