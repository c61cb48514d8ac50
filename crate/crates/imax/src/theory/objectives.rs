//! Occupancy-form evaluation of the imitation objectives.
//!
//! These are the definition-level routes: every expectation is taken under
//! an exactly computed occupancy measure. The training path in
//! `crate::imitation` evaluates the same quantities through the compact
//! telescoped form; the verification suite checks the two routes agree.

use super::occupancy::{occupancy, Occupancy};
use crate::dense::Tensor3;
use crate::imitation::{
    inverse_soft_bellman_table, v_expectation_all, v_soft_all, AllyPolicy, ImitationPolicy, QTable,
};

fn weighted_sum(weights: &Tensor3, values: &Tensor3) -> f64 {
    weights
        .data()
        .iter()
        .zip(values.data().iter())
        .filter(|(&w, _)| w != 0.0)
        .map(|(&w, &v)| w * v)
        .sum()
}

/// Max-entropy inverse-RL objective
/// `L(Pi, R) = E_rhoE[R] - E_rhoPi[R] + E_rhoPi[ln Pi]`,
/// with the expert occupancy under the true kernel and the imitation
/// occupancy under `pi` itself as the transition kernel.
pub fn l_objective(
    r: &Tensor3,
    pi: &ImitationPolicy,
    ally: &AllyPolicy,
    true_kernel: &Tensor3,
    p0: &[f64],
    gamma: f64,
) -> f64 {
    let rho_e = occupancy(true_kernel, ally, p0, gamma);
    let rho_pi = occupancy(&pi.probs, ally, p0, gamma);
    let entropy_term: f64 = rho_pi
        .rho
        .data()
        .iter()
        .zip(pi.probs.data().iter())
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &p)| w * p.ln())
        .sum();
    weighted_sum(&rho_e.rho, r) - weighted_sum(&rho_pi.rho, r) + entropy_term
}

/// Occupancy-form objective
/// `J(Pi, Q) = E_rhoE[T] - E_rhoPi[T] + E_rhoPi[ln Pi]` with
/// `T = Q - gamma V_Pi(s')` (the inverse soft Bellman image of Q under the
/// explicit policy `pi`).
pub fn j_occupancy(
    q: &QTable,
    pi: &ImitationPolicy,
    ally: &AllyPolicy,
    true_kernel: &Tensor3,
    p0: &[f64],
) -> f64 {
    let v = v_expectation_all(q, ally, pi);
    let (n, n_actions, _) = q.values.dims();
    let mut t = Tensor3::zeros(n, n_actions, n);
    for s in 0..n {
        for a in 0..n_actions {
            let qrow = q.values.row(s, a);
            let trow = t.row_mut(s, a);
            for sp in 0..n {
                trow[sp] = qrow[sp] - q.gamma * v[sp];
            }
        }
    }
    l_objective(&t, pi, ally, true_kernel, p0, q.gamma)
}

/// Exact evaluation of the imitation loss as a function of the allies'
/// joint policy, decomposed into its three terms:
/// `Phi = E_rhoE[Q] - gamma E_rhoE[V(s')] - (1-gamma) E_p0[V]`.
#[derive(Debug, Clone)]
pub struct PhiEvaluation {
    pub value: f64,
    pub expert_q_term: f64,
    pub discounted_value_term: f64,
    pub initial_value_term: f64,
    pub occupancy: Occupancy,
}

impl PhiEvaluation {
    /// The decomposition must reassemble to the value exactly.
    pub fn consistent(&self, tol: f64) -> bool {
        (self.expert_q_term - self.discounted_value_term - self.initial_value_term - self.value)
            .abs()
            <= tol
    }
}

fn phi_from_values(
    q: &QTable,
    ally: &AllyPolicy,
    kernel: &Tensor3,
    p0: &[f64],
    v: &[f64],
) -> PhiEvaluation {
    let occ = occupancy(kernel, ally, p0, q.gamma);
    let expert_q_term = weighted_sum(&occ.rho, &q.values);
    let (n, n_actions, _) = q.values.dims();
    let mut discounted_value_term = 0.0;
    for s in 0..n {
        for a in 0..n_actions {
            let row = occ.rho.row(s, a);
            for sp in 0..n {
                if row[sp] != 0.0 {
                    discounted_value_term += q.gamma * row[sp] * v[sp];
                }
            }
        }
    }
    let initial_value_term: f64 =
        (1.0 - q.gamma) * p0.iter().zip(v.iter()).map(|(&p, &vv)| p * vv).sum::<f64>();
    PhiEvaluation {
        value: expert_q_term - discounted_value_term - initial_value_term,
        expert_q_term,
        discounted_value_term,
        initial_value_term,
        occupancy: occ,
    }
}

/// Discrete form: the imitation policy is the softmax of Q, so V is the
/// log-sum-exp soft value.
pub fn phi_objective(q: &QTable, ally: &AllyPolicy, kernel: &Tensor3, p0: &[f64]) -> PhiEvaluation {
    let v = v_soft_all(q, ally);
    phi_from_values(q, ally, kernel, p0, &v)
}

/// Continuous form: an explicit actor `pi` replaces the softmax policy and V
/// is the expectation-form soft value.
pub fn phi_objective_explicit(
    q: &QTable,
    ally: &AllyPolicy,
    pi: &ImitationPolicy,
    kernel: &Tensor3,
    p0: &[f64],
) -> PhiEvaluation {
    let v = v_expectation_all(q, ally, pi);
    phi_from_values(q, ally, kernel, p0, &v)
}

/// `Phi` equals the compact objective at the softmax policy; this is the
/// compact route used by training, evaluated at exact occupancy weights.
pub fn phi_via_compact(q: &QTable, ally: &AllyPolicy, kernel: &Tensor3, p0: &[f64]) -> f64 {
    let occ = occupancy(kernel, ally, p0, q.gamma);
    let stats = crate::imitation::ExpertStats::from_exact(&occ.rho, p0);
    crate::imitation::j_compact(q, ally, &stats)
}

/// Reward recovered from Q by the inverse soft Bellman operator, for the
/// fixed-point equivalence checks.
pub fn implied_reward(q: &QTable, ally: &AllyPolicy) -> Tensor3 {
    inverse_soft_bellman_table(q, ally)
}
