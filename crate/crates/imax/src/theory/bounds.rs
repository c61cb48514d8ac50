//! Right-hand sides of the policy-perturbation bounds.

use crate::imitation::{AllyPolicy, QTable};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("discount {gamma} must be in [0, 1) for the bound")]
    GammaOutOfRange { gamma: f64 },
    #[error("per-state KL {measured} exceeds the declared cap {cap}")]
    KlCapExceeded { measured: f64, cap: f64 },
    #[error("fixed-point iteration exceeded {sweeps} sweeps")]
    FixedPointBudget { sweeps: usize },
}

/// Which of the two bound forms to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundForm {
    /// Finite state space: the value term is bounded through `ln |S|`.
    Discrete,
    /// Explicit-actor form: `ln |S|` is replaced by the negated entropy
    /// floor of the actor.
    Continuous,
}

/// Everything the bound right-hand side depends on. Construction validates
/// the per-state KL cap instead of assuming it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundInputs {
    pub gamma: f64,
    /// Per-state KL cap, in bits.
    pub kl_eps: f64,
    /// Max entry of the Q-table.
    pub q_max: f64,
    pub n_states: usize,
    /// `inf_(s,a) sum_s' pi ln pi` of the explicit actor (non-positive);
    /// only the continuous form reads it.
    pub entropy_floor: f64,
}

impl BoundInputs {
    pub fn new(
        q: &QTable,
        pol: &AllyPolicy,
        other: &AllyPolicy,
        kl_eps: f64,
        entropy_floor: f64,
    ) -> Result<Self, TheoryError> {
        let measured = super::kl::kl_per_state_max(pol, other);
        if measured > kl_eps {
            return Err(TheoryError::KlCapExceeded { measured, cap: kl_eps });
        }
        Ok(BoundInputs {
            gamma: q.gamma,
            kl_eps,
            q_max: q.values.max(),
            n_states: q.n_states(),
            entropy_floor,
        })
    }
}

/// Evaluates the stated right-hand side:
/// `[ (gamma+1+(1-gamma)^3)/(1-gamma)^2 * Qmax  +  (1+(1-gamma)^3)/(1-gamma)^2 * B ] * sqrt(2 ln2 eps)`
/// where `B = ln |S|` (discrete) or `B = -H` (continuous).
pub fn bound_rhs(inputs: &BoundInputs, form: BoundForm) -> Result<f64, TheoryError> {
    let gamma = inputs.gamma;
    if !(0.0..1.0).contains(&gamma) {
        return Err(TheoryError::GammaOutOfRange { gamma });
    }
    let om = 1.0 - gamma;
    let c_q = (gamma + 1.0 + om.powi(3)) / (om * om);
    let c_b = (1.0 + om.powi(3)) / (om * om);
    let b = match form {
        BoundForm::Discrete => (inputs.n_states as f64).ln(),
        BoundForm::Continuous => -inputs.entropy_floor,
    };
    let factor = (2.0 * std::f64::consts::LN_2 * inputs.kl_eps).sqrt();
    Ok((c_q * inputs.q_max + c_b * b) * factor)
}

/// Entropy floor of an explicit actor: `inf_(s,a) sum_s' pi ln pi`.
pub fn entropy_floor(pi: &crate::imitation::ImitationPolicy) -> f64 {
    let (n, a, _) = pi.probs.dims();
    let mut floor = f64::INFINITY;
    for s in 0..n {
        for ai in 0..a {
            let h: f64 =
                pi.probs.row(s, ai).iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
            floor = floor.min(h);
        }
    }
    floor
}
