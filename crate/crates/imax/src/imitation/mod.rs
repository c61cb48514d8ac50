//! State-only multi-agent imitation of scripted opponents.
//!
//! The enemies' hidden joint action is identified with the next state they
//! produce, turning opponent modeling into an inverse-soft-Q problem. Two
//! paths share the same objective: an exact tabular solver over enumerable
//! games and a function-approximation variant over each ally's local
//! observations with per-slot next-state atoms.

pub mod atoms;
pub mod buffer;
pub mod local;
pub mod tabular;

pub use atoms::{atom_targets, MoveAtom, N_ATOMS};
pub use buffer::{LocalBatch, LocalExpertBuffer, LocalTuple, ObsEntry, RingBuffer};
pub use local::{
    collect_local_expert, fit_imitator, j_local, prediction_accuracy, sac_actor_update, v_local,
    ActionDist, ImitatorFitConfig, ImitatorNets, PredictMode, UniformActions,
};
pub use tabular::{
    collect_tabular_expert, inverse_soft_bellman, inverse_soft_bellman_table, iq_gradient,
    j_compact, policy_from_q, policy_table_from_q, soft_bellman, soft_bellman_table,
    soft_fixed_point, total_variation, v_expectation, v_expectation_all, v_soft, v_soft_all,
    AllyPolicy, ExpertStats, ImitationError, ImitationPolicy, IqStepReport, QTable,
    TabularIqLearner,
};
