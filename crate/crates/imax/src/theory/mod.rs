//! Numerical verification of the soft-operator and perturbation-bound
//! properties on enumerable games, with exact linear-solve oracles.

pub mod bounds;
pub mod checks;
pub mod kl;
pub mod objectives;
pub mod occupancy;
pub mod solver;

pub use bounds::{bound_rhs, entropy_floor, BoundForm, BoundInputs, TheoryError};
pub use checks::{
    bounds_check, cor2_check, operators_check, prop1_check, prop2_check, prop3_check,
    rhs_monotonicity_check, run_suite, CheckReport, SuiteConfig,
};
pub use kl::{kl_bits, kl_per_state_max, tilted_pair};
pub use objectives::{
    implied_reward, j_occupancy, l_objective, phi_objective, phi_objective_explicit,
    phi_via_compact, PhiEvaluation,
};
pub use occupancy::{occupancy, Occupancy, TabularGame};
pub use solver::{max_q_objective, SolveInfo};
