//! Batch orchestration: configuration, seeding, persistence and the
//! train / eval / verify / summarize workflows behind the CLI.
//!
//! All randomness in a run flows from a single root seed through the split
//! scheme in [`crate::rng`]; file writes happen only on the coordinating
//! thread.

pub mod config;
pub mod manifest;
pub mod summary;
pub mod train;
pub mod verify;

pub use config::{
    build_game, load_config, parse_config, Algorithm, AlgorithmConfig, BuiltGame, ConfigError,
    EnvConfig, EnvName, ImitationSection, PpoSection, RunConfig, RunSection,
};
pub use manifest::RunManifest;
pub use summary::{final_win_rate, summarize, to_csv, SummaryRow};
pub use train::{run_eval, run_train, MetricsRecord, SeedResult};
pub use verify::{run_verify, write_report, VerifyReport};
