//! Episode orchestration, baselines, sweeps and reporting.

pub mod config;
pub mod env;
pub mod methods;
pub mod record;
pub mod report;
pub mod sweep;

pub use config::{Axis, ScenarioConfig, CALIBRATED_FSO_NOISE};
pub use env::{power_cost, Scenario, SlotCost, SlotEnv, SlotInputs, SlotRecord};
pub use methods::{evaluate, run_baseline, run_method, train_method, Method};
pub use record::{verify, Check, RunRecord, Summary};
pub use sweep::{sweep_and_report, CellSummary, SweepOutput};

/// Results directory override.
pub const RESULTS_DIR_ENV: &str = "HAPCACHE_RESULTS_DIR";

pub fn results_dir() -> std::path::PathBuf {
    std::env::var_os(RESULTS_DIR_ENV)
        .map(Into::into)
        .unwrap_or_else(|| "results".into())
}
