//! Scenario layer over `zeno-core`: model builders, TOML configs, the task
//! runner and CSV output.

pub mod config;
pub mod error;
pub mod run;
pub mod scenario;
pub mod table;

pub use config::{ModelConfig, ScenarioConfig, Task};
pub use error::{CliError, CliResult};
pub use run::{run_scenario, RunReport, Warning, WarningKind};
pub use scenario::{build_scenario, perturbed_invariance_check, InvarianceReport, Scenario};
pub use table::{emit_csv, Cell, Table};
