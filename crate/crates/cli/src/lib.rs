//! Configuration, orchestration and result writers behind the `densewlan`
//! command-line tool.

pub mod config;
pub mod experiment;

pub use config::{parse_schemes, ScenarioConfig};
pub use experiment::{run_experiment, validate_report, Command, Manifest, ResultRow, CSV_HEADER};
