//! Scenario files, bundled presets, output formats and plotting for the
//! `pmlwave` command line.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;

pub use config::{load_and_validate, parse_and_validate, ConfigError, ResolvedConfig, SimulationConfig};
pub use presets::{preset, scenario_presets, Preset};
