//! Configuration-driven scenario runner for the OAM-transfer simulator.
//!
//! A scenario is a TOML file (see [`config`]) naming one of the shipped
//! experiments or a custom sequence; [`run_scenario`] executes it and writes
//! images, tables and a summary. Presets for the four experiments and the
//! resonance sweep are embedded in [`presets`].

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod scenario;

pub use config::{load_config, normalized_echo, parse_config, Config, ConfigError, ConfigErrors, Scenario};
pub use scenario::{run_scenario, Bundle, RunError, Summary};
