//! Scan harness: configuration, energy curves over hbar / epsilon / kick
//! period, phase portraits, and their CSV and JSON outputs.

mod config;
mod output;
mod run;

pub use config::{
    load_config, parse_config, Abscissa, Engine, EnsembleConfig, NoiseKind, ScanSpec,
};
pub use output::{csv_preamble, write_curve, write_portrait, TOOL_NAME, TOOL_VERSION};
pub use run::{run_portrait, run_scan, CurvePoint, EnergyCurve, PortraitSpec};
