//! Data generators, experiment configuration and the Monte Carlo runner.

mod artifacts;
mod bank;
mod config;
mod generator;
mod piggyback;
mod runner;
mod validity;

pub use artifacts::{
    config_hash, write_artifacts, DATA_FILE, FRAMES_FILE, MANIFEST_FILE, REPLICATIONS_FILE,
    REPORTS_FILE,
};
pub use bank::{theta, DetectorBank};
pub use config::{CalibrationConfig, ChangeWave, ExperimentConfig, GeneratorConfig, ReportConfig, RuleConfig};
pub use generator::{cauchy_from_uniform, generate_batch, GeneratorFamily, StreamGeneratorSpec};
pub use piggyback::{piggyback_experiment, PiggybackReport, WaveReport, CONSISTENT_TICKS};
pub use runner::{
    map_replications, natural_error, run_experiment, ExperimentOutput, ReplicationRecord, RunOptions, StopRecord,
    FIXED_METRICS,
};
pub use validity::{validity_check, CheckedDetector, ValidityCheck, ValidityPoint, ValidityReport};
