use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Multi-stream sequential change detection with e-detectors.
#[derive(Debug, Parser)]
#[command(name = "edetect", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment and write its report tables.
    Simulate(SimulateArgs),
    /// Monitor streams online: JSONL records in, JSONL detections out.
    Monitor(MonitorArgs),
    /// Find the threshold that reaches a target average run length.
    Calibrate(CalibrateArgs),
    /// Compare consistent-detection delays of staggered change waves.
    Piggyback(PiggybackArgs),
}

/// Overrides shared by the config-driven commands.
#[derive(Debug, Args)]
pub struct RunOverrides {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the number of replications.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Override the seed. When the config has no seed, EDETECT_SEED is used.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunOverrides,
    /// Output directory for reports.csv, replications.jsonl and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Selection rule: edbh, edbonf, edholm, edgnt or naive.
    #[arg(long)]
    pub rule: String,
    /// Detector, e.g. `gaussian:delta=1`, `symmetry-cusum:lambda=0.5`,
    /// `conformal:kappa=0.5`.
    #[arg(long)]
    pub detector: String,
    /// Level schedule: `0.01`, `over-t:0.05` or `table:0.1,0.05`.
    #[arg(long)]
    pub alpha: String,
    /// Use this constant in place of 1/alpha.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Seed for conformal tie-breaking draws.
    #[arg(long, env = "EDETECT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Only consume records whose `replication` field equals this value;
    /// also keys the tie-breaking draws.
    #[arg(long)]
    pub replication: Option<u64>,
    /// Abort on malformed records instead of skipping them.
    #[arg(long)]
    pub strict: bool,
    /// Read records from this file instead of standard input.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub run: RunOverrides,
    /// Target ARL; falls back to `calibration.target_arl` in the config.
    #[arg(long)]
    pub target_arl: Option<f64>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PiggybackArgs {
    #[command(flatten)]
    pub run: RunOverrides,
}
