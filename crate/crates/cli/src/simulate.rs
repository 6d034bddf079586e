use std::fs;

use anyhow::{Context, Result};
use edetect::simlab::{piggyback_experiment, run_experiment, write_artifacts, ExperimentConfig, RunOptions};

use crate::args::{PiggybackArgs, RunOverrides, SimulateArgs};

const SEED_ENV: &str = "EDETECT_SEED";

/// Load a config and apply command-line overrides.
pub fn load(run: &RunOverrides) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&run.config)
        .with_context(|| format!("reading {}", run.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    let has_seed = text
        .parse::<toml::Table>()
        .map(|t| t.contains_key("seed"))
        .unwrap_or(false);
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    } else if !has_seed {
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.seed = v
                .trim()
                .parse()
                .map_err(|_| edetect::Error::InvalidConfig {
                    field: SEED_ENV.to_string(),
                    reason: format!("not an unsigned integer: `{v}`"),
                })?;
        }
    }
    if let Some(reps) = run.reps {
        cfg.reps = reps;
    }
    if run.threads.is_some() {
        cfg.threads = run.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let cfg = load(&args.run)?;
    let opts = RunOptions {
        keep_histories: cfg.report.persist_frames,
    };
    let output = run_experiment(&cfg, &opts)?;
    let written = write_artifacts(&args.out, &cfg, &output)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn piggyback(args: PiggybackArgs) -> Result<()> {
    let cfg = load(&args.run)?;
    let report = piggyback_experiment(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
