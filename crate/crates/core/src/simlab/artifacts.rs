//! On-disk outputs of a simulation run.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! reader never sees a partial artifact. Nothing machine- or time-dependent
//! is recorded; identical configurations produce identical bytes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::generator::generate_batch;
use super::runner::ExperimentOutput;
use crate::error::{Error, Result};
use crate::metrics::CSV_HEADER;

pub const REPORTS_FILE: &str = "reports.csv";
pub const REPLICATIONS_FILE: &str = "replications.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.jsonl";
pub const FRAMES_FILE: &str = "frames.jsonl";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    name: &'a str,
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    seed: u64,
    reps: u64,
    streams: usize,
    horizon: u64,
    rules: Vec<String>,
    files: Vec<&'static str>,
}

#[derive(Serialize)]
struct DataRecord<'a> {
    replication: u64,
    t: u64,
    x: &'a [f64],
}

#[derive(Serialize)]
struct FrameRecord<'a> {
    replication: u64,
    /// The rule's configured label; the frame carries the rule kind.
    label: &'a str,
    #[serde(flatten)]
    frame: &'a crate::procedures::DetectionFrame,
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configuration serializes");
    Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn atomic_write(dir: &Path, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let write = || -> std::io::Result<()> {
        let file = fs::File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
        Ok(())
    };
    write().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
    Ok(target)
}

fn json_line(w: &mut dyn Write, value: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

/// Write the artifacts of `output` into `dir` (created if missing) and
/// return the written paths.
pub fn write_artifacts(dir: &Path, cfg: &ExperimentConfig, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![REPORTS_FILE, REPLICATIONS_FILE];
    let mut written = Vec::new();

    written.push(atomic_write(dir, REPORTS_FILE, |w| {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &output.reports {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    })?);
    written.push(atomic_write(dir, REPLICATIONS_FILE, |w| {
        output.records.iter().try_for_each(|r| json_line(w, r))
    })?);

    if cfg.report.persist_data {
        let spec = cfg.generator_spec()?;
        files.push(DATA_FILE);
        written.push(atomic_write(dir, DATA_FILE, |w| {
            for replication in 0..cfg.reps {
                for t in 1..=cfg.horizon {
                    let x = generate_batch(&spec, cfg.seed, replication, t);
                    json_line(w, &DataRecord { replication, t, x: &x })?;
                }
            }
            Ok(())
        })?);
    }

    if cfg.report.persist_frames {
        let histories = output
            .histories
            .as_ref()
            .ok_or_else(|| Error::input("frames requested but histories were not kept"))?;
        files.push(FRAMES_FILE);
        let labels: Vec<String> = cfg.rules.iter().map(|r| r.label()).collect();
        written.push(atomic_write(dir, FRAMES_FILE, |w| {
            for (replication, per_rule) in histories.iter().enumerate() {
                for (rule, h) in labels.iter().zip(per_rule) {
                    for frame in h.frames() {
                        json_line(w, &FrameRecord { replication: replication as u64, label: rule, frame })?;
                    }
                }
            }
            Ok(())
        })?);
    }

    files.push(MANIFEST_FILE);
    let manifest = Manifest {
        name: &cfg.name,
        tool: "edetect",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        reps: cfg.reps,
        streams: cfg.streams,
        horizon: cfg.horizon,
        rules: cfg.rules.iter().map(|r| r.label()).collect(),
        files,
    };
    written.push(atomic_write(dir, MANIFEST_FILE, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n")
    })?);
    Ok(written)
}
