//! Staggered change waves: how long until each wave is detected for good.

use serde::{Deserialize, Serialize};

use super::bank::DetectorBank;
use super::config::ExperimentConfig;
use super::runner::map_replications;
use crate::error::{Error, Result};
use crate::metrics::Moments;

/// A wave counts as detected once all of its streams stay selected for this
/// many consecutive ticks.
pub const CONSISTENT_TICKS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    /// 1-based inclusive stream range.
    pub streams: [usize; 2],
    pub at: u64,
    /// Per replication: ticks from the change until the start of the first
    /// consistent-detection window; `None` if none completed in the horizon.
    pub delays: Vec<Option<u64>>,
    /// Mean over uncensored replications.
    pub mean_delay: f64,
    pub se: f64,
    pub censored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiggybackReport {
    pub rule: String,
    pub reps: u64,
    /// Waves in order of their changepoints.
    pub waves: Vec<WaveReport>,
    /// `None` when there is no second wave.
    pub second_wave_faster: Option<bool>,
}

/// Consistent-detection delays of each change wave under the first rule of
/// `cfg`.
pub fn piggyback_experiment(cfg: &ExperimentConfig) -> Result<PiggybackReport> {
    cfg.validate()?;
    let mut waves = cfg.generator.changes.clone();
    if waves.is_empty() {
        return Err(Error::config("generator.changes", "at least one change wave is required"));
    }
    waves.sort_by_key(|w| w.at);
    let gen = cfg.generator_spec()?;
    let rule = &cfg.rules[0];
    let selector = rule.selector()?;
    let streams = cfg.streams;

    let per_rep = map_replications(cfg.reps, cfg.threads, |rep| {
        let mut bank = DetectorBank::new(cfg.detector, streams)?;
        // Start of the current all-selected run, per wave.
        let mut run_start: Vec<Option<u64>> = vec![None; waves.len()];
        let mut done: Vec<Option<u64>> = vec![None; waves.len()];
        for t in 1..=cfg.horizon {
            let values = bank.step(&gen, cfg.seed, rep, t)?;
            let frame = selector.select(t, values)?;
            for (w, wave) in waves.iter().enumerate() {
                if done[w].is_some() || t < wave.at {
                    continue;
                }
                let all = (wave.streams[0] - 1..wave.streams[1]).all(|k| frame.is_selected(k));
                if !all {
                    run_start[w] = None;
                    continue;
                }
                let start = *run_start[w].get_or_insert(t);
                if t + 1 - start >= CONSISTENT_TICKS {
                    done[w] = Some(start - wave.at);
                }
            }
            if done.iter().all(Option::is_some) {
                break;
            }
        }
        Ok(done)
    })?;

    let reports: Vec<WaveReport> = waves
        .iter()
        .enumerate()
        .map(|(w, wave)| {
            let delays: Vec<Option<u64>> = per_rep.iter().map(|d| d[w]).collect();
            let mut m = Moments::default();
            delays.iter().flatten().for_each(|&d| m.push(d as f64));
            WaveReport {
                streams: wave.streams,
                at: wave.at,
                censored: delays.iter().filter(|d| d.is_none()).count() as u64,
                delays,
                mean_delay: m.mean(),
                se: m.se(),
            }
        })
        .collect();
    let second_wave_faster = (reports.len() >= 2).then(|| {
        let (a, b) = (&reports[0], &reports[1]);
        // A censored first-wave replication took longer than any observed delay.
        b.censored == 0 && (a.censored > 0 || b.mean_delay < a.mean_delay)
    });
    Ok(PiggybackReport {
        rule: rule.label(),
        reps: cfg.reps,
        waves: reports,
        second_wave_faster,
    })
}
