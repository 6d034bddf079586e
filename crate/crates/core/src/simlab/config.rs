//! Experiment configuration files (TOML).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::generator::{GeneratorFamily, StreamGeneratorSpec};
use crate::error::{Error, Result};
use crate::evidence::DetectorSpec;
use crate::metrics::ChangeConfiguration;
use crate::procedures::{
    CalibrationGrid, CalibrationRequest, LevelSchedule, RuleKind, Selector, ThresholdPolicy,
};

/// Streams `first..=last` (1-based) change at `at`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeWave {
    pub streams: [usize; 2],
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub family: GeneratorFamily,
    #[serde(default)]
    pub changes: Vec<ChangeWave>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub rule: RuleKind,
    pub level: LevelSchedule,
    #[serde(default)]
    pub threshold: ThresholdPolicy,
    /// Label in reports; defaults to the rule name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl RuleConfig {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.rule.to_string())
    }

    pub fn selector(&self) -> Result<Selector> {
        Selector::new(self.rule, self.level.clone())?.with_policy(self.threshold)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Fixed times at which per-tick metrics are tabulated; all ticks when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<u64>>,
    /// `η` values for `τ*_η`; defaults to `{1, ⌈K/2⌉, K}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<usize>>,
    /// Write every generated cross-section to `data.jsonl`.
    #[serde(default)]
    pub persist_data: bool,
    /// Write every detection frame to `frames.jsonl`.
    #[serde(default)]
    pub persist_frames: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub streams: usize,
    pub horizon: u64,
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    pub generator: GeneratorConfig,
    pub detector: DetectorSpec,
    pub rules: Vec<RuleConfig>,
    #[serde(default)]
    pub report: ReportConfig,
    /// Grid settings for `calibrate`; the grid's top is `1/α` of the first
    /// rule unless `alpha` is given here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_arl: Option<f64>,
}

fn default_name() -> String {
    "experiment".to_string()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.streams == 0 {
            return Err(Error::config("streams", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        self.generator_spec()?;
        self.detector.validate()?;
        if self.rules.is_empty() {
            return Err(Error::config("rules", "at least one rule is required"));
        }
        let mut labels = BTreeSet::new();
        for (i, r) in self.rules.iter().enumerate() {
            r.selector().map_err(|e| prefix(&format!("rules[{i}]"), e))?;
            if !labels.insert(r.label()) {
                return Err(Error::config(format!("rules[{i}].name"), format!("duplicate label `{}`", r.label())));
            }
            // Table schedules must cover the horizon.
            if let LevelSchedule::Table { levels } = &r.level {
                if (levels.len() as u64) < self.horizon {
                    return Err(Error::config(
                        format!("rules[{i}].level"),
                        format!("table has {} entries but the horizon is {}", levels.len(), self.horizon),
                    ));
                }
            }
        }
        if let Some(times) = &self.report.times {
            if let Some(t) = times.iter().find(|&&t| t == 0 || t > self.horizon) {
                return Err(Error::config("report.times", format!("{t} outside 1..={}", self.horizon)));
            }
        }
        if let Some(etas) = &self.report.etas {
            if let Some(e) = etas.iter().find(|&&e| e == 0 || e > self.streams) {
                return Err(Error::config("report.etas", format!("{e} outside 1..={}", self.streams)));
            }
        }
        Ok(())
    }

    pub fn change_configuration(&self) -> Result<ChangeConfiguration> {
        let mut xi = vec![None; self.streams];
        for (i, w) in self.generator.changes.iter().enumerate() {
            let field = format!("generator.changes[{i}]");
            let [lo, hi] = w.streams;
            if lo == 0 || lo > hi || hi > self.streams {
                return Err(Error::config(
                    format!("{field}.streams"),
                    format!("[{lo}, {hi}] is not a range within 1..={}", self.streams),
                ));
            }
            if w.at <= 1 {
                return Err(Error::config(format!("{field}.at"), format!("must exceed 1, got {}", w.at)));
            }
            for slot in &mut xi[lo - 1..hi] {
                if slot.is_some() {
                    return Err(Error::config(format!("{field}.streams"), "overlaps an earlier wave"));
                }
                *slot = Some(w.at);
            }
        }
        ChangeConfiguration::new(xi)
    }

    pub fn generator_spec(&self) -> Result<StreamGeneratorSpec> {
        StreamGeneratorSpec::new(self.generator.family, self.change_configuration()?)
    }

    /// Calibration of the first rule under this configuration's generator.
    /// `target_arl` overrides the value in the `[calibration]` table.
    pub fn calibration_request(&self, target_arl: Option<f64>) -> Result<CalibrationRequest> {
        self.validate()?;
        let cal = self.calibration.clone().unwrap_or_default();
        let rule = &self.rules[0];
        let mut grid = CalibrationGrid::new(cal.alpha.unwrap_or_else(|| rule.level.base()));
        if let Some(p) = cal.points {
            grid.points = p;
        }
        if let Some(e) = cal.epsilon {
            grid.epsilon = e;
        }
        let target_arl = target_arl
            .or(cal.target_arl)
            .ok_or_else(|| Error::config("calibration.target_arl", "no target ARL given"))?;
        Ok(CalibrationRequest {
            rule: rule.rule,
            generator: self.generator_spec()?,
            detector: self.detector,
            target_arl,
            reps: self.reps,
            horizon: self.horizon,
            seed: self.seed,
            grid,
            threads: self.threads,
        })
    }

    pub fn report_times(&self) -> Vec<u64> {
        match &self.report.times {
            Some(t) => {
                let set: BTreeSet<u64> = t.iter().copied().collect();
                set.into_iter().collect()
            }
            None => (1..=self.horizon).collect(),
        }
    }

    pub fn etas(&self) -> Vec<usize> {
        let k = self.streams;
        let raw = match &self.report.etas {
            Some(e) => e.clone(),
            None => vec![1, k.div_ceil(2), k],
        };
        let set: BTreeSet<usize> = raw.into_iter().collect();
        set.into_iter().collect()
    }
}

fn prefix(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig { field: inner, reason } => Error::InvalidConfig {
            field: format!("{field}.{inner}"),
            reason,
        },
        other => Error::config(field, other.to_string()),
    }
}
