//! Rule configuration and per-tick detection frames.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::level::{Critical, LevelDomain, LevelSchedule, ThresholdPolicy};
use super::rules::{check_values, edbh_with, edbonf_with, edgnt_with, edholm_with, naive_with};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    #[serde(rename = "edbh")]
    EdBh,
    #[serde(rename = "edbonf")]
    EdBonferroni,
    #[serde(rename = "edholm")]
    EdHolm,
    #[serde(rename = "edgnt")]
    EdGnt,
    #[serde(rename = "naive")]
    Naive,
}

impl RuleKind {
    pub const ALL: [RuleKind; 5] = [
        RuleKind::EdBh,
        RuleKind::EdBonferroni,
        RuleKind::EdHolm,
        RuleKind::EdGnt,
        RuleKind::Naive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::EdBh => "edbh",
            Self::EdBonferroni => "edbonf",
            Self::EdHolm => "edholm",
            Self::EdGnt => "edgnt",
            Self::Naive => "naive",
        }
    }

    /// Bonferroni levels are PFER budgets and may exceed 1.
    pub fn level_domain(&self) -> LevelDomain {
        match self {
            Self::EdBonferroni => LevelDomain::Positive,
            _ => LevelDomain::Probability,
        }
    }

    /// Whether the rule only answers the global null.
    pub fn is_global(&self) -> bool {
        matches!(self, Self::EdGnt)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| Error::config("rule", format!("unknown rule `{s}`")))
    }
}

/// Decisions of one rule at one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub t: u64,
    pub rule: RuleKind,
    pub streams: usize,
    pub k_star: usize,
    /// Selected streams, ascending, 0-based.
    pub selected: Vec<usize>,
    /// Global-null decision; only e-d-GNT sets this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global: Option<bool>,
}

impl DetectionFrame {
    /// Boolean decision vector `D_t`.
    pub fn decisions(&self) -> Vec<bool> {
        let mut d = vec![false; self.streams];
        for &k in &self.selected {
            d[k] = true;
        }
        d
    }

    pub fn is_selected(&self, stream: usize) -> bool {
        self.selected.binary_search(&stream).is_ok()
    }

    /// Whether the rule raised any alarm at this tick.
    pub fn fired(&self) -> bool {
        self.global.unwrap_or(false) || !self.selected.is_empty()
    }
}

/// A rule together with its level schedule and threshold convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub rule: RuleKind,
    pub schedule: LevelSchedule,
    #[serde(default)]
    pub policy: ThresholdPolicy,
}

impl Selector {
    pub fn new(rule: RuleKind, schedule: LevelSchedule) -> Result<Self> {
        let s = Self {
            rule,
            schedule,
            policy: ThresholdPolicy::Reciprocal,
        };
        s.validate()?;
        Ok(s)
    }

    /// Replace `1/α_t` by a calibrated constant `c_α` at every tick.
    pub fn with_policy(mut self, policy: ThresholdPolicy) -> Result<Self> {
        self.policy = policy;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate(self.rule.level_domain())?;
        self.policy.validate(&self.schedule)
    }

    pub fn critical_at(&self, t: u64) -> Result<Critical> {
        match self.policy {
            ThresholdPolicy::Custom { c_alpha } => {
                if t == 0 {
                    return Err(Error::input("ticks start at 1"));
                }
                Ok(Critical::Inverse(c_alpha))
            }
            ThresholdPolicy::Reciprocal => self.schedule.level_at(t).map(Critical::Level),
        }
    }

    pub fn select(&self, t: u64, values: &[f64]) -> Result<DetectionFrame> {
        let critical = self.critical_at(t)?;
        let (selection, global) = match self.rule {
            RuleKind::EdBh => (edbh_with(values, critical)?, None),
            RuleKind::EdBonferroni => (edbonf_with(values, critical)?, None),
            RuleKind::EdHolm => (edholm_with(values, critical)?, None),
            RuleKind::Naive => (naive_with(values, critical)?, None),
            RuleKind::EdGnt => {
                let fire = edgnt_with(values, critical)?;
                (super::rules::Selection { k_star: 0, selected: Vec::new() }, Some(fire))
            }
        };
        Ok(DetectionFrame {
            t,
            rule: self.rule,
            streams: values.len(),
            k_star: selection.k_star,
            selected: selection.selected,
            global,
        })
    }
}

/// The smallest constant `c` such that the rule, run with `c` in place of
/// `1/α`, raises an alarm on `values` is at most this statistic.
///
/// The rule fires at threshold `c` exactly when `firing_statistic ≥ c`, up to
/// floating-point rounding in the threshold arithmetic.
pub fn firing_statistic(rule: RuleKind, values: &[f64]) -> Result<f64> {
    check_values(values)?;
    let n = values.len() as f64;
    let top = values.iter().copied().fold(0.0, f64::max);
    Ok(match rule {
        RuleKind::EdBh => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            sorted
                .iter()
                .enumerate()
                .map(|(i, v)| v / (n / (i + 1) as f64))
                .fold(0.0, f64::max)
        }
        RuleKind::EdBonferroni | RuleKind::EdHolm => top / n,
        RuleKind::EdGnt => super::rules::total(values) / n,
        RuleKind::Naive => top,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_names_round_trip() {
        for r in RuleKind::ALL {
            assert_eq!(r.as_str().parse::<RuleKind>().unwrap(), r);
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(json, format!("\"{}\"", r.as_str()));
        }
        assert!("bh".parse::<RuleKind>().is_err());
    }

    #[test]
    fn selector_uses_schedule() {
        let s = Selector::new(RuleKind::EdBh, LevelSchedule::over_t(0.2)).unwrap();
        // α_1 = 0.2: K/α = 10, α_2 = 0.1: K/α = 20.
        assert_eq!(s.select(1, &[12.0, 0.0]).unwrap().selected, vec![0]);
        assert!(s.select(2, &[12.0, 0.0]).unwrap().selected.is_empty());
        assert!(s.select(0, &[12.0, 0.0]).is_err());
    }

    #[test]
    fn bonferroni_accepts_budget_above_one() {
        assert!(Selector::new(RuleKind::EdBonferroni, LevelSchedule::constant(5.0)).is_ok());
        assert!(Selector::new(RuleKind::EdBh, LevelSchedule::constant(5.0)).is_err());
    }

    #[test]
    fn custom_policy_bounds() {
        let s = Selector::new(RuleKind::EdBh, LevelSchedule::constant(0.01)).unwrap();
        assert!(s.clone().with_policy(ThresholdPolicy::Custom { c_alpha: 50.0 }).is_ok());
        assert!(s.clone().with_policy(ThresholdPolicy::Custom { c_alpha: 101.0 }).is_err());
        assert!(s.with_policy(ThresholdPolicy::Custom { c_alpha: 1.0 }).is_err());
    }

    #[test]
    fn gnt_frame_reports_global_only() {
        let s = Selector::new(RuleKind::EdGnt, LevelSchedule::constant(0.1)).unwrap();
        let f = s.select(1, &[40.0, 10.0, 1.0]).unwrap();
        assert_eq!(f.global, Some(true));
        assert!(f.selected.is_empty());
        assert!(f.fired());
    }

    #[test]
    fn firing_statistic_matches_rules() {
        let values = [40.0, 10.0, 7.0, 0.5];
        for rule in RuleKind::ALL {
            let stat = firing_statistic(rule, &values).unwrap();
            let base = Selector::new(rule, LevelSchedule::constant(0.001)).unwrap();
            for c in [stat * 0.999, stat * 1.001] {
                if c <= 1.0 {
                    continue;
                }
                let s = base.clone().with_policy(ThresholdPolicy::Custom { c_alpha: c }).unwrap();
                assert_eq!(s.select(1, &values).unwrap().fired(), c <= stat, "{rule} {c}");
            }
        }
    }
}
