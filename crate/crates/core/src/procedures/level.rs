use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-tick level `α_t` (or `β_t` for e-d-Bonferroni).
///
/// Deserializes from a tagged table, a bare number (constant level), or the
/// string forms accepted by [`FromStr`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", try_from = "LevelInput")]
pub enum LevelSchedule {
    /// `α_t = α`.
    Constant { alpha: f64 },
    /// `α_t = α / t`.
    OverT { alpha: f64 },
    /// `α_t = levels[t − 1]`; querying past the end is an error.
    Table { levels: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum TaggedLevel {
    Constant { alpha: f64 },
    OverT { alpha: f64 },
    Table { levels: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LevelInput {
    Number(f64),
    Text(String),
    Tagged(TaggedLevel),
}

impl TryFrom<LevelInput> for LevelSchedule {
    type Error = Error;

    fn try_from(input: LevelInput) -> Result<Self> {
        Ok(match input {
            LevelInput::Number(alpha) => Self::Constant { alpha },
            LevelInput::Text(s) => s.parse()?,
            LevelInput::Tagged(TaggedLevel::Constant { alpha }) => Self::Constant { alpha },
            LevelInput::Tagged(TaggedLevel::OverT { alpha }) => Self::OverT { alpha },
            LevelInput::Tagged(TaggedLevel::Table { levels }) => Self::Table { levels },
        })
    }
}

/// Admissible range of a schedule's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelDomain {
    /// `(0, 1)`: e-d-BH, e-d-Holm, e-d-GNT, naive thresholding.
    Probability,
    /// `(0, ∞)`: e-d-Bonferroni.
    Positive,
}

impl LevelDomain {
    fn admits(self, v: f64) -> bool {
        match self {
            Self::Probability => v > 0.0 && v < 1.0,
            Self::Positive => v > 0.0 && v.is_finite(),
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Self::Probability => "(0, 1)",
            Self::Positive => "(0, inf)",
        }
    }
}

impl LevelSchedule {
    pub fn constant(alpha: f64) -> Self {
        Self::Constant { alpha }
    }

    pub fn over_t(alpha: f64) -> Self {
        Self::OverT { alpha }
    }

    pub fn validate(&self, domain: LevelDomain) -> Result<()> {
        let bad = |v: f64| {
            Error::config(
                "level",
                format!("value {v} outside {} for this rule", domain.describe()),
            )
        };
        match self {
            Self::Constant { alpha } | Self::OverT { alpha } => {
                if !domain.admits(*alpha) {
                    return Err(bad(*alpha));
                }
            }
            Self::Table { levels } => {
                if levels.is_empty() {
                    return Err(Error::config("level.levels", "table is empty"));
                }
                if let Some(v) = levels.iter().find(|v| !domain.admits(**v)) {
                    return Err(bad(*v));
                }
            }
        }
        Ok(())
    }

    /// The level in force at tick `t ≥ 1`.
    pub fn level_at(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::input("ticks start at 1"));
        }
        match self {
            Self::Constant { alpha } => Ok(*alpha),
            Self::OverT { alpha } => Ok(alpha / t as f64),
            Self::Table { levels } => levels.get(t as usize - 1).copied().ok_or_else(|| {
                Error::input(format!("level table has {} entries, queried t = {t}", levels.len()))
            }),
        }
    }

    /// The base level `α` (first table entry for tables).
    pub fn base(&self) -> f64 {
        match self {
            Self::Constant { alpha } | Self::OverT { alpha } => *alpha,
            Self::Table { levels } => levels.first().copied().unwrap_or(f64::NAN),
        }
    }
}

/// `0.01`, `const:0.01`, `over-t:0.05`, or `table:0.1,0.05,0.01`.
impl FromStr for LevelSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse()
                .map_err(|_| Error::config("level", format!("not a number: `{v}`")))
        };
        match s.split_once(':') {
            None => Ok(Self::Constant { alpha: num(s)? }),
            Some(("const" | "constant", v)) => Ok(Self::Constant { alpha: num(v)? }),
            Some(("over-t", v)) => Ok(Self::OverT { alpha: num(v)? }),
            Some(("table", v)) => Ok(Self::Table {
                levels: v.split(',').map(num).collect::<Result<_>>()?,
            }),
            Some((kind, _)) => Err(Error::config("level", format!("unknown schedule `{kind}`"))),
        }
    }
}

/// Threshold convention: compare against `1/α_t` or a fixed `c_α`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    #[default]
    Reciprocal,
    /// `c_α` replaces `1/α_t` at every tick.
    Custom { c_alpha: f64 },
}

impl ThresholdPolicy {
    /// `c_α` must exceed 1, and may not exceed `1/α` when the schedule's base
    /// level is a probability.
    pub fn validate(&self, schedule: &LevelSchedule) -> Result<()> {
        if let Self::Custom { c_alpha } = *self {
            if !(c_alpha > 1.0) || !c_alpha.is_finite() {
                return Err(Error::config("threshold.c_alpha", format!("must exceed 1, got {c_alpha}")));
            }
            let base = schedule.base();
            if base < 1.0 && c_alpha > 1.0 / base {
                return Err(Error::config(
                    "threshold.c_alpha",
                    format!("{c_alpha} exceeds 1/alpha = {}", 1.0 / base),
                ));
            }
        }
        Ok(())
    }
}

/// The quantity standing in for `1/α_t` at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Critical {
    /// Literal level `α_t`; thresholds are computed as written with `α_t`
    /// in the denominator.
    Level(f64),
    /// Custom `c_α`, multiplying where `1/α_t` appears.
    Inverse(f64),
}

impl Critical {
    /// `m / α`, or `m · c`.
    ///
    /// Every threshold is an integer-ish multiplier scaled this way, so the
    /// thresholds of different rules are ordered exactly as their
    /// multipliers are, with no rounding disagreements at shared boundaries.
    pub fn scaled(&self, m: f64) -> f64 {
        match *self {
            Self::Level(a) => m / a,
            Self::Inverse(c) => m * c,
        }
    }

    /// `K / (k α)`.
    pub fn bh(&self, streams: usize, k: usize) -> f64 {
        self.scaled(streams as f64 / k as f64)
    }

    /// `(K − i + 1) / α`, the Holm bar for the `i`-th largest value.
    pub fn holm(&self, streams: usize, i: usize) -> f64 {
        self.scaled((streams - i + 1) as f64)
    }

    /// `K / α`.
    pub fn family(&self, streams: usize) -> f64 {
        self.scaled(streams as f64)
    }

    /// `1 / α`.
    pub fn single(&self) -> f64 {
        self.scaled(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_evaluate() {
        assert_eq!(LevelSchedule::constant(0.1).level_at(7).unwrap(), 0.1);
        assert_eq!(LevelSchedule::over_t(0.05).level_at(5).unwrap(), 0.01);
        let table = LevelSchedule::Table { levels: vec![0.1, 0.2] };
        assert_eq!(table.level_at(2).unwrap(), 0.2);
        assert!(table.level_at(3).is_err());
        assert!(table.level_at(0).is_err());
    }

    #[test]
    fn domains() {
        assert!(LevelSchedule::constant(1.0).validate(LevelDomain::Probability).is_err());
        assert!(LevelSchedule::constant(10.0).validate(LevelDomain::Positive).is_ok());
        assert!(LevelSchedule::constant(0.0).validate(LevelDomain::Positive).is_err());
        assert!(LevelSchedule::Table { levels: vec![0.5, 1.5] }
            .validate(LevelDomain::Probability)
            .is_err());
    }

    #[test]
    fn parses() {
        assert_eq!("0.01".parse::<LevelSchedule>().unwrap(), LevelSchedule::constant(0.01));
        assert_eq!("over-t:0.05".parse::<LevelSchedule>().unwrap(), LevelSchedule::over_t(0.05));
        assert_eq!(
            "table:0.1,0.2".parse::<LevelSchedule>().unwrap(),
            LevelSchedule::Table { levels: vec![0.1, 0.2] }
        );
        assert!("weird:1".parse::<LevelSchedule>().is_err());
    }

    #[test]
    fn policy_bounds() {
        let s = LevelSchedule::constant(0.05);
        assert!(ThresholdPolicy::Custom { c_alpha: 1.0 }.validate(&s).is_err());
        assert!(ThresholdPolicy::Custom { c_alpha: 20.0 }.validate(&s).is_ok());
        assert!(ThresholdPolicy::Custom { c_alpha: 20.5 }.validate(&s).is_err());
        assert!(ThresholdPolicy::Reciprocal.validate(&s).is_ok());
    }

    #[test]
    fn deserializes_several_forms() {
        let from = |j: &str| serde_json::from_str::<LevelSchedule>(j).unwrap();
        assert_eq!(from("0.01"), LevelSchedule::constant(0.01));
        assert_eq!(from("\"over-t:0.05\""), LevelSchedule::over_t(0.05));
        assert_eq!(from(r#"{"kind":"over-t","alpha":0.05}"#), LevelSchedule::over_t(0.05));
        let json = serde_json::to_string(&LevelSchedule::over_t(0.05)).unwrap();
        assert_eq!(from(&json), LevelSchedule::over_t(0.05));
        assert!(serde_json::from_str::<LevelSchedule>("\"bogus:1\"").is_err());
    }

    #[test]
    fn critical_forms() {
        assert_eq!(Critical::Inverse(20.0).family(2), 40.0);
        assert_eq!(Critical::Level(0.5).bh(2, 2), 2.0);
        assert_eq!(Critical::Level(0.5).single(), 2.0);
        assert_eq!(Critical::Level(0.1).holm(3, 1), Critical::Level(0.1).family(3));
        assert_eq!(Critical::Level(0.1).bh(3, 1), Critical::Level(0.1).family(3));
    }
}
