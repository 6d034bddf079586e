//! Monte Carlo summaries of error metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantities a report row can estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Fdr,
    Fwer,
    Pfer,
    Ger,
    Ccd,
    /// Mean number of selected streams.
    Detections,
    /// Mean over streams of the detector value.
    DetectorMean,
    /// Mean of `τ ∧ T` for the row's stopping time.
    Arl,
    /// Fraction of replications with a false detection within the horizon.
    Pfa,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Fdr,
        Metric::Fwer,
        Metric::Pfer,
        Metric::Ger,
        Metric::Ccd,
        Metric::Detections,
        Metric::DetectorMean,
        Metric::Arl,
        Metric::Pfa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fdr => "fdr",
            Self::Fwer => "fwer",
            Self::Pfer => "pfer",
            Self::Ger => "ger",
            Self::Ccd => "ccd",
            Self::Detections => "detections",
            Self::DetectorMean => "detector_mean",
            Self::Arl => "arl",
            Self::Pfa => "pfa",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config("metric", format!("unknown metric `{s}`")))
    }
}

/// When a metric is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Stopping {
    Fixed { t: u64 },
    /// `τ*_η`, counting all detections or only false ones. Censored
    /// replications are evaluated at the horizon unless `conditional`, in
    /// which case they are dropped.
    TauStar {
        eta: usize,
        #[serde(default)]
        false_only: bool,
        #[serde(default)]
        conditional: bool,
    },
}

impl Stopping {
    pub fn tau_star(eta: usize) -> Self {
        Self::TauStar {
            eta,
            false_only: false,
            conditional: false,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Fixed { t } => t.to_string(),
            Self::TauStar {
                eta,
                false_only,
                conditional,
            } => {
                let base = if false_only { "tau_false" } else { "tau_star" };
                let cond = if conditional { "|found" } else { "" };
                format!("{base}_{eta}{cond}")
            }
        }
    }
}

/// Running mean and variance, accumulated in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Standard error of the mean; 0 for a single observation.
    pub fn se(&self) -> f64 {
        match self.n {
            0 => f64::NAN,
            1 => 0.0,
            n => (self.m2 / (n - 1) as f64 / n as f64).sqrt(),
        }
    }
}

/// One row of a metric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub rule: String,
    /// Fixed time or stopping-time label.
    pub stop: String,
    pub estimate: f64,
    pub se: f64,
    /// Replications that contributed.
    pub reps: u64,
    /// Fraction of replications whose stopping time was not reached within
    /// the horizon.
    pub censored_frac: f64,
    /// The estimate only bounds the target quantity from below (censoring).
    pub lower_bound: bool,
}

pub const CSV_HEADER: &str = "metric,rule,t_or_stop,estimate,se,reps,censored_frac";

impl MetricReport {
    pub fn from_moments(metric: impl Into<String>, rule: impl Into<String>, stop: impl Into<String>, m: &Moments) -> Self {
        Self {
            metric: metric.into(),
            rule: rule.into(),
            stop: stop.into(),
            estimate: m.mean(),
            se: m.se(),
            reps: m.count(),
            censored_frac: 0.0,
            lower_bound: false,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.metric, self.rule, self.stop, self.estimate, self.se, self.reps, self.censored_frac
        )
    }

    /// Check the estimate against its metric's range. `streams` bounds
    /// PFER and detection counts.
    pub fn check_range(&self, streams: usize) -> Result<()> {
        if self.estimate.is_nan() {
            return Ok(());
        }
        let (lo, hi) = match self.metric.as_str() {
            "fdr" | "fwer" | "ger" | "ccd" | "pfa" => (0.0, 1.0),
            "pfer" | "detections" => (0.0, streams as f64),
            "arl" | "patience" => (1.0, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        };
        if self.estimate < lo || self.estimate > hi {
            return Err(Error::input(format!(
                "{} estimate {} outside [{lo}, {hi}]",
                self.metric, self.estimate
            )));
        }
        Ok(())
    }
}

/// Largest ratio of error estimate to expected patience over a family of
/// stopping times.
///
/// This bounds the error over patience from below: the definition takes a
/// supremum over all stopping times, not just the supplied ones.
pub fn empirical_eop(points: &[(f64, f64)]) -> Result<f64> {
    let mut best = 0.0f64;
    for &(estimate, patience) in points {
        if !(patience > 0.0) {
            return Err(Error::input(format!("patience must be positive, got {patience}")));
        }
        best = best.max(estimate / patience);
    }
    Ok(best)
}
