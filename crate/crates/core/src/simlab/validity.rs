//! Monte Carlo check of the e-detector property `E[M_t] ≤ t` under a null.
//!
//! At fixed times the property must hold for any e-detector. Detectors that
//! use information from another stream are e-detectors only when that
//! information lies in the past; [`CheckedDetector::Peeking`] makes the
//! difference visible.

use serde::{Deserialize, Serialize};

use super::bank::DetectorBank;
use super::generator::{generate_batch, StreamGeneratorSpec};
use super::runner::map_replications;
use crate::error::{Error, Result};
use crate::evidence::{sr_update_log, DetectorSpec, EvidenceState, SignBet};
use crate::metrics::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckedDetector {
    /// A built-in per-stream detector.
    Stream(DetectorSpec),
    /// SR symmetry detector whose bet at `t` is `λ · sign(X_{t−1}^(peek))`:
    /// predictable with respect to the joint history of all streams.
    Peeking { lambda: f64, peek: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityCheck {
    pub generator: StreamGeneratorSpec,
    pub detector: CheckedDetector,
    /// Stream whose detector is checked (0-based).
    pub target: usize,
    pub reps: u64,
    pub horizon: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityPoint {
    pub t: u64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub points: Vec<ValidityPoint>,
    /// First `t` with `mean(M_t) > t + 3·SE`.
    pub first_violation: Option<u64>,
}

impl ValidityReport {
    pub fn violated(&self) -> bool {
        self.first_violation.is_some()
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Run the check; the bound is `t + 3·SE` at every `t ≤ horizon`.
pub fn validity_check(check: &ValidityCheck) -> Result<ValidityReport> {
    let k = check.generator.streams();
    if check.target >= k {
        return Err(Error::config("target", format!("stream {} out of range", check.target)));
    }
    if check.reps < 2 {
        return Err(Error::config("reps", "at least 2 replications are needed"));
    }
    if let CheckedDetector::Peeking { lambda, peek } = check.detector {
        SignBet::new(lambda)?;
        if peek >= k {
            return Err(Error::config("peek", format!("stream {peek} out of range")));
        }
    }
    let horizon = check.horizon as usize;
    let paths = map_replications(check.reps, check.threads, |rep| {
        let mut path = Vec::with_capacity(horizon);
        match check.detector {
            CheckedDetector::Stream(spec) => {
                let mut bank = DetectorBank::new(spec, k)?;
                for t in 1..=check.horizon {
                    path.push(bank.step(&check.generator, check.seed, rep, t)?[check.target]);
                }
            }
            CheckedDetector::Peeking { lambda, peek } => {
                let mut state = EvidenceState::new();
                let mut bet = 0.0;
                for t in 1..=check.horizon {
                    let x = generate_batch(&check.generator, check.seed, rep, t);
                    let factor = 1.0 + bet * sign(x[check.target]);
                    state = sr_update_log(state, factor.ln())?;
                    path.push(state.value());
                    bet = lambda * sign(x[peek]);
                }
            }
        }
        Ok(path)
    })?;
    let mut points = Vec::with_capacity(horizon);
    let mut first_violation = None;
    for i in 0..horizon {
        let mut m = Moments::default();
        paths.iter().for_each(|p| m.push(p[i]));
        let t = i as u64 + 1;
        let point = ValidityPoint {
            t,
            mean: m.mean(),
            se: m.se(),
        };
        if first_violation.is_none() && point.mean > t as f64 + 3.0 * point.se {
            first_violation = Some(t);
        }
        points.push(point);
    }
    Ok(ValidityReport {
        points,
        first_violation,
    })
}
