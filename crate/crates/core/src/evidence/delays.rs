//! Explicit `j`-delay e-processes and the detectors assembled from them.
//!
//! The recursive updates in [`super::state`] are the efficient route; these
//! materialized forms keep every `Λ^{(j)}` and are used for custom
//! constructions and as the reference the recursions are checked against.

use crate::error::{Error, Result};

/// An e-process that equals 1 before its start time `j` and is updated by
/// multiplicative factors from time `j` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEProcess {
    start: u64,
    value: f64,
}

impl DelayEProcess {
    pub fn new(start: u64) -> Result<Self> {
        if start == 0 {
            return Err(Error::input("delay start time must be at least 1"));
        }
        Ok(Self { start, value: 1.0 })
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Absorbs the factor observed at time `t`. Before the start time the
    /// process stays at 1.
    pub fn advance(&mut self, t: u64, factor: f64) -> Result<()> {
        if !(factor >= 0.0) {
            return Err(Error::input(format!("factor must be nonnegative, got {factor}")));
        }
        if t >= self.start {
            self.value *= factor;
        }
        Ok(())
    }
}

/// Mixing weights `γ_t` with `Σ γ_t ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    /// Finite table `γ_1, γ_2, …`; zero past its end. The left-to-right sum
    /// must not exceed 1.
    Table(Vec<f64>),
    /// `γ_t = 1 / (t (t + 1))`, which telescopes to a total mass of 1.
    Telescoping,
    /// `γ_t = (1 − r) r^{t−1}` for `r ∈ (0, 1)`, total mass 1.
    Geometric { ratio: f64 },
}

impl WeightSequence {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Table(ws) => {
                if let Some(w) = ws.iter().find(|w| !(**w >= 0.0) || w.is_infinite()) {
                    return Err(Error::config("weights", format!("weight {w} is not a finite nonnegative number")));
                }
                let total: f64 = ws.iter().sum();
                if total > 1.0 {
                    return Err(Error::config("weights", format!("weights sum to {total} > 1")));
                }
                Ok(())
            }
            Self::Telescoping => Ok(()),
            Self::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::config("weights.ratio", format!("must lie in (0, 1), got {ratio}")));
                }
                Ok(())
            }
        }
    }

    /// `γ_t` for `t ≥ 1`.
    pub fn weight(&self, t: u64) -> f64 {
        match self {
            Self::Table(ws) => ws.get((t as usize).wrapping_sub(1)).copied().unwrap_or(0.0),
            Self::Telescoping => {
                let t = t as f64;
                1.0 / (t * (t + 1.0))
            }
            Self::Geometric { ratio } => (1.0 - ratio) * ratio.powf(t as f64 - 1.0),
        }
    }
}

fn active(delays: &[DelayEProcess], t: u64) -> impl Iterator<Item = &DelayEProcess> {
    delays.iter().filter(move |d| d.start <= t)
}

/// Weighted SR e-process `E_t = Σ_{j ≤ t} γ_j Λ_t^{(j)}`.
pub fn weighted_sr_eprocess(delays: &[DelayEProcess], weights: &WeightSequence, t: u64) -> Result<f64> {
    weights.validate()?;
    Ok(active(delays, t).map(|d| weights.weight(d.start) * d.value).sum())
}

/// SR e-detector `M_t = Σ_{j ≤ t} Λ_t^{(j)}`.
pub fn sr_from_delays(delays: &[DelayEProcess], t: u64) -> f64 {
    active(delays, t).map(|d| d.value).sum()
}

/// CUSUM e-detector `M_t = max_{j ≤ t} Λ_t^{(j)}`, with `M_0 = 0`.
pub fn cusum_from_delays(delays: &[DelayEProcess], t: u64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    active(delays, t).map(|d| d.value).fold(0.0, f64::max)
}
