//! Synthetic multi-stream data.
//!
//! One synchronized cross-section `(X_t^(1), …, X_t^(K))` is produced per
//! tick. Every draw comes from the substream keyed by
//! `(replication, stream, t)`, so a stream's value at `t` never consumes
//! randomness belonging to a later tick. The one deliberate exception is
//! [`GeneratorFamily::DependentPairLagged`], which exists to break that rule.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ChangeConfiguration;
use crate::rng::{substream, Channel, SubstreamKey};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorFamily {
    /// `N(−δ, 1)` before the change, `N(δ, 1)` after. A positive
    /// `correlation` adds a factor shared by all streams at each tick.
    GaussianMeanChange {
        delta: f64,
        #[serde(default)]
        correlation: f64,
    },
    /// `N(0, 1)` before the change, `N(shift, 1)` after.
    SymmetryChange {
        #[serde(default = "one")]
        shift: f64,
    },
    /// I.i.d. `N(0, 1)` before the change, i.i.d. `N(shift, 1)` after; the
    /// pre-change law is only assumed exchangeable by the detectors.
    ExchangeabilityBreak {
        #[serde(default = "one")]
        shift: f64,
    },
    /// Streams in pairs `(2i, 2i+1)`. The leader is `N(0, 1)`; the follower
    /// is `N(0, 1)` when the leader's current value is ≤ 0 and standard
    /// Cauchy otherwise. Post-change values are shifted right by `shift`.
    DependentPairSign {
        #[serde(default = "one")]
        shift: f64,
    },
    /// Streams in pairs `(2i, 2i+1)`. The leader is `N(0, 1)` (shifted after
    /// its change) and the follower at `t` equals the leader at `t + 1`, so
    /// the follower sees one step into its leader's future.
    DependentPairLagged {
        #[serde(default = "one")]
        shift: f64,
    },
}

impl GeneratorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianMeanChange { .. } => "gaussian-mean-change",
            Self::SymmetryChange { .. } => "symmetry-change",
            Self::ExchangeabilityBreak { .. } => "exchangeability-break",
            Self::DependentPairSign { .. } => "dependent-pair-sign",
            Self::DependentPairLagged { .. } => "dependent-pair-lagged",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("generator.{field}"), format!("must be finite, got {v}")))
            }
        };
        match *self {
            Self::GaussianMeanChange { delta, correlation } => {
                if !(delta > 0.0) || !delta.is_finite() {
                    return Err(Error::config("generator.delta", format!("must be positive, got {delta}")));
                }
                if !(0.0..1.0).contains(&correlation) {
                    return Err(Error::config(
                        "generator.correlation",
                        format!("must lie in [0, 1), got {correlation}"),
                    ));
                }
                Ok(())
            }
            Self::SymmetryChange { shift }
            | Self::ExchangeabilityBreak { shift }
            | Self::DependentPairSign { shift }
            | Self::DependentPairLagged { shift } => finite("shift", shift),
        }
    }
}

/// A generator family with its changepoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamGeneratorSpec {
    pub family: GeneratorFamily,
    pub xi: ChangeConfiguration,
}

impl StreamGeneratorSpec {
    pub fn new(family: GeneratorFamily, xi: ChangeConfiguration) -> Result<Self> {
        let spec = Self { family, xi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn streams(&self) -> usize {
        self.xi.streams()
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if let GeneratorFamily::DependentPairLagged { .. } = self.family {
            let k = self.streams();
            if let Some(f) = (1..k).step_by(2).find(|&f| self.xi.changepoint(f).is_some()) {
                return Err(Error::config(
                    "generator.changes",
                    format!(
                        "stream {} copies its leader under dependent-pair-lagged and cannot change on its own",
                        f + 1
                    ),
                ));
            }
        }
        Ok(())
    }
}

fn normal(seed: u64, replication: u64, stream: usize, t: u64, channel: Channel) -> f64 {
    let key = SubstreamKey {
        replication,
        stream: stream as u64,
        tick: t,
        channel,
    };
    substream(seed, key).sample(StandardNormal)
}

fn uniform(seed: u64, replication: u64, stream: usize, t: u64) -> f64 {
    let key = SubstreamKey {
        replication,
        stream: stream as u64,
        tick: t,
        channel: Channel::Observation,
    };
    let mut rng = substream(seed, key);
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard Cauchy by inversion.
pub fn cauchy_from_uniform(u: f64) -> f64 {
    (std::f64::consts::PI * (u - 0.5)).tan()
}

fn shifted(xi: &ChangeConfiguration, stream: usize, t: u64, shift: f64) -> f64 {
    if xi.is_null_at(stream, t) {
        0.0
    } else {
        shift
    }
}

/// The cross-section at tick `t` (1-based) of one replication.
pub fn generate_batch(spec: &StreamGeneratorSpec, seed: u64, replication: u64, t: u64) -> Vec<f64> {
    let k = spec.streams();
    let xi = &spec.xi;
    let obs = |stream: usize, tick: u64| normal(seed, replication, stream, tick, Channel::Observation);
    match spec.family {
        GeneratorFamily::GaussianMeanChange { delta, correlation } => {
            let common = if correlation > 0.0 {
                correlation.sqrt() * normal(seed, replication, 0, t, Channel::Common)
            } else {
                0.0
            };
            let own = (1.0 - correlation).sqrt();
            (0..k)
                .map(|s| {
                    let mean = if xi.is_null_at(s, t) { -delta } else { delta };
                    mean + common + own * obs(s, t)
                })
                .collect()
        }
        GeneratorFamily::SymmetryChange { shift } | GeneratorFamily::ExchangeabilityBreak { shift } => {
            (0..k).map(|s| obs(s, t) + shifted(xi, s, t, shift)).collect()
        }
        GeneratorFamily::DependentPairSign { shift } => {
            let mut x = vec![0.0; k];
            for s in 0..k {
                if s % 2 == 0 {
                    x[s] = obs(s, t) + shifted(xi, s, t, shift);
                } else {
                    let base = if x[s - 1] <= 0.0 {
                        obs(s, t)
                    } else {
                        cauchy_from_uniform(uniform(seed, replication, s, t))
                    };
                    x[s] = base + shifted(xi, s, t, shift);
                }
            }
            x
        }
        GeneratorFamily::DependentPairLagged { shift } => {
            let leader = |s: usize, tick: u64| obs(s, tick) + shifted(xi, s, tick, shift);
            (0..k)
                .map(|s| if s % 2 == 0 { leader(s, t) } else { leader(s - 1, t + 1) })
                .collect()
        }
    }
}
