//! Per-stream online e-detectors assembled from the evidence primitives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::conformal::{calibrate_p_to_e, conformal_pvalue, CalibratorSpec, NonconformitySpec};
use super::increments::{gaussian_log_lr, subgaussian_log_increment, SignBet};
use super::state::{cusum_update_log, sr_update_log, EvidenceState, VALUE_CAP};
use crate::error::{Error, Result};

/// Source of the per-tick e-process factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum EvidenceFamily {
    /// Likelihood ratio of `N(δ, 1)` against `N(−δ, 1)`.
    Gaussian { delta: f64 },
    /// Exponential supermartingale for a σ-sub-Gaussian, nonpositive-mean
    /// pre-change law.
    SubGaussian { lambda: f64, sigma: f64 },
    /// Multiplicative symmetry bet `1 + λ sign(x)`.
    Symmetry { lambda: f64 },
    /// Additive symmetry process `Λ ← Λ + λ sign(x)` started at 1.
    ///
    /// **Warning:** unrestricted, this process can go negative. Each delay
    /// process is absorbed at 0 the first time it would reach a nonpositive
    /// value, which keeps it a nonnegative supermartingale. Prefer
    /// [`EvidenceFamily::Symmetry`].
    SymmetryAdditive { lambda: f64 },
    /// Conformal p-values with the centered-last nonconformity score and the
    /// power calibrator `κ p^{κ−1}`.
    Conformal { kappa: f64 },
}

/// How the `j`-delay processes are combined into a detector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Shiryaev–Roberts: sum over start times.
    #[default]
    Sr,
    /// CUSUM: max over start times.
    Cusum,
}

/// Complete description of a per-stream e-detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    #[serde(flatten)]
    pub family: EvidenceFamily,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl DetectorSpec {
    pub fn new(family: EvidenceFamily, aggregation: Aggregation) -> Self {
        Self { family, aggregation }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            EvidenceFamily::Gaussian { delta } => gaussian_log_lr(0.0, delta).map(drop),
            EvidenceFamily::SubGaussian { lambda, sigma } => {
                subgaussian_log_increment(0.0, lambda, sigma).map(drop)
            }
            EvidenceFamily::Symmetry { lambda } | EvidenceFamily::SymmetryAdditive { lambda } => {
                SignBet::new(lambda).map(drop)
            }
            EvidenceFamily::Conformal { kappa } => CalibratorSpec::power(kappa).map(drop),
        }
    }

    /// Whether the detector consumes the conformal tie-breaking draw θ.
    pub fn uses_theta(&self) -> bool {
        matches!(self.family, EvidenceFamily::Conformal { .. })
    }

    fn family_name(&self) -> &'static str {
        match self.family {
            EvidenceFamily::Gaussian { .. } => "gaussian",
            EvidenceFamily::SubGaussian { .. } => "sub-gaussian",
            EvidenceFamily::Symmetry { .. } => "symmetry",
            EvidenceFamily::SymmetryAdditive { .. } => "symmetry-additive",
            EvidenceFamily::Conformal { .. } => "conformal",
        }
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let agg = match self.aggregation {
            Aggregation::Sr => "sr",
            Aggregation::Cusum => "cusum",
        };
        write!(f, "{}-{}:", self.family_name(), agg)?;
        match self.family {
            EvidenceFamily::Gaussian { delta } => write!(f, "delta={delta}"),
            EvidenceFamily::SubGaussian { lambda, sigma } => write!(f, "lambda={lambda},sigma={sigma}"),
            EvidenceFamily::Symmetry { lambda } | EvidenceFamily::SymmetryAdditive { lambda } => {
                write!(f, "lambda={lambda}")
            }
            EvidenceFamily::Conformal { kappa } => write!(f, "kappa={kappa}"),
        }
    }
}

/// Parses `<family>[-sr|-cusum][:key=value,...]`, e.g. `gaussian-sr:delta=1`
/// or `conformal-cusum:kappa=0.5`. Missing parameters take their defaults
/// (δ = 1, λ = 0.5 for symmetry, λ = 1 for additive symmetry, λ = σ = 1 for
/// sub-Gaussian, κ = 0.5).
impl FromStr for DetectorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, params) = s.split_once(':').unwrap_or((s, ""));
        let (name, aggregation) = if let Some(n) = head.strip_suffix("-cusum") {
            (n, Aggregation::Cusum)
        } else if let Some(n) = head.strip_suffix("-sr") {
            (n, Aggregation::Sr)
        } else {
            (head, Aggregation::Sr)
        };
        let mut kv = Vec::new();
        for part in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::config("detector", format!("expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("detector.{}", k.trim()), format!("not a number: `{v}`")))?;
            kv.push((k.trim().to_string(), v));
        }
        let mut take = |key: &str, default: f64| -> f64 {
            match kv.iter().position(|(k, _)| k == key) {
                Some(i) => kv.remove(i).1,
                None => default,
            }
        };
        let family = match name {
            "gaussian" => EvidenceFamily::Gaussian { delta: take("delta", 1.0) },
            "sub-gaussian" | "subgaussian" => EvidenceFamily::SubGaussian {
                lambda: take("lambda", 1.0),
                sigma: take("sigma", 1.0),
            },
            "symmetry" => EvidenceFamily::Symmetry { lambda: take("lambda", 0.5) },
            "symmetry-additive" => EvidenceFamily::SymmetryAdditive { lambda: take("lambda", 1.0) },
            "conformal" => EvidenceFamily::Conformal { kappa: take("kappa", 0.5) },
            other => return Err(Error::config("detector", format!("unknown family `{other}`"))),
        };
        if let Some((k, _)) = kv.first() {
            return Err(Error::config("detector", format!("unknown parameter `{k}` for `{name}`")));
        }
        let spec = Self { family, aggregation };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Recursive(EvidenceState),
    /// Live additive delay processes (absorbed ones are dropped).
    Additive { delays: Vec<f64>, t: u64 },
    Conformal {
        state: EvidenceState,
        history: Vec<f64>,
        calibrator: CalibratorSpec,
        score: NonconformitySpec,
    },
}

/// Online e-detector for one stream.
///
/// Memory is constant in `t` for the Gaussian, sub-Gaussian, and
/// multiplicative symmetry families. The conformal detector keeps the full
/// history (linear in `t`); the additive symmetry variant keeps one value per
/// live delay process.
#[derive(Debug, Clone)]
pub struct StreamDetector {
    spec: DetectorSpec,
    engine: Engine,
}

impl StreamDetector {
    pub fn new(spec: DetectorSpec) -> Result<Self> {
        spec.validate()?;
        let engine = match spec.family {
            EvidenceFamily::SymmetryAdditive { .. } => Engine::Additive {
                delays: Vec::new(),
                t: 0,
            },
            EvidenceFamily::Conformal { kappa } => Engine::Conformal {
                state: EvidenceState::new(),
                history: Vec::new(),
                calibrator: CalibratorSpec::power(kappa)?,
                score: NonconformitySpec::CenteredLast,
            },
            _ => Engine::Recursive(EvidenceState::new()),
        };
        Ok(Self { spec, engine })
    }

    pub fn spec(&self) -> &DetectorSpec {
        &self.spec
    }

    /// Current detector value `M_t` (saturating at [`VALUE_CAP`]).
    pub fn value(&self) -> f64 {
        match &self.engine {
            Engine::Recursive(s) | Engine::Conformal { state: s, .. } => s.value(),
            Engine::Additive { delays, .. } => self.combine_additive(delays),
        }
    }

    pub fn ticks(&self) -> u64 {
        match &self.engine {
            Engine::Recursive(s) | Engine::Conformal { state: s, .. } => s.ticks(),
            Engine::Additive { t, .. } => *t,
        }
    }

    fn combine_additive(&self, delays: &[f64]) -> f64 {
        let v = match self.spec.aggregation {
            Aggregation::Sr => delays.iter().sum(),
            Aggregation::Cusum => delays.iter().copied().fold(0.0, f64::max),
        };
        v.min(VALUE_CAP)
    }

    fn step_log(state: EvidenceState, aggregation: Aggregation, log_increment: f64) -> Result<EvidenceState> {
        match aggregation {
            Aggregation::Sr => sr_update_log(state, log_increment),
            Aggregation::Cusum => cusum_update_log(state, log_increment),
        }
    }

    /// Absorbs observation `x` and returns the new `M_t`. `theta` is the
    /// tie-breaking uniform used by conformal detectors and ignored
    /// otherwise.
    pub fn observe(&mut self, x: f64, theta: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::input("observation is NaN"));
        }
        let aggregation = self.spec.aggregation;
        match (&mut self.engine, self.spec.family) {
            (Engine::Recursive(state), family) => {
                let log_inc = match family {
                    EvidenceFamily::Gaussian { delta } => gaussian_log_lr(x, delta)?,
                    EvidenceFamily::SubGaussian { lambda, sigma } => {
                        subgaussian_log_increment(x, lambda, sigma)?
                    }
                    EvidenceFamily::Symmetry { lambda } => (1.0 + SignBet::new(lambda)?.eval(x)).ln(),
                    _ => unreachable!("non-recursive family in recursive engine"),
                };
                *state = Self::step_log(*state, aggregation, log_inc)?;
            }
            (Engine::Additive { delays, t }, EvidenceFamily::SymmetryAdditive { lambda }) => {
                let step = SignBet::new(lambda)?.eval(x);
                delays.push(1.0);
                for d in delays.iter_mut() {
                    *d += step;
                }
                delays.retain(|d| *d > 0.0);
                *t += 1;
            }
            (Engine::Conformal { state, history, calibrator, score }, _) => {
                history.push(x);
                let p = conformal_pvalue(history, score, theta)?;
                let e = calibrate_p_to_e(p, calibrator)?;
                *state = Self::step_log(*state, aggregation, e.ln())?;
            }
            _ => unreachable!("engine and family are constructed together"),
        }
        Ok(self.value())
    }
}
