//! Empirical threshold calibration for a target run length.

use serde::{Deserialize, Serialize};

use super::level::{LevelSchedule, ThresholdPolicy};
use super::selector::{RuleKind, Selector};
use crate::error::{Error, Result};
use crate::evidence::DetectorSpec;
use crate::metrics::Moments;
use crate::simlab::{DetectorBank, StreamGeneratorSpec};

/// Log-spaced thresholds from `1 + ε` to `1/α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub alpha: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_points() -> usize {
    50
}

fn default_epsilon() -> f64 {
    1e-3
}

impl CalibrationGrid {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            points: default_points(),
            epsilon: default_epsilon(),
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("calibration.alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("calibration.epsilon", "must be positive"));
        }
        let lo = 1.0 + self.epsilon;
        let hi = 1.0 / self.alpha;
        if lo >= hi {
            return Err(Error::config("calibration.epsilon", format!("1 + epsilon must be below 1/alpha = {hi}")));
        }
        if self.points < 2 {
            return Err(Error::config("calibration.points", "at least 2 grid points are needed"));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let n = self.points - 1;
        let mut grid: Vec<f64> = (0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect();
        grid[0] = lo;
        grid[n] = hi;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRequest {
    pub rule: RuleKind,
    pub generator: StreamGeneratorSpec,
    pub detector: DetectorSpec,
    pub target_arl: f64,
    pub reps: u64,
    pub horizon: u64,
    pub seed: u64,
    pub grid: CalibrationGrid,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    /// Mean of `τ*_1 ∧ T`.
    pub arl: f64,
    pub se: f64,
    pub censored_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub rule: RuleKind,
    pub target_arl: f64,
    pub c_alpha: f64,
    pub achieved_arl: f64,
    pub se: f64,
    pub policy: ThresholdPolicy,
    pub grid: Vec<GridPoint>,
}

/// The smallest grid threshold whose Monte Carlo ARL₁ reaches the target.
///
/// Each replication runs the detectors once; the rule is evaluated with
/// `c` in place of `1/α` for the grid points not yet fired, which is exact
/// because firing is monotone in `c`. Run lengths are censored at the
/// horizon, so estimates are lower bounds when censoring occurs.
pub fn calibrate_threshold(req: &CalibrationRequest) -> Result<CalibrationReport> {
    if req.reps == 0 {
        return Err(Error::config("reps", "must be at least 1"));
    }
    if !(req.target_arl > 0.0) || !req.target_arl.is_finite() {
        return Err(Error::config("target_arl", format!("must be positive, got {}", req.target_arl)));
    }
    if (req.horizon as f64) < req.target_arl {
        return Err(Error::config(
            "horizon",
            format!("{} is shorter than the target ARL {}", req.horizon, req.target_arl),
        ));
    }
    req.detector.validate()?;
    req.generator.validate()?;
    let grid = req.grid.values()?;
    let base = Selector::new(req.rule, LevelSchedule::constant(req.grid.alpha))?;
    let selectors: Vec<Selector> = grid
        .iter()
        .map(|&c| base.clone().with_policy(ThresholdPolicy::Custom { c_alpha: c }))
        .collect::<Result<_>>()?;
    let streams = req.generator.streams();

    let taus = crate::simlab::map_replications(req.reps, req.threads, |rep| {
        let mut bank = DetectorBank::new(req.detector, streams)?;
        let mut tau = vec![None; grid.len()];
        let mut next = 0;
        for t in 1..=req.horizon {
            let values = bank.step(&req.generator, req.seed, rep, t)?;
            while next < grid.len() && selectors[next].select(t, values)?.fired() {
                tau[next] = Some(t);
                next += 1;
            }
            if next == grid.len() {
                break;
            }
        }
        Ok(tau)
    })?;

    let points: Vec<GridPoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut m = Moments::default();
            let mut censored = 0u64;
            for tau in &taus {
                m.push(tau[i].unwrap_or_else(|| {
                    censored += 1;
                    req.horizon
                }) as f64);
            }
            GridPoint {
                c,
                arl: m.mean(),
                se: m.se(),
                censored_frac: censored as f64 / req.reps as f64,
            }
        })
        .collect();

    match points.iter().find(|p| p.arl >= req.target_arl) {
        Some(p) => Ok(CalibrationReport {
            rule: req.rule,
            target_arl: req.target_arl,
            c_alpha: p.c,
            achieved_arl: p.arl,
            se: p.se,
            policy: ThresholdPolicy::Custom { c_alpha: p.c },
            grid: points,
        }),
        None => {
            let best = points
                .iter()
                .max_by(|a, b| a.arl.total_cmp(&b.arl))
                .expect("grid is nonempty");
            Err(Error::CalibrationFailed {
                target_arl: req.target_arl,
                best_arl: best.arl,
                best_threshold: best.c,
            })
        }
    }
}
