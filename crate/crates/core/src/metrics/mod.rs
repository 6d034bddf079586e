//! Error metrics over detection histories.

mod configuration;
pub mod history;
mod report;


pub use configuration::ChangeConfiguration;
pub use history::{
    ccd_at, fdp_at, fwer_indicator_at, ger_indicator_at, pfer_at, tau_star, DetectionHistory,
};
pub use report::{empirical_eop, Metric, MetricReport, Moments, Stopping, CSV_HEADER};

use crate::error::{Error, Result};
use crate::simlab::{run_experiment, ExperimentConfig, RunOptions};

/// Monte Carlo estimate of one metric for the first rule of `experiment`,
/// overriding its replication count and seed.
pub fn monte_carlo_metric(
    experiment: &ExperimentConfig,
    metric: Metric,
    stopping: Stopping,
    reps: u64,
    seed: u64,
) -> Result<MetricReport> {
    if reps < 2 {
        return Err(Error::config("reps", "at least 2 replications are needed"));
    }
    let mut cfg = experiment.clone();
    cfg.reps = reps;
    cfg.seed = seed;
    cfg.rules.truncate(1);
    let rule = cfg.rules.first().map(|r| r.label()).unwrap_or_default();
    let (row_rule, stop) = match (metric, stopping) {
        (Metric::Arl, Stopping::Fixed { .. }) => {
            return Err(Error::config("stopping", "ARL needs a tau-star stopping time"));
        }
        (Metric::Pfa, _) => (rule, "horizon".to_string()),
        (Metric::DetectorMean, Stopping::Fixed { t }) => ("detector".to_string(), t.to_string()),
        (_, Stopping::Fixed { t }) => {
            cfg.report.times = Some(vec![t]);
            (rule, t.to_string())
        }
        (Metric::Detections | Metric::DetectorMean, Stopping::TauStar { .. }) => {
            return Err(Error::config("metric", format!("{metric} is only tabulated at fixed times")));
        }
        (_, Stopping::TauStar { eta, conditional, .. }) => {
            if metric == Metric::Arl && conditional {
                return Err(Error::config("stopping", "ARL is not reported conditionally"));
            }
            cfg.report.etas = Some(vec![eta]);
            cfg.report.times = Some(vec![]);
            (rule, stopping.label())
        }
    };
    if let (Metric::DetectorMean, Stopping::Fixed { t }) = (metric, stopping) {
        cfg.report.times = Some(vec![t]);
    }
    let out = run_experiment(&cfg, &RunOptions::default())?;
    out.report(metric.as_str(), &row_rule, &stop)
        .cloned()
        .ok_or_else(|| Error::input(format!("no `{metric}` row for stop `{stop}`")))
}
