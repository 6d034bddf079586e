//! Seeded Monte Carlo runner.
//!
//! Replications are simulated in fixed-size chunks. Within a chunk they may
//! run on several threads; results are then folded into the accumulators in
//! replication order, so every output is identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::bank::DetectorBank;
use super::generator::StreamGeneratorSpec;
use crate::error::{Error, Result};
use crate::evidence::DetectorSpec;
use crate::metrics::history::{ccd, counted_detections, false_detections, fdp, ger};
use crate::metrics::{empirical_eop, ChangeConfiguration, DetectionHistory, MetricReport, Moments};
use crate::procedures::{DetectionFrame, RuleKind, Selector};

const CHUNK: usize = 32;

/// Per-tick quantities tabulated at every report time, in this order.
pub const FIXED_METRICS: [&str; 6] = ["fdr", "fwer", "pfer", "ger", "ccd", "detections"];

/// One stopping time of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopRecord {
    pub eta: usize,
    pub false_only: bool,
    /// `None` when not reached within the horizon.
    pub tau: Option<u64>,
    /// Metrics at `τ ∧ T`.
    pub fdp: f64,
    pub pfer: usize,
    pub fwer: bool,
    pub ger: bool,
    pub ccd: f64,
    /// `Σ_k (τ ∧ T) ∧ (ξ^(k) − 1)`.
    pub exposure: u64,
}

/// Summary of one rule in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub rule: String,
    /// First tick with a false detection (or a global false alarm).
    pub first_false_alarm: Option<u64>,
    pub stops: Vec<StopRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every rule's full detection history for every replication.
    pub keep_histories: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<MetricReport>,
    /// Replication-major, then rule order.
    pub records: Vec<ReplicationRecord>,
    /// `histories[rep][rule]`, when requested.
    pub histories: Option<Vec<Vec<DetectionHistory>>>,
}

impl ExperimentOutput {
    pub fn report(&self, metric: &str, rule: &str, stop: &str) -> Option<&MetricReport> {
        self.reports
            .iter()
            .find(|r| r.metric == metric && r.rule == rule && r.stop == stop)
    }
}

struct Plan {
    spec: StreamGeneratorSpec,
    detector: DetectorSpec,
    selectors: Vec<Selector>,
    labels: Vec<String>,
    times: Vec<u64>,
    /// `slot[t]` = position of `t` in `times`.
    slot: Vec<Option<usize>>,
    etas: Vec<usize>,
    horizon: u64,
    seed: u64,
    keep_frames: bool,
}

impl Plan {
    fn new(cfg: &ExperimentConfig, keep_frames: bool) -> Result<Self> {
        cfg.validate()?;
        let times = cfg.report_times();
        let mut slot = vec![None; cfg.horizon as usize + 1];
        for (i, &t) in times.iter().enumerate() {
            slot[t as usize] = Some(i);
        }
        Ok(Self {
            spec: cfg.generator_spec()?,
            detector: cfg.detector,
            selectors: cfg.rules.iter().map(|r| r.selector()).collect::<Result<_>>()?,
            labels: cfg.rules.iter().map(|r| r.label()).collect(),
            times,
            slot,
            etas: cfg.etas(),
            horizon: cfg.horizon,
            seed: cfg.seed,
            keep_frames,
        })
    }

    fn xi(&self) -> &ChangeConfiguration {
        &self.spec.xi
    }

    /// (η, false_only) pairs, in report order.
    fn stop_keys(&self) -> Vec<(usize, bool)> {
        self.etas
            .iter()
            .flat_map(|&e| [(e, false), (e, true)])
            .collect()
    }
}

struct ReplicationRun {
    records: Vec<ReplicationRecord>,
    /// `fixed[rule][slot]`.
    fixed: Vec<Vec<[f64; 6]>>,
    detector_mean: Vec<f64>,
    histories: Option<Vec<DetectionHistory>>,
}

fn fixed_values(frame: &DetectionFrame, xi: &ChangeConfiguration) -> [f64; 6] {
    let pfer = false_detections(frame, xi);
    [
        fdp(frame, xi),
        f64::from(u8::from(pfer >= 1)),
        pfer as f64,
        f64::from(u8::from(ger(frame, xi))),
        ccd(frame, xi),
        frame.selected.len() as f64,
    ]
}

fn stop_record(eta: usize, false_only: bool, tau: Option<u64>, frame: &DetectionFrame, xi: &ChangeConfiguration) -> StopRecord {
    let pfer = false_detections(frame, xi);
    StopRecord {
        eta,
        false_only,
        tau,
        fdp: fdp(frame, xi),
        pfer,
        fwer: pfer >= 1,
        ger: ger(frame, xi),
        ccd: ccd(frame, xi),
        exposure: xi.pre_change_exposure(frame.t),
    }
}

fn run_replication(plan: &Plan, replication: u64) -> Result<ReplicationRun> {
    let k = plan.spec.streams();
    let xi = plan.xi();
    let mut bank = DetectorBank::new(plan.detector, k)?;
    let stop_keys = plan.stop_keys();
    let n_rules = plan.selectors.len();
    let mut fixed = vec![vec![[0.0; 6]; plan.times.len()]; n_rules];
    let mut detector_mean = vec![0.0; plan.times.len()];
    let mut first_false = vec![None; n_rules];
    let mut stops: Vec<Vec<Option<StopRecord>>> = vec![vec![None; stop_keys.len()]; n_rules];
    let mut last: Vec<Option<DetectionFrame>> = vec![None; n_rules];
    let mut histories = plan
        .keep_frames
        .then(|| vec![DetectionHistory::new(k); n_rules]);

    for t in 1..=plan.horizon {
        let values = bank.step(&plan.spec, plan.seed, replication, t)?;
        let slot = plan.slot[t as usize];
        if let Some(i) = slot {
            detector_mean[i] = values.iter().sum::<f64>() / k as f64;
        }
        for (r, selector) in plan.selectors.iter().enumerate() {
            let frame = selector.select(t, values)?;
            if let Some(i) = slot {
                fixed[r][i] = fixed_values(&frame, xi);
            }
            if first_false[r].is_none() && (false_detections(&frame, xi) > 0 || ger(&frame, xi)) {
                first_false[r] = Some(t);
            }
            for (j, &(eta, false_only)) in stop_keys.iter().enumerate() {
                if stops[r][j].is_none() && counted_detections(&frame, xi, false_only) >= eta {
                    stops[r][j] = Some(stop_record(eta, false_only, Some(t), &frame, xi));
                }
            }
            if let Some(h) = histories.as_mut() {
                h[r].push(frame.clone())?;
            }
            last[r] = Some(frame);
        }
    }

    let records = (0..n_rules)
        .map(|r| {
            let end = last[r].as_ref().expect("horizon is at least 1");
            ReplicationRecord {
                replication,
                rule: plan.labels[r].clone(),
                first_false_alarm: first_false[r],
                stops: stop_keys
                    .iter()
                    .enumerate()
                    .map(|(j, &(eta, fo))| {
                        stops[r][j]
                            .clone()
                            .unwrap_or_else(|| stop_record(eta, fo, None, end, xi))
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(ReplicationRun {
        records,
        fixed,
        detector_mean,
        histories,
    })
}

#[derive(Default, Clone)]
struct StopAcc {
    /// Run lengths `τ ∧ T`.
    tau: Moments,
    exposure: Moments,
    censored: u64,
    /// fdr, pfer, fwer, ger, ccd at `τ ∧ T`, then over found replications.
    all: [Moments; 5],
    found: [Moments; 5],
}

struct Accumulators {
    fixed: Vec<Vec<[Moments; 6]>>,
    detector_mean: Vec<Moments>,
    stops: Vec<Vec<StopAcc>>,
    pfa: Vec<Moments>,
}

impl Accumulators {
    fn new(plan: &Plan) -> Self {
        let n_rules = plan.selectors.len();
        Self {
            fixed: vec![vec![[Moments::default(); 6]; plan.times.len()]; n_rules],
            detector_mean: vec![Moments::default(); plan.times.len()],
            stops: vec![vec![StopAcc::default(); plan.stop_keys().len()]; n_rules],
            pfa: vec![Moments::default(); n_rules],
        }
    }

    fn absorb(&mut self, run: &ReplicationRun, horizon: u64) {
        for (i, v) in run.detector_mean.iter().enumerate() {
            self.detector_mean[i].push(*v);
        }
        for (r, rows) in run.fixed.iter().enumerate() {
            for (i, vals) in rows.iter().enumerate() {
                for (m, v) in vals.iter().enumerate() {
                    self.fixed[r][i][m].push(*v);
                }
            }
        }
        for (r, rec) in run.records.iter().enumerate() {
            self.pfa[r].push(f64::from(u8::from(rec.first_false_alarm.is_some())));
            for (j, s) in rec.stops.iter().enumerate() {
                let acc = &mut self.stops[r][j];
                let vals = [s.fdp, s.pfer as f64, f64::from(u8::from(s.fwer)), f64::from(u8::from(s.ger)), s.ccd];
                acc.tau.push(s.tau.unwrap_or(horizon) as f64);
                acc.exposure.push(s.exposure as f64);
                for (m, v) in vals.iter().enumerate() {
                    acc.all[m].push(*v);
                    if s.tau.is_some() {
                        acc.found[m].push(*v);
                    }
                }
                if s.tau.is_none() {
                    acc.censored += 1;
                }
            }
        }
    }
}

/// The error each rule is designed to control.
pub fn natural_error(rule: RuleKind) -> &'static str {
    match rule {
        RuleKind::EdBh | RuleKind::Naive => "fdr",
        RuleKind::EdBonferroni => "pfer",
        RuleKind::EdHolm => "fwer",
        RuleKind::EdGnt => "ger",
    }
}

const STOP_METRICS: [&str; 5] = ["fdr", "pfer", "fwer", "ger", "ccd"];

fn build_reports(plan: &Plan, acc: &Accumulators, reps: u64) -> Vec<MetricReport> {
    let mut out = Vec::new();
    for (i, &t) in plan.times.iter().enumerate() {
        out.push(MetricReport::from_moments("detector_mean", "detector", t.to_string(), &acc.detector_mean[i]));
    }
    let stop_keys = plan.stop_keys();
    let xi = plan.xi();
    for (r, label) in plan.labels.iter().enumerate() {
        for (i, &t) in plan.times.iter().enumerate() {
            for (m, name) in FIXED_METRICS.iter().enumerate() {
                out.push(MetricReport::from_moments(*name, label.as_str(), t.to_string(), &acc.fixed[r][i][m]));
            }
        }
        for (j, &(eta, false_only)) in stop_keys.iter().enumerate() {
            let a = &acc.stops[r][j];
            let base = if false_only { "tau_false" } else { "tau_star" };
            let stop = format!("{base}_{eta}");
            let censored_frac = a.censored as f64 / reps as f64;
            let mut arl = MetricReport::from_moments("arl", label.as_str(), stop.as_str(), &a.tau);
            arl.censored_frac = censored_frac;
            arl.lower_bound = a.censored > 0;
            out.push(arl);
            let mut exposure = MetricReport::from_moments("exposure", label.as_str(), stop.as_str(), &a.exposure);
            exposure.estimate = exposure.estimate.max(1.0);
            exposure.censored_frac = censored_frac;
            out.push(exposure);
            for (m, name) in STOP_METRICS.iter().enumerate() {
                let mut row = MetricReport::from_moments(*name, label.as_str(), stop.as_str(), &a.all[m]);
                row.censored_frac = censored_frac;
                out.push(row);
                let mut row = MetricReport::from_moments(*name, label.as_str(), format!("{stop}|found"), &a.found[m]);
                row.censored_frac = censored_frac;
                out.push(row);
            }
        }
        let mut pfa = MetricReport::from_moments("pfa", label.as_str(), "horizon", &acc.pfa[r]);
        pfa.lower_bound = true;
        out.push(pfa);

        // Error over patience across the default stopping family.
        let err = natural_error(plan.selectors[r].rule);
        let m_idx = STOP_METRICS.iter().position(|m| *m == err).expect("known metric");
        let f_idx = FIXED_METRICS.iter().position(|m| *m == err).expect("known metric");
        let mut plain = Vec::new();
        let mut exposed = Vec::new();
        for (j, &(_, false_only)) in stop_keys.iter().enumerate() {
            if false_only {
                continue;
            }
            let a = &acc.stops[r][j];
            let est = a.all[m_idx].mean();
            plain.push((est, a.tau.mean()));
            exposed.push((est, a.exposure.mean().max(1.0)));
        }
        for t in [10, 100, plan.horizon] {
            if let Some(i) = plan.slot.get(t as usize).copied().flatten() {
                let est = acc.fixed[r][i][f_idx].mean();
                plain.push((est, t as f64));
                exposed.push((est, (xi.pre_change_exposure(t) as f64).max(1.0)));
            }
        }
        for (suffix, points) in [("", plain), ("_exposure", exposed)] {
            let estimate = empirical_eop(&points).unwrap_or(f64::NAN);
            out.push(MetricReport {
                metric: format!("eop_{err}{suffix}"),
                rule: label.clone(),
                stop: "family".to_string(),
                estimate,
                se: f64::NAN,
                reps,
                censored_frac: 0.0,
                lower_bound: true,
            });
        }
    }
    out
}

pub(crate) fn execute<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(1) | None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Run every replication of `cfg` and tabulate the metrics.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let plan = Plan::new(cfg, opts.keep_histories)?;
    let serial = cfg.threads == Some(1);
    let mut acc = Accumulators::new(&plan);
    let mut records = Vec::new();
    let mut histories = opts.keep_histories.then(Vec::new);
    let reps: Vec<u64> = (0..cfg.reps).collect();
    execute(cfg.threads, || -> Result<()> {
        for chunk in reps.chunks(CHUNK) {
            let runs: Vec<Result<ReplicationRun>> = if serial {
                chunk.iter().map(|&r| run_replication(&plan, r)).collect()
            } else {
                chunk.par_iter().map(|&r| run_replication(&plan, r)).collect()
            };
            for run in runs {
                let run = run?;
                acc.absorb(&run, plan.horizon);
                records.extend(run.records);
                if let (Some(all), Some(h)) = (histories.as_mut(), run.histories) {
                    all.push(h);
                }
            }
        }
        Ok(())
    })??;
    Ok(ExperimentOutput {
        reports: build_reports(&plan, &acc, cfg.reps),
        records,
        histories,
    })
}

/// `f(0), …, f(reps − 1)` in replication order, possibly in parallel.
pub fn map_replications<T, F>(reps: u64, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let ids: Vec<u64> = (0..reps).collect();
    execute(threads, || {
        if threads == Some(1) {
            ids.iter().map(|&r| f(r)).collect()
        } else {
            ids.par_iter().map(|&r| f(r)).collect()
        }
    })?
}
