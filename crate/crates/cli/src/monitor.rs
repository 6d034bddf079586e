use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};

use anyhow::{Context, Result};
use edetect::evidence::DetectorSpec;
use edetect::procedures::{LevelSchedule, RuleKind, Selector, ThresholdPolicy};
use edetect::simlab::DetectorBank;
use serde::{Deserialize, Serialize};

use crate::args::MonitorArgs;

/// A record that violates the stream schema; always fatal.
#[derive(Debug)]
pub struct StreamError(pub String);

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stream schema violation: {}", self.0)
    }
}

impl std::error::Error for StreamError {}

#[derive(Debug, Deserialize)]
struct StreamRecord {
    t: u64,
    x: Vec<f64>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    replication: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Event<'a> {
    t: u64,
    selected: &'a [usize],
    k_star: usize,
    detector_values: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    global: Option<bool>,
}

pub struct Monitor {
    selector: Selector,
    detector: DetectorSpec,
    bank: Option<DetectorBank>,
    streams: Option<usize>,
    last_t: Option<u64>,
    seed: u64,
    replication: Option<u64>,
}

/// Why a line was not turned into an event.
enum Rejection {
    Skip,
    Malformed(String),
    Fatal(anyhow::Error),
}

impl Monitor {
    pub fn new(selector: Selector, detector: DetectorSpec, seed: u64, replication: Option<u64>) -> Result<Self> {
        detector.validate()?;
        Ok(Self {
            selector,
            detector,
            bank: None,
            streams: None,
            last_t: None,
            seed,
            replication,
        })
    }

    fn handle(&mut self, line: &str, out: &mut dyn Write) -> Result<(), Rejection> {
        let rec: StreamRecord =
            serde_json::from_str(line).map_err(|e| Rejection::Malformed(e.to_string()))?;
        if let (Some(want), Some(got)) = (self.replication, rec.replication) {
            if want != got {
                return Err(Rejection::Skip);
            }
        }
        if rec.t == 0 {
            return Err(Rejection::Malformed("t must be at least 1".into()));
        }
        if rec.x.is_empty() {
            return Err(Rejection::Malformed("x is empty".into()));
        }
        if let Some(labels) = &rec.labels {
            if labels.len() != rec.x.len() {
                return Err(Rejection::Malformed(format!(
                    "{} labels for {} values",
                    labels.len(),
                    rec.x.len()
                )));
            }
        }
        let fatal = |msg: String| Rejection::Fatal(StreamError(msg).into());
        match self.streams {
            Some(k) if k != rec.x.len() => {
                return Err(fatal(format!(
                    "record t = {} has {} streams, expected {k}",
                    rec.t,
                    rec.x.len()
                )))
            }
            None => {
                self.streams = Some(rec.x.len());
                self.bank = Some(DetectorBank::new(self.detector, rec.x.len()).map_err(|e| Rejection::Fatal(e.into()))?);
            }
            _ => {}
        }
        if let Some(prev) = self.last_t {
            if rec.t <= prev {
                return Err(fatal(format!("t = {} does not increase past {prev}", rec.t)));
            }
        }
        let bank = self.bank.as_mut().expect("initialized with the first record");
        let values = bank
            .observe(&rec.x, self.seed, self.replication.unwrap_or(0), rec.t)
            .map_err(|e| Rejection::Fatal(e.into()))?;
        let frame = self
            .selector
            .select(rec.t, values)
            .map_err(|e| Rejection::Fatal(e.into()))?;
        self.last_t = Some(rec.t);
        let event = Event {
            t: rec.t,
            selected: &frame.selected,
            k_star: frame.k_star,
            detector_values: values,
            global: frame.global,
        };
        let io = |e: io::Error| Rejection::Fatal(e.into());
        serde_json::to_writer(&mut *out, &event).map_err(|e| Rejection::Fatal(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
        out.flush().map_err(io)?;
        Ok(())
    }

    /// Process every line of `input`, writing one event per accepted record.
    /// Returns the number of skipped malformed lines.
    pub fn run(&mut self, input: impl BufRead, out: &mut dyn Write, warn: &mut dyn Write, strict: bool) -> Result<usize> {
        let mut skipped = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line.context("reading input")?;
            if line.trim().is_empty() {
                continue;
            }
            match self.handle(&line, out) {
                Ok(()) | Err(Rejection::Skip) => {}
                Err(Rejection::Fatal(e)) => return Err(e.context(format!("line {}", i + 1))),
                Err(Rejection::Malformed(msg)) => {
                    if strict {
                        return Err(StreamError(format!("line {}: malformed record: {msg}", i + 1)).into());
                    }
                    skipped += 1;
                    writeln!(warn, "edetect: skipping line {}: {msg}", i + 1)?;
                }
            }
        }
        Ok(skipped)
    }
}

pub fn build(args: &MonitorArgs) -> Result<Monitor> {
    let rule: RuleKind = args.rule.parse()?;
    let schedule: LevelSchedule = args.alpha.parse()?;
    let mut selector = Selector::new(rule, schedule)?;
    if let Some(c) = args.threshold {
        selector = selector.with_policy(ThresholdPolicy::Custom { c_alpha: c })?;
    }
    let detector: DetectorSpec = args.detector.parse()?;
    Monitor::new(selector, detector, args.seed, args.replication)
}

pub fn run(args: MonitorArgs) -> Result<()> {
    let mut monitor = build(&args)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut warn = io::stderr();
    match &args.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            monitor.run(BufReader::new(file), &mut out, &mut warn, args.strict)?;
        }
        None => {
            monitor.run(io::stdin().lock(), &mut out, &mut warn, args.strict)?;
        }
    }
    Ok(())
}
