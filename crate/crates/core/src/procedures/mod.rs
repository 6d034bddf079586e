//! Multi-stream selection rules applied to a vector of detector values.

mod calibrate;
mod level;
mod rules;
mod selector;

pub use level::{Critical, LevelDomain, LevelSchedule, ThresholdPolicy};
pub use rules::{
    edbh_step, edbh_with, edbonf_step, edbonf_with, edgnt_step, edgnt_with, edholm_step,
    edholm_with, naive_step, naive_with, Selection,
};
pub use selector::{firing_statistic, DetectionFrame, RuleKind, Selector};
pub use calibrate::{
    calibrate_threshold, CalibrationGrid, CalibrationReport, CalibrationRequest, GridPoint,
};
