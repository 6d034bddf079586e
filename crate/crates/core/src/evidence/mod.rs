//! Single-stream evidence: `j`-delay e-processes and the SR / CUSUM
//! e-detectors built from them.
//!
//! An e-detector `M` starts at `M_0 = 0`, is nonnegative, and satisfies
//! `E[M_τ] ≤ E[τ]` at every stopping time under the pre-change class. Four
//! families are provided: Gaussian mean change, sub-Gaussian mean change with
//! unknown cross-stream covariance, symmetry, and conformal exchangeability.

mod conformal;
mod delays;
mod detector;
mod increments;
mod state;

pub use conformal::{
    calibrate_p_to_e, conformal_pvalue, conformal_sr_update, CalibratorSpec, NonconformitySpec,
    CALIBRATOR_INTEGRAL_TOLERANCE,
};
pub use delays::{cusum_from_delays, sr_from_delays, weighted_sr_eprocess, DelayEProcess, WeightSequence};
pub use detector::{Aggregation, DetectorSpec, EvidenceFamily, StreamDetector};
pub use increments::{
    gaussian_log_lr, gaussian_lr_increment, subgaussian_log_increment, subgaussian_sum_detector_update,
    symmetry_eprocess_update, SignBet,
};
pub use state::{cusum_update, cusum_update_log, sr_update, sr_update_log, EvidenceState, VALUE_CAP};
