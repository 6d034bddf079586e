use crate::error::{Error, Result};

/// Largest value reported by [`EvidenceState::value`]. Internally the
/// detector is tracked as a logarithm and never saturates.
pub const VALUE_CAP: f64 = 1e300;

/// Running value `M_t` of a single-stream e-detector.
///
/// The value is stored as `ln M_t` so that the multiplicative recursions can
/// run far past the point where `M_t` would overflow; `ln 0 = -inf` encodes an
/// annihilated detector. A fresh state has `t = 0` and `M_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceState {
    log_value: f64,
    t: u64,
}

impl Default for EvidenceState {
    fn default() -> Self {
        Self::new()
    }
}

impl EvidenceState {
    pub fn new() -> Self {
        Self {
            log_value: f64::NEG_INFINITY,
            t: 0,
        }
    }

    /// Builds a state with a given linear value after `t` ticks.
    pub fn with_value(value: f64, t: u64) -> Result<Self> {
        if !(value >= 0.0) || value.is_infinite() {
            return Err(Error::input(format!(
                "detector value must be finite and nonnegative, got {value}"
            )));
        }
        if t == 0 && value != 0.0 {
            return Err(Error::input("detector value at t = 0 must be 0"));
        }
        Ok(Self {
            log_value: value.ln(),
            t,
        })
    }

    /// `M_t`, saturating at [`VALUE_CAP`].
    pub fn value(&self) -> f64 {
        self.log_value.exp().min(VALUE_CAP)
    }

    /// `ln M_t` (`-inf` when `M_t = 0`).
    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    /// Number of observations absorbed so far.
    pub fn ticks(&self) -> u64 {
        self.t
    }
}

fn check_increment(increment: f64) -> Result<()> {
    if !(increment >= 0.0) || increment.is_infinite() {
        return Err(Error::input(format!(
            "increment must be finite and nonnegative, got {increment}"
        )));
    }
    Ok(())
}

fn check_log_increment(log_increment: f64) -> Result<()> {
    if log_increment.is_nan() || log_increment == f64::INFINITY {
        return Err(Error::input(format!(
            "log increment must be below +inf, got {log_increment}"
        )));
    }
    Ok(())
}

/// `ln(1 + e^a)` without overflow.
pub(crate) fn log1p_exp(a: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        0.0
    } else if a > 36.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// Shiryaev–Roberts step: `M_{t+1} = increment · (M_t + 1)`.
pub fn sr_update(state: EvidenceState, increment: f64) -> Result<EvidenceState> {
    check_increment(increment)?;
    sr_update_log(state, increment.ln())
}

/// [`sr_update`] with the increment given as its logarithm.
pub fn sr_update_log(state: EvidenceState, log_increment: f64) -> Result<EvidenceState> {
    check_log_increment(log_increment)?;
    Ok(EvidenceState {
        log_value: log_increment + log1p_exp(state.log_value),
        t: state.t + 1,
    })
}

/// CUSUM step: `M_{t+1} = increment · max(M_t, 1)`.
pub fn cusum_update(state: EvidenceState, increment: f64) -> Result<EvidenceState> {
    check_increment(increment)?;
    cusum_update_log(state, increment.ln())
}

/// [`cusum_update`] with the increment given as its logarithm.
pub fn cusum_update_log(state: EvidenceState, log_increment: f64) -> Result<EvidenceState> {
    check_log_increment(log_increment)?;
    Ok(EvidenceState {
        log_value: log_increment + state.log_value.max(0.0),
        t: state.t + 1,
    })
}
