//! One-step e-process factors for the parametric and symmetry families.

use super::state::{sr_update_log, EvidenceState, VALUE_CAP};
use crate::error::{Error, Result};

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::config("delta", format!("must be positive, got {delta}")));
    }
    Ok(())
}

/// Log likelihood ratio of `N(δ, 1)` against `N(−δ, 1)` at `x`, i.e. `2δx`.
pub fn gaussian_log_lr(x: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if x.is_nan() {
        return Err(Error::input("observation is NaN"));
    }
    Ok(2.0 * delta * x)
}

/// Likelihood ratio `exp(2δx)` of `N(δ, 1)` against `N(−δ, 1)`, saturating at
/// [`VALUE_CAP`].
pub fn gaussian_lr_increment(x: f64, delta: f64) -> Result<f64> {
    Ok(gaussian_log_lr(x, delta)?.exp().min(VALUE_CAP))
}

/// Log factor `λx − λ²σ²/2` of the exponential supermartingale for a
/// σ-sub-Gaussian stream with nonpositive mean.
pub fn subgaussian_log_increment(x: f64, lambda: f64, sigma: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config("lambda", format!("must be nonnegative, got {lambda}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::config("sigma", format!("must be positive, got {sigma}")));
    }
    if x.is_nan() {
        return Err(Error::input("observation is NaN"));
    }
    Ok(lambda * x - lambda * lambda * sigma * sigma / 2.0)
}

/// SR e-detector whose `j`-delay processes are the exponential
/// supermartingales `exp(λ Σ_{s=j}^t X_s − λ²σ²(t−j+1)/2)`.
pub fn subgaussian_sum_detector_update(
    state: EvidenceState,
    x: f64,
    lambda: f64,
    sigma: f64,
) -> Result<EvidenceState> {
    sr_update_log(state, subgaussian_log_increment(x, lambda, sigma)?)
}

/// The odd bet `h(x) = λ · sign(x) · 1{x ≠ 0}` with `|λ| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignBet {
    lambda: f64,
}

impl SignBet {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.abs() <= 1.0) {
            return Err(Error::config(
                "lambda",
                format!("sign bet requires |lambda| <= 1, got {lambda}"),
            ));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.lambda
        } else if x < 0.0 {
            -self.lambda
        } else {
            0.0
        }
    }
}

/// Multiplicative symmetry e-process step `Λ ← Λ · (1 + h(x))`.
///
/// `h` must be odd with `|h| ≤ 1`; the bound is checked on the observed input
/// and a violation is reported as a configuration error.
pub fn symmetry_eprocess_update(value: f64, x: f64, h: impl Fn(f64) -> f64) -> Result<f64> {
    if !(value >= 0.0) {
        return Err(Error::input(format!(
            "e-process value must be nonnegative, got {value}"
        )));
    }
    if x.is_nan() {
        return Err(Error::input("observation is NaN"));
    }
    let bet = h(x);
    if !(bet.abs() <= 1.0) {
        return Err(Error::config(
            "h",
            format!("odd bet must satisfy |h(x)| <= 1, got h({x}) = {bet}"),
        ));
    }
    Ok(value * (1.0 + bet))
}
