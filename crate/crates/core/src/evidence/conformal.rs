//! Conformal p-values and p-to-e calibrators for exchangeability testing.
//!
//! Under an exchangeable pre-change law the smoothed conformal p-values are
//! i.i.d. uniform, so any calibrator `f` with `∫₀¹ f ≤ 1` turns them into
//! e-values whose running products are e-processes.

use std::fmt;
use std::sync::Arc;

use super::state::{sr_update, EvidenceState, VALUE_CAP};
use crate::error::{Error, Result};

type ScoreFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type CalibratorFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Nonconformity measure `A_n : ℝⁿ → ℝⁿ`.
#[derive(Clone)]
pub enum NonconformitySpec {
    /// `α_i = x_i − mean(x_1..x_n)`; the last score is `x_n − mean`.
    CenteredLast,
    /// User-supplied measure. `equivariant` records whether the caller
    /// vouches for permutation equivariance.
    Custom { score: Arc<ScoreFn>, equivariant: bool },
}

impl fmt::Debug for NonconformitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CenteredLast => f.write_str("CenteredLast"),
            Self::Custom { equivariant, .. } => f
                .debug_struct("Custom")
                .field("equivariant", equivariant)
                .finish_non_exhaustive(),
        }
    }
}

impl NonconformitySpec {
    pub fn custom(score: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static, equivariant: bool) -> Self {
        Self::Custom {
            score: Arc::new(score),
            equivariant,
        }
    }

    pub fn is_permutation_equivariant(&self) -> bool {
        match self {
            Self::CenteredLast => true,
            Self::Custom { equivariant, .. } => *equivariant,
        }
    }

    pub fn scores(&self, xs: &[f64]) -> Vec<f64> {
        match self {
            Self::CenteredLast => {
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                xs.iter().map(|x| x - mean).collect()
            }
            Self::Custom { score, .. } => score(xs),
        }
    }
}

/// Smoothed conformal p-value of the last element of `history`:
/// `(#{α_t > α_n} + θ · #{α_t = α_n}) / n`.
pub fn conformal_pvalue(history: &[f64], score: &NonconformitySpec, theta: f64) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::input("conformal p-value needs a nonempty history"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::input(format!("theta must lie in [0, 1], got {theta}")));
    }
    let scores = score.scores(history);
    if scores.len() != history.len() {
        return Err(Error::input(format!(
            "nonconformity measure returned {} scores for {} points",
            scores.len(),
            history.len()
        )));
    }
    let last = scores[scores.len() - 1];
    let (mut above, mut ties) = (0usize, 0usize);
    for &a in &scores {
        if a > last {
            above += 1;
        } else if a == last {
            ties += 1;
        }
    }
    Ok((above as f64 + theta * ties as f64) / history.len() as f64)
}

/// p-to-e calibrator `f` on `[0, 1]` with `∫₀¹ f ≤ 1`.
#[derive(Clone)]
pub enum CalibratorSpec {
    /// `f(z) = κ z^{κ−1}`, `κ ∈ (0, 1)`.
    Power { kappa: f64 },
    Custom { f: Arc<CalibratorFn> },
}

impl fmt::Debug for CalibratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { kappa } => f.debug_struct("Power").field("kappa", kappa).finish(),
            Self::Custom { .. } => f.write_str("Custom { .. }"),
        }
    }
}

/// Slack allowed on the numerical integral of a calibrator.
pub const CALIBRATOR_INTEGRAL_TOLERANCE: f64 = 1e-6;

impl CalibratorSpec {
    pub fn power(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::config("kappa", format!("must lie in (0, 1), got {kappa}")));
        }
        Ok(Self::Power { kappa })
    }

    /// Accepts `f` after checking nonnegativity on a grid and
    /// `∫₀¹ f ≤ 1 + 1e-6` numerically.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let spec = Self::Custom { f: Arc::new(f) };
        for i in 1..=10_000 {
            let z = i as f64 / 10_000.0;
            let v = spec.eval(z);
            if !(v >= 0.0) {
                return Err(Error::config("calibrator", format!("f({z}) = {v} is negative")));
            }
        }
        let integral = spec.integral();
        if !(integral <= 1.0 + CALIBRATOR_INTEGRAL_TOLERANCE) {
            return Err(Error::config(
                "calibrator",
                format!("integral over [0, 1] is {integral}, exceeds 1"),
            ));
        }
        Ok(spec)
    }

    fn eval(&self, z: f64) -> f64 {
        match self {
            Self::Power { kappa } => kappa * z.powf(kappa - 1.0),
            Self::Custom { f } => f(z),
        }
    }

    /// `∫₀¹ f` by double-exponential quadrature after the substitution
    /// `z = u⁸`, which flattens integrable singularities at 0 such as the
    /// power family's `z^{κ−1}`.
    pub fn integral(&self) -> f64 {
        const M: i32 = 8;
        quadrature::double_exponential::integrate(
            |u| self.eval(u.powi(M)) * f64::from(M) * u.powi(M - 1),
            0.0,
            1.0,
            1e-12,
        )
        .integral
    }
}

/// Applies the calibrator to a p-value. `p = 0` maps to [`VALUE_CAP`].
pub fn calibrate_p_to_e(p: f64, spec: &CalibratorSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::input(format!("p-value must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(VALUE_CAP);
    }
    let e = spec.eval(p);
    if !(e >= 0.0) {
        return Err(Error::config("calibrator", format!("f({p}) = {e} is negative")));
    }
    Ok(e.min(VALUE_CAP))
}

/// Conformal SR step `M_{t+1} = f(p)(M_t + 1)`; same contract as
/// [`sr_update`].
pub fn conformal_sr_update(state: EvidenceState, e_factor: f64) -> Result<EvidenceState> {
    sr_update(state, e_factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal count over all scores, independent of `conformal_pvalue`.
    fn pvalue_oracle(scores: &[f64], theta: f64) -> f64 {
        let n = scores.len();
        let last = scores[n - 1];
        let above = scores.iter().filter(|&&a| a > last).count();
        let ties = scores.iter().filter(|&&a| a == last).count();
        (above as f64 + theta * ties as f64) / n as f64
    }

    #[test]
    fn pvalue_examples() {
        let s = NonconformitySpec::CenteredLast;
        assert_eq!(conformal_pvalue(&[4.2], &s, 0.37).unwrap(), 0.37);
        // Scores (−1, 0, 1): nothing above the last, one tie.
        assert_eq!(pvalue_oracle(&[-1.0, 0.0, 1.0], 0.0), 0.0);
        assert_eq!(conformal_pvalue(&[1.0, 2.0, 3.0], &s, 0.0).unwrap(), 0.0);
        // Scores (1, 0, −1): two above, one tie.
        assert_eq!(pvalue_oracle(&[1.0, 0.0, -1.0], 1.0), 1.0);
        assert_eq!(conformal_pvalue(&[3.0, 2.0, 1.0], &s, 1.0).unwrap(), 1.0);
        assert!(conformal_pvalue(&[], &s, 0.5).is_err());
        assert!(conformal_pvalue(&[1.0], &s, 1.5).is_err());
    }

    #[test]
    fn pvalue_counts_ties() {
        let s = NonconformitySpec::CenteredLast;
        // Scores (0, 0, 0, 0) all tie.
        assert_eq!(conformal_pvalue(&[2.0; 4], &s, 0.25).unwrap(), 0.25);
    }

    #[test]
    fn calibrator_examples() {
        let half = CalibratorSpec::power(0.5).unwrap();
        assert!((calibrate_p_to_e(0.25, &half).unwrap() - 1.0).abs() < 1e-15);
        assert!((calibrate_p_to_e(1.0, &half).unwrap() - 0.5).abs() < 1e-15);
        assert!((calibrate_p_to_e(0.01, &half).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(calibrate_p_to_e(0.0, &half).unwrap(), VALUE_CAP);
        assert!(calibrate_p_to_e(-0.1, &half).is_err());
        assert!(CalibratorSpec::power(1.0).is_err());
        assert!(CalibratorSpec::power(0.0).is_err());
    }

    #[test]
    fn calibrator_integrals() {
        for kappa in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let c = CalibratorSpec::power(kappa).unwrap();
            assert!((c.integral() - 1.0).abs() < CALIBRATOR_INTEGRAL_TOLERANCE, "kappa {kappa}");
        }
        assert!(CalibratorSpec::custom(|_| 1.0).is_ok());
        assert!(CalibratorSpec::custom(|z| 2.0 * z).is_ok());
        assert!(CalibratorSpec::custom(|_| 1.01).is_err());
        assert!(CalibratorSpec::custom(|z| 1.0 - 2.0 * z).is_err());
    }

    #[test]
    fn conformal_sr_examples() {
        let zero = EvidenceState::new();
        assert_eq!(conformal_sr_update(zero, 0.5).unwrap().value(), 0.5);
        let half = EvidenceState::with_value(0.5, 1).unwrap();
        assert!((conformal_sr_update(half, 1.0).unwrap().value() - 1.5).abs() < 1e-12);
        let nine = EvidenceState::with_value(9.0, 1).unwrap();
        assert!((conformal_sr_update(nine, 0.1).unwrap().value() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn centered_scores_are_permutation_equivariant(
            xs in prop::collection::vec(-100i32..100, 1..=8),
            seed in any::<u64>(),
        ) {
            let xs: Vec<f64> = xs.into_iter().map(|v| v as f64 / 4.0).collect();
            // Deterministic permutation from the seed.
            let mut perm: Vec<usize> = (0..xs.len()).collect();
            let mut s = seed;
            for i in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let spec = NonconformitySpec::CenteredLast;
            let scores = spec.scores(&xs);
            let permuted: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
            let permuted_scores = spec.scores(&permuted);
            for (pos, &i) in perm.iter().enumerate() {
                // Quarter-integer inputs keep the mean exactly representable
                // only up to rounding; compare with a tight tolerance.
                prop_assert!((permuted_scores[pos] - scores[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn pvalue_agrees_with_oracle(
            xs in prop::collection::vec(-5i32..5, 1..30),
            theta in 0.0f64..=1.0,
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let spec = NonconformitySpec::CenteredLast;
            let p = conformal_pvalue(&xs, &spec, theta).unwrap();
            prop_assert_eq!(p, pvalue_oracle(&spec.scores(&xs), theta));
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
