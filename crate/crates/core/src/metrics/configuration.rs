//! The true changepoints of a multi-stream problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-stream changepoints `ξ^(k)`; `None` means the stream never changes.
///
/// A stream is pre-change at every `t < ξ` and post-change from `t = ξ` on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Option<u64>>", into = "Vec<Option<u64>>")]
pub struct ChangeConfiguration {
    xi: Vec<Option<u64>>,
}

impl ChangeConfiguration {
    pub fn new(xi: Vec<Option<u64>>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::input("a configuration needs at least one stream"));
        }
        if let Some((k, v)) = xi.iter().enumerate().find_map(|(k, v)| match v {
            Some(v) if *v <= 1 => Some((k, *v)),
            _ => None,
        }) {
            return Err(Error::input(format!(
                "changepoint of stream {k} must exceed 1, got {v}"
            )));
        }
        Ok(Self { xi })
    }

    /// `ξ_G`: no stream ever changes.
    pub fn global_null(streams: usize) -> Self {
        Self {
            xi: vec![None; streams.max(1)],
        }
    }

    pub fn streams(&self) -> usize {
        self.xi.len()
    }

    pub fn changepoint(&self, stream: usize) -> Option<u64> {
        self.xi[stream]
    }

    pub fn as_slice(&self) -> &[Option<u64>] {
        &self.xi
    }

    pub fn is_global_null(&self) -> bool {
        self.xi.iter().all(Option::is_none)
    }

    /// Whether stream `k` is still pre-change at time `t` (`ξ^(k) > t`).
    pub fn is_null_at(&self, stream: usize, t: u64) -> bool {
        match self.xi[stream] {
            Some(xi) => xi > t,
            None => true,
        }
    }

    /// `H₀(t)`.
    pub fn null_set(&self, t: u64) -> Vec<usize> {
        (0..self.streams()).filter(|&k| self.is_null_at(k, t)).collect()
    }

    pub fn null_count(&self, t: u64) -> usize {
        (0..self.streams()).filter(|&k| self.is_null_at(k, t)).count()
    }

    /// Number of streams with `ξ^(k) ≤ t`.
    pub fn changed_count(&self, t: u64) -> usize {
        self.streams() - self.null_count(t)
    }

    /// `Σ_k (τ ∧ (ξ^(k) − 1))` for a realized stopping time.
    pub fn pre_change_exposure(&self, tau: u64) -> u64 {
        self.xi
            .iter()
            .map(|xi| xi.map_or(tau, |xi| tau.min(xi - 1)))
            .sum()
    }
}

impl TryFrom<Vec<Option<u64>>> for ChangeConfiguration {
    type Error = Error;

    fn try_from(xi: Vec<Option<u64>>) -> Result<Self> {
        Self::new(xi)
    }
}

impl From<ChangeConfiguration> for Vec<Option<u64>> {
    fn from(c: ChangeConfiguration) -> Self {
        c.xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_sets() {
        let c = ChangeConfiguration::new(vec![None, Some(5), Some(2)]).unwrap();
        assert_eq!(c.null_set(1), vec![0, 1, 2]);
        assert_eq!(c.null_set(2), vec![0, 1]);
        assert_eq!(c.null_set(5), vec![0]);
        assert_eq!(c.changed_count(10), 2);
        assert!(!c.is_global_null());
        assert!(ChangeConfiguration::global_null(4).is_global_null());
    }

    #[test]
    fn exposure() {
        let c = ChangeConfiguration::new(vec![None, Some(5)]).unwrap();
        assert_eq!(c.pre_change_exposure(10), 10 + 4);
        assert_eq!(c.pre_change_exposure(3), 6);
    }

    #[test]
    fn rejects_changepoint_at_one() {
        assert!(ChangeConfiguration::new(vec![Some(1)]).is_err());
        assert!(ChangeConfiguration::new(vec![]).is_err());
        assert!(serde_json::from_str::<ChangeConfiguration>("[null, 1]").is_err());
        let c: ChangeConfiguration = serde_json::from_str("[null, 7]").unwrap();
        assert_eq!(c.changepoint(1), Some(7));
    }
}
