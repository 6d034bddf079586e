//! The per-tick selection rules.
//!
//! Each rule sees only the current vector of detector values. Order
//! statistics are taken with ties broken by stream index (value descending,
//! index ascending); for the rules below this never splits a tie at the
//! selection boundary, so selected sets do not depend on stream labels.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::level::Critical;
use crate::error::{Error, Result};

/// Outcome of one rule at one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    /// `k*_t`.
    pub k_star: usize,
    /// `S_t`, ascending stream indices (0-based).
    pub selected: Vec<usize>,
}

impl Selection {
    fn empty() -> Self {
        Self {
            k_star: 0,
            selected: Vec::new(),
        }
    }

    fn top(order: &[usize], k_star: usize) -> Self {
        let mut selected = order[..k_star].to_vec();
        selected.sort_unstable();
        Self { k_star, selected }
    }
}

pub(crate) fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::input("at least one stream is required"));
    }
    if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || v.is_infinite()) {
        return Err(Error::input(format!(
            "detector value for stream {k} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// Indices of values `≥ floor` by value descending, index ascending: a
/// prefix of the canonical order.
fn ranked_from(values: &[f64], floor: f64) -> Vec<usize> {
    // Sorting (value, index) pairs keeps comparisons on contiguous memory.
    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(0..).filter(|p| p.0 >= floor).collect();
    pairs.sort_unstable_by(|a, b| match b.0.partial_cmp(&a.0) {
        Some(Ordering::Equal) | None => a.1.cmp(&b.1),
        Some(o) => o,
    });
    pairs.into_iter().map(|(_, k)| k).collect()
}

fn check_probability(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config("level", format!("must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// e-d-BH: `k* = max{k : M^[k] ≥ K / (k α)}`, select the top `k*`.
pub fn edbh_with(values: &[f64], critical: Critical) -> Result<Selection> {
    check_values(values)?;
    // Every BH bar is at least the single-stream bar.
    let order = ranked_from(values, critical.single());
    let n = values.len();
    let k_star = (1..=order.len())
        .filter(|&k| values[order[k - 1]] >= critical.bh(n, k))
        .max()
        .unwrap_or(0);
    Ok(Selection::top(&order, k_star))
}

/// e-d-Bonferroni: select every stream with `M ≥ K / β`.
pub fn edbonf_with(values: &[f64], critical: Critical) -> Result<Selection> {
    check_values(values)?;
    let threshold = critical.family(values.len());
    let selected: Vec<usize> = (0..values.len()).filter(|&k| values[k] >= threshold).collect();
    Ok(Selection {
        k_star: selected.len(),
        selected,
    })
}

/// e-d-Holm: longest prefix with `M^[i] ≥ (K − i + 1) / α`.
pub fn edholm_with(values: &[f64], critical: Critical) -> Result<Selection> {
    check_values(values)?;
    // Every Holm bar is at least the single-stream bar.
    let order = ranked_from(values, critical.single());
    let n = values.len();
    let k_star = (1..=order.len())
        .take_while(|&i| values[order[i - 1]] >= critical.holm(n, i))
        .count();
    Ok(Selection::top(&order, k_star))
}

/// e-d-GNT: fire iff `Σ_k M^(k) ≥ K / α`.
pub fn edgnt_with(values: &[f64], critical: Critical) -> Result<bool> {
    check_values(values)?;
    Ok(total(values) >= critical.family(values.len()))
}

/// `Σ_k M^(k)` accumulated in ascending order, so the result does not
/// depend on how streams are labelled.
pub(crate) fn total(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Per-stream thresholding at `1/α` with no multiplicity correction.
pub fn naive_with(values: &[f64], critical: Critical) -> Result<Selection> {
    check_values(values)?;
    let bar = critical.single();
    let selected: Vec<usize> = (0..values.len()).filter(|&k| values[k] >= bar).collect();
    if selected.is_empty() {
        return Ok(Selection::empty());
    }
    Ok(Selection {
        k_star: selected.len(),
        selected,
    })
}

pub fn edbh_step(values: &[f64], level: f64) -> Result<Selection> {
    check_probability(level)?;
    edbh_with(values, Critical::Level(level))
}

pub fn edbonf_step(values: &[f64], level: f64) -> Result<Selection> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::config("level", format!("must be positive, got {level}")));
    }
    edbonf_with(values, Critical::Level(level))
}

pub fn edholm_step(values: &[f64], level: f64) -> Result<Selection> {
    check_probability(level)?;
    edholm_with(values, Critical::Level(level))
}

pub fn edgnt_step(values: &[f64], level: f64) -> Result<bool> {
    check_probability(level)?;
    edgnt_with(values, Critical::Level(level))
}

pub fn naive_step(values: &[f64], level: f64) -> Result<Selection> {
    check_probability(level)?;
    naive_with(values, Critical::Level(level))
}
