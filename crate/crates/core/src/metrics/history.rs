//! Detection histories and the per-tick error quantities computed on them.

use serde::{Deserialize, Serialize};

use super::configuration::ChangeConfiguration;
use crate::error::{Error, Result};
use crate::procedures::DetectionFrame;

/// Frames of one rule for `t = 1, …, T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionHistory {
    streams: usize,
    frames: Vec<DetectionFrame>,
}

impl DetectionHistory {
    pub fn new(streams: usize) -> Self {
        Self {
            streams,
            frames: Vec::new(),
        }
    }

    pub fn from_frames(streams: usize, frames: Vec<DetectionFrame>) -> Result<Self> {
        let mut h = Self::new(streams);
        for f in frames {
            h.push(f)?;
        }
        Ok(h)
    }

    /// Append the next frame; ticks must be contiguous from 1.
    pub fn push(&mut self, frame: DetectionFrame) -> Result<()> {
        let expected = self.frames.len() as u64 + 1;
        if frame.t != expected {
            return Err(Error::input(format!(
                "expected frame for t = {expected}, got t = {}",
                frame.t
            )));
        }
        if frame.streams != self.streams {
            return Err(Error::input(format!(
                "frame has {} streams, history has {}",
                frame.streams, self.streams
            )));
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn horizon(&self) -> u64 {
        self.frames.len() as u64
    }

    pub fn frames(&self) -> &[DetectionFrame] {
        &self.frames
    }

    pub fn frame(&self, t: u64) -> Result<&DetectionFrame> {
        if t == 0 || t > self.horizon() {
            return Err(Error::input(format!(
                "t = {t} outside the history range 1..={}",
                self.horizon()
            )));
        }
        Ok(&self.frames[t as usize - 1])
    }
}

/// Number of selected streams that are still pre-change at the frame's tick.
pub fn false_detections(frame: &DetectionFrame, xi: &ChangeConfiguration) -> usize {
    frame
        .selected
        .iter()
        .filter(|&&k| xi.is_null_at(k, frame.t))
        .count()
}

pub fn fdp(frame: &DetectionFrame, xi: &ChangeConfiguration) -> f64 {
    let total = frame.selected.len();
    false_detections(frame, xi) as f64 / total.max(1) as f64
}

pub fn ccd(frame: &DetectionFrame, xi: &ChangeConfiguration) -> f64 {
    let changed = xi.changed_count(frame.t);
    let hits = frame
        .selected
        .iter()
        .filter(|&&k| !xi.is_null_at(k, frame.t))
        .count();
    hits as f64 / changed.max(1) as f64
}

/// Global false alarm: the global decision fired while no stream had changed.
///
/// Rules other than e-d-GNT count as firing globally when they select
/// anything.
pub fn ger(frame: &DetectionFrame, xi: &ChangeConfiguration) -> bool {
    frame.fired() && xi.null_count(frame.t) == xi.streams()
}

fn checked<'a>(
    history: &'a DetectionHistory,
    xi: &ChangeConfiguration,
    t: u64,
) -> Result<&'a DetectionFrame> {
    if history.streams() != xi.streams() {
        return Err(Error::input(format!(
            "history has {} streams, configuration has {}",
            history.streams(),
            xi.streams()
        )));
    }
    history.frame(t)
}

pub fn fdp_at(history: &DetectionHistory, xi: &ChangeConfiguration, t: u64) -> Result<f64> {
    Ok(fdp(checked(history, xi, t)?, xi))
}

pub fn pfer_at(history: &DetectionHistory, xi: &ChangeConfiguration, t: u64) -> Result<usize> {
    Ok(false_detections(checked(history, xi, t)?, xi))
}

pub fn fwer_indicator_at(history: &DetectionHistory, xi: &ChangeConfiguration, t: u64) -> Result<bool> {
    Ok(pfer_at(history, xi, t)? >= 1)
}

pub fn ger_indicator_at(history: &DetectionHistory, xi: &ChangeConfiguration, t: u64) -> Result<bool> {
    Ok(ger(checked(history, xi, t)?, xi))
}

pub fn ccd_at(history: &DetectionHistory, xi: &ChangeConfiguration, t: u64) -> Result<f64> {
    Ok(ccd(checked(history, xi, t)?, xi))
}

/// Detections counted by `τ*_η`: all of them, or only false ones.
pub fn counted_detections(frame: &DetectionFrame, xi: &ChangeConfiguration, false_only: bool) -> usize {
    if false_only {
        false_detections(frame, xi)
    } else {
        frame.selected.len()
    }
}

/// First `t` with at least `η` (false) detections; `None` if the history
/// never gets there.
pub fn tau_star(
    history: &DetectionHistory,
    xi: &ChangeConfiguration,
    eta: usize,
    false_only: bool,
) -> Result<Option<u64>> {
    if eta == 0 || eta > history.streams() {
        return Err(Error::input(format!(
            "eta must lie in 1..={}, got {eta}",
            history.streams()
        )));
    }
    if history.streams() != xi.streams() {
        return Err(Error::input("history and configuration disagree on the stream count"));
    }
    Ok(history
        .frames()
        .iter()
        .find(|f| counted_detections(f, xi, false_only) >= eta)
        .map(|f| f.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedures::RuleKind;

    fn frame(t: u64, selected: &[usize], streams: usize) -> DetectionFrame {
        DetectionFrame {
            t,
            rule: RuleKind::EdBh,
            streams,
            k_star: selected.len(),
            selected: selected.to_vec(),
            global: None,
        }
    }

    fn history(selected: &[&[usize]], streams: usize) -> DetectionHistory {
        let frames = selected
            .iter()
            .enumerate()
            .map(|(i, s)| frame(i as u64 + 1, s, streams))
            .collect();
        DetectionHistory::from_frames(streams, frames).unwrap()
    }

    #[test]
    fn examples() {
        let mut sel: Vec<&[usize]> = vec![&[]; 9];
        sel.push(&[0, 1]);
        let h = history(&sel, 3);
        let xi = ChangeConfiguration::new(vec![None, Some(5), None]).unwrap();
        assert_eq!(fdp_at(&h, &xi, 10).unwrap(), 0.5);
        assert_eq!(pfer_at(&h, &xi, 10).unwrap(), 1);
        assert!(fwer_indicator_at(&h, &xi, 10).unwrap());
        assert_eq!(fdp_at(&h, &xi, 3).unwrap(), 0.0);
        assert!(fdp_at(&h, &xi, 11).is_err());
        assert!(fdp_at(&h, &xi, 0).is_err());

        let g = ChangeConfiguration::global_null(3);
        assert_eq!(fdp_at(&h, &g, 10).unwrap(), 1.0);
        assert!(ger_indicator_at(&h, &g, 10).unwrap());
        assert!(!ger_indicator_at(&h, &xi, 10).unwrap());

        let one: &[usize] = &[1];
        let two = history(&[one; 5], 2);
        assert!(fwer_indicator_at(&two, &ChangeConfiguration::global_null(2), 5).unwrap());
    }

    #[test]
    fn ccd_examples() {
        let mut sel: Vec<&[usize]> = vec![&[]; 9];
        sel.push(&[0]);
        let h = history(&sel, 2);
        let xi = ChangeConfiguration::new(vec![Some(5), Some(7)]).unwrap();
        assert_eq!(ccd_at(&h, &xi, 10).unwrap(), 0.5);
        assert_eq!(ccd_at(&h, &xi, 4).unwrap(), 0.0);
    }

    #[test]
    fn tau_star_scans() {
        let mut sel: Vec<&[usize]> = vec![&[]; 6];
        sel.push(&[2]);
        sel.push(&[0, 2]);
        let h = history(&sel, 3);
        let g = ChangeConfiguration::global_null(3);
        assert_eq!(tau_star(&h, &g, 1, false).unwrap(), Some(7));
        assert_eq!(tau_star(&h, &g, 2, false).unwrap(), Some(8));
        assert_eq!(tau_star(&h, &g, 3, false).unwrap(), None);
        assert!(tau_star(&h, &g, 0, false).is_err());
        let xi = ChangeConfiguration::new(vec![None, None, Some(3)]).unwrap();
        assert_eq!(tau_star(&h, &xi, 1, true).unwrap(), Some(8));
    }

    #[test]
    fn history_must_be_contiguous() {
        let mut h = DetectionHistory::new(2);
        assert!(h.push(frame(2, &[], 2)).is_err());
        assert!(h.push(frame(1, &[], 3)).is_err());
        h.push(frame(1, &[], 2)).unwrap();
        assert_eq!(h.horizon(), 1);
    }
}
