use super::generator::{generate_batch, StreamGeneratorSpec};
use crate::error::Result;
use crate::evidence::{DetectorSpec, StreamDetector};
use crate::rng::{uniform_open, Channel, SubstreamKey};

/// Conformal tie-breaking draw for one stream at one tick.
pub fn theta(seed: u64, replication: u64, stream: usize, t: u64) -> f64 {
    let key = SubstreamKey {
        replication,
        stream: stream as u64,
        tick: t,
        channel: Channel::Theta,
    };
    uniform_open(seed, key)
}

/// One detector per stream, fed from a generator.
pub struct DetectorBank {
    detectors: Vec<StreamDetector>,
    uses_theta: bool,
    values: Vec<f64>,
}

impl DetectorBank {
    pub fn new(spec: DetectorSpec, streams: usize) -> Result<Self> {
        Ok(Self {
            detectors: (0..streams)
                .map(|_| StreamDetector::new(spec))
                .collect::<Result<_>>()?,
            uses_theta: spec.uses_theta(),
            values: vec![0.0; streams],
        })
    }

    /// Feed one cross-section; `θ` draws are keyed like generated data.
    pub fn observe(&mut self, x: &[f64], seed: u64, replication: u64, t: u64) -> Result<&[f64]> {
        for (s, det) in self.detectors.iter_mut().enumerate() {
            let th = if self.uses_theta {
                theta(seed, replication, s, t)
            } else {
                0.5
            };
            self.values[s] = det.observe(x[s], th)?;
        }
        Ok(&self.values)
    }

    /// Generate tick `t` and feed it.
    pub fn step(&mut self, gen: &StreamGeneratorSpec, seed: u64, replication: u64, t: u64) -> Result<&[f64]> {
        let x = generate_batch(gen, seed, replication, t);
        self.observe(&x, seed, replication, t)
    }
}
