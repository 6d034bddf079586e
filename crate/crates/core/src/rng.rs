//! Counter-based random substreams.
//!
//! Every random draw in a simulation is keyed by `(seed, replication, stream,
//! tick, channel)`. Each key seeds its own small generator, so the data seen at
//! a tick never depends on evaluation order, thread count, or how much
//! randomness any other stream or tick consumed.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// What a substream is used for. Distinct channels at the same
/// `(replication, stream, tick)` are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Channel {
    /// Observation noise.
    Observation = 0,
    /// Conformal tie-breaking uniform θ.
    Theta = 1,
    /// Factor shared by all streams at a tick (cross-sectional dependence).
    Common = 2,
}

/// Address of one substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubstreamKey {
    pub replication: u64,
    pub stream: u64,
    pub tick: u64,
    pub channel: Channel,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    splitmix(state ^ splitmix(word))
}

/// Deterministic generator for one substream.
pub fn substream(seed: u64, key: SubstreamKey) -> Xoshiro256PlusPlus {
    let mut h = splitmix(seed);
    h = absorb(h, key.replication);
    h = absorb(h, key.stream);
    h = absorb(h, key.tick);
    h = absorb(h, key.channel as u64);
    Xoshiro256PlusPlus::seed_from_u64(h)
}

/// Uniform draw in the open interval (0, 1) from a single substream.
pub fn uniform_open(seed: u64, key: SubstreamKey) -> f64 {
    use rand::Rng;
    let mut rng = substream(seed, key);
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
