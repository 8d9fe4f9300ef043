//! Counter-based random stream.
//!
//! A stream is identified by a 64-bit key derived from the seed, a tag and
//! a list of integer indices. Draw `i` of a stream is
//!
//! ```text
//! bits(i)    = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)          (wrapping)
//! uniform(i) = ((bits(i) >> 11) + 0.5) / 2^53                    in (0, 1)
//! normal(i)  = sqrt(-2 ln uniform(2i)) * cos(2π uniform(2i + 1))  (Box–Muller, cosine branch)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. Keys are
//! `k0 = mix64(seed ^ fnv1a64(tag))`, then `k = mix64(k ^ mix64(index + γ))`
//! for each index in order. Any draw can be computed directly from its
//! coordinates, so the generated data does not depend on iteration order.

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    key: u64,
}

impl CounterStream {
    pub fn new(seed: u64, tag: &str, indices: &[u64]) -> Self {
        let key = indices
            .iter()
            .fold(mix64(seed ^ fnv1a64(tag.as_bytes())), |k, &i| {
                mix64(k ^ mix64(i.wrapping_add(GAMMA)))
            });
        CounterStream { key }
    }

    pub fn bits(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)),
        )
    }

    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&self, counter: u64) -> f64 {
        let u1 = self.uniform(2 * counter);
        let u2 = self.uniform(2 * counter + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
