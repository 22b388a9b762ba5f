use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal::inverse_normal_cdf;

/// Well-known lane numbers. Different lanes of the same `(seed, index)` are
/// independent streams, so one replicate can drive several processes.
pub mod lanes {
    pub const DRIVER: u64 = 0;
    pub const INTEGRAND: u64 = 1;
    pub const PILOT: u64 = 2;
    pub const REFERENCE: u64 = 3;
    pub const PROXY: u64 = 4;
}

const DOMAIN_TAG: &[u8; 8] = b"fracmart";

/// Counter-based random stream keyed by `(seed, index)`.
///
/// Backed by ChaCha8 with the 64-bit stream id set to the replicate index, so
/// the output is a pure function of the key and never depends on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    seed: u64,
    index: u64,
    lane: u64,
}

impl RandomStream {
    pub fn new(seed: u64, index: u64) -> Self {
        RandomStream {
            seed,
            index,
            lane: lanes::DRIVER,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// An independent sibling stream for the same replicate.
    pub fn lane(&self, lane: u64) -> Self {
        RandomStream { lane, ..*self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.lane.to_le_bytes());
        key[16..24].copy_from_slice(DOMAIN_TAG);
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.index);
        rng
    }

    pub fn normals(&self) -> Normals {
        Normals { rng: self.rng() }
    }

    /// Uniforms on the open interval `(0, 1)`.
    pub fn uniforms(&self) -> impl Iterator<Item = f64> {
        let mut rng = self.rng();
        std::iter::repeat_with(move || open_unit(rng.next_u64()))
    }
}

#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal draws by inversion of the uniform output.
pub struct Normals {
    rng: ChaCha8Rng,
}

impl Normals {
    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            *x = inverse_normal_cdf(open_unit(self.rng.next_u64()));
        }
    }
}

impl Iterator for Normals {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(inverse_normal_cdf(open_unit(self.rng.next_u64())))
    }
}
