//! Reproducible per-sample random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A `(master_seed, domain, sample_index)` triple naming one independent
/// ChaCha stream. The domain separates unrelated uses of the same seed,
/// e.g. deformed samples and GOE samples of one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub domain: u64,
    pub sample_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        RngStream {
            master_seed,
            domain: 0,
            sample_index,
        }
    }

    pub fn with_domain(mut self, domain: u64) -> Self {
        self.domain = domain;
        self
    }

    pub fn index(mut self, sample_index: u64) -> Self {
        self.sample_index = sample_index;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed ^ splitmix64(self.domain.wrapping_add(0x5eed));
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.sample_index);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
