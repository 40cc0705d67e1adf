use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one independent, reproducible pseudo-random sequence.
///
/// The generator is ChaCha8 keyed by `seed` with `stream_id` selecting the
/// ChaCha stream, so distinct ids never overlap and a given pair yields the
/// same sequence on every platform and under any thread schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// Namespaces for derived stream ids, so that e.g. the demand stream of
/// product 3 never coincides with the parameter stream of product 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Instance = 1,
    Emission = 2,
    Demand = 3,
    Misc = 4,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for `(domain, major, minor)`; `major` keeps 24 bits and
    /// `minor` 32 bits.
    pub fn derive(seed: u64, domain: Domain, major: u64, minor: u64) -> Self {
        let id = ((domain as u64) << 56) | ((major & 0xFF_FFFF) << 32) | (minor & 0xFFFF_FFFF);
        Self::new(seed, id)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
