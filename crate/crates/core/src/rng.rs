//! Seed derivation for the independent random streams of a run.
//!
//! Every consumer of randomness draws from its own ChaCha stream whose seed is
//! derived from the scenario seed and a stream tag, so adding draws to one
//! stream never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Topology,
    Attributes,
    Churn,
    Owners,
    Piggyback,
    Strategy,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Topology => 0x746f_706f,
            Stream::Attributes => 0x6174_7472,
            Stream::Churn => 0x6368_7572,
            Stream::Owners => 0x6f77_6e72,
            Stream::Piggyback => 0x7069_6767,
            Stream::Strategy => 0x7374_7261,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `stream` under scenario `seed`, further split by `index`
/// (node id, strategy ordinal, ...).
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ stream.tag()) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, stream, index))
}
