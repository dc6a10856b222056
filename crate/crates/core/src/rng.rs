//! Seeded random substreams.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the scenario seed
//! and selected by a 64-bit stream id `(domain << 56) | (task << 16) | lf`, so
//! that any task or labeling function can be regenerated independently and
//! parallel schedules produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a substream; occupies the top byte of the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Truth = 1,
    Lf = 2,
    Graph = 3,
    Parameters = 4,
    LocalSearch = 5,
    Shuffle = 6,
}

/// Stream for `(domain, task, lf)`. `task` must fit in 40 bits and `lf` in 16.
pub fn substream(seed: u64, domain: Domain, task: u64, lf: u64) -> ChaCha8Rng {
    debug_assert!(task < 1 << 40 && lf < 1 << 16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (task << 16) | lf);
    rng
}
