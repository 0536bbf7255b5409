//! Counter-based seeding.
//!
//! Every trial draws from its own ChaCha stream keyed by the master seed and
//! selected by the trial index, so the stream for trial `t` never depends on
//! which other trials ran or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Generator for `(master, stream)`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// The seed handed to trial `index` of a run keyed by `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    stream_rng(master, index).next_u64()
}
