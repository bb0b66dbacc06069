//! Named random streams derived from one master seed.
//!
//! Every stage draws from `(master, stream name, index)`, so any stage or
//! any single group inside a stage can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const SYNTHESIS: &str = "synthesis";
pub const BASELINE: &str = "baseline";
pub const SAMPLING: &str = "sampling";
pub const ACCURACY_BASELINE: &str = "accuracy-baseline";
pub const SHIFT_BASELINE: &str = "shift-baseline";

pub fn stream_rng(master: u64, stream: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stream.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&hasher.finalize());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(index);
    rng
}
