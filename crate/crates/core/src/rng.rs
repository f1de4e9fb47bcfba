//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator whose key is `(seed, realization,
//! domain)` and whose stream id is a counter (the time step for Wiener
//! draws). A draw therefore depends only on its key, never on the order in
//! which realizations or steps are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Wiener = 0,
    InitialData = 1,
    Corpus = 2,
}

pub fn stream(seed: u64, realization: u64, domain: Domain, counter: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization.to_le_bytes());
    key[16..24].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(counter);
    rng
}
