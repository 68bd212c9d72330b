//! Deterministic random streams.
//!
//! Every Monte-Carlo consumer receives a [`Stream`] derived from a master seed
//! and a path of labels. Work is cut into fixed-size chunks, each with its own
//! ChaCha stream id, so results do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

/// Number of samples handled by one chunk stream.
pub const CHUNK: usize = 2048;

/// A node in the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix(seed) }
    }

    /// Child stream keyed by a label; distinct labels give independent streams.
    pub fn child(&self, label: &str) -> Self {
        // FNV-1a over the label, folded into the parent key
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        Self { key: splitmix(self.key ^ splitmix(h)) }
    }

    pub fn index(&self, i: u64) -> Self {
        Self { key: splitmix(self.key.wrapping_add(splitmix(i ^ 0x5851_f42d_4c95_7f2d))) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn rng(&self) -> Rng {
        Rng::seed_from_u64(self.key)
    }
}

/// Runs `n` draws split into chunk streams, in parallel, returning results in
/// draw order. The output is identical for any thread count.
pub fn par_draws<T, F>(stream: Stream, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.index(c as u64).rng();
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// Fallible variant of [`par_draws`]; the first error in draw order wins.
pub fn try_par_draws<T, E, F>(stream: Stream, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut Rng) -> Result<T, E> + Sync,
{
    par_draws(stream, n, f).into_iter().collect()
}
