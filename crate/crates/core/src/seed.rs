//! Deterministic seed schedule.
//!
//! Every sampling routine takes an explicit `u64` master seed. Work is split
//! into fixed-size chunks and each chunk gets its own generator seeded by
//! [`derive_seed`], so results are identical whether chunks run sequentially
//! or on a thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SeedRng = ChaCha8Rng;

/// Samples drawn per chunk of the seed schedule.
pub const CHUNK: usize = 1024;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `master` and a stream index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED69));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw `count` items, chunked under the seed schedule and run in parallel.
/// Output order matches the iteration index.
pub fn sample_stream<T, F>(count: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeedRng) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, c as u64));
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Fallible variant of [`sample_stream`]; the first error in index order wins.
pub fn try_sample_stream<T, E, F>(count: usize, seed: u64, draw: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut SeedRng) -> Result<T, E> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<T>, E>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, c as u64));
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}
