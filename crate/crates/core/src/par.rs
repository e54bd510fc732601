//! Index-parallel map with a sequential fallback. Results come back in index
//! order either way, so seeded runs agree across backends.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_indexed_sequential(n, f)
}

pub(crate) fn map_indexed_sequential<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

/// Generator for task `index` of a batch seeded with `seed`: the seed picks
/// the ChaCha key and the index picks the stream, so tasks never overlap.
pub(crate) fn task_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
