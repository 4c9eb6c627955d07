//! Data-parallel harness for the embarrassingly parallel loops (restart
//! searches, resolvent sampling, corpus batches).
//!
//! With the default `parallel` feature the indexed map runs on rayon; without
//! it the same code runs sequentially. Results are collected in index order
//! and every work item derives its randomness from its own index, so both
//! modes produce bit-identical output. `map_indexed_seq` is always available
//! as the sequential baseline for the benchmark suite.

/// Map `f` over `0..n`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Pick the best item by a strict `(score, index)` order: larger score wins,
/// ties break toward the smaller index. Deterministic under any schedule.
pub fn argmax_by_score<T>(items: Vec<(f64, T)>) -> Option<(f64, T)> {
    let mut best: Option<(f64, usize, T)> = None;
    for (idx, (score, item)) in items.into_iter().enumerate() {
        let better = match &best {
            None => true,
            Some((bs, bi, _)) => score > *bs || (score == *bs && idx < *bi),
        };
        if better {
            best = Some((score, idx, item));
        }
    }
    best.map(|(s, _, t)| (s, t))
}
