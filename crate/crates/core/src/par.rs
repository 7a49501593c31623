//! Data-parallel loop helpers.
//!
//! With the `parallel` feature the loops run on rayon; otherwise they fall
//! back to sequential iteration. Callers must pass order-independent
//! combine functions so both builds (and any thread count) produce
//! identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `items[i] -> f(i, &items[i])`, preserving order.
pub(crate) fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Map-reduce with an explicit identity. `combine` must be associative and
/// commutative up to the result's equality.
pub(crate) fn map_reduce<T, R, ID, F, C>(items: &[T], identity: ID, map: F, combine: C) -> R
where
    T: Sync,
    R: Send,
    ID: Fn() -> R + Sync + Send,
    F: Fn(usize, &T) -> R + Sync + Send,
    C: Fn(R, R) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items
            .par_iter()
            .enumerate()
            .map(|(i, t)| map(i, t))
            .reduce(identity, combine)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items
            .iter()
            .enumerate()
            .map(|(i, t)| map(i, t))
            .fold(identity(), combine)
    }
}

/// Stable sort by key; the parallel version produces the same order.
pub(crate) fn sort_by_key<T, K, F>(items: &mut [T], key: F)
where
    T: Send,
    K: Ord + Send,
    F: Fn(&T) -> K + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_sort_by_key(key);
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.sort_by_key(key);
    }
}
