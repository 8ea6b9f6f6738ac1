//! Data-parallel dispatch for per-worker and per-row loops.
//!
//! With the `parallel` feature (the default) the indexed map runs on the
//! rayon pool; without it the sequential path is used. Results are always
//! collected in index order and every closure draws randomness only from
//! its own index-derived stream, so both paths produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every item, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    items
        .par_iter()
        .enumerate()
        .map(|(i, item)| f(i, item))
        .collect()
}

/// Applies `f` to every item, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    map_indexed_seq(items, f)
}

/// Sequential reference path, available regardless of features.
pub fn map_indexed_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    items
        .iter()
        .enumerate()
        .map(|(i, item)| f(i, item))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = map_indexed(&items, |i, x| i as u64 * 1000 + x);
        let expected: Vec<u64> = (0..100).map(|i| i * 1000 + i).collect();
        assert_eq!(out, expected);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let items: Vec<f64> = (0..257).map(|i| i as f64 * 0.31).collect();
        let f = |i: usize, x: &f64| (x * 1.7).sin() + i as f64;
        assert_eq!(map_indexed(&items, f), map_indexed_seq(&items, f));
    }
}
