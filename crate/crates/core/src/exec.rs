//! Data-parallel map helpers. With the `parallel` feature the work is spread
//! over the rayon pool; without it the same code runs sequentially. Outputs
//! are always collected in input order, so callers that reduce the results
//! in index order produce bit-identical values at any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Result order matches input order.
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over an index range, in parallel when enabled. Result order is
/// index order.
pub fn maybe_par_map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference path, kept unconditionally for benches and for
/// determinism tests that compare it against the parallel path.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential index map, mirror of [`maybe_par_map_indices`].
pub fn seq_map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree_in_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = maybe_par_map(&items, |x| x * x + 1);
        let b = seq_map(&items, |x| x * x + 1);
        assert_eq!(a, b);
        let c = maybe_par_map_indices(1000, |i| i as u64 * 3);
        let d = seq_map_indices(1000, |i| i as u64 * 3);
        assert_eq!(c, d);
    }
}
