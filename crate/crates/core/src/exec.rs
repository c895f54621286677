//! Parallel/sequential dispatch for the data-parallel inner loops.
//!
//! Validators and transfer evaluate many independent (arity, monoid element,
//! basis tuple) tasks; `map_collect` fans them out over rayon when the
//! `parallel` feature (default) is enabled and falls back to a plain
//! sequential map otherwise. Results keep the input order, so reports are
//! identical under both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_collect<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Always-sequential variant, kept available for benchmarking the two paths
/// against each other regardless of feature selection.
pub fn map_collect_seq<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Cartesian power of `0..n` with exponent `k`, in lexicographic order.
pub fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for i in 0..n {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}
