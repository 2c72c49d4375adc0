//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these fan work out over rayon;
//! without it they run plain loops. Callers only ever write to disjoint
//! output regions and all reductions happen in index order afterwards,
//! so both modes produce bit-identical results. The runtime switch
//! [`set_force_sequential`] exists so benches and equivalence tests can
//! compare both paths inside one binary.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path even when compiled with `parallel`.
pub fn set_force_sequential(force: bool) {
    FORCE_SEQUENTIAL.store(force, Ordering::SeqCst);
}

/// True when work will actually be distributed over rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Run `f(i)` for every `i in 0..n`.
pub fn for_each_index<F>(n: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        (0..n).into_par_iter().for_each(f);
        return;
    }
    for i in 0..n {
        f(i);
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_index<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Apply `f(chunk_index, chunk)` to consecutive `chunk_len` slices of `data`.
///
/// Chunks are disjoint, so the parallel and sequential paths write the
/// same bytes.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk_len > 0, "chunk_len must be positive");
    #[cfg(feature = "parallel")]
    if is_parallel() {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    for (i, c) in data.chunks_mut(chunk_len).enumerate() {
        f(i, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_index_order() {
        let v = map_index(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }

    #[test]
    fn chunked_writes_match_sequential() {
        let mut a = vec![0u64; 64];
        let mut b = vec![0u64; 64];
        for_each_chunk_mut(&mut a, 8, |i, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = (i * 31 + j) as u64;
            }
        });
        set_force_sequential(true);
        for_each_chunk_mut(&mut b, 8, |i, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = (i * 31 + j) as u64;
            }
        });
        set_force_sequential(false);
        assert_eq!(a, b);
    }
}
