//! Data-parallel loop helpers.
//!
//! With the `parallel` feature the helpers fan out over rayon; without it they
//! run the same loops sequentially. Reductions always go through fixed-size
//! chunks summed in index order, so results are bit-identical regardless of
//! thread count or feature selection.

/// Work items per reduction chunk. Changing this changes rounding.
pub const CHUNK: usize = 1024;

/// Loops shorter than this stay on the calling thread.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 4096;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Like [`map_collect`] but without the size threshold; meant for coarse
/// independent jobs (restarts, sources, sweep cells).
pub fn map_jobs<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        return (0..n).into_par_iter().map(f).collect();
    }
    #[allow(unreachable_code)]
    (0..n).map(f).collect()
}

/// Fill `out[i] = f(i)`.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
    }
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Deterministic `Σ_{i<n} f(i)`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            let parts: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
            return parts.iter().sum();
        }
    }
    let mut total = 0.0;
    for c in 0..chunks {
        total += partial(c);
    }
    total
}

/// Deterministic maximum of `f(i)`; `f64::NEG_INFINITY` for `n == 0`.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            return (0..n)
                .into_par_iter()
                .map(f)
                .reduce(|| f64::NEG_INFINITY, f64::max);
        }
    }
    (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Whether the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Run `f` on a pool of `threads` workers; `0` keeps the global pool.
/// Sequential builds just call `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
        {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}
