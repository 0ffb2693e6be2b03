//! Element-loop helpers. With the `parallel` feature the loops run on the rayon
//! pool; otherwise they run sequentially. Reductions use fixed-size chunks that
//! are combined in index order, so results are bit-identical for any thread count.

const CHUNK: usize = 512;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Fold each fixed chunk sequentially, then combine chunk results in order.
fn chunked<T, F, G>(n: usize, init: T, f: F, combine: G) -> T
where
    T: Send + Sync + Copy,
    F: Fn(usize) -> T + Sync + Send,
    G: Fn(T, T) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).fold(init, |acc, i| combine(acc, f(i)))
    });
    partial.into_iter().fold(init, &combine)
}

/// Deterministic `Σ f(i)`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunked(n, 0.0, f, |a, b| a + b)
}

/// `max f(i)`, NaN-propagating.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunked(n, f64::NEG_INFINITY, f, |a: f64, b: f64| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    })
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.len(), |i| a[i] * b[i])
}

/// `out[i] = f(i)` in place.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
}

/// Configure the global pool from `ERRCTL_THREADS` if set. No-op without `parallel`.
pub fn init_threads_from_env() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("ERRCTL_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
