//! Data-parallel map over the independent node problems of a time slice.
//! With the `parallel` feature (default) the work runs on rayon; without it,
//! sequentially.  Output order always matches input order, so results are
//! identical either way.

#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential variant, kept available under every feature combination
/// so benchmarks can compare the two code paths directly.
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Size the global worker pool.  Effective at most once per process and only
/// before the first parallel call; without the `parallel` feature the request
/// is accepted and ignored.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) -> std::result::Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) -> std::result::Result<(), String> {
    Ok(())
}
