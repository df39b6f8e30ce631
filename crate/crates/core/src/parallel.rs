use rayon::ThreadPoolBuilder;

/// Runs `job` inside a dedicated rayon pool of `threads` workers (0 = rayon's
/// default). Results never depend on the worker count: callers only use
/// order-preserving `collect`s over independent work items.
pub(crate) fn run_with_threads<R, F>(threads: usize, job: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        // Pool creation only fails when the OS refuses to spawn threads; the
        // global pool gives the same results.
        Err(_) => job(),
    }
}
