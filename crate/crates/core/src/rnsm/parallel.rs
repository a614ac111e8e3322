use rayon::prelude::*;

/// Maps `f` over `0..n` with per-worker state from `init`. `workers <= 1`
/// runs in order on the calling thread; output order is always `0..n`.
pub(crate) fn map_nodes<T, S, I, F>(workers: usize, n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    if workers <= 1 || n < 2 {
        let mut state = init();
        return (0..n).map(|i| f(&mut state, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map_init(&init, |s, i| f(s, i))
            .collect()
    })
}
