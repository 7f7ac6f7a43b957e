//! Replica-parallel execution with deterministic, index-ordered results.

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::ThreadPool;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "COUPLED_LEVY_THREADS";

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

pub fn threads() -> usize {
    pool().current_num_threads()
}

/// `f(state, i)` for `i in 0..n`, with one `init()` state per work chunk.
/// Output order follows `i`, whatever the scheduling.
pub fn map_replicas<S, T, I, F>(n: u64, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    pool().install(|| (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect())
}

/// Fallible [`map_replicas`]; the error of the lowest failing index wins.
pub fn try_map_replicas<S, T, E, I, F>(n: u64, init: I, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T, E> + Sync + Send,
{
    map_replicas(n, init, f).into_iter().collect()
}

/// Runs independent jobs on the pool, keeping their order.
pub fn map_jobs<J: Sync, T: Send>(jobs: &[J], f: impl Fn(&J) -> T + Sync + Send) -> Vec<T> {
    pool().install(|| jobs.par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        let v = map_replicas(
            10_000,
            || 0u64,
            |calls, i| {
                *calls += 1;
                i * 2
            },
        );
        assert!(v.iter().enumerate().all(|(i, x)| *x == 2 * i as u64));
    }

    #[test]
    fn first_error_wins() {
        let r: Result<Vec<u64>, u64> = try_map_replicas(1000, || (), |_, i| if i % 100 == 37 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(37));
    }
}
