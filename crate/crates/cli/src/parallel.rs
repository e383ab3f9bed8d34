//! Index-ordered parallel map over scoped threads.
//!
//! Work items are claimed from a shared counter; results are put back in
//! index order, so the output never depends on the thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Result};

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "TRINET_THREADS";

/// Worker count from [`THREADS_ENV`]; 1 when unset.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => bail!("{THREADS_ENV} must be a positive integer, got {s:?}"),
        },
    }
}

pub fn par_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::with_capacity(n));
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                done.lock().unwrap().push((i, r));
            });
        }
    });
    let mut done = done.into_inner().unwrap();
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn order_is_independent_of_threads(n in 0usize..40, threads in 1usize..6) {
            let seq: Vec<usize> = (0..n).map(|i| i * i + 1).collect();
            prop_assert_eq!(par_map(n, threads, |i| i * i + 1), seq);
        }
    }
}
