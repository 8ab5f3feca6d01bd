//! Worker-count setting shared by the parallel loops.

use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};

static THREADS: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static OVERRIDE: Cell<usize> = const { Cell::new(0) };
}

/// Caps worker threads process-wide. `0` restores the default
/// (`BFNET_THREADS`, else 1).
pub fn set_num_threads(n: usize) {
    THREADS.store(n, Ordering::Relaxed);
}

pub fn num_threads() -> usize {
    let o = OVERRIDE.with(|c| c.get());
    if o > 0 {
        return o;
    }
    match THREADS.load(Ordering::Relaxed) {
        0 => std::env::var("BFNET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|&n| n > 0)
            .unwrap_or(1),
        n => n,
    }
}

/// Runs `f` with the calling thread's worker count set to `n`.
pub fn with_threads<T>(n: usize, f: impl FnOnce() -> T) -> T {
    let prev = OVERRIDE.with(|c| c.replace(n));
    let out = f();
    OVERRIDE.with(|c| c.set(prev));
    out
}

/// Evaluates `f` on consecutive `chunk`-sized ranges of `0..n` using up to
/// `num_threads()` workers. Results come back in range order, so any fold
/// over them is independent of the worker count.
pub(crate) fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let ranges: Vec<_> = (0..n).step_by(chunk).map(|s| s..(s + chunk).min(n)).collect();
    let workers = num_threads().min(ranges.len()).max(1);
    if workers == 1 {
        return ranges.into_iter().map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..ranges.len()).map(|_| None).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        if k >= ranges.len() {
                            break done;
                        }
                        done.push((k, f(ranges[k].clone())));
                    }
                })
            })
            .collect();
        for h in handles {
            for (k, v) in h.join().expect("worker panicked") {
                slots[k] = Some(v);
            }
        }
    });
    slots.into_iter().map(|v| v.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_keep_order() {
        let serial = with_threads(1, || map_chunks(103, 10, |r| r.sum::<usize>()));
        let threaded = with_threads(4, || map_chunks(103, 10, |r| r.sum::<usize>()));
        assert_eq!(serial, threaded);
        assert_eq!(serial.len(), 11);
        assert_eq!(serial.iter().sum::<usize>(), 103 * 102 / 2);
        assert!(map_chunks(0, 4, |r| r.len()).is_empty());
    }
}
