//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it every entry point runs on the calling thread. Results are
//! always returned in input order.

/// Maps `f` over `items` on `threads` workers. `threads == 0` uses the
/// global pool, `threads == 1` runs inline.
pub fn map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads != 1 && items.len() > 1 {
            return map_parallel(items, threads, f);
        }
    }
    let _ = threads;
    map_sequential(items, f)
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if threads == 0 {
        return items.par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
        Err(e) => {
            log::warn!("could not start a {threads}-thread pool ({e}); using the global pool");
            items.par_iter().map(f).collect()
        }
    }
}

/// True when this build carries the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_sequential(&xs, |x| x * x);
        for threads in [0, 1, 4] {
            assert_eq!(map(&xs, threads, |x| x * x), seq);
        }
        assert!(map(&[] as &[u64], 4, |x| *x).is_empty());
    }
}
