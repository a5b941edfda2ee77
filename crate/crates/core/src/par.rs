//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the `Parallel` policy dispatches onto rayon;
//! without it both policies run sequentially. Results always come back in
//! input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Exec, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.into_iter().map(f).collect()
}

/// Runs two closures, concurrently when allowed.
pub fn join<A, B, RA, RB>(exec: Exec, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            return rayon::join(a, b);
        }
    }
    let _ = exec;
    (a(), b())
}

/// Runs `f` on a pool with `jobs` workers (0 = rayon default).
pub fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if jobs > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(f);
            }
        }
    }
    let _ = jobs;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_under_both_policies() {
        let v: Vec<usize> = (0..100).collect();
        let a = map(Exec::Sequential, v.clone(), |x| x * 3);
        let b = map(Exec::Parallel, v, |x| x * 3);
        assert_eq!(a, b);
        assert_eq!(a[99], 297);
    }
}
