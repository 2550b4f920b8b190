//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] fans work out over
//! the rayon pool. Without it every call runs sequentially, so callers never
//! need their own `cfg` switches.

/// Execution policy for the data-parallel loops in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is by index.
pub fn map_indices<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Calls `f(i, chunk)` for consecutive `chunk_len`-sized pieces of `data`.
pub fn for_each_chunk<T, F>(data: &mut [T], chunk_len: usize, exec: Exec, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
    }
    let _ = exec;
    for (i, c) in data.chunks_mut(chunk_len).enumerate() {
        f(i, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let a = map_indices(100, Exec::Sequential, |i| i * i);
        let b = map_indices(100, Exec::Parallel, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn chunks_visit_everything() {
        let mut v = vec![0usize; 10];
        for_each_chunk(&mut v, 3, Exec::Parallel, |i, c| {
            for x in c.iter_mut() {
                *x = i;
            }
        });
        assert_eq!(v, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
    }
}
