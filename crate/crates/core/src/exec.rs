//! Data-parallel execution helpers.
//!
//! With the default `parallel` feature the hot loops fan out over rayon's
//! current thread pool; without it every helper degrades to a plain
//! sequential loop. Results preserve input order in both builds, so output
//! is byte-identical regardless of feature flags or thread counts. The
//! `*_seq` twins are always sequential and exist so benchmarks can compare
//! both paths inside one binary.

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items
        .par_iter()
        .enumerate()
        .map(|(i, item)| f(i, item))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, item)| f(i, item)).collect()
}

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, item)| f(i, item)).collect()
}

/// Apply `f` to every element of a mutable slice.
#[cfg(feature = "parallel")]
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter_mut().for_each(f);
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    items.iter_mut().for_each(f);
}

/// Sequential twin of [`for_each_mut`].
pub fn for_each_mut_seq<T, F>(items: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    items.iter_mut().for_each(f);
}
