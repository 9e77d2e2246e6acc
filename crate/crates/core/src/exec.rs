//! Execution mode for data-parallel inner loops.

/// Whether row-wise loops may fan out over the rayon pool.
///
/// `Parallel` silently degrades to sequential execution when the crate is
/// built without the `parallel` feature. Both modes produce identical
/// output; reductions are always performed in index order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

/// Below this many items the overhead of the pool dominates.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 64;

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and collects the results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && n >= MIN_PARALLEL_LEN {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to every element of `items` (with its index) in place.
    pub fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && items.len() >= MIN_PARALLEL_LEN {
            use rayon::prelude::*;
            items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = Exec::Sequential.map_range(1000, |i| (i * i) % 97);
        let par = Exec::Parallel.map_range(1000, |i| (i * i) % 97);
        assert_eq!(seq, par);

        let mut a = vec![0usize; 500];
        let mut b = vec![0usize; 500];
        Exec::Sequential.for_each_mut(&mut a, |i, x| *x = i * 3);
        Exec::Parallel.for_each_mut(&mut b, |i, x| *x = i * 3);
        assert_eq!(a, b);
    }
}
