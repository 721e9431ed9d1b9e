//! Data-parallel helpers. With the `parallel` feature these run on rayon,
//! otherwise sequentially; results are identical either way.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    /// Parallel when compiled with the `parallel` feature.
    pub fn default_mode() -> ExecMode {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Order-preserving map in the default mode.
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    map_with(ExecMode::default_mode(), items, f)
}

pub fn map_with<T: Sync, R: Send>(mode: ExecMode, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// True iff `f` holds for every item; stops early in sequential mode.
pub fn all_with<T: Sync>(mode: ExecMode, items: &[T], f: impl Fn(&T) -> bool + Sync + Send) -> bool {
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            items.par_iter().all(f)
        }
        _ => items.iter().all(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let v: Vec<u64> = (0..1000).collect();
        let a = map_with(ExecMode::Sequential, &v, |x| x * x);
        let b = map_with(ExecMode::Parallel, &v, |x| x * x);
        assert_eq!(a, b);
        assert!(all_with(ExecMode::Parallel, &v, |x| *x < 1000));
    }
}
