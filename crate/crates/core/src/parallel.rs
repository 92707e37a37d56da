//! Index-ordered parallel map with a sequential fallback.
//!
//! Results always come back in index order and every item derives its own
//! random stream from its index, so output does not depend on scheduling or
//! on the number of workers. Without the `parallel` feature everything runs
//! on the calling thread.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// `(0..len).map(|i| f(&mut state, i))`, with one `state` per worker.
pub fn map_indexed<S, T, I, F>(exec: Execution, len: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len)
                .into_par_iter()
                .map_init(&init, |s, i| f(s, i))
                .collect()
        }
        _ => {
            let mut state = init();
            (0..len).map(|i| f(&mut state, i)).collect()
        }
    }
}

/// Runs `op` on a pool with `workers` threads; `None` uses the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        #[cfg(feature = "parallel")]
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(op))
        }
        #[cfg(not(feature = "parallel"))]
        Some(0) => Err(Error::ThreadPool("worker count must be ≥ 1".into())),
        _ => Ok(op()),
    }
}

pub fn available_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_results_under_both_modes() {
        let f = |buf: &mut Vec<usize>, i: usize| {
            buf.push(i);
            i * i
        };
        let seq = map_indexed(Execution::Sequential, 1000, Vec::new, f);
        let par = with_workers(Some(4), || {
            map_indexed(Execution::Parallel, 1000, Vec::new, f)
        })
        .unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[999], 999 * 999);
    }
}
