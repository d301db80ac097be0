//! Execution policy for embarrassingly parallel work (grid cells, ensembles,
//! batch fits).
//!
//! With the `parallel` feature (default) the work is spread over a rayon pool;
//! without it every policy degrades to a plain sequential loop. Results are
//! always returned in input order, so the output never depends on scheduling.

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "OPTOSPRING_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// `None` uses rayon's default thread count.
    #[default]
    Parallel,
    Workers(usize),
}

impl Execution {
    /// Reads [`WORKERS_ENV`]. Unset or unparsable values fall back to the
    /// default pool; `1` selects the sequential path.
    pub fn from_env() -> Self {
        match std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(0) | None => Execution::Parallel,
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Workers(n),
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Execution::Workers(n) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(*n).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(_) => items.iter().map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&xs, |x| x * x);
        let par = Execution::Parallel.map(&xs, |x| x * x);
        let two = Execution::Workers(2).map(&xs, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq, two);
        assert_eq!(seq[999], 999 * 999);
    }
}
