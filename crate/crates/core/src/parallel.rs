use serde::{Deserialize, Serialize};

/// How independent work items (Monte Carlo sets, oracle tuples) are scheduled.
///
/// Results never depend on this choice: every work item owns its own random
/// substream and outputs are reassembled in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon work stealing when the `parallel` feature is enabled; otherwise
    /// falls back to sequential execution.
    #[default]
    Parallel,
}

impl Execution {
    pub(crate) fn map_indexed<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(f).collect(),
            Execution::Parallel => parallel_map(count, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
