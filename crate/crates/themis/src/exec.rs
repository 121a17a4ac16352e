use rayon::prelude::*;
use themis_core::scenario::{PipelineError, YearExecutor, YearResult};

/// Runs horizon years on a rayon pool; results keep year order, and every
/// sample draws from its own stream, so output does not depend on threads.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` uses rayon's default width.
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Ok(Self { pool: b.build()? })
    }
}

impl YearExecutor for RayonExecutor {
    fn map_years(
        &self,
        n: usize,
        job: &(dyn Fn(usize) -> Result<YearResult, PipelineError> + Sync),
    ) -> Vec<Result<YearResult, PipelineError>> {
        self.pool.install(|| (0..n).into_par_iter().map(job).collect())
    }
}
