use fracseg_core::ffm::{normalize, FfmParams, FfmPlan};
use fracseg_core::{BinaryMask, FloatMap, GrayImage, Grid, Result};
use rayon::prelude::*;
use rayon::ThreadPool;

/// FFM evaluation on a dedicated thread pool.
///
/// Sample rows are computed independently and written to disjoint slots, so the
/// output is bit-identical to the single-threaded path for any thread count.
pub struct Engine {
    pool: ThreadPool,
}

impl Engine {
    /// `threads == 0` uses one thread per available core.
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("fracseg-{i}"))
            .build()
            .expect("thread pool");
        Self { pool }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn compute_ffm_raw(&self, image: &GrayImage, params: &FfmParams) -> Result<FloatMap> {
        let plan = FfmPlan::new(*params)?;
        let padded = plan.prepare(image)?;
        let (width, height) = image.dims();
        let (cols, rows) = plan.sample_dims(width, height);
        self.pool.install(|| {
            let mut samples = vec![0.0; cols * rows];
            samples
                .par_chunks_mut(cols)
                .enumerate()
                .try_for_each(|(row, out)| plan.compute_sample_row(&padded, row, out))?;
            let mut data = vec![0.0; width * height];
            data.par_chunks_mut(width).enumerate().for_each(|(y, out)| plan.expand_row(&samples, cols, rows, y, out));
            Grid::from_vec(width, height, data)
        })
    }

    pub fn compute_ffm(&self, image: &GrayImage, params: &FfmParams) -> Result<FloatMap> {
        self.compute_ffm_raw(image, params).map(|raw| normalize(&raw))
    }

    pub fn compute_ffm_label(&self, mask: &BinaryMask, params: &FfmParams) -> Result<FloatMap> {
        params.validate()?;
        self.compute_ffm(&mask.to_gray(params.gray_levels)?, params)
    }

    /// Runs `f` inside the engine's pool, e.g. for file-level parallelism.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(0)
    }
}
