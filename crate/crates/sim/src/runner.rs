//! Parallel evaluation of the perceptual pipeline over a dataset.

use rayon::prelude::*;
use stcsf_core::stacks::ImageStack;
use stcsf_core::trial::{run_trial_on_cases, PipelineConfig, PreparedPipeline, TrialCase, TrialPlan, TrialResult};

use crate::fft::RustFft;

/// Observer responses of every stack, in dataset order.
pub fn compute_cases(dataset: &[ImageStack], pipeline: &PreparedPipeline) -> stcsf_core::Result<Vec<TrialCase>> {
    dataset
        .par_iter()
        .map_init(RustFft::new, |fft, s| {
            Ok(TrialCase { id: s.stack_id, label: s.label, responses: pipeline.responses(s, fft)? })
        })
        .collect()
}

/// `run_trial` with the filtering spread over the thread pool. Every stack
/// is processed independently, so the result equals the sequential one.
pub fn run_trial(dataset: &[ImageStack], plan: &TrialPlan, config: &PipelineConfig) -> stcsf_core::Result<TrialResult> {
    let pipeline = PreparedPipeline::new(dataset, config)?;
    let cases = compute_cases(dataset, &pipeline)?;
    run_trial_on_cases(&cases, plan, &pipeline, &config.observer)
}
