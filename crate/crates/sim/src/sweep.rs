//! Trials repeated over one swept viewing or display parameter.

use rayon::prelude::*;
use serde::Serialize;
use stcsf_core::stacks::ImageStack;
use stcsf_core::trial::{pairs_from_stacks, split_dataset, TrialPlan, TrialResult, VarianceEstimator};

use crate::config::{Axis, Config};
use crate::error::{Result, SimError};
use crate::runner;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Everything that is not swept.
    pub fixed: Config,
    /// Evaluate the points concurrently; the rows are identical either way.
    pub parallel: bool,
}

impl SweepSpec {
    pub fn from_config(config: &Config) -> Self {
        Self {
            axis: config.sweep.axis,
            values: config.sweep.values.clone(),
            fixed: config.clone(),
            parallel: config.sweep.parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(SimError::Input("sweep has no values".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Input("sweep values must be finite".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::Input("sweep values must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub mean_auc: f64,
    pub auc_stddev: f64,
    pub n_readers: usize,
    pub seed: u64,
    pub config_hash: String,
}

/// The trial plan implied by a configuration. A sweep computes it once so
/// every point uses the same readers and test set.
pub fn plan_for(dataset: &[ImageStack], config: &Config) -> Result<TrialPlan> {
    let pairs = pairs_from_stacks(dataset)?;
    Ok(split_dataset(&pairs, config.trial.n_readers, config.trial.seed, config.observer.n_channels + 1)?)
}

/// One full trial under `config` with a given plan.
pub fn run_point(dataset: &[ImageStack], plan: &TrialPlan, config: &Config) -> Result<(ResultRow, TrialResult)> {
    let result = runner::run_trial(dataset, plan, &config.pipeline()?)?;
    let row = ResultRow {
        axis_value: f64::NAN,
        mean_auc: result.mean_auc,
        auc_stddev: result.variance.sqrt(),
        n_readers: result.per_reader_auc.len(),
        seed: plan.seed,
        config_hash: config.hash(),
    };
    Ok((row, result))
}

pub fn run_sweep(spec: &SweepSpec, dataset: &[ImageStack]) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let plan = plan_for(dataset, &spec.fixed)?;
    let point = |&value: &f64| -> Result<ResultRow> {
        let config = spec.fixed.with_axis(spec.axis, value);
        run_point(dataset, &plan, &config)
            .map(|(row, _)| ResultRow { axis_value: value, ..row })
            .map_err(|e| SimError::SweepPoint { axis: spec.axis.name().to_owned(), value, source: Box::new(e) })
    };
    if spec.parallel {
        spec.values.par_iter().map(point).collect()
    } else {
        spec.values.iter().map(point).collect()
    }
}

/// Everything recorded about a single trial besides the score matrix.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub config_hash: String,
    pub plan_seed: u64,
    pub dataset_seed: u64,
    pub luminance_l: f64,
    pub x0_deg: f64,
    pub ssr: f64,
    pub slice_rate: f64,
    pub mean_auc: f64,
    pub variance: f64,
    /// `unbiased`, or `plug-in` when the unbiased estimate was negative.
    pub variance_estimator: &'static str,
    pub per_reader_auc: Vec<f64>,
    pub test_ids: Vec<u64>,
    pub config: Config,
}

impl TrialRecord {
    pub fn new(config: &Config, result: &TrialResult, luminance_l: f64, x0_deg: f64) -> Self {
        Self {
            config_hash: config.hash(),
            plan_seed: result.plan_seed,
            dataset_seed: config.generator.seed,
            luminance_l,
            x0_deg,
            ssr: config.percept.ssr,
            slice_rate: config.percept.slice_rate,
            mean_auc: result.mean_auc,
            variance: result.variance,
            variance_estimator: match result.variance_estimator {
                VarianceEstimator::Unbiased => "unbiased",
                VarianceEstimator::PlugIn => "plug-in",
            },
            per_reader_auc: result.per_reader_auc.clone(),
            test_ids: result.test_ids.clone(),
            config: config.clone(),
        }
    }
}
