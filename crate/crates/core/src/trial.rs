//! Virtual reader study: split the dataset, train identical readers on
//! disjoint subsets, score a shared test set and aggregate the AUCs with a
//! one-shot multi-reader multi-case variance estimate.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csf::ViewingConditions;
use crate::display::DisplayModel;
use crate::error::{bail, Result};
use crate::fft::Transform3;
use crate::observer::{
    central_position, lg_channel_bank, stack_responses, train_mscho_b_from_responses, ChannelBank, Combiner,
    MsChoModel, RidgePolicy, StackResponses,
};
use crate::percept::{Perceiver, PerceptConfig};
use crate::stacks::{ImageStack, Label};

/// Assignment of every stack to one of `n_readers + 1` subsets. Subset `i <
/// n_readers` trains reader `i`; subset `n_readers` is the shared test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialPlan {
    pub n_readers: usize,
    pub seed: u64,
    pub subset_assignment: BTreeMap<u64, usize>,
    /// `(healthy_id, lesion_id)`.
    pub pairing: Vec<(u64, u64)>,
}

impl TrialPlan {
    pub fn test_subset(&self) -> usize {
        self.n_readers
    }

    /// Members of subset `k` with the given label, in pairing order.
    pub fn members(&self, k: usize, label: Label) -> Vec<u64> {
        self.pairing
            .iter()
            .map(|&(h, l)| if label == Label::Healthy { h } else { l })
            .filter(|id| self.subset_assignment.get(id) == Some(&k))
            .collect()
    }

    /// Disjoint, covering, pair-separated, every subset holding both classes.
    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for &(h, l) in &self.pairing {
            for id in [h, l] {
                if seen.insert(id, ()).is_some() {
                    bail!(Planning, "stack {id} appears in more than one pair");
                }
            }
            match (self.subset_assignment.get(&h), self.subset_assignment.get(&l)) {
                (Some(a), Some(b)) if a != b => {}
                (Some(_), Some(_)) => bail!(Planning, "pair ({h}, {l}) shares a subset"),
                _ => bail!(Planning, "pair ({h}, {l}) is not fully assigned"),
            }
        }
        if seen.len() != self.subset_assignment.len() {
            bail!(Planning, "assignment covers stacks outside the pairing");
        }
        if self.subset_assignment.values().any(|&k| k > self.n_readers) {
            bail!(Planning, "subset index beyond {}", self.n_readers);
        }
        for k in 0..=self.n_readers {
            if self.members(k, Label::Healthy).is_empty() || self.members(k, Label::Lesion).is_empty() {
                bail!(Planning, "subset {k} lacks one of the classes");
            }
        }
        Ok(())
    }
}

/// Shuffles the pairs with `seed` and deals them round-robin: healthy member
/// of the i-th pair to subset `i mod (n+1)`, lesion member to `(i+1) mod
/// (n+1)`. Every subset gets at least `min_per_class` stacks of each class.
pub fn split_dataset(pairs: &[(u64, u64)], n_readers: usize, seed: u64, min_per_class: usize) -> Result<TrialPlan> {
    if n_readers < 2 {
        bail!(Planning, "need at least two readers, got {n_readers}");
    }
    let subsets = n_readers + 1;
    let per_class = pairs.len() / subsets;
    if per_class < min_per_class.max(1) {
        bail!(
            Planning,
            "{} pairs give {per_class} stacks per class in each of {subsets} subsets, need {}",
            pairs.len(),
            min_per_class.max(1)
        );
    }
    let mut order: Vec<(u64, u64)> = pairs.to_vec();
    order.sort_unstable();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut subset_assignment = BTreeMap::new();
    for (i, &(h, l)) in order.iter().enumerate() {
        subset_assignment.insert(h, i % subsets);
        subset_assignment.insert(l, (i + 1) % subsets);
    }
    let plan = TrialPlan { n_readers, seed, subset_assignment, pairing: order };
    plan.check()?;
    Ok(plan)
}

/// Pairs `(healthy, lesion)` recorded in the lesion stacks' source ids.
pub fn pairs_from_stacks<'a>(stacks: impl IntoIterator<Item = &'a ImageStack>) -> Result<Vec<(u64, u64)>> {
    let mut pairs = Vec::new();
    for s in stacks {
        if s.label == Label::Lesion {
            match s.source_id {
                Some(h) => pairs.push((h, s.stack_id)),
                None => bail!(Input, "lesion stack {} has no healthy source", s.stack_id),
            }
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// Mann-Whitney estimate of the AUC, ties counted one half.
pub fn auc_wilcoxon(healthy: &[f64], lesion: &[f64]) -> Result<f64> {
    if healthy.is_empty() || lesion.is_empty() {
        bail!(Input, "AUC needs scores for both classes");
    }
    if healthy.iter().chain(lesion).any(|v| v.is_nan()) {
        bail!(Input, "AUC scores contain NaN");
    }
    let mut sorted = healthy.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    // twice the number of won comparisons, ties counting one
    let mut twice_wins: u64 = 0;
    for &l in lesion {
        let below = sorted.partition_point(|&h| h < l);
        let not_above = sorted.partition_point(|&h| h <= l);
        twice_wins += 2 * below as u64 + (not_above - below) as u64;
    }
    Ok(twice_wins as f64 / (2 * healthy.len() * lesion.len()) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrmcEstimate {
    pub per_reader_auc: Vec<f64>,
    pub mean_auc: f64,
    /// Variance of `mean_auc` over readers and cases.
    pub variance: f64,
    /// Part of `variance` due to readers disagreeing on the same cases.
    pub reader_component: f64,
    /// Part of `variance` due to the sampling of test cases.
    pub case_component: f64,
    pub estimator: VarianceEstimator,
}

/// Which moment estimates produced an [`MrmcEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceEstimator {
    /// Unbiased U-statistic moments.
    Unbiased,
    /// Plug-in (resampling) moments, used when the unbiased estimate is
    /// negative beyond round-off; biased upwards but non-negative.
    PlugIn,
}

/// Largest negative variance accepted as round-off.
pub const VARIANCE_FLOOR: f64 = -1e-12;

/// One-shot MRMC estimate from a reader × case score matrix.
///
/// The success kernel `s(h, l) = [l > h] + ½[l = h]` is averaged into the
/// eight second moments of the U-statistic (same or different reader ×
/// same or different healthy case × same or different lesion case); each
/// moment is estimated without bias from the single data set and combined
/// with the case-count coefficients. With few cases and near-chance or
/// near-identical readers that estimate can fall below zero; it is then
/// replaced by the plug-in estimate (see [`VarianceEstimator`]).
pub fn one_shot_mrmc(scores: &[Vec<f64>], labels: &[Label]) -> Result<MrmcEstimate> {
    let readers = scores.len();
    if readers < 2 {
        bail!(Input, "MRMC analysis needs at least two readers, got {readers}");
    }
    if scores.iter().any(|s| s.len() != labels.len()) {
        bail!(Input, "score matrix rows must have one score per case");
    }
    let healthy_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Healthy).collect();
    let lesion_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Lesion).collect();
    let (n0, n1) = (healthy_idx.len(), lesion_idx.len());
    if n0 < 2 || n1 < 2 {
        // one case per class still yields a mean AUC but no variance
        if n0 == 0 || n1 == 0 {
            bail!(Input, "MRMC analysis needs both classes among the test cases");
        }
    }
    if scores.iter().flatten().any(|v| v.is_nan()) {
        bail!(Input, "scores contain NaN");
    }

    // success matrices, healthy-major
    let success: Vec<Vec<f64>> = scores
        .iter()
        .map(|row| {
            let mut s = Vec::with_capacity(n0 * n1);
            for &i in &healthy_idx {
                for &j in &lesion_idx {
                    let (h, l) = (row[i], row[j]);
                    s.push(if l > h {
                        1.0
                    } else if l == h {
                        0.5
                    } else {
                        0.0
                    });
                }
            }
            s
        })
        .collect();

    let per_reader_auc: Vec<f64> = scores
        .iter()
        .map(|row| {
            let h: Vec<f64> = healthy_idx.iter().map(|&i| row[i]).collect();
            let l: Vec<f64> = lesion_idx.iter().map(|&j| row[j]).collect();
            auc_wilcoxon(&h, &l)
        })
        .collect::<Result<_>>()?;
    let mean_auc = per_reader_auc.iter().sum::<f64>() / readers as f64;

    if n0 < 2 || n1 < 2 {
        return Ok(MrmcEstimate {
            per_reader_auc,
            mean_auc,
            variance: 0.0,
            reader_component: 0.0,
            case_component: 0.0,
            estimator: VarianceEstimator::Unbiased,
        });
    }

    let (f0, f1, fr) = (n0 as f64, n1 as f64, readers as f64);
    let rows = |s: &[f64]| -> Vec<f64> { s.chunks_exact(n1).map(|r| r.iter().sum()).collect() };
    let cols = |s: &[f64]| -> Vec<f64> {
        let mut c = alloc::vec![0.0; n1];
        for r in s.chunks_exact(n1) {
            for (acc, v) in c.iter_mut().zip(r) {
                *acc += v;
            }
        }
        c
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let row_sums: Vec<Vec<f64>> = success.iter().map(|s| rows(s)).collect();
    let col_sums: Vec<Vec<f64>> = success.iter().map(|s| cols(s)).collect();
    let totals: Vec<f64> = row_sums.iter().map(|r| r.iter().sum()).collect();

    // Σ over reader pairs (r, r') of the four raw product sums (element,
    // row, column, total); `same` restricts to r == r', `all` includes every
    // ordered pair.
    let mut same = [0.0f64; 4];
    let mut all = [0.0f64; 4];
    for r in 0..readers {
        for q in 0..readers {
            let raw = [
                dot(&success[r], &success[q]),
                dot(&row_sums[r], &row_sums[q]),
                dot(&col_sums[r], &col_sums[q]),
                totals[r] * totals[q],
            ];
            for k in 0..4 {
                all[k] += raw[k];
                if r == q {
                    same[k] += raw[k];
                }
            }
        }
    }
    let coef = [1.0 / (f0 * f1), (f1 - 1.0) / (f0 * f1), (f0 - 1.0) / (f0 * f1), (f0 - 1.0) * (f1 - 1.0) / (f0 * f1)];
    let weighted = |m: &[f64; 4]| -> f64 { coef.iter().zip(m).map(|(c, v)| c * v).sum() };

    // unbiased moments: "different" means distinct indices
    let distinct = |raw: &[f64; 4]| [raw[0], raw[1] - raw[0], raw[2] - raw[0], raw[3] - raw[1] - raw[2] + raw[0]];
    let cross_raw: [f64; 4] = core::array::from_fn(|k| all[k] - same[k]);
    let denoms = [f0 * f1, f0 * f1 * (f1 - 1.0), f1 * f0 * (f0 - 1.0), f0 * (f0 - 1.0) * f1 * (f1 - 1.0)];
    let (ds, dc) = (distinct(&same), distinct(&cross_raw));
    let m_same: [f64; 4] = core::array::from_fn(|k| ds[k] / (fr * denoms[k]));
    let m_cross: [f64; 4] = core::array::from_fn(|k| dc[k] / (fr * (fr - 1.0) * denoms[k]));
    let case_component = weighted(&m_cross) - m_cross[3];
    let reader_component = (weighted(&m_same) - weighted(&m_cross)) / fr;
    let variance = case_component + reader_component;
    if variance >= VARIANCE_FLOOR {
        return Ok(MrmcEstimate {
            per_reader_auc,
            mean_auc,
            variance: variance.max(0.0),
            reader_component,
            case_component,
            estimator: VarianceEstimator::Unbiased,
        });
    }

    // Plug-in moments: "different" means an independent draw, which may
    // coincide. This is the exact variance of the mean AUC under resampling
    // readers, healthy and lesion cases with replacement, hence never
    // negative.
    let plug_denoms = [f0 * f1, f0 * f1 * f1, f1 * f0 * f0, f0 * f0 * f1 * f1];
    let v_same: [f64; 4] = core::array::from_fn(|k| same[k] / (fr * plug_denoms[k]));
    let v_all: [f64; 4] = core::array::from_fn(|k| all[k] / (fr * fr * plug_denoms[k]));
    let case_component = weighted(&v_all) - v_all[3];
    let reader_component = (weighted(&v_same) - weighted(&v_all)) / fr;
    let variance = case_component + reader_component;
    if !(variance >= VARIANCE_FLOOR) {
        bail!(Numerical, "MRMC variance {variance:e} is negative after the plug-in fallback");
    }
    Ok(MrmcEstimate {
        per_reader_auc,
        mean_auc,
        variance: variance.max(0.0),
        reader_component,
        case_component,
        estimator: VarianceEstimator::PlugIn,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    pub n_channels: usize,
    pub spread: f64,
    pub combiner: Combiner,
    /// Slices read at test time; `None` uses the lesion slices recorded in
    /// the dataset.
    pub slice_range: Option<Vec<usize>>,
    pub ridge: RidgePolicy,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            n_channels: 15,
            spread: 10.0,
            combiner: Combiner::Hotelling,
            slice_range: None,
            ridge: RidgePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub display: DisplayModel,
    /// Spatial sampling rate, pixel/deg.
    pub ssr: f64,
    /// Browsing speed, slice/s.
    pub slice_rate: f64,
    pub percept: PerceptConfig,
    pub observer: ObserverConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            display: DisplayModel::default(),
            ssr: 7.0,
            slice_rate: 25.0,
            percept: PerceptConfig::default(),
            observer: ObserverConfig::default(),
        }
    }
}

/// Everything needed to turn a stored stack into the observer's channel
/// responses, built once per dataset and configuration. Immutable; share
/// it between workers, each with its own transform.
#[derive(Debug, Clone)]
pub struct PreparedPipeline {
    pub perceiver: Perceiver,
    pub lut: Vec<f64>,
    pub bank: Arc<ChannelBank>,
    pub slice_range: Vec<usize>,
    pub central: usize,
}

impl PreparedPipeline {
    /// The CSF is evaluated at the mean display luminance of the whole
    /// dataset, so every stack goes through the same filter.
    pub fn new(dataset: &[ImageStack], config: &PipelineConfig) -> Result<Self> {
        let first = match dataset.first() {
            Some(s) => s,
            None => bail!(Input, "empty dataset"),
        };
        let geometry = first.geometry;
        if dataset.iter().any(|s| s.geometry.dims != geometry.dims) {
            bail!(Input, "stacks in a dataset must share dimensions");
        }
        config.display.validate()?;
        if config.display.bit_depth != geometry.bit_depth {
            bail!(Input, "display is {}-bit but stacks are {}-bit", config.display.bit_depth, geometry.bit_depth);
        }
        let lut = config.display.lookup_table();
        let mut total = 0.0;
        for s in dataset {
            s.validate()?;
            total += s.data.iter().map(|&c| lut[usize::from(c)]).sum::<f64>() / s.data.len() as f64;
        }
        let luminance = total / dataset.len() as f64;
        let dims = geometry.dims;
        let vc = ViewingConditions::for_width(luminance, dims.width, config.ssr, config.slice_rate)?;
        let perceiver = Perceiver::new(dims, vc, &config.percept)?;
        let slice_range = match &config.observer.slice_range {
            Some(r) => r.clone(),
            None => {
                let mut r: Vec<usize> = dataset.iter().flat_map(|s| s.lesion_slices.iter().copied()).collect();
                r.sort_unstable();
                r.dedup();
                r
            }
        };
        let central = central_position(&slice_range, dims.depth)?;
        let bank =
            Arc::new(lg_channel_bank(dims.width, dims.height, config.observer.n_channels, config.observer.spread)?);
        Ok(Self { perceiver, lut, bank, slice_range, central })
    }

    pub fn viewing(&self) -> &ViewingConditions {
        self.perceiver.viewing()
    }

    pub fn responses<T: Transform3>(&self, stack: &ImageStack, fft: &mut T) -> Result<StackResponses> {
        let lum: Vec<f64> = stack.data.iter().map(|&c| self.lut[usize::from(c)]).collect();
        let perceived = self.perceiver.perceive(&lum, fft)?;
        stack_responses(&perceived, &self.bank, &self.slice_range)
    }
}

/// Observer responses of one stack of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialCase {
    pub id: u64,
    pub label: Label,
    pub responses: StackResponses,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub per_reader_auc: Vec<f64>,
    pub mean_auc: f64,
    pub variance: f64,
    pub variance_estimator: VarianceEstimator,
    /// Reader × test-case scores, columns in `test_ids` order.
    pub scores: Vec<Vec<f64>>,
    pub test_ids: Vec<u64>,
    pub test_labels: Vec<Label>,
    pub plan_seed: u64,
}

/// Trains one reader per training subset and scores the shared test set.
pub fn run_trial_on_cases(
    cases: &[TrialCase],
    plan: &TrialPlan,
    pipeline: &PreparedPipeline,
    observer: &ObserverConfig,
) -> Result<TrialResult> {
    plan.check()?;
    let by_id: BTreeMap<u64, &TrialCase> = cases.iter().map(|c| (c.id, c)).collect();
    let lookup = |ids: Vec<u64>| -> Result<Vec<&TrialCase>> {
        ids.into_iter()
            .map(|id| match by_id.get(&id) {
                Some(c) => Ok(*c),
                None => bail!(Input, "plan references stack {id} missing from the dataset"),
            })
            .collect()
    };
    let test_subset = plan.test_subset();
    let mut test = lookup(plan.members(test_subset, Label::Healthy))?;
    test.extend(lookup(plan.members(test_subset, Label::Lesion))?);

    let mut models: Vec<MsChoModel> = Vec::with_capacity(plan.n_readers);
    for reader in 0..plan.n_readers {
        let h: Vec<StackResponses> =
            lookup(plan.members(reader, Label::Healthy))?.into_iter().map(|c| c.responses.clone()).collect();
        let l: Vec<StackResponses> =
            lookup(plan.members(reader, Label::Lesion))?.into_iter().map(|c| c.responses.clone()).collect();
        models.push(train_mscho_b_from_responses(
            &h,
            &l,
            pipeline.bank.clone(),
            &pipeline.slice_range,
            pipeline.central,
            observer.combiner,
            &observer.ridge,
        )?);
    }
    let scores: Vec<Vec<f64>> = models
        .iter()
        .map(|m| test.iter().map(|c| m.score_responses(&c.responses)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let test_labels: Vec<Label> = test.iter().map(|c| c.label).collect();
    let est = one_shot_mrmc(&scores, &test_labels)?;
    Ok(TrialResult {
        per_reader_auc: est.per_reader_auc,
        mean_auc: est.mean_auc,
        variance: est.variance,
        variance_estimator: est.estimator,
        scores,
        test_ids: test.iter().map(|c| c.id).collect(),
        test_labels,
        plan_seed: plan.seed,
    })
}

/// Sequential end-to-end trial on stored stacks.
pub fn run_trial<T: Transform3>(
    dataset: &[ImageStack],
    plan: &TrialPlan,
    config: &PipelineConfig,
    fft: &mut T,
) -> Result<TrialResult> {
    let pipeline = PreparedPipeline::new(dataset, config)?;
    let cases = dataset
        .iter()
        .map(|s| Ok(TrialCase { id: s.stack_id, label: s.label, responses: pipeline.responses(s, fft)? }))
        .collect::<Result<Vec<_>>>()?;
    run_trial_on_cases(&cases, plan, &pipeline, &config.observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn brute_auc(h: &[f64], l: &[f64]) -> f64 {
        let mut s = 0.0;
        for &a in h {
            for &b in l {
                s += if b > a {
                    1.0
                } else if b == a {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (h.len() * l.len()) as f64
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_wilcoxon(&[0.0, 1.0], &[2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(auc_wilcoxon(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.75);
        assert_eq!(auc_wilcoxon(&[1.0], &[1.0]).unwrap(), 0.5);
        assert!(auc_wilcoxon(&[], &[1.0]).is_err());
    }

    #[test]
    fn auc_matches_pair_counting_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..=20);
            let m = rng.random_range(1..=20);
            let h: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6u8))).collect();
            let l: Vec<f64> = (0..m).map(|_| f64::from(rng.random_range(0..6u8))).collect();
            let a = auc_wilcoxon(&h, &l).unwrap();
            assert_eq!(a, brute_auc(&h, &l));
            assert_eq!(a + auc_wilcoxon(&l, &h).unwrap(), 1.0);
        }
    }

    fn pairs(n: u64) -> Vec<(u64, u64)> {
        (0..n).map(|i| (2 * i, 2 * i + 1)).collect()
    }

    #[test]
    fn split_twelve_pairs_two_readers() {
        let plan = split_dataset(&pairs(12), 2, 99, 1).unwrap();
        for k in 0..3 {
            assert_eq!(plan.members(k, Label::Healthy).len() + plan.members(k, Label::Lesion).len(), 8);
        }
        plan.check().unwrap();
        assert_eq!(plan, split_dataset(&pairs(12), 2, 99, 1).unwrap());
        assert_ne!(plan.subset_assignment, split_dataset(&pairs(12), 2, 100, 1).unwrap().subset_assignment);
    }

    #[test]
    fn split_is_balanced_for_four_and_five_readers() {
        for n in [4usize, 5] {
            let plan = split_dataset(&pairs(203), n, 7, 16).unwrap();
            for label in [Label::Healthy, Label::Lesion] {
                let sizes: Vec<usize> = (0..=n).map(|k| plan.members(k, label).len()).collect();
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                assert!(hi - lo <= 1, "{sizes:?}");
            }
        }
    }

    #[test]
    fn split_rejects_infeasible_sizes() {
        assert!(split_dataset(&pairs(20), 4, 1, 16).is_err());
        assert!(split_dataset(&pairs(20), 1, 1, 1).is_err());
    }

    #[test]
    fn mrmc_perfect_separation() {
        let labels = [Label::Healthy, Label::Lesion];
        let est = one_shot_mrmc(&[vec![0.0, 1.0], vec![0.0, 1.0]], &labels).unwrap();
        assert_eq!(est.mean_auc, 1.0);
        let labels: Vec<Label> = (0..20).map(|i| if i < 10 { Label::Healthy } else { Label::Lesion }).collect();
        let row: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let est = one_shot_mrmc(&[row.clone(), row.clone(), row], &labels).unwrap();
        assert_eq!(est.mean_auc, 1.0);
        assert!(est.variance.abs() < 1e-12);
    }

    #[test]
    fn identical_readers_reduce_to_case_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let labels: Vec<Label> = (0..60).map(|i| if i % 2 == 0 { Label::Healthy } else { Label::Lesion }).collect();
        let row: Vec<f64> = labels
            .iter()
            .map(|l| {
                Distribution::<f64>::sample(&StandardNormal, &mut rng) + if *l == Label::Lesion { 1.0 } else { 0.0 }
            })
            .collect::<Vec<f64>>();
        let est = one_shot_mrmc(&[row.clone(), row.clone(), row.clone()], &labels).unwrap();
        assert!(est.reader_component.abs() < 1e-15);
        // single-reader U-statistic variance by direct enumeration
        let h: Vec<f64> = row.iter().zip(&labels).filter(|(_, l)| **l == Label::Healthy).map(|(v, _)| *v).collect();
        let l: Vec<f64> = row.iter().zip(&labels).filter(|(_, l)| **l == Label::Lesion).map(|(v, _)| *v).collect();
        let s = |a: f64, b: f64| {
            if b > a {
                1.0
            } else if b == a {
                0.5
            } else {
                0.0
            }
        };
        let (n0, n1) = (h.len() as f64, l.len() as f64);
        let (mut m1, mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0, 0.0);
        for (i, &hi) in h.iter().enumerate() {
            for (j, &lj) in l.iter().enumerate() {
                for (k, &hk) in h.iter().enumerate() {
                    for (m, &lm) in l.iter().enumerate() {
                        let p = s(hi, lj) * s(hk, lm);
                        match (i == k, j == m) {
                            (true, true) => m1 += p,
                            (true, false) => m2 += p,
                            (false, true) => m3 += p,
                            (false, false) => m4 += p,
                        }
                    }
                }
            }
        }
        m1 /= n0 * n1;
        m2 /= n0 * n1 * (n1 - 1.0);
        m3 /= n0 * (n0 - 1.0) * n1;
        m4 /= n0 * (n0 - 1.0) * n1 * (n1 - 1.0);
        let var = m1 / (n0 * n1)
            + (n1 - 1.0) / (n0 * n1) * m2
            + (n0 - 1.0) / (n0 * n1) * m3
            + ((n0 - 1.0) * (n1 - 1.0) / (n0 * n1) - 1.0) * m4;
        assert!((est.variance - var).abs() < 1e-12, "{} vs {var}", est.variance);
        assert!((est.case_component - var).abs() < 1e-12);
    }

    /// Variance of the mean AUC over every resample (with replacement) of
    /// readers, healthy cases and lesion cases.
    fn exhaustive_bootstrap_variance(scores: &[Vec<f64>], n0: usize) -> f64 {
        let n1 = scores[0].len() - n0;
        let r = scores.len();
        let draws = |n: usize, k: usize| -> Vec<Vec<usize>> {
            (0..n.pow(k as u32))
                .map(|mut code| {
                    (0..k)
                        .map(|_| {
                            let d = code % n;
                            code /= n;
                            d
                        })
                        .collect()
                })
                .collect()
        };
        let (rd, hd, ld) = (draws(r, r), draws(n0, n0), draws(n1, n1));
        let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0.0);
        for readers in &rd {
            for hs in &hd {
                for ls in &ld {
                    let mut auc = 0.0;
                    for &q in readers {
                        let h: Vec<f64> = hs.iter().map(|&i| scores[q][i]).collect();
                        let l: Vec<f64> = ls.iter().map(|&j| scores[q][n0 + j]).collect();
                        auc += auc_wilcoxon(&h, &l).unwrap();
                    }
                    auc /= r as f64;
                    sum += auc;
                    sum_sq += auc * auc;
                    count += 1.0;
                }
            }
        }
        sum_sq / count - (sum / count).powi(2)
    }

    #[test]
    fn negative_unbiased_variance_falls_back_to_plug_in() {
        let labels = [Label::Healthy, Label::Healthy, Label::Healthy, Label::Lesion, Label::Lesion, Label::Lesion];
        let fallback = (0..500u64).find_map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scores: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..6).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect())
                .collect();
            let est = one_shot_mrmc(&scores, &labels).unwrap();
            (est.estimator == VarianceEstimator::PlugIn).then_some((scores, est))
        });
        let (scores, est) = fallback.expect("some null data set has a negative unbiased variance");
        assert!(est.variance >= 0.0);
        let want = exhaustive_bootstrap_variance(&scores, 3);
        assert!((est.variance - want).abs() < 1e-12, "{} vs {want}", est.variance);
        assert!((est.reader_component + est.case_component - est.variance).abs() < 1e-15);
    }

    #[test]
    fn mrmc_rejects_degenerate_inputs() {
        assert!(one_shot_mrmc(&[vec![0.0, 1.0]], &[Label::Healthy, Label::Lesion]).is_err());
        assert!(one_shot_mrmc(&[vec![0.0, 1.0], vec![0.0, 1.0]], &[Label::Healthy, Label::Healthy]).is_err());
    }
}
