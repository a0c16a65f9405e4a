//! Multi-slice channelized Hotelling observer (type 'b').
//!
//! A 2D CHO with Laguerre-Gauss channels is trained on the central slice of
//! each training stack and applied to every slice in a range around it; a
//! second stage merges the per-slice scores into one score per stack.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{bail, Result};
use crate::percept::PerceivedStack;

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - x) * cur - k as f64 * prev;
        prev = cur;
        cur = next / (k + 1) as f64;
    }
    cur
}

/// Laguerre-Gauss channel `j` at radius `r` for spread `a`, unnormalized:
/// `exp(-π r²/a²) · L_j(2π r²/a²)`.
pub fn lg_value(j: usize, r: f64, a: f64) -> f64 {
    let g = PI * r * r / (a * a);
    libm::exp(-g) * laguerre(j, 2.0 * g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBank {
    pub n_channels: usize,
    pub spread: f64,
    pub width: usize,
    pub height: usize,
    /// `(width·height) × n_channels`, column j is channel j, pixels x fastest.
    pub matrix: DMatrix<f64>,
}

impl ChannelBank {
    pub fn channel(&self, j: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.matrix.as_slice()[j * n..(j + 1) * n]
    }
}

/// Channels centered on pixel `(w/2, h/2)`.
pub fn lg_channel_bank(width: usize, height: usize, n: usize, spread: f64) -> Result<ChannelBank> {
    if n == 0 || !(spread > 0.0 && spread.is_finite()) || width == 0 || height == 0 {
        bail!(Input, "channel bank needs n >= 1, spread > 0 and a non-empty image");
    }
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    let matrix = DMatrix::from_fn(width * height, n, |p, j| {
        let dx = (p % width) as f64 - cx;
        let dy = (p / width) as f64 - cy;
        lg_value(j, libm::sqrt(dx * dx + dy * dy), spread)
    });
    Ok(ChannelBank { n_channels: n, spread, width, height, matrix })
}

/// Channel responses `bankᵀ · slice`.
pub fn channelize(slice: &[f64], bank: &ChannelBank) -> Result<DVector<f64>> {
    if slice.len() != bank.width * bank.height {
        bail!(Input, "slice of {} pixels does not match {}x{} channels", slice.len(), bank.width, bank.height);
    }
    Ok(bank.matrix.tr_mul(&DVector::from_column_slice(slice)))
}

/// Regularization used when the pooled covariance is ill-conditioned: the
/// first ridge `factor · trace/n` from `ladder` bringing the condition number
/// to at most `max_condition`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePolicy {
    pub max_condition: f64,
    pub ladder: [f64; 3],
}

impl Default for RidgePolicy {
    fn default() -> Self {
        Self { max_condition: 1e12, ladder: [1e-12, 1e-9, 1e-6] }
    }
}

/// A Hotelling discriminant in some feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct HotellingFit {
    pub template: DVector<f64>,
    pub mean_diff: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub ridge: f64,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn mean_and_scatter(samples: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let dim = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(dim);
    for s in samples {
        mean += s;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(dim, dim);
    for s in samples {
        let d = s - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= n - 1.0;
    (mean, cov)
}

/// Fits `template = (cov + ridge·I)⁻¹ (mean_lesion − mean_healthy)` with
/// `cov` the average of the two class sample covariances.
pub fn fit_hotelling(healthy: &[DVector<f64>], lesion: &[DVector<f64>], policy: &RidgePolicy) -> Result<HotellingFit> {
    let dim = match healthy.first().or(lesion.first()) {
        Some(v) => v.len(),
        None => bail!(Training, "no training samples"),
    };
    if healthy.len() < dim + 1 || lesion.len() < dim + 1 {
        bail!(
            Training,
            "need at least {} samples per class for {dim} features, got {} healthy and {} lesion",
            dim + 1,
            healthy.len(),
            lesion.len()
        );
    }
    if healthy.iter().chain(lesion).any(|v| v.len() != dim) {
        bail!(Training, "training samples differ in length");
    }
    let (mh, ch) = mean_and_scatter(healthy);
    let (ml, cl) = mean_and_scatter(lesion);
    let mean_diff = ml - mh;
    let cov = (ch + cl) * 0.5;
    let trace = cov.trace();
    if !(trace > 0.0) {
        bail!(Training, "training samples have zero covariance");
    }
    let mut ridge = 0.0;
    if condition_number(&cov) > policy.max_condition {
        let chosen = policy.ladder.iter().map(|f| f * trace / dim as f64).find(|&r| {
            let reg = &cov + DMatrix::identity(dim, dim) * r;
            condition_number(&reg) <= policy.max_condition
        });
        match chosen {
            Some(r) => ridge = r,
            None => bail!(Training, "covariance stays ill-conditioned after regularization"),
        }
    }
    let reg = &cov + DMatrix::identity(dim, dim) * ridge;
    let template = match reg.clone().cholesky() {
        Some(ch) => ch.solve(&mean_diff),
        None => match reg.lu().solve(&mean_diff) {
            Some(t) => t,
            None => bail!(Training, "covariance is singular"),
        },
    };
    Ok(HotellingFit { template, mean_diff, cov, ridge })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoModel {
    pub bank: Arc<ChannelBank>,
    pub fit: HotellingFit,
}

impl ChoModel {
    pub fn template(&self) -> &DVector<f64> {
        &self.fit.template
    }

    pub fn score_responses(&self, v: &DVector<f64>) -> f64 {
        self.fit.template.dot(v)
    }
}

pub fn train_cho(
    healthy_slices: &[&[f64]],
    lesion_slices: &[&[f64]],
    bank: Arc<ChannelBank>,
    policy: &RidgePolicy,
) -> Result<ChoModel> {
    let h = healthy_slices.iter().map(|s| channelize(s, &bank)).collect::<Result<Vec<_>>>()?;
    let l = lesion_slices.iter().map(|s| channelize(s, &bank)).collect::<Result<Vec<_>>>()?;
    let fit = fit_hotelling(&h, &l, policy)?;
    Ok(ChoModel { bank, fit })
}

pub fn score_slice(slice: &[f64], model: &ChoModel) -> Result<f64> {
    Ok(model.score_responses(&channelize(slice, &model.bank)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combiner {
    /// Hotelling discriminant over the vector of per-slice scores.
    #[default]
    Hotelling,
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage2 {
    /// Weights normalized to unit L1 norm.
    Hotelling(DVector<f64>),
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsChoModel {
    pub stage1: ChoModel,
    pub slice_range: Vec<usize>,
    pub stage2: Stage2,
}

/// Channel responses of the slices of one stack that the observer reads.
#[derive(Debug, Clone, PartialEq)]
pub struct StackResponses {
    /// Responses in `slice_range` order.
    pub per_slice: Vec<DVector<f64>>,
}

/// Checks that `slice_range` is non-empty, strictly increasing, within
/// `depth` and contains the central slice `depth/2`. Returns the position of
/// the central slice within the range.
pub fn central_position(slice_range: &[usize], depth: usize) -> Result<usize> {
    if slice_range.is_empty() || slice_range.windows(2).any(|w| w[0] >= w[1]) {
        bail!(Input, "slice range must be non-empty and strictly increasing");
    }
    if let Some(&z) = slice_range.last().filter(|&&z| z >= depth) {
        bail!(Input, "slice {z} is beyond the stack depth {depth}");
    }
    match slice_range.iter().position(|&z| z == depth / 2) {
        Some(p) => Ok(p),
        None => bail!(Input, "slice range does not include the central slice {}", depth / 2),
    }
}

pub fn stack_responses(stack: &PerceivedStack, bank: &ChannelBank, slice_range: &[usize]) -> Result<StackResponses> {
    if stack.dims.width != bank.width || stack.dims.height != bank.height {
        bail!(Input, "stack {:?} does not match the channel bank", stack.dims);
    }
    if let Some(&z) = slice_range.iter().find(|&&z| z >= stack.dims.depth) {
        bail!(Input, "slice {z} is beyond the stack depth {}", stack.dims.depth);
    }
    let per_slice = slice_range.iter().map(|&z| channelize(stack.slice(z), bank)).collect::<Result<Vec<_>>>()?;
    Ok(StackResponses { per_slice })
}

impl MsChoModel {
    fn slice_scores(&self, r: &StackResponses) -> Result<DVector<f64>> {
        if r.per_slice.len() != self.slice_range.len() {
            bail!(Input, "got responses for {} slices, model reads {}", r.per_slice.len(), self.slice_range.len());
        }
        Ok(DVector::from_iterator(r.per_slice.len(), r.per_slice.iter().map(|v| self.stage1.score_responses(v))))
    }

    pub fn score_responses(&self, r: &StackResponses) -> Result<f64> {
        let s = self.slice_scores(r)?;
        Ok(match &self.stage2 {
            Stage2::Hotelling(w) => w.dot(&s),
            Stage2::Max => s.max(),
            Stage2::Mean => s.mean(),
        })
    }
}

pub fn score_stack(perceived: &PerceivedStack, model: &MsChoModel) -> Result<f64> {
    let r = stack_responses(perceived, &model.stage1.bank, &model.slice_range)?;
    model.score_responses(&r)
}

/// Trains both stages from precomputed responses. `central` is the
/// position of the central slice inside the slice range; only that slice
/// trains the channel template.
pub fn train_mscho_b_from_responses(
    healthy: &[StackResponses],
    lesion: &[StackResponses],
    bank: Arc<ChannelBank>,
    slice_range: &[usize],
    central: usize,
    combiner: Combiner,
    policy: &RidgePolicy,
) -> Result<MsChoModel> {
    let pick = |set: &[StackResponses]| -> Result<Vec<DVector<f64>>> {
        set.iter()
            .map(|r| match r.per_slice.get(central) {
                Some(v) if r.per_slice.len() == slice_range.len() => Ok(v.clone()),
                _ => bail!(Input, "training responses do not match the slice range"),
            })
            .collect()
    };
    let fit = fit_hotelling(&pick(healthy)?, &pick(lesion)?, policy)?;
    let stage1 = ChoModel { bank, fit };
    let mut model = MsChoModel { stage1, slice_range: slice_range.to_vec(), stage2: Stage2::Mean };
    model.stage2 = match combiner {
        Combiner::Max => Stage2::Max,
        Combiner::Mean => Stage2::Mean,
        Combiner::Hotelling => {
            let hs = healthy.iter().map(|r| model.slice_scores(r)).collect::<Result<Vec<_>>>()?;
            let ls = lesion.iter().map(|r| model.slice_scores(r)).collect::<Result<Vec<_>>>()?;
            let w = fit_hotelling(&hs, &ls, policy)?.template;
            let norm = w.lp_norm(1);
            if !(norm > 0.0) {
                bail!(Training, "second-stage weights vanish");
            }
            Stage2::Hotelling(w / norm)
        }
    };
    Ok(model)
}

pub fn train_mscho_b(
    healthy_stacks: &[&PerceivedStack],
    lesion_stacks: &[&PerceivedStack],
    bank: Arc<ChannelBank>,
    slice_range: &[usize],
    combiner: Combiner,
    policy: &RidgePolicy,
) -> Result<MsChoModel> {
    let depth = match healthy_stacks.first().or(lesion_stacks.first()) {
        Some(s) => s.dims.depth,
        None => bail!(Training, "no training stacks"),
    };
    let central = central_position(slice_range, depth)?;
    let resp = |set: &[&PerceivedStack]| -> Result<Vec<StackResponses>> {
        set.iter().map(|s| stack_responses(s, &bank, slice_range)).collect()
    };
    let h = resp(healthy_stacks)?;
    let l = resp(lesion_stacks)?;
    train_mscho_b_from_responses(&h, &l, bank.clone(), slice_range, central, combiner, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csf::ViewingConditions;
    use crate::fft::Dims3;
    use crate::percept::FovealMode;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn laguerre_values() {
        assert_eq!(laguerre(0, 3.0), 1.0);
        assert_eq!(laguerre(1, 3.0), -2.0);
        // L2(x) = (x² - 4x + 2)/2, L3(x) = (-x³ + 9x² - 18x + 6)/6
        assert!((laguerre(2, 1.5) - (2.25 - 6.0 + 2.0) / 2.0).abs() < 1e-15);
        assert!((laguerre(3, 2.0) - (-8.0 + 36.0 - 36.0 + 6.0) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn lg_anchor_values() {
        assert_eq!(lg_value(0, 0.0, 10.0), 1.0);
        let r = libm::sqrt(100.0 / (2.0 * PI));
        assert!(lg_value(1, r, 10.0).abs() < 1e-15);
    }

    #[test]
    fn bank_is_nearly_orthogonal_on_the_grid() {
        let bank = lg_channel_bank(64, 64, 15, 10.0).unwrap();
        for i in 0..15 {
            let ci = DVector::from_column_slice(bank.channel(i));
            assert!(ci.norm() > 0.0);
            for j in 0..i {
                let cj = DVector::from_column_slice(bank.channel(j));
                let c = ci.dot(&cj).abs() / (ci.norm() * cj.norm());
                assert!(c <= 0.05, "channels {i},{j}: {c}");
            }
        }
        assert!(bank.channel(0).iter().all(|&v| v > 0.0));
        assert_eq!(bank, lg_channel_bank(64, 64, 15, 10.0).unwrap());
    }

    #[test]
    fn channelize_cases() {
        let bank = lg_channel_bank(64, 64, 15, 10.0).unwrap();
        assert_eq!(channelize(&[0.0; 4096], &bank).unwrap(), DVector::zeros(15));
        let c0 = bank.channel(0).to_vec();
        let v = channelize(&c0, &bank).unwrap();
        let n0 = v[0];
        assert!((n0 - c0.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-9 * n0);
        for j in 1..15 {
            let nj: f64 = bank.channel(j).iter().map(|x| x * x).sum();
            assert!(v[j].abs() <= 0.05 * libm::sqrt(n0 * nj));
        }
        let a: Vec<f64> = (0..4096).map(|i| libm::sin(i as f64)).collect();
        let b: Vec<f64> = (0..4096).map(|i| libm::cos(i as f64 * 0.3)).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = channelize(&ab, &bank).unwrap();
        let rhs = channelize(&a, &bank).unwrap() + channelize(&b, &bank).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
        assert!(channelize(&[0.0; 10], &bank).is_err());
    }

    #[test]
    fn template_for_identity_and_diagonal_covariance() {
        // Exact-moment designs: symmetric sample sets with known covariance.
        let mk = |shift: [f64; 2], scale: [f64; 2]| -> Vec<DVector<f64>> {
            [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
                .iter()
                .map(|p| DVector::from_vec(vec![shift[0] + scale[0] * p[0], shift[1] + scale[1] * p[1]]))
                .collect()
        };
        // sample covariance of the ±s corners with divisor 3 is 4s²/3
        let s = libm::sqrt(3.0 / 4.0);
        let h = mk([0.0, 0.0], [s, s]);
        let l = mk([1.0, 0.0], [s, s]);
        let fit = fit_hotelling(&h, &l, &RidgePolicy::default()).unwrap();
        assert_eq!(fit.ridge, 0.0);
        assert!((fit.template.clone() - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-12);

        let s2 = libm::sqrt(2.0 * 3.0 / 4.0);
        let h = mk([0.0, 0.0], [s2, s]);
        let l = mk([1.0, 1.0], [s2, s]);
        let t = fit_hotelling(&h, &l, &RidgePolicy::default()).unwrap().template;
        assert!((t[0] - 0.5).abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn template_converges_to_population_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Σ = A Aᵀ with A lower-triangular
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 1.2, 0.0, -0.3, 0.4, 0.8]);
        let sigma = &a * a.transpose();
        let dmu = DVector::from_vec(vec![0.6, -0.2, 0.4]);
        let h: Vec<_> = (0..10_000).map(|_| &a * normals(&mut rng, 3)).collect();
        let l: Vec<_> = (0..10_000).map(|_| &a * normals(&mut rng, 3) + &dmu).collect();
        let fit = fit_hotelling(&h, &l, &RidgePolicy::default()).unwrap();
        let truth = sigma.cholesky().unwrap().solve(&dmu);
        let err = (&fit.template - &truth).norm() / truth.norm();
        assert!(err < 0.05, "relative error {err}");
        let resid = (&fit.cov + DMatrix::identity(3, 3) * fit.ridge) * &fit.template - &fit.mean_diff;
        assert!(resid.norm() <= 1e-8 * fit.mean_diff.norm());
    }

    #[test]
    fn training_errors() {
        let one = vec![DVector::from_vec(vec![1.0, 2.0]); 3];
        assert!(fit_hotelling(&one, &one, &RidgePolicy::default()).is_err());
        assert!(fit_hotelling(&one[..2], &one, &RidgePolicy::default()).is_err());
    }

    #[test]
    fn ill_conditioned_covariance_gets_a_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // third feature duplicates the first: singular covariance
        let mk = |rng: &mut ChaCha8Rng, shift: f64| -> Vec<DVector<f64>> {
            (0..50)
                .map(|_| {
                    let v = normals(rng, 2);
                    DVector::from_vec(vec![v[0] + shift, v[1], v[0] + shift])
                })
                .collect()
        };
        let h = mk(&mut rng, 0.0);
        let l = mk(&mut rng, 1.0);
        let fit = fit_hotelling(&h, &l, &RidgePolicy::default()).unwrap();
        assert!(fit.ridge > 0.0);
        let resid = (&fit.cov + DMatrix::identity(3, 3) * fit.ridge) * &fit.template - &fit.mean_diff;
        assert!(resid.norm() <= 1e-8 * fit.mean_diff.norm());
    }

    fn perceived(data: Vec<f64>, dims: Dims3) -> PerceivedStack {
        PerceivedStack {
            data,
            dims,
            vc: ViewingConditions::for_width(100.0, dims.width, 7.0, 10.0).unwrap(),
            foveal_mode: FovealMode::None,
        }
    }

    fn random_stacks(
        rng: &mut ChaCha8Rng,
        n: usize,
        dims: Dims3,
        signal: f64,
        bank: &ChannelBank,
    ) -> Vec<PerceivedStack> {
        (0..n)
            .map(|_| {
                let mut d: Vec<f64> = (0..dims.len()).map(|_| StandardNormal.sample(rng)).collect();
                for z in 0..dims.depth {
                    let w = libm::exp(-((z as f64 - (dims.depth / 2) as f64).powi(2)) / 2.0);
                    for (i, c) in bank.channel(0).iter().enumerate() {
                        d[z * dims.slice_len() + i] += signal * w * c;
                    }
                }
                perceived(d, dims)
            })
            .collect()
    }

    #[test]
    fn mscho_degenerate_ranges_and_ordering() {
        let dims = Dims3::new(16, 16, 5);
        let bank = Arc::new(lg_channel_bank(16, 16, 3, 4.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_stacks(&mut rng, 30, dims, 0.0, &bank);
        let l = random_stacks(&mut rng, 30, dims, 1.0, &bank);
        let hr: Vec<&PerceivedStack> = h.iter().collect();
        let lr: Vec<&PerceivedStack> = l.iter().collect();
        let policy = RidgePolicy::default();
        for combiner in [Combiner::Hotelling, Combiner::Max, Combiner::Mean] {
            let m = train_mscho_b(&hr, &lr, bank.clone(), &[2], combiner, &policy).unwrap();
            for s in h.iter().chain(&l).take(5) {
                let direct = score_slice(s.slice(2), &m.stage1).unwrap();
                assert!((score_stack(s, &m).unwrap() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
        let m = train_mscho_b(&hr, &lr, bank.clone(), &[1, 2, 3], Combiner::Hotelling, &policy).unwrap();
        assert_eq!(score_stack(&perceived(vec![0.0; dims.len()], dims), &m).unwrap(), 0.0);
        // identical slices with the mean combiner reduce to one slice
        let m = train_mscho_b(&hr, &lr, bank.clone(), &[1, 2, 3], Combiner::Mean, &policy).unwrap();
        let slice: Vec<f64> = (0..256).map(|i| libm::sin(i as f64 * 0.1)).collect();
        let same: Vec<f64> = (0..5).flat_map(|_| slice.iter().copied()).collect();
        let single = score_slice(&slice, &m.stage1).unwrap();
        assert!((score_stack(&perceived(same, dims), &m).unwrap() - single).abs() < 1e-12);
        // mean lesion stack outscores mean healthy stack
        let mean_of = |set: &[PerceivedStack]| {
            let mut acc = vec![0.0; dims.len()];
            for s in set {
                for (a, v) in acc.iter_mut().zip(&s.data) {
                    *a += v / set.len() as f64;
                }
            }
            perceived(acc, dims)
        };
        assert!(score_stack(&mean_of(&l), &m).unwrap() > score_stack(&mean_of(&h), &m).unwrap());
        // range without the central slice, or beyond depth
        assert!(train_mscho_b(&hr, &lr, bank.clone(), &[0, 1], Combiner::Mean, &policy).is_err());
        assert!(train_mscho_b(&hr, &lr, bank.clone(), &[2, 7], Combiner::Mean, &policy).is_err());
    }

    #[test]
    fn stage_one_only_sees_central_slices() {
        let dims = Dims3::new(16, 16, 5);
        let bank = Arc::new(lg_channel_bank(16, 16, 3, 4.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_stacks(&mut rng, 20, dims, 0.0, &bank);
        let l = random_stacks(&mut rng, 20, dims, 1.0, &bank);
        let policy = RidgePolicy::default();
        let train = |h: &[PerceivedStack], l: &[PerceivedStack]| {
            let hr: Vec<&PerceivedStack> = h.iter().collect();
            let lr: Vec<&PerceivedStack> = l.iter().collect();
            train_mscho_b(&hr, &lr, bank.clone(), &[1, 2, 3], Combiner::Mean, &policy).unwrap()
        };
        let base = train(&h, &l);
        let mut corrupted = h.clone();
        for s in &mut corrupted {
            for (i, v) in s.data.iter_mut().enumerate() {
                if i / 256 != 2 {
                    *v = 1e3 * libm::sin(i as f64);
                }
            }
        }
        assert_eq!(train(&corrupted, &l).stage1.fit.template, base.stage1.fit.template);
    }

    #[test]
    fn score_quadratic_form_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h: Vec<_> = (0..40).map(|_| normals(&mut rng, 4)).collect();
        let l: Vec<_> = (0..40).map(|_| normals(&mut rng, 4)).collect();
        let fit = fit_hotelling(&h, &l, &RidgePolicy::default()).unwrap();
        let q = fit.mean_diff.dot(&fit.template);
        assert!(q >= 0.0);
    }
}
