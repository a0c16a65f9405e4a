//! Paired synthetic datasets: every healthy background gets one lesion copy.

use rayon::prelude::*;
use stcsf_core::stacks::{
    derive_seed, generate_background, insert_lesion, ImageStack, LesionSpec, StackGeometry, Texture,
};

use crate::fft::RustFft;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub geometry: StackGeometry,
    pub n_pairs: usize,
    pub texture: Texture,
    pub lesion: LesionSpec,
    pub seed: u64,
}

/// Stack ids of the i-th pair.
pub fn pair_ids(i: usize) -> (u64, u64) {
    (2 * i as u64, 2 * i as u64 + 1)
}

/// Healthy and lesion stacks, interleaved in pair order. Each background is
/// seeded from `(spec.seed, pair index)`, so the result does not depend on
/// how the work is scheduled.
pub fn generate_dataset(spec: &DatasetSpec) -> stcsf_core::Result<Vec<ImageStack>> {
    spec.geometry.validate()?;
    spec.lesion.validate(&spec.geometry)?;
    let pairs: Vec<[ImageStack; 2]> = (0..spec.n_pairs)
        .into_par_iter()
        .map_init(RustFft::new, |fft, i| {
            let (hid, lid) = pair_ids(i);
            let seed = derive_seed(spec.seed, i as u64);
            let healthy = generate_background(&spec.geometry, spec.texture, seed, hid, fft)?;
            let lesion = insert_lesion(&healthy, &spec.lesion, lid)?;
            Ok([healthy, lesion])
        })
        .collect::<stcsf_core::Result<_>>()?;
    Ok(pairs.into_iter().flatten().collect())
}
