//! Image stacks, synthetic power-law backgrounds and lesion insertion.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Error, Result};
use crate::fft::{frequency_of_index, Dims3, Transform3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Healthy,
    Lesion,
}

/// Size, sample depth and slice spacing shared by the stacks of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackGeometry {
    pub dims: Dims3,
    pub bit_depth: u32,
    pub slice_sep_mm: f64,
}

impl StackGeometry {
    /// 41 slices of 64×64, 10 bit, 1 mm apart (reconstructed clinical DBT).
    pub const DATASET_A: Self = Self { dims: Dims3::new(64, 64, 41), bit_depth: 10, slice_sep_mm: 1.0 };
    /// 32 slices of 64×64, 10 bit, 0.2 mm apart (software phantom).
    pub const DATASET_B: Self = Self { dims: Dims3::new(64, 64, 32), bit_depth: 10, slice_sep_mm: 0.2 };

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            bail!(Input, "stack geometry has an empty dimension: {:?}", self.dims);
        }
        if !(1..=16).contains(&self.bit_depth) {
            bail!(Input, "bit depth must be in 1..=16, got {}", self.bit_depth);
        }
        if !(self.slice_sep_mm > 0.0 && self.slice_sep_mm.is_finite()) {
            bail!(Input, "slice separation must be positive, got {}", self.slice_sep_mm);
        }
        Ok(())
    }

    pub fn max_code(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    /// The spatio-temporal center voxel `(W/2, H/2, K/2)`.
    pub fn center(&self) -> (usize, usize, usize) {
        (self.dims.width / 2, self.dims.height / 2, self.dims.depth / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    pub stack_id: u64,
    pub label: Label,
    pub geometry: StackGeometry,
    /// Pixel codes, x fastest, then rows, then slices.
    pub data: Vec<u16>,
    /// Slices touched by lesion insertion; empty for healthy stacks.
    pub lesion_slices: Vec<usize>,
    /// For lesion stacks, the id of the healthy stack it was made from.
    pub source_id: Option<u64>,
    /// Seed the background was generated from, if synthetic.
    pub seed: Option<u64>,
}

impl ImageStack {
    pub fn dims(&self) -> Dims3 {
        self.geometry.dims
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.data.len() != self.geometry.dims.len() {
            bail!(
                Input,
                "stack {} holds {} samples, expected {}",
                self.stack_id,
                self.data.len(),
                self.geometry.dims.len()
            );
        }
        let max = self.geometry.max_code();
        if let Some(i) = self.data.iter().position(|&c| c > max) {
            bail!(
                Input,
                "stack {} code {} at sample {i} exceeds {}-bit range",
                self.stack_id,
                self.data[i],
                self.geometry.bit_depth
            );
        }
        if let Some(&z) = self.lesion_slices.iter().find(|&&z| z >= self.geometry.dims.depth) {
            bail!(Input, "stack {} lists lesion slice {z} beyond depth", self.stack_id);
        }
        Ok(())
    }
}

/// Mixes a base seed with an index so every stack of a dataset gets an
/// independent stream regardless of generation order (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Texture {
    /// Isotropic power spectrum `1/f^beta` (amplitude `f^(-beta/2)`), with
    /// `f` in cycles per voxel.
    PowerLaw {
        beta: f64,
    },
    White,
}

impl Default for Texture {
    fn default() -> Self {
        Texture::PowerLaw { beta: 3.0 }
    }
}

/// Standard deviation of generated backgrounds in code units, as a fraction
/// of the full code range. Keeps ±4σ inside the central half of the range.
pub const BACKGROUND_STD_FRACTION: f64 = 1.0 / 16.0;

/// Gaussian background texture quantized to the geometry's bit depth.
pub fn generate_background<T: Transform3>(
    geometry: &StackGeometry,
    texture: Texture,
    seed: u64,
    stack_id: u64,
    fft: &mut T,
) -> Result<ImageStack> {
    geometry.validate()?;
    let dims = geometry.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..dims.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let field = match texture {
        Texture::White => noise,
        Texture::PowerLaw { beta } => {
            if !(beta >= 0.0 && beta.is_finite()) {
                bail!(Input, "power-law exponent must be non-negative, got {beta}");
            }
            shape_power_law(&noise, dims, beta, fft)
        }
    };
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let var = field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if !(std > 0.0) {
        bail!(Numerical, "generated background has zero variance");
    }
    let max = geometry.max_code();
    let range = f64::from(max) + 1.0;
    let mid = range / 2.0;
    let scale = BACKGROUND_STD_FRACTION * range / std;
    let data = field.iter().map(|&v| libm::round(mid + (v - mean) * scale).clamp(0.0, f64::from(max)) as u16).collect();
    Ok(ImageStack {
        stack_id,
        label: Label::Healthy,
        geometry: *geometry,
        data,
        lesion_slices: Vec::new(),
        source_id: None,
        seed: Some(seed),
    })
}

fn shape_power_law<T: Transform3>(noise: &[f64], dims: Dims3, beta: f64, fft: &mut T) -> Vec<f64> {
    let mut buf: Vec<Complex64> = noise.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf, dims);
    let fx: Vec<f64> = (0..dims.width).map(|k| frequency_of_index(k, dims.width, 1.0)).collect();
    let fy: Vec<f64> = (0..dims.height).map(|k| frequency_of_index(k, dims.height, 1.0)).collect();
    let exponent = -beta / 4.0; // (f²)^(-β/4) = f^(-β/2)
    let mut i = 0;
    for z in 0..dims.depth {
        let fz = frequency_of_index(z, dims.depth, 1.0);
        for &v in &fy {
            for &u in &fx {
                let f2 = u * u + v * v + fz * fz;
                buf[i] *= if f2 > 0.0 { libm::pow(f2, exponent) } else { 0.0 };
                i += 1;
            }
        }
    }
    fft.inverse(&mut buf, dims);
    buf.iter().map(|c| c.re).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LesionKind {
    Microcalcification,
    Mass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LesionSpec {
    pub kind: LesionKind,
    pub diameter_px: f64,
    /// Peak added value in code units.
    pub amplitude: f64,
    /// Standard deviation of the Gaussian depth profile, slices.
    pub sigma_z: f64,
}

/// Depth weights below this fraction of the peak are dropped; the remaining
/// slices are the lesion slices.
pub const DEPTH_CUTOFF: f64 = 0.01;

impl LesionSpec {
    /// Default depth spread of half a slice: three slices carry the lesion,
    /// so its depth profile keeps energy up to the slice Nyquist frequency.
    pub fn microcalcification(amplitude: f64) -> Self {
        Self { kind: LesionKind::Microcalcification, diameter_px: 8.0, amplitude, sigma_z: 0.5 }
    }

    pub fn mass(amplitude: f64) -> Self {
        Self { kind: LesionKind::Mass, diameter_px: 40.0, amplitude, sigma_z: 3.0 }
    }

    pub fn validate(&self, geometry: &StackGeometry) -> Result<()> {
        let side = geometry.dims.width.min(geometry.dims.height) as f64;
        if !(self.diameter_px > 0.0 && self.diameter_px <= side) {
            bail!(Input, "lesion diameter {} px does not fit a {side} px image", self.diameter_px);
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            bail!(Input, "lesion amplitude must be non-negative, got {}", self.amplitude);
        }
        if !(self.sigma_z > 0.0 && self.sigma_z.is_finite()) {
            bail!(Input, "depth profile sigma must be positive, got {}", self.sigma_z);
        }
        Ok(())
    }

    /// Per-slice weights (peak 1 at the central slice, zero below the cutoff).
    pub fn depth_profile(&self, geometry: &StackGeometry) -> Vec<f64> {
        let (_, _, cz) = geometry.center();
        (0..geometry.dims.depth)
            .map(|z| {
                let d = z as f64 - cz as f64;
                let w = libm::exp(-d * d / (2.0 * self.sigma_z * self.sigma_z));
                if w >= DEPTH_CUTOFF {
                    w
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn lesion_slices(&self, geometry: &StackGeometry) -> Vec<usize> {
        self.depth_profile(geometry).iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(z, _)| z).collect()
    }

    /// Disc of the lesion diameter smoothed by a Gaussian of σ = diameter/8,
    /// centered on the image center and scaled to 1 there. One slice, x
    /// fastest.
    pub fn in_plane_profile(&self, geometry: &StackGeometry) -> Vec<f64> {
        let (w, h) = (geometry.dims.width, geometry.dims.height);
        let (cx, cy, _) = geometry.center();
        let r2 = (self.diameter_px / 2.0) * (self.diameter_px / 2.0);
        let disc: Vec<f64> = (0..h)
            .flat_map(|y| {
                (0..w).map(move |x| {
                    let dx = x as f64 - cx as f64;
                    let dy = y as f64 - cy as f64;
                    if dx * dx + dy * dy <= r2 {
                        1.0
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        let sigma = self.diameter_px / 8.0;
        let radius = libm::ceil(5.0 * sigma) as isize;
        let kernel: Vec<f64> =
            (-radius..=radius).map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma))).collect();
        let ksum: f64 = kernel.iter().sum();
        let kernel: Vec<f64> = kernel.iter().map(|k| k / ksum).collect();
        let rows = convolve_axis(&disc, w, h, &kernel, radius, true);
        let mut out = convolve_axis(&rows, w, h, &kernel, radius, false);
        let peak = out[cx + w * cy];
        for v in &mut out {
            *v /= peak;
        }
        out
    }

    /// Unquantized values added to every voxel, same layout as the stack.
    pub fn lesion_field(&self, geometry: &StackGeometry) -> Vec<f64> {
        let plane = self.in_plane_profile(geometry);
        let depth = self.depth_profile(geometry);
        let mut field = Vec::with_capacity(geometry.dims.len());
        for dz in depth {
            field.extend(plane.iter().map(|p| self.amplitude * p * dz));
        }
        field
    }
}

// Zero-padded 1D convolution along x (`along_x`) or y of a w×h image.
fn convolve_axis(img: &[f64], w: usize, h: usize, kernel: &[f64], radius: isize, along_x: bool) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let off = ki as isize - radius;
                let (sx, sy) = if along_x { (x as isize + off, y as isize) } else { (x as isize, y as isize + off) };
                if sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h {
                    acc += k * img[sx as usize + w * sy as usize];
                }
            }
            out[x + w * y] = acc;
        }
    }
    out
}

/// Largest tolerated fraction of inserted signal lost to clamping.
pub const MAX_CLIPPED_FRACTION: f64 = 0.01;

/// Adds a centered lesion to a healthy stack, producing a lesion stack with
/// id `lesion_id` that records its source.
pub fn insert_lesion(healthy: &ImageStack, spec: &LesionSpec, lesion_id: u64) -> Result<ImageStack> {
    if healthy.label != Label::Healthy {
        bail!(Input, "stack {} is not healthy", healthy.stack_id);
    }
    healthy.validate()?;
    let geometry = healthy.geometry;
    spec.validate(&geometry)?;
    let field = spec.lesion_field(&geometry);
    let max = f64::from(geometry.max_code());
    let mut data = healthy.data.clone();
    let mut inserted = 0.0;
    let mut clipped = 0.0;
    for (code, &add) in data.iter_mut().zip(&field) {
        if add == 0.0 {
            continue;
        }
        let target = f64::from(*code) + add;
        inserted += add;
        if target > max {
            clipped += target - max;
        }
        *code = libm::round(target).min(max) as u16;
    }
    if inserted > 0.0 && clipped > MAX_CLIPPED_FRACTION * inserted {
        return Err(Error::LesionClipped { clipped_fraction: clipped / inserted });
    }
    Ok(ImageStack {
        stack_id: lesion_id,
        label: Label::Lesion,
        geometry,
        data,
        lesion_slices: spec.lesion_slices(&geometry),
        source_id: Some(healthy.stack_id),
        seed: healthy.seed,
    })
}
