//! The perceived stack: contrast extraction, margin taper, 3D filtering by
//! S(u, w)/L into JND units and optional foveal weighting.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::csf::{BartenCsf, CsfConstants, TemporalFilters, ViewingConditions};
use crate::error::{bail, Result};
use crate::fft::{frequency_of_index, Dims3, Transform3};

/// Width of the linear margin ramp, pixels.
pub const TAPER_PX: usize = 5;

/// Largest allowed ratio between the imaginary residue of the inverse
/// transform and the RMS of its real part.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// One spatio-temporal frequency sample. `u_radial` combines the two
/// spatial components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyTriple {
    pub u1: f64,
    pub u2: f64,
    pub w: f64,
    pub u_radial: f64,
}

impl FrequencyTriple {
    pub fn new(u1: f64, u2: f64, w: f64) -> Self {
        Self { u1, u2, w, u_radial: libm::sqrt(u1 * u1 + u2 * u2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FovealMode {
    #[default]
    None,
    /// Zero beyond the hard cutoff eccentricity.
    Hard,
    /// Weight by the relative-acuity polynomial.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovealParams {
    /// Eccentricity above which the soft weight is the floor value, deg.
    pub threshold_deg: f64,
    pub floor: f64,
    pub coefficients: [f64; 7],
    pub hard_cutoff_deg: f64,
    /// Use the printed polynomial on the whole range. By default the
    /// polynomial is replaced below [`ACUITY_PEAK_DEG`], where the fit
    /// oscillates through negative and very large values, by a linear ramp
    /// from 1 at the axis to the polynomial's value at that point.
    pub raw_polynomial: bool,
}

/// Local maximum of the acuity polynomial closest to the viewing axis, deg.
pub const ACUITY_PEAK_DEG: f64 = 1.577_348_705_338_805;

impl Default for FovealParams {
    fn default() -> Self {
        Self {
            threshold_deg: 63.5780,
            floor: 0.02,
            coefficients: [
                0.04526296245190,
                4.48579690404659,
                21.9046292071393,
                55.8322547230034,
                58.6385398078192,
                19.7119376682204,
                1.43849397325222,
            ],
            hard_cutoff_deg: 7.0,
            raw_polynomial: false,
        }
    }
}

impl FovealParams {
    /// The acuity polynomial `-Σ b_i q^i` with `q = -1/(α + 0.1)`, evaluated
    /// without the floor or the near-axis ramp.
    pub fn soft_polynomial(&self, alpha: f64) -> f64 {
        let q = -1.0 / (alpha + 0.1);
        // Horner
        -self.coefficients.iter().rev().fold(0.0, |acc, &b| acc * q + b)
    }
}

pub fn foveal_weight(alpha: f64, mode: FovealMode, fp: &FovealParams) -> f64 {
    match mode {
        FovealMode::None => 1.0,
        FovealMode::Hard => {
            if alpha >= fp.hard_cutoff_deg {
                0.0
            } else {
                1.0
            }
        }
        FovealMode::Soft => {
            if alpha > fp.threshold_deg {
                fp.floor
            } else if !fp.raw_polynomial && alpha < ACUITY_PEAK_DEG {
                let peak = fp.soft_polynomial(ACUITY_PEAK_DEG);
                1.0 + (peak - 1.0) * alpha / ACUITY_PEAK_DEG
            } else {
                fp.soft_polynomial(alpha)
            }
        }
    }
}

/// Angle from the viewing axis in degrees, using the flat-field small-angle
/// approximation.
pub fn pixel_eccentricity(px: (f64, f64), center: (f64, f64), ssr: f64) -> f64 {
    let dx = px.0 - center.0;
    let dy = px.1 - center.1;
    libm::sqrt(dx * dx + dy * dy) / ssr
}

/// Pixel on the viewing axis: `(width/2, height/2)`, the same voxel the
/// lesions and observer channels are centered on.
pub fn image_center(dims: Dims3) -> (f64, f64) {
    ((dims.width / 2) as f64, (dims.height / 2) as f64)
}

pub fn mean_luminance(luminance: &[f64]) -> Result<f64> {
    if luminance.is_empty() {
        bail!(Input, "mean luminance of an empty stack");
    }
    Ok(luminance.iter().sum::<f64>() / luminance.len() as f64)
}

/// Per-pixel margin weights of one slice, `min(1, d / 5)` with `d` the
/// distance in pixels to the nearest image edge.
pub fn taper_weights(width: usize, height: usize) -> Result<Vec<f64>> {
    let min = 2 * TAPER_PX + 1;
    if width < min || height < min {
        bail!(Input, "margin taper needs slices of at least {min}x{min}, got {width}x{height}");
    }
    let mut w = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let d = x.min(width - 1 - x).min(y).min(height - 1 - y);
            w.push(if d >= TAPER_PX { 1.0 } else { d as f64 / TAPER_PX as f64 });
        }
    }
    Ok(w)
}

pub fn taper_margins(contrast: &mut [f64], dims: Dims3) -> Result<()> {
    check_len(contrast.len(), dims)?;
    let weights = taper_weights(dims.width, dims.height)?;
    apply_per_slice(contrast, &weights);
    Ok(())
}

fn apply_per_slice(data: &mut [f64], weights: &[f64]) {
    for slice in data.chunks_exact_mut(weights.len()) {
        for (v, w) in slice.iter_mut().zip(weights) {
            *v *= w;
        }
    }
}

fn check_len(len: usize, dims: Dims3) -> Result<()> {
    if len != dims.len() || dims.is_empty() {
        bail!(Input, "buffer of {len} samples does not match {dims:?}");
    }
    Ok(())
}

/// Lowest spatial frequency the model is valid for, `1/(2 X0)`.
pub fn min_valid_frequency(vc: &ViewingConditions) -> f64 {
    0.5 / vc.x0
}

/// Perceived amplitude per unit luminance amplitude, `S(u, |w|)/L`, with the
/// radial frequency clamped from below to the minimum valid frequency.
pub fn transfer_gain(ft: &FrequencyTriple, csf: &BartenCsf) -> f64 {
    let vc = csf.viewing();
    let u = libm::sqrt(ft.u1 * ft.u1 + ft.u2 * ft.u2).max(min_valid_frequency(vc));
    csf.sensitivity(u, libm::fabs(ft.w)) / vc.luminance_l
}

/// Gains for every bin of a `dims` volume in transform order. Spatial axes
/// are sampled at `ssr`, the slice axis at `slice_rate`. The DC bin is left
/// at its model value; see [`Perceiver`] for how it is treated in filtering.
pub fn gain_grid(dims: Dims3, csf: &BartenCsf) -> Vec<f64> {
    let vc = csf.viewing();
    let fx: Vec<f64> = (0..dims.width).map(|k| frequency_of_index(k, dims.width, vc.ssr)).collect();
    let fy: Vec<f64> = (0..dims.height).map(|k| frequency_of_index(k, dims.height, vc.ssr)).collect();
    let mut gains = Vec::with_capacity(dims.len());
    for z in 0..dims.depth {
        let w = frequency_of_index(z, dims.depth, vc.slice_rate);
        for &u2 in &fy {
            for &u1 in &fx {
                gains.push(transfer_gain(&FrequencyTriple::new(u1, u2, w), csf));
            }
        }
    }
    gains
}

/// Forward transform, multiply by `gains`, inverse transform and normalize
/// by the volume size. Fails if the result is not real to within
/// [`IMAG_RESIDUE_TOL`].
pub fn filter_with_gains<T: Transform3>(signal: &[f64], gains: &[f64], dims: Dims3, fft: &mut T) -> Result<Vec<f64>> {
    check_len(signal.len(), dims)?;
    check_len(gains.len(), dims)?;
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf, dims);
    for (c, g) in buf.iter_mut().zip(gains) {
        *c *= g;
    }
    fft.inverse(&mut buf, dims);
    let norm = 1.0 / dims.len() as f64;
    let mut out = Vec::with_capacity(buf.len());
    let mut max_imag = 0.0f64;
    let mut sum_sq = 0.0;
    for c in &buf {
        let re = c.re * norm;
        max_imag = max_imag.max(libm::fabs(c.im * norm));
        sum_sq += re * re;
        out.push(re);
    }
    let rms = libm::sqrt(sum_sq / out.len() as f64);
    if max_imag > IMAG_RESIDUE_TOL * rms {
        bail!(Numerical, "imaginary residue {max_imag:e} exceeds tolerance for real RMS {rms:e}");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerceptConfig {
    pub constants: CsfConstants,
    pub filters: TemporalFilters,
    /// Disable only for diagnostics; the margin taper is part of the model.
    pub no_taper: bool,
    pub foveal_mode: FovealMode,
    pub foveal: FovealParams,
}

/// Real volume in JND units.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceivedStack {
    pub data: Vec<f64>,
    pub dims: Dims3,
    pub vc: ViewingConditions,
    pub foveal_mode: FovealMode,
}

impl PerceivedStack {
    pub fn slice(&self, z: usize) -> &[f64] {
        let n = self.dims.slice_len();
        &self.data[z * n..(z + 1) * n]
    }
}

/// Applies the perceptual filter to any number of stacks sharing one
/// geometry and set of viewing conditions. The gain grid, taper and foveal
/// weights are computed once; a `Perceiver` is immutable and can be shared
/// between threads.
#[derive(Debug, Clone)]
pub struct Perceiver {
    dims: Dims3,
    vc: ViewingConditions,
    gains: Vec<f64>,
    taper: Option<Vec<f64>>,
    foveal: Option<Vec<f64>>,
    foveal_mode: FovealMode,
}

impl Perceiver {
    /// `vc.luminance_l` is the L used in S(u, w)/L; `vc.x0` must equal
    /// `width / ssr`.
    pub fn new(dims: Dims3, vc: ViewingConditions, config: &PerceptConfig) -> Result<Self> {
        vc.validate()?;
        if dims.is_empty() {
            bail!(Input, "empty stack geometry {dims:?}");
        }
        let x0 = dims.width as f64 / vc.ssr;
        if libm::fabs(vc.x0 - x0) > 1e-9 * x0 {
            bail!(Input, "X0 = {} does not match width {} at ssr {}", vc.x0, dims.width, vc.ssr);
        }
        let csf = BartenCsf::new(vc, config.constants)?.with_filters(config.filters);
        let mut gains = gain_grid(dims, &csf);
        // The contrast signal has no mean by definition; the taper would
        // otherwise leak a DC term into the output.
        gains[0] = 0.0;
        let taper = if config.no_taper { None } else { Some(taper_weights(dims.width, dims.height)?) };
        let foveal = match config.foveal_mode {
            FovealMode::None => None,
            mode => {
                let center = image_center(dims);
                let mut w = Vec::with_capacity(dims.slice_len());
                for y in 0..dims.height {
                    for x in 0..dims.width {
                        let a = pixel_eccentricity((x as f64, y as f64), center, vc.ssr);
                        w.push(foveal_weight(a, mode, &config.foveal));
                    }
                }
                Some(w)
            }
        };
        Ok(Self { dims, vc, gains, taper, foveal, foveal_mode: config.foveal_mode })
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn viewing(&self) -> &ViewingConditions {
        &self.vc
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Taper and filter a contrast volume (steps after mean subtraction and
    /// before foveal weighting). Linear in `contrast`.
    pub fn filter_contrast<T: Transform3>(&self, contrast: &[f64], fft: &mut T) -> Result<Vec<f64>> {
        check_len(contrast.len(), self.dims)?;
        match &self.taper {
            Some(w) => {
                let mut tapered = contrast.to_vec();
                apply_per_slice(&mut tapered, w);
                filter_with_gains(&tapered, &self.gains, self.dims, fft)
            }
            None => filter_with_gains(contrast, &self.gains, self.dims, fft),
        }
    }

    pub fn perceive<T: Transform3>(&self, luminance: &[f64], fft: &mut T) -> Result<PerceivedStack> {
        check_len(luminance.len(), self.dims)?;
        let mean = mean_luminance(luminance)?;
        let contrast: Vec<f64> = luminance.iter().map(|&v| v - mean).collect();
        let mut data = self.filter_contrast(&contrast, fft)?;
        if let Some(w) = &self.foveal {
            apply_per_slice(&mut data, w);
        }
        Ok(PerceivedStack { data, dims: self.dims, vc: self.vc, foveal_mode: self.foveal_mode })
    }
}

/// One-off perceptual filtering of a luminance stack. The CSF is evaluated
/// at the stack's own mean luminance.
pub fn apply_stcsf<T: Transform3>(
    luminance: &[f64],
    dims: Dims3,
    vc: &ViewingConditions,
    config: &PerceptConfig,
    fft: &mut T,
) -> Result<PerceivedStack> {
    let vc = ViewingConditions { luminance_l: mean_luminance(luminance)?, ..*vc };
    Perceiver::new(dims, vc, config)?.perceive(luminance, fft)
}
