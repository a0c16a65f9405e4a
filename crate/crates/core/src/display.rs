//! Display transfer and viewing geometry.

use crate::error::{bail, Result};

/// How stored codes map to emitted luminance between the two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LuminanceMapping {
    /// Luminance linear in code value.
    #[default]
    Linear,
    /// Log-luminance linear in code value.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayModel {
    pub l_min: f64,
    pub l_max: f64,
    pub bit_depth: u32,
    pub mapping: LuminanceMapping,
}

impl Default for DisplayModel {
    fn default() -> Self {
        Self { l_min: 1.05, l_max: 1000.0, bit_depth: 10, mapping: LuminanceMapping::Linear }
    }
}

impl DisplayModel {
    pub fn new(l_min: f64, l_max: f64, bit_depth: u32, mapping: LuminanceMapping) -> Result<Self> {
        let dm = Self { l_min, l_max, bit_depth, mapping };
        dm.validate()?;
        Ok(dm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_min > 0.0 && self.l_min < self.l_max && self.l_max.is_finite()) {
            bail!(Input, "display needs 0 < l_min < l_max, got {} and {}", self.l_min, self.l_max);
        }
        if !(1..=16).contains(&self.bit_depth) {
            bail!(Input, "display bit depth must be in 1..=16, got {}", self.bit_depth);
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.bit_depth) - 1
    }

    pub fn code_to_luminance(&self, code: u32) -> Result<f64> {
        let max = self.max_code();
        if code > max {
            bail!(Input, "code {code} outside the {}-bit range", self.bit_depth);
        }
        Ok(self.luminance_unchecked(code, max))
    }

    /// Luminance for every code of the display, indexed by code.
    pub fn lookup_table(&self) -> alloc::vec::Vec<f64> {
        let max = self.max_code();
        (0..=max).map(|c| self.luminance_unchecked(c, max)).collect()
    }

    fn luminance_unchecked(&self, code: u32, max: u32) -> f64 {
        // endpoints are returned verbatim so they are exact for both mappings
        if code == 0 {
            return self.l_min;
        }
        if code == max {
            return self.l_max;
        }
        let t = code as f64 / max as f64;
        match self.mapping {
            LuminanceMapping::Linear => self.l_min + t * (self.l_max - self.l_min),
            LuminanceMapping::Log => self.l_min * libm::pow(self.l_max / self.l_min, t),
        }
    }
}

/// Apparent image size in degrees for an image `width_px` wide viewed at
/// `ssr` pixels per degree.
pub fn viewing_geometry(width_px: usize, ssr: f64) -> Result<f64> {
    if width_px == 0 || !(ssr > 0.0 && ssr.is_finite()) {
        bail!(Input, "viewing geometry needs width > 0 and ssr > 0, got {width_px} and {ssr}");
    }
    Ok(width_px as f64 / ssr)
}
