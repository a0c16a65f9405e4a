//! Experiment configuration: one TOML file with the sections `display`,
//! `percept`, `observer`, `trial`, `generator` and `sweep`. Every key is
//! optional; missing keys take the defaults documented on each field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stcsf_core::csf::{CsfConstants, TemporalFilters};
use stcsf_core::display::{DisplayModel, LuminanceMapping};
use stcsf_core::observer::{Combiner, RidgePolicy};
use stcsf_core::percept::{FovealMode, FovealParams, PerceptConfig};
use stcsf_core::stacks::{LesionSpec, StackGeometry, Texture};
use stcsf_core::trial::{ObserverConfig, PipelineConfig};

use crate::error::{Result, SimError};
use crate::generate::DatasetSpec;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub display: DisplaySection,
    pub percept: PerceptSection,
    pub observer: ObserverSection,
    pub trial: TrialSection,
    pub generator: GeneratorSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisplaySection {
    /// Luminance of code 0, cd/m². Default 1.05.
    pub l_min: f64,
    /// Luminance of the highest code, cd/m². Default 1000.
    pub l_max: f64,
    /// Default `linear`.
    pub mapping: Mapping,
}

impl Default for DisplaySection {
    fn default() -> Self {
        let d = DisplayModel::default();
        Self { l_min: d.l_min, l_max: d.l_max, mapping: Mapping::Linear }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Foveal {
    None,
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Temporal {
    Barten,
    Unity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptSection {
    /// Spatial sampling rate, pixel/deg. Default 7.
    pub ssr: f64,
    /// Browsing speed, slice/s. Default 25.
    pub slice_rate: f64,
    /// Default `none`.
    pub foveal: Foveal,
    /// Use the printed acuity polynomial near the axis instead of the
    /// linear ramp. Default false.
    pub foveal_raw_polynomial: bool,
    /// Taper the image margins before filtering. Default true.
    pub taper: bool,
    /// `unity` removes the temporal filters (spatial-only CSF). Default
    /// `barten`.
    pub temporal: Temporal,
}

impl Default for PerceptSection {
    fn default() -> Self {
        Self {
            ssr: 7.0,
            slice_rate: 25.0,
            foveal: Foveal::None,
            foveal_raw_polynomial: false,
            taper: true,
            temporal: Temporal::Barten,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    Hotelling,
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverSection {
    /// Default 15.
    pub n_channels: usize,
    /// Laguerre-Gauss spread, pixels. Default 10.
    pub spread: f64,
    /// Default `hotelling`.
    pub combiner: CombinerKind,
    /// Slices read per stack; empty (default) reads the lesion slices.
    pub slice_range: Vec<usize>,
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self { n_channels: 15, spread: 10.0, combiner: CombinerKind::Hotelling, slice_range: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    /// Number of virtual readers. Default 4.
    pub n_readers: usize,
    /// Seed of the dataset split. Default 1.
    pub seed: u64,
}

impl Default for TrialSection {
    fn default() -> Self {
        Self { n_readers: 4, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureKind {
    PowerLaw,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lesion {
    Microcalc,
    Mass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    /// `a`: 64×64×41 at 1 mm; `b` (default): 64×64×32 at 0.2 mm.
    pub preset: Preset,
    /// Healthy/lesion pairs. Default 200.
    pub n_pairs: usize,
    /// Default `power_law`.
    pub texture: TextureKind,
    /// Power-law exponent of the background spectrum. Default 3.
    pub beta: f64,
    /// Default `microcalc`.
    pub lesion: Lesion,
    /// Peak lesion value, code units. Default 30.
    pub amplitude: f64,
    /// Lesion diameter, pixels; default 8 (microcalc) or 40 (mass).
    pub diameter_px: Option<f64>,
    /// Depth spread, slices; default 0.5 (microcalc) or 3 (mass).
    pub sigma_z: Option<f64>,
    /// Base seed of the backgrounds. Default 0.
    pub seed: u64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            preset: Preset::B,
            n_pairs: 200,
            texture: TextureKind::PowerLaw,
            beta: 3.0,
            lesion: Lesion::Microcalc,
            amplitude: 30.0,
            diameter_px: None,
            sigma_z: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SliceRate,
    Ssr,
    LMax,
    ContrastRatio,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SliceRate => "slice_rate",
            Axis::Ssr => "ssr",
            Axis::LMax => "l_max",
            Axis::ContrastRatio => "contrast_ratio",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "slice_rate" => Ok(Axis::SliceRate),
            "ssr" => Ok(Axis::Ssr),
            "l_max" => Ok(Axis::LMax),
            "contrast_ratio" => Ok(Axis::ContrastRatio),
            _ => Err(SimError::Config(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Default `slice_rate`.
    pub axis: Axis,
    /// Default 1, 5, 10, …, 45.
    pub values: Vec<f64>,
    /// Run the sweep points concurrently. Default false.
    pub parallel: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        let mut values = vec![1.0];
        values.extend((1..=9).map(|k| 5.0 * f64::from(k)));
        Self { axis: Axis::SliceRate, values, parallel: false }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// The configuration with one swept parameter replaced.
    /// `contrast_ratio` keeps `l_max` and moves `l_min`; `l_max` keeps the
    /// contrast ratio.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            Axis::SliceRate => c.percept.slice_rate = value,
            Axis::Ssr => c.percept.ssr = value,
            Axis::LMax => {
                let ratio = c.display.l_max / c.display.l_min;
                c.display.l_max = value;
                c.display.l_min = value / ratio;
            }
            Axis::ContrastRatio => c.display.l_min = c.display.l_max / value,
        }
        c
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let d = &self.display;
        let mapping = match d.mapping {
            Mapping::Linear => LuminanceMapping::Linear,
            Mapping::Log => LuminanceMapping::Log,
        };
        let bit_depth = self.geometry().bit_depth;
        let display = DisplayModel::new(d.l_min, d.l_max, bit_depth, mapping)?;
        let p = &self.percept;
        let percept = PerceptConfig {
            constants: CsfConstants::default(),
            filters: match p.temporal {
                Temporal::Barten => TemporalFilters::Barten,
                Temporal::Unity => TemporalFilters::Unity,
            },
            no_taper: !p.taper,
            foveal_mode: match p.foveal {
                Foveal::None => FovealMode::None,
                Foveal::Hard => FovealMode::Hard,
                Foveal::Soft => FovealMode::Soft,
            },
            foveal: FovealParams { raw_polynomial: p.foveal_raw_polynomial, ..FovealParams::default() },
        };
        let o = &self.observer;
        let observer = ObserverConfig {
            n_channels: o.n_channels,
            spread: o.spread,
            combiner: match o.combiner {
                CombinerKind::Hotelling => Combiner::Hotelling,
                CombinerKind::Max => Combiner::Max,
                CombinerKind::Mean => Combiner::Mean,
            },
            slice_range: if o.slice_range.is_empty() { None } else { Some(o.slice_range.clone()) },
            ridge: RidgePolicy::default(),
        };
        Ok(PipelineConfig { display, ssr: p.ssr, slice_rate: p.slice_rate, percept, observer })
    }

    pub fn geometry(&self) -> StackGeometry {
        match self.generator.preset {
            Preset::A => StackGeometry::DATASET_A,
            Preset::B => StackGeometry::DATASET_B,
        }
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let g = &self.generator;
        let texture = match g.texture {
            TextureKind::PowerLaw => Texture::PowerLaw { beta: g.beta },
            TextureKind::White => Texture::White,
        };
        let mut lesion = match g.lesion {
            Lesion::Microcalc => LesionSpec::microcalcification(g.amplitude),
            Lesion::Mass => LesionSpec::mass(g.amplitude),
        };
        if let Some(d) = g.diameter_px {
            lesion.diameter_px = d;
        }
        if let Some(s) = g.sigma_z {
            lesion.sigma_z = s;
        }
        let geometry = self.geometry();
        lesion.validate(&geometry)?;
        Ok(DatasetSpec { geometry, n_pairs: g.n_pairs, texture, lesion, seed: g.seed })
    }
}
