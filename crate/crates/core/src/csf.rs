//! Barten's spatio-temporal contrast sensitivity model.
//!
//! Spatial frequencies are in cycles/degree, temporal frequencies in Hz,
//! luminance in cd/m² and angles in degrees unless a field says otherwise.

use core::f64::consts::PI;

use crate::error::{bail, Result};

/// Physiological constants of the model. `Default` gives the standard set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsfConstants {
    /// Signal-to-noise ratio needed for detection.
    pub k: f64,
    /// Quantum efficiency of the eye.
    pub eta: f64,
    /// Spectral density of the neural noise, s·deg².
    pub phi0: f64,
    /// Maximum angular integration extent, deg.
    pub x_max: f64,
    /// Maximum number of integrated cycles.
    pub n_max: f64,
    /// Integration time, s.
    pub t_int: f64,
    /// Photon conversion factor, photons/(s·deg²·Td).
    pub p: f64,
    /// Neural part of the line-spread function, arcmin.
    pub sigma0: f64,
    /// Growth of the line-spread with pupil size, arcmin/mm.
    pub c_ab: f64,
    /// Corner frequency of lateral inhibition, cyc/deg.
    pub u0_lat: f64,
    pub n1: f64,
    pub n2: f64,
    /// Base time constant of the first temporal filter, s.
    pub tau10: f64,
    /// Base time constant of the second temporal filter, s.
    pub tau20: f64,
}

impl Default for CsfConstants {
    fn default() -> Self {
        Self {
            k: 3.0,
            eta: 0.03,
            phi0: 3e-8,
            x_max: 12.0,
            n_max: 15.0,
            t_int: 0.1,
            p: 1.285e6,
            sigma0: 0.5,
            c_ab: 0.08,
            u0_lat: 7.0,
            n1: 7.0,
            n2: 4.0,
            tau10: 32e-3,
            tau20: 18e-3,
        }
    }
}

impl CsfConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k", self.k),
            ("eta", self.eta),
            ("phi0", self.phi0),
            ("x_max", self.x_max),
            ("n_max", self.n_max),
            ("t_int", self.t_int),
            ("p", self.p),
            ("sigma0", self.sigma0),
            ("c_ab", self.c_ab),
            ("u0_lat", self.u0_lat),
            ("n1", self.n1),
            ("n2", self.n2),
            ("tau10", self.tau10),
            ("tau20", self.tau20),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                bail!(Domain, "constant {name} must be finite and positive, got {v}");
            }
        }
        Ok(())
    }
}

/// What the observer is looking at and how fast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewingConditions {
    /// Space-time average luminance of the object, cd/m².
    pub luminance_l: f64,
    /// Apparent image size, deg.
    pub x0: f64,
    /// Spatial sampling rate, pixel/deg.
    pub ssr: f64,
    /// Browsing speed, slice/s.
    pub slice_rate: f64,
}

impl ViewingConditions {
    pub fn new(luminance_l: f64, x0: f64, ssr: f64, slice_rate: f64) -> Result<Self> {
        let vc = Self { luminance_l, x0, ssr, slice_rate };
        vc.validate()?;
        Ok(vc)
    }

    /// Conditions for an image `width_px` pixels wide; the apparent size is
    /// derived from the sampling rate.
    pub fn for_width(luminance_l: f64, width_px: usize, ssr: f64, slice_rate: f64) -> Result<Self> {
        let x0 = crate::display::viewing_geometry(width_px, ssr)?;
        Self::new(luminance_l, x0, ssr, slice_rate)
    }

    pub fn validate(&self) -> Result<()> {
        let fields =
            [("luminance_l", self.luminance_l), ("x0", self.x0), ("ssr", self.ssr), ("slice_rate", self.slice_rate)];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                bail!(Domain, "viewing condition {name} must be finite and positive, got {v}");
            }
        }
        Ok(())
    }
}

/// Quantities of the eye that depend on the viewing conditions but not on
/// the stimulus frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedOptics {
    /// Pupil diameter, mm.
    pub pupil_d: f64,
    /// Retinal illuminance, Td.
    pub retinal_e: f64,
    /// Line-spread standard deviation, deg.
    pub sigma: f64,
    /// Diameter of a disc with the same area as the object, deg.
    pub field_d: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl DerivedOptics {
    pub fn new(vc: &ViewingConditions, c: &CsfConstants) -> Result<Self> {
        vc.validate()?;
        let pupil_d = pupil_diameter(vc)?;
        let retinal_e = retinal_illuminance(vc, pupil_d);
        let field_d = 2.0 * vc.x0 / libm::sqrt(PI);
        let (tau1, tau2) = temporal_time_constants(retinal_e, field_d, c);
        Ok(Self { pupil_d, retinal_e, sigma: line_spread_sigma(pupil_d, c), field_d, tau1, tau2 })
    }
}

pub fn pupil_diameter(vc: &ViewingConditions) -> Result<f64> {
    let ratio = vc.luminance_l * vc.x0 * vc.x0 / (40.0 * 40.0);
    let d = 5.0 - 3.0 * libm::tanh(0.4 * libm::log(ratio));
    if !d.is_finite() {
        bail!(Domain, "pupil diameter is not finite for L = {}, X0 = {}", vc.luminance_l, vc.x0);
    }
    Ok(d)
}

/// Retinal illuminance in Troland for pupil diameter `d` (mm), including
/// the Stiles-Crawford correction.
pub fn retinal_illuminance(vc: &ViewingConditions, d: f64) -> f64 {
    let a = d / 9.7;
    let b = d / 12.4;
    let b2 = b * b;
    PI * d * d * vc.luminance_l / 4.0 * (1.0 - a * a + b2 * b2)
}

/// Line-spread standard deviation in degrees (σ0 and C_ab are in arcmin).
pub fn line_spread_sigma(d: f64, c: &CsfConstants) -> f64 {
    let chroma = c.c_ab * d;
    libm::sqrt(c.sigma0 * c.sigma0 + chroma * chroma) / 60.0
}

pub fn optical_mtf(u: f64, d: f64, c: &CsfConstants) -> f64 {
    mtf_for_sigma(u, line_spread_sigma(d, c))
}

fn mtf_for_sigma(u: f64, sigma: f64) -> f64 {
    let x = PI * sigma * u;
    libm::exp(-2.0 * x * x)
}

pub fn lateral_inhibition(u: f64, c: &CsfConstants) -> f64 {
    let r = u / c.u0_lat;
    1.0 - libm::sqrt(1.0 - libm::exp(-(r * r)))
}

/// Adapted time constants `(tau1, tau2)` for retinal illuminance `e` and
/// object diameter `d_field` (deg).
pub fn temporal_time_constants(e: f64, d_field: f64, c: &CsfConstants) -> (f64, f64) {
    let tau1 = c.tau10 / (1.0 + 0.55 * libm::log(1.0 + libm::pow(1.0 + d_field, 0.6) * e / 3.5));
    let tau2 = c.tau20 / (1.0 + 0.37 * libm::log(1.0 + libm::pow(1.0 + d_field / 3.2, 5.0) * e / 120.0));
    (tau1, tau2)
}

pub fn temporal_filter(w: f64, tau: f64, order: f64) -> f64 {
    let x = 2.0 * PI * tau * w;
    libm::sqrt(libm::pow(1.0 + x * x, -order))
}

/// Whether the temporal filters take part in the evaluation. `Unity`
/// substitutes `H1 = H2 = 1`, which reduces the model to the spatial CSF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalFilters {
    #[default]
    Barten,
    Unity,
}

/// The contrast sensitivity model bound to one set of viewing conditions.
///
/// Everything independent of frequency is computed once in [`BartenCsf::new`],
/// so evaluating on a whole frequency grid only costs the frequency-dependent
/// factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BartenCsf {
    constants: CsfConstants,
    vc: ViewingConditions,
    optics: DerivedOptics,
    filters: TemporalFilters,
    // 1/X0² + 1/Xmax², the frequency-independent part of the integration term.
    inv_area: f64,
    photon_noise: f64,
}

impl BartenCsf {
    pub fn new(vc: ViewingConditions, constants: CsfConstants) -> Result<Self> {
        constants.validate()?;
        let optics = DerivedOptics::new(&vc, &constants)?;
        Ok(Self {
            constants,
            vc,
            optics,
            filters: TemporalFilters::Barten,
            inv_area: 1.0 / (vc.x0 * vc.x0) + 1.0 / (constants.x_max * constants.x_max),
            photon_noise: 1.0 / (constants.eta * constants.p * optics.retinal_e),
        })
    }

    pub fn with_filters(mut self, filters: TemporalFilters) -> Self {
        self.filters = filters;
        self
    }

    pub fn optics(&self) -> &DerivedOptics {
        &self.optics
    }

    pub fn viewing(&self) -> &ViewingConditions {
        &self.vc
    }

    pub fn constants(&self) -> &CsfConstants {
        &self.constants
    }

    /// S(u, w). Both frequencies must be non-negative.
    pub fn sensitivity(&self, u: f64, w: f64) -> f64 {
        let (h1, h2) = match self.filters {
            TemporalFilters::Barten => (
                temporal_filter(w, self.optics.tau1, self.constants.n1),
                temporal_filter(w, self.optics.tau2, self.constants.n2),
            ),
            TemporalFilters::Unity => (1.0, 1.0),
        };
        self.sensitivity_with(u, h1, h2)
    }

    /// The spatial-only CSF, i.e. S with both temporal filters set to one.
    pub fn spatial(&self, u: f64) -> f64 {
        self.sensitivity_with(u, 1.0, 1.0)
    }

    fn sensitivity_with(&self, u: f64, h1: f64, h2: f64) -> f64 {
        let c = &self.constants;
        let m_opt = mtf_for_sigma(u, self.optics.sigma);
        let f = lateral_inhibition(u, c);
        let integration = 2.0 / c.t_int * (self.inv_area + u * u / (c.n_max * c.n_max));
        let neural = h1 * (1.0 - h2 * f);
        let noise = self.photon_noise + c.phi0 / (neural * neural);
        m_opt / (c.k * libm::sqrt(integration * noise))
    }
}

/// Free-function form of [`BartenCsf::sensitivity`].
pub fn stcsf(u: f64, w: f64, vc: &ViewingConditions, c: &CsfConstants) -> Result<f64> {
    check_frequency(u, w)?;
    Ok(BartenCsf::new(*vc, *c)?.sensitivity(u, w))
}

/// Free-function form of [`BartenCsf::spatial`].
pub fn spatial_csf(u: f64, vc: &ViewingConditions, c: &CsfConstants) -> Result<f64> {
    check_frequency(u, 0.0)?;
    Ok(BartenCsf::new(*vc, *c)?.spatial(u))
}

fn check_frequency(u: f64, w: f64) -> Result<()> {
    if !(u >= 0.0 && w >= 0.0 && u.is_finite() && w.is_finite()) {
        bail!(Domain, "frequencies must be finite and non-negative, got u = {u}, w = {w}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Golden values from tests/oracles/barten_mp.py (mpmath, 50 digits).
    const D_FIG1: f64 = 7.309_328_379_458_173;
    const E_FIG1: f64 = 464.013_045_551_909_6;
    const E_D5_L20: f64 = 298.739_071_817_306_7;
    const TAU1_FIG1: f64 = 0.007_744_152_912_120_078;
    const TAU2_FIG1: f64 = 0.006_731_979_204_799_530_5;
    const MOPT_U10_D731: f64 = 0.722_819_740_377_812_3;
    const S_2_0: f64 = 258.480_335_231_879_87;
    const S_2_10: f64 = 216.092_742_988_280_5;
    const S_05_4: f64 = 111.440_177_695_876_22;

    fn fig1() -> ViewingConditions {
        ViewingConditions::new(20.0, 2.5, 64.0 / 2.5, 10.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn defaults_are_the_standard_constants() {
        let c = CsfConstants::default();
        assert_eq!(c, CsfConstants::default());
        assert_eq!((c.k, c.eta, c.phi0), (3.0, 0.03, 3e-8));
        assert_eq!((c.x_max, c.n_max, c.t_int, c.p), (12.0, 15.0, 0.1, 1.285e6));
        assert_eq!((c.sigma0, c.c_ab, c.u0_lat), (0.5, 0.08, 7.0));
        assert_eq!((c.n1, c.n2, c.tau10, c.tau20), (7.0, 4.0, 32e-3, 18e-3));
        c.validate().unwrap();
    }

    #[test]
    fn constants_reject_non_positive() {
        let c = CsfConstants { eta: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn pupil_is_five_at_unit_ratio() {
        let vc = ViewingConditions::new(16.0, 10.0, 6.4, 1.0).unwrap();
        assert_eq!(pupil_diameter(&vc).unwrap(), 5.0);
    }

    #[test]
    fn pupil_golden_and_asymptote() {
        assert!(rel(pupil_diameter(&fig1()).unwrap(), D_FIG1) < 1e-12);
        let bright = ViewingConditions::new(1e30, 2.5, 25.6, 10.0).unwrap();
        assert!((pupil_diameter(&bright).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn pupil_domain_error_on_degenerate_luminance() {
        let vc = ViewingConditions { luminance_l: f64::NAN, x0: 2.5, ssr: 1.0, slice_rate: 1.0 };
        assert!(pupil_diameter(&vc).is_err());
        assert!(ViewingConditions::new(0.0, 2.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn retinal_illuminance_cases() {
        let vc = fig1();
        assert!(rel(retinal_illuminance(&vc, 5.0), E_D5_L20) < 1e-12);
        let dark = ViewingConditions { luminance_l: 0.0, ..vc };
        assert_eq!(retinal_illuminance(&dark, 5.0), 0.0);
        let double = ViewingConditions { luminance_l: 40.0, ..vc };
        assert_eq!(retinal_illuminance(&double, 5.0), 2.0 * retinal_illuminance(&vc, 5.0));
    }

    #[test]
    fn optical_mtf_cases() {
        let c = CsfConstants::default();
        assert_eq!(optical_mtf(0.0, 5.0, &c), 1.0);
        let vals: alloc::vec::Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&u| optical_mtf(u, 5.0, &c)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(rel(optical_mtf(10.0, 7.31, &c), MOPT_U10_D731) < 1e-12);
    }

    #[test]
    fn lateral_inhibition_cases() {
        let c = CsfConstants::default();
        assert_eq!(lateral_inhibition(0.0, &c), 1.0);
        assert!(lateral_inhibition(1e3, &c).abs() < 1e-15);
        let expected = 1.0 - libm::sqrt(1.0 - libm::exp(-1.0));
        assert!((lateral_inhibition(7.0, &c) - expected).abs() < 1e-15);
    }

    #[test]
    fn time_constants() {
        let c = CsfConstants::default();
        assert_eq!(temporal_time_constants(0.0, 2.8, &c), (c.tau10, c.tau20));
        let (a1, a2) = temporal_time_constants(10.0, 2.8, &c);
        let (b1, b2) = temporal_time_constants(100.0, 2.8, &c);
        assert!(b1 < a1 && b2 < a2);
        let optics = DerivedOptics::new(&fig1(), &c).unwrap();
        assert!(rel(optics.retinal_e, E_FIG1) < 1e-12);
        assert!(rel(optics.tau1, TAU1_FIG1) < 1e-12);
        assert!(rel(optics.tau2, TAU2_FIG1) < 1e-12);
    }

    #[test]
    fn temporal_filter_cases() {
        assert_eq!(temporal_filter(0.0, 0.01, 7.0), 1.0);
        let tau = 0.02;
        let w = 1.0 / (2.0 * PI * tau);
        assert!(rel(temporal_filter(w, tau, 7.0), libm::pow(2.0, -3.5)) < 1e-12);
        for i in 0..200 {
            let w = i as f64 * 0.25;
            assert!(temporal_filter(w, tau, 7.0) <= temporal_filter(w, tau, 4.0));
        }
    }

    #[test]
    fn stcsf_golden_values() {
        let c = CsfConstants::default();
        let vc = fig1();
        assert!(rel(stcsf(2.0, 0.0, &vc, &c).unwrap(), S_2_0) < 1e-10);
        assert!(rel(stcsf(2.0, 10.0, &vc, &c).unwrap(), S_2_10) < 1e-10);
        assert!(rel(stcsf(0.5, 4.0, &vc, &c).unwrap(), S_05_4) < 1e-10);
    }

    #[test]
    fn stcsf_rejects_negative_frequency() {
        let c = CsfConstants::default();
        assert!(stcsf(-1.0, 0.0, &fig1(), &c).is_err());
        assert!(stcsf(1.0, f64::NAN, &fig1(), &c).is_err());
    }

    #[test]
    fn unity_filters_remove_temporal_dependence() {
        let m = BartenCsf::new(fig1(), CsfConstants::default()).unwrap().with_filters(TemporalFilters::Unity);
        for u in [0.5, 2.0, 8.0] {
            let s0 = m.sensitivity(u, 0.0);
            for w in [0.3, 5.0, 40.0] {
                assert_eq!(m.sensitivity(u, w).to_bits(), s0.to_bits());
            }
            assert_eq!(m.spatial(u).to_bits(), s0.to_bits());
        }
    }

    #[test]
    fn band_pass_at_low_and_low_pass_at_high_spatial_frequency() {
        let m = BartenCsf::new(fig1(), CsfConstants::default()).unwrap();
        let argmax = |u: f64| {
            (0..=80)
                .map(|i| i as f64 * 0.5)
                .fold((0.0, f64::MIN), |best, w| {
                    let s = m.sensitivity(u, w);
                    if s > best.1 {
                        (w, s)
                    } else {
                        best
                    }
                })
                .0
        };
        assert!(argmax(0.1) >= 1.0);
        assert_eq!(argmax(8.0), 0.0);
    }

    #[test]
    fn spatial_csf_peak_and_falloff() {
        let m = BartenCsf::new(fig1(), CsfConstants::default()).unwrap();
        // log grid 0.1 .. 60 cyc/deg
        let grid: alloc::vec::Vec<f64> = (0..=400).map(|i| 0.1 * libm::pow(600.0, i as f64 / 400.0)).collect();
        let (peak_u, peak) =
            grid.iter().map(|&u| (u, m.spatial(u))).fold((0.0, f64::MIN), |b, x| if x.1 > b.1 { x } else { b });
        assert!(peak_u > 1.0 && peak_u < 8.0, "peak at {peak_u}");
        assert!(m.spatial(60.0) < 0.01 * peak);
        assert!(m.spatial(0.1) < peak && m.spatial(60.0) < peak);
    }

    #[test]
    fn sensitivity_at_dc_is_zero_and_finite() {
        let m = BartenCsf::new(fig1(), CsfConstants::default()).unwrap();
        let s = m.sensitivity(0.0, 0.0);
        assert!(s.is_finite() && s >= 0.0);
    }
}
