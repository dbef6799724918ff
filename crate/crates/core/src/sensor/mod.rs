//! Sensor model: geometry, pixel parameters, event/frame records and the DVS
//! and APS simulators.
//!
//! Subpixel coordinates `(x, y)` are global sensor coordinates; the filter
//! mosaic repeats a fixed 2x2 pattern so a macropixel `(X, Y)` owns the four
//! subpixels at `(2X..2X+1, 2Y..2Y+1)` with all four filter orientations.

mod aps;
mod dvs;
pub mod signal;
mod stimulus;

pub use aps::simulate_aps;
pub use dvs::{signal_events, simulate_dvs, DvsSimulator};
pub use signal::{FluxModel, PixelSignal};
pub use stimulus::{eval_stimulus, FieldPatch, Stimulus};

use thiserror::Error;

use crate::polarization::{FilterAngle, PolError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sensor dimensions must be even and nonzero, got {width}x{height}")]
    InvalidGeometry { width: u16, height: u16 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("stimulus flux is not positive at pixel ({x},{y}); log intensity undefined")]
    NonPositiveFlux { x: u16, y: u16 },
    #[error("region {0:?} does not fit the sensor")]
    RegionOutOfBounds(PixelRect),
    #[error(transparent)]
    Pol(#[from] PolError),
}

/// Rectangular subpixel region, used both for full frames and cropped
/// simulation windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u16,
    pub y0: u16,
    pub width: u16,
    pub height: u16,
}

impl PixelRect {
    pub fn new(x0: u16, y0: u16, width: u16, height: u16) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
        }
    }

    /// Square region of `side` subpixels centered on the sensor, snapped to
    /// even coordinates so it covers whole macropixels.
    pub fn centered(geom: &SensorGeometry, side: u16) -> Self {
        let side = side.min(geom.width).min(geom.height);
        let x0 = ((geom.width - side) / 2) & !1;
        let y0 = ((geom.height - side) / 2) & !1;
        Self::new(x0, y0, side, side)
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major index of a contained pixel.
    pub fn index_of(&self, x: u16, y: u16) -> usize {
        debug_assert!(self.contains(x, y));
        (y - self.y0) as usize * self.width as usize + (x - self.x0) as usize
    }

    pub fn iter_pixels(&self) -> impl Iterator<Item = (u16, u16)> + '_ {
        let (x0, y0, w, h) = (self.x0, self.y0, self.width, self.height);
        (y0..y0 + h).flat_map(move |y| (x0..x0 + w).map(move |x| (x, y)))
    }
}

/// Sensor array size plus the fixed 2x2 filter mosaic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    width: u16,
    height: u16,
}

impl SensorGeometry {
    pub const DEFAULT_WIDTH: u16 = 346;
    pub const DEFAULT_HEIGHT: u16 = 260;
    /// Identifier of the mosaic arrangement below, recorded in event files.
    pub const MOSAIC_CODE: u8 = 0;

    pub fn new(width: u16, height: u16) -> Result<Self, SimError> {
        if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
            return Err(SimError::InvalidGeometry { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    pub fn full_rect(&self) -> PixelRect {
        PixelRect::new(0, 0, self.width, self.height)
    }

    /// Mosaic orientation of a subpixel. The repeating 2x2 cell is
    /// `[0, 45; 135, 90]` degrees: a convention, the physical arrangement is
    /// not uniquely fixed by the hardware docs.
    pub fn filter_at(&self, x: u16, y: u16) -> FilterAngle {
        match (x % 2, y % 2) {
            (0, 0) => FilterAngle::Deg0,
            (1, 0) => FilterAngle::Deg45,
            (0, 1) => FilterAngle::Deg135,
            _ => FilterAngle::Deg90,
        }
    }
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            width: Self::DEFAULT_WIDTH,
            height: Self::DEFAULT_HEIGHT,
        }
    }
}

/// DVS pixel behavior: nominal thresholds, per-pixel mismatch, leak noise,
/// refractory period and the optional photoreceptor lowpass.
#[derive(Debug, Clone, PartialEq)]
pub struct DvsPixelParams {
    /// Nominal ON threshold in log-intensity units.
    pub theta_on: f64,
    /// Nominal OFF threshold in log-intensity units.
    pub theta_off: f64,
    /// Relative 1-sigma threshold mismatch, drawn log-normally once per pixel.
    pub threshold_sigma: f64,
    /// Poisson rate of background leak ON events, per pixel.
    pub leak_rate_hz: f64,
    /// Dead time after each event, per pixel.
    pub refractory_us: u64,
    /// First-order photoreceptor lowpass cutoff. `None` disables it and keeps
    /// event timing exact to the closed-form threshold crossings.
    pub photoreceptor_cutoff_hz: Option<f64>,
    pub rng_seed: u64,
}

impl Default for DvsPixelParams {
    fn default() -> Self {
        Self {
            theta_on: 0.14,
            theta_off: 0.14,
            threshold_sigma: 0.035,
            leak_rate_hz: 0.7,
            refractory_us: 100,
            photoreceptor_cutoff_hz: None,
            rng_seed: 1,
        }
    }
}

impl DvsPixelParams {
    /// Mismatch-free, noise-free pixel with the nominal thresholds.
    pub fn ideal() -> Self {
        Self {
            threshold_sigma: 0.0,
            leak_rate_hz: 0.0,
            refractory_us: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.theta_on > 0.0) || !(self.theta_off > 0.0) {
            return Err(SimError::InvalidParams(format!(
                "event thresholds must be positive, got on={} off={}",
                self.theta_on, self.theta_off
            )));
        }
        if !(self.threshold_sigma >= 0.0) {
            return Err(SimError::InvalidParams(format!(
                "threshold mismatch sigma must be >= 0, got {}",
                self.threshold_sigma
            )));
        }
        if !(self.leak_rate_hz >= 0.0) {
            return Err(SimError::InvalidParams(format!(
                "leak rate must be >= 0, got {}",
                self.leak_rate_hz
            )));
        }
        if let Some(fc) = self.photoreceptor_cutoff_hz {
            if !(fc > 0.0) {
                return Err(SimError::InvalidParams(format!(
                    "photoreceptor cutoff must be positive, got {fc}"
                )));
            }
        }
        Ok(())
    }
}

/// APS capture: frame cadence, exposure and the 10-bit quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ApsParams {
    pub frame_rate_hz: f64,
    pub exposure_us: u64,
    /// Mean flux that maps to the top ADC code.
    pub full_scale_flux: f64,
    pub dark_offset_dn: u16,
}

impl ApsParams {
    pub const ADC_BITS: u32 = 10;
    pub const DN_MAX: u16 = (1 << Self::ADC_BITS) - 1;

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.frame_rate_hz > 0.0) {
            return Err(SimError::InvalidParams(format!(
                "frame rate must be positive, got {}",
                self.frame_rate_hz
            )));
        }
        let period_us = 1e6 / self.frame_rate_hz;
        if self.exposure_us == 0 || self.exposure_us as f64 > period_us {
            return Err(SimError::InvalidParams(format!(
                "exposure must satisfy 0 < exposure <= frame period, got {} us at {} Hz",
                self.exposure_us, self.frame_rate_hz
            )));
        }
        if !(self.full_scale_flux > 0.0) {
            return Err(SimError::InvalidParams(format!(
                "full-scale flux must be positive, got {}",
                self.full_scale_flux
            )));
        }
        if self.dark_offset_dn > Self::DN_MAX {
            return Err(SimError::InvalidParams(format!(
                "dark offset {} exceeds DN range",
                self.dark_offset_dn
            )));
        }
        Ok(())
    }
}

impl Default for ApsParams {
    fn default() -> Self {
        Self {
            frame_rate_hz: 20.0,
            exposure_us: 20_000,
            full_scale_flux: 1000.0,
            dark_offset_dn: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Polarity {
    Off = 0,
    On = 1,
}

impl Polarity {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }
}

/// Signed brightness-change event at one subpixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DvsEvent {
    pub t_us: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

/// Exposure-integrated, quantized, saturating intensity image over `rect`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApsFrame {
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub rect: PixelRect,
    /// Row-major DN samples within `rect`, each in `0..=1023`.
    pub samples: Vec<u16>,
}

impl ApsFrame {
    pub fn dn(&self, x: u16, y: u16) -> u16 {
        self.samples[self.rect.index_of(x, y)]
    }

    pub fn is_saturated(&self, x: u16, y: u16) -> bool {
        self.dn(x, y) == ApsParams::DN_MAX
    }

    /// Exposure midpoint, the nominal sample time of the frame.
    pub fn mid_t_us(&self) -> u64 {
        self.t_start_us + (self.t_end_us - self.t_start_us) / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_rejects_odd_sizes() {
        assert!(SensorGeometry::new(347, 260).is_err());
        assert!(SensorGeometry::new(346, 0).is_err());
        assert!(SensorGeometry::new(346, 260).is_ok());
    }

    #[test]
    fn mosaic_depends_only_on_parity() {
        let geom = SensorGeometry::default();
        assert_eq!(geom.filter_at(0, 0), FilterAngle::Deg0);
        assert_eq!(geom.filter_at(1, 0), FilterAngle::Deg45);
        assert_eq!(geom.filter_at(0, 1), FilterAngle::Deg135);
        assert_eq!(geom.filter_at(1, 1), FilterAngle::Deg90);
        for (x, y) in [(14u16, 200u16), (101, 33), (345, 259)] {
            assert_eq!(geom.filter_at(x, y), geom.filter_at(x % 2, y % 2));
        }
    }

    #[test]
    fn macropixel_owns_all_four_angles() {
        let geom = SensorGeometry::default();
        let mut seen: Vec<FilterAngle> = (0..2)
            .flat_map(|dy| (0..2).map(move |dx| geom.filter_at(10 + dx, 20 + dy)))
            .collect();
        seen.sort_by_key(|a| a.index());
        assert_eq!(seen, FilterAngle::ALL.to_vec());
    }

    #[test]
    fn centered_rect_is_macropixel_aligned() {
        let geom = SensorGeometry::default();
        let r = PixelRect::centered(&geom, 12);
        assert_eq!(r.width, 12);
        assert_eq!(r.x0 % 2, 0);
        assert_eq!(r.y0 % 2, 0);
        assert!(r.x0 >= 160 && r.x0 <= 172);
    }

    #[test]
    fn aps_params_validate_exposure_window() {
        let mut p = ApsParams::default();
        assert!(p.validate().is_ok());
        p.exposure_us = 60_000; // longer than the 50 ms period at 20 Hz
        assert!(p.validate().is_err());
    }
}
