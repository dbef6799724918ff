//! Closed-form polarization stimuli.
//!
//! Every stimulus is evaluable as `state(x, y, t)` and also compiles, per
//! subpixel, to the segment representation in [`super::signal`], which the
//! simulators consume.

use std::f64::consts::PI;

use crate::polarization::{wrap_aop, ExtinctionRatio, PolarizationState};
use crate::sensor::signal::{FluxModel, PixelSignal};
use crate::sensor::{PixelRect, SensorGeometry, SimError};

/// Flux transmitted through one mosaic filter as a function of the incident
/// state: `It/2 * (1 + m*DoLP*cos(2*(aop - i)))` where `m` is the extinction
/// modulation. Same closed form as `malus_intensity`, factored so stimuli can
/// emit cosine segments directly.
fn raised_cosine_depth(dolp: f64, er: ExtinctionRatio) -> f64 {
    er.modulation() * dolp
}

/// A rectangular patch holding a time schedule of states; used to assemble
/// arbitrary piecewise-constant scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPatch {
    pub rect: PixelRect,
    /// `(from_t_us, state)` entries, sorted by time. Before the first entry
    /// the patch shows the scene background.
    pub steps: Vec<(u64, PolarizationState)>,
}

/// Time-varying polarization scene in front of the sensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    /// Linear polarizer disc rotating at `rpm`, fully polarized inside the
    /// disc, unpolarized background outside. One mechanical revolution is two
    /// AoP cycles.
    RotatingPolarizer {
        rpm: f64,
        base_flux: f64,
        background_flux: f64,
    },
    /// Rotating polarizer followed by a fixed quarter-wave plate, filling the
    /// frame. One revolution is four AoP and four DoLP cycles.
    PolarizerPlusQwp {
        rpm: f64,
        /// QWP fast-axis angle, radians.
        qwp_axis: f64,
        base_flux: f64,
    },
    /// Rotating fan of triangular polarizer sectors with stepped axes and
    /// alternating bright/dark illumination.
    HdrFan {
        rpm: f64,
        sector_count: u32,
        /// AoP offset between adjacent sectors, radians.
        sector_step: f64,
        bright_flux: f64,
        dark_flux: f64,
    },
    /// Arbitrary per-region schedule of states over an unpolarized background.
    PiecewiseConstantField {
        background: PolarizationState,
        patches: Vec<FieldPatch>,
    },
}

impl Stimulus {
    pub fn hdr_fan(rpm: f64, bright_flux: f64, dark_flux: f64) -> Self {
        Stimulus::HdrFan {
            rpm,
            sector_count: 6,
            sector_step: 30.0f64.to_radians(),
            bright_flux,
            dark_flux,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::InvalidParams(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            Stimulus::RotatingPolarizer {
                rpm,
                base_flux,
                background_flux,
            } => {
                positive(*base_flux, "base_flux")?;
                positive(*background_flux, "background_flux")?;
                if !rpm.is_finite() {
                    return Err(SimError::InvalidParams("rpm must be finite".into()));
                }
            }
            Stimulus::PolarizerPlusQwp { rpm, base_flux, .. } => {
                positive(*base_flux, "base_flux")?;
                if !rpm.is_finite() {
                    return Err(SimError::InvalidParams("rpm must be finite".into()));
                }
            }
            Stimulus::HdrFan {
                rpm,
                sector_count,
                sector_step,
                bright_flux,
                dark_flux,
            } => {
                positive(*bright_flux, "bright_flux")?;
                positive(*dark_flux, "dark_flux")?;
                if *sector_count < 2 || sector_count % 2 != 0 {
                    return Err(SimError::InvalidParams(format!(
                        "sector_count must be even and >= 2, got {sector_count}"
                    )));
                }
                if !(*sector_step > 0.0) || !rpm.is_finite() {
                    return Err(SimError::InvalidParams(
                        "sector_step must be positive and rpm finite".into(),
                    ));
                }
            }
            Stimulus::PiecewiseConstantField { .. } => {}
        }
        Ok(())
    }

    /// Mechanical angular rate, rad/s.
    fn omega_mech(&self) -> f64 {
        let rpm = match self {
            Stimulus::RotatingPolarizer { rpm, .. }
            | Stimulus::PolarizerPlusQwp { rpm, .. }
            | Stimulus::HdrFan { rpm, .. } => *rpm,
            Stimulus::PiecewiseConstantField { .. } => 0.0,
        };
        2.0 * PI * rpm / 60.0
    }

    /// Center of the rotating target in subpixel coordinates.
    pub fn center(geom: &SensorGeometry) -> (f64, f64) {
        (
            (geom.width() as f64 - 1.0) / 2.0,
            (geom.height() as f64 - 1.0) / 2.0,
        )
    }

    /// Radius of the polarizer disc: the disc covers a third of the frame
    /// area.
    pub fn disc_radius(geom: &SensorGeometry) -> f64 {
        (geom.width() as f64 * geom.height() as f64 / (3.0 * PI)).sqrt()
    }

    fn in_disc(geom: &SensorGeometry, x: u16, y: u16) -> bool {
        let (cx, cy) = Self::center(geom);
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        dx * dx + dy * dy <= Self::disc_radius(geom).powi(2)
    }

    /// Fan sector index seen by pixel `(x, y)` at time `t_us`, or `None` for
    /// non-fan stimuli.
    pub fn hdr_sector(&self, geom: &SensorGeometry, x: u16, y: u16, t_us: u64) -> Option<u32> {
        match self {
            Stimulus::HdrFan { sector_count, .. } => {
                let (cx, cy) = Self::center(geom);
                let psi = (y as f64 - cy).atan2(x as f64 - cx).rem_euclid(2.0 * PI);
                let phi = self.omega_mech() * (t_us as f64 * 1e-6);
                let rel = (psi - phi).rem_euclid(2.0 * PI);
                let step = 2.0 * PI / *sector_count as f64;
                Some(((rel / step) as u32).min(sector_count - 1))
            }
            _ => None,
        }
    }

    /// Incident polarization state at a subpixel and instant.
    pub fn state_at(&self, geom: &SensorGeometry, x: u16, y: u16, t_us: u64) -> PolarizationState {
        let t_s = t_us as f64 * 1e-6;
        let phi = self.omega_mech() * t_s;
        match self {
            Stimulus::RotatingPolarizer {
                base_flux,
                background_flux,
                ..
            } => {
                if Self::in_disc(geom, x, y) {
                    PolarizationState::new(*base_flux, 1.0, wrap_aop(phi))
                        .expect("validated stimulus")
                } else {
                    PolarizationState::unpolarized(*background_flux).expect("validated stimulus")
                }
            }
            Stimulus::PolarizerPlusQwp {
                qwp_axis,
                base_flux,
                ..
            } => {
                // Mueller calculus of polarizer at phi followed by a QWP at q:
                // in the QWP frame the linear part collapses onto the fast or
                // slow axis with magnitude |cos(2*(phi - q))|.
                let c = (2.0 * (phi - qwp_axis)).cos();
                let aop = if c >= 0.0 {
                    *qwp_axis
                } else {
                    *qwp_axis + PI / 2.0
                };
                PolarizationState::new(*base_flux, c.abs(), wrap_aop(aop))
                    .expect("validated stimulus")
            }
            Stimulus::HdrFan {
                sector_step,
                bright_flux,
                dark_flux,
                ..
            } => {
                let k = self
                    .hdr_sector(geom, x, y, t_us)
                    .expect("hdr stimulus has sectors");
                let flux = if k % 2 == 0 { *bright_flux } else { *dark_flux };
                let aop = wrap_aop(k as f64 * sector_step + phi);
                PolarizationState::new(flux, 1.0, aop).expect("validated stimulus")
            }
            Stimulus::PiecewiseConstantField {
                background,
                patches,
            } => {
                let mut state = *background;
                for patch in patches {
                    if patch.rect.contains(x, y) {
                        for (from, s) in &patch.steps {
                            if *from <= t_us {
                                state = *s;
                            }
                        }
                    }
                }
                state
            }
        }
    }

    /// Compile the drive of one subpixel, behind its mosaic filter, into
    /// closed-form segments over `[t0_us, t1_us)`.
    pub fn compile_pixel(
        &self,
        geom: &SensorGeometry,
        x: u16,
        y: u16,
        er: ExtinctionRatio,
        t0_us: u64,
        t1_us: u64,
    ) -> Result<PixelSignal, SimError> {
        let angle = geom.filter_at(x, y).radians();
        let omega_mech = self.omega_mech();
        let signal = match self {
            Stimulus::RotatingPolarizer {
                base_flux,
                background_flux,
                ..
            } => {
                if Self::in_disc(geom, x, y) {
                    PixelSignal {
                        segments: vec![(
                            t0_us,
                            FluxModel::cosine(
                                base_flux / 2.0,
                                raised_cosine_depth(1.0, er),
                                2.0 * omega_mech,
                                -2.0 * angle,
                            ),
                        )],
                        end_us: t1_us,
                    }
                } else {
                    PixelSignal::constant(background_flux / 2.0, t0_us, t1_us)
                }
            }
            Stimulus::PolarizerPlusQwp {
                qwp_axis,
                base_flux,
                ..
            } => {
                // I_i(t) = base/2 * (1 + m*cos(2(q - i))*cos(2*phi(t) - 2q))
                let depth = er.modulation() * (2.0 * (qwp_axis - angle)).cos();
                PixelSignal {
                    segments: vec![(
                        t0_us,
                        FluxModel::cosine(
                            base_flux / 2.0,
                            depth,
                            2.0 * omega_mech,
                            -2.0 * qwp_axis,
                        ),
                    )],
                    end_us: t1_us,
                }
            }
            Stimulus::HdrFan {
                sector_count,
                sector_step,
                bright_flux,
                dark_flux,
                ..
            } => {
                let n = *sector_count;
                let step = 2.0 * PI / n as f64;
                let (cx, cy) = Self::center(geom);
                let psi = (y as f64 - cy).atan2(x as f64 - cx).rem_euclid(2.0 * PI);
                let sector_model = |k: u32, start: u64| {
                    let flux = if k % 2 == 0 { *bright_flux } else { *dark_flux };
                    (
                        start,
                        FluxModel::cosine(
                            flux / 2.0,
                            raised_cosine_depth(1.0, er),
                            2.0 * omega_mech,
                            2.0 * (k as f64 * sector_step - angle),
                        ),
                    )
                };
                let mut k = self.hdr_sector(geom, x, y, t0_us).unwrap();
                let mut segments = vec![sector_model(k, t0_us)];
                if omega_mech > 0.0 {
                    // the wheel sweeps past: sector index decrements each time
                    // rel = psi - phi falls through a multiple of `step`
                    let t0_s = t0_us as f64 * 1e-6;
                    let rel0 = (psi - omega_mech * t0_s).rem_euclid(2.0 * PI);
                    let mut dt = (rel0 - k as f64 * step) / omega_mech;
                    if dt <= 0.0 {
                        dt += step / omega_mech;
                        k = (k + n - 1) % n;
                        segments[0] = sector_model(k, t0_us);
                    }
                    let mut t_b = t0_s + dt;
                    while (t_b * 1e6) < t1_us as f64 {
                        k = (k + n - 1) % n;
                        let start = (t_b * 1e6).ceil() as u64;
                        if start > t0_us {
                            segments.push(sector_model(k, start.min(t1_us)));
                        }
                        t_b += step / omega_mech;
                    }
                } else if omega_mech < 0.0 {
                    return Err(SimError::InvalidParams(
                        "hdr fan does not support negative rpm".into(),
                    ));
                }
                PixelSignal {
                    segments,
                    end_us: t1_us,
                }
            }
            Stimulus::PiecewiseConstantField { .. } => {
                let mut boundaries: Vec<u64> = vec![t0_us];
                if let Stimulus::PiecewiseConstantField { patches, .. } = self {
                    for p in patches {
                        if p.rect.contains(x, y) {
                            for (from, _) in &p.steps {
                                if *from > t0_us && *from < t1_us {
                                    boundaries.push(*from);
                                }
                            }
                        }
                    }
                }
                boundaries.sort_unstable();
                boundaries.dedup();
                let segments = boundaries
                    .into_iter()
                    .map(|start| {
                        let s = self.state_at(geom, x, y, start);
                        (
                            start,
                            FluxModel::cosine(
                                s.total_flux() / 2.0,
                                raised_cosine_depth(s.dolp(), er),
                                0.0,
                                2.0 * (s.aop() - angle),
                            ),
                        )
                    })
                    .collect();
                PixelSignal {
                    segments,
                    end_us: t1_us,
                }
            }
        };
        if signal.min_flux() <= 0.0 {
            return Err(SimError::NonPositiveFlux { x, y });
        }
        Ok(signal)
    }
}

/// Deterministic closed-form state of a stimulus at one subpixel and instant.
pub fn eval_stimulus(
    stim: &Stimulus,
    geom: &SensorGeometry,
    x: u16,
    y: u16,
    t_us: u64,
) -> PolarizationState {
    stim.state_at(geom, x, y, t_us)
}
