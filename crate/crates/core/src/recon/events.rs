//! Events-only reconstruction: asynchronous first-order IIR per subpixel.
//!
//! Each event decays the subpixel's reconstructed log-intensity change by
//! `exp(-dt/tau)` and adds the signed threshold, so the state is the
//! highpass-filtered log intensity. AoP comes from using the four per-angle
//! changes directly in the Stokes difference channels; that linearization
//! leaves AoP exact up to a constant pi/4 offset when the drive is slower
//! than the corner frequency, and the engine intentionally does not correct
//! for it. DoLP is not produced: the event stream carries no absolute
//! intensity.

use std::f64::consts::PI;

use crate::polarization::StokesSample;
use crate::recon::{kernel, Method, PolarizationEventOut, ReconError};
use crate::sensor::{DvsEvent, PixelRect, Polarity};

#[derive(Debug, Clone, PartialEq)]
pub struct EventsReconConfig {
    /// Highpass corner frequency; tau = 1/(2*pi*f3db).
    pub f3db_hz: f64,
    /// The reconstructor's estimate of the sensor ON threshold.
    pub theta_on: f64,
    pub theta_off: f64,
    /// Spread each update to same-angle subpixels one macropixel away,
    /// suppressing mismatch and temporal noise.
    pub neighbor_updates: bool,
}

impl Default for EventsReconConfig {
    fn default() -> Self {
        Self {
            f3db_hz: 0.5,
            theta_on: 0.14,
            theta_off: 0.14,
            neighbor_updates: true,
        }
    }
}

/// Per-subpixel IIR state over a reconstruction region.
pub struct EventsRecon {
    cfg: EventsReconConfig,
    rect: PixelRect,
    inv_tau: f64,
    dl: Vec<f64>,
    last_t_us: Vec<u64>,
    touched: Vec<bool>,
}

impl EventsRecon {
    pub fn new(rect: PixelRect, cfg: EventsReconConfig) -> Self {
        let n = rect.pixel_count();
        let inv_tau = 2.0 * PI * cfg.f3db_hz;
        Self {
            cfg,
            rect,
            inv_tau,
            dl: vec![0.0; n],
            last_t_us: vec![0; n],
            touched: vec![false; n],
        }
    }

    pub fn config(&self) -> &EventsReconConfig {
        &self.cfg
    }

    pub fn rect(&self) -> PixelRect {
        self.rect
    }

    pub fn tau_s(&self) -> f64 {
        1.0 / self.inv_tau
    }

    /// Apply one event. Events outside the region are ignored; events that
    /// run backwards in time for their subpixel are an error.
    pub fn process(&mut self, ev: &DvsEvent) -> Result<(), ReconError> {
        if !self.rect.contains(ev.x, ev.y) {
            return Ok(());
        }
        let idx = self.rect.index_of(ev.x, ev.y);
        if ev.t_us < self.last_t_us[idx] {
            return Err(ReconError::OutOfOrder {
                x: ev.x,
                y: ev.y,
                t_us: ev.t_us,
                last_t_us: self.last_t_us[idx],
            });
        }
        let p = match ev.polarity {
            Polarity::On => self.cfg.theta_on,
            Polarity::Off => -self.cfg.theta_off,
        };
        if self.cfg.neighbor_updates {
            // same filter angle within one macropixel radius: offsets of two
            // subpixels in each direction
            for dy in [-2i32, 0, 2] {
                for dx in [-2i32, 0, 2] {
                    let nx = ev.x as i32 + dx;
                    let ny = ev.y as i32 + dy;
                    if nx >= 0 && ny >= 0 {
                        let (nx, ny) = (nx as u16, ny as u16);
                        if self.rect.contains(nx, ny) {
                            self.update_one(self.rect.index_of(nx, ny), ev.t_us, p);
                        }
                    }
                }
            }
        } else {
            self.update_one(idx, ev.t_us, p);
        }
        Ok(())
    }

    fn update_one(&mut self, idx: usize, t_us: u64, p: f64) {
        let dt_s = t_us.saturating_sub(self.last_t_us[idx]) as f64 * 1e-6;
        self.dl[idx] = kernel::iir_decay_add(self.dl[idx], dt_s, self.inv_tau, p);
        self.last_t_us[idx] = t_us;
        self.touched[idx] = true;
    }

    /// State of one subpixel decayed (without mutation) to `t_us`. Sampling
    /// earlier than the subpixel's last update reads the stored value.
    pub fn dl_at(&self, x: u16, y: u16, t_us: u64) -> f64 {
        let idx = self.rect.index_of(x, y);
        let dt_s = t_us.saturating_sub(self.last_t_us[idx]) as f64 * 1e-6;
        kernel::iir_decay(self.dl[idx], dt_s, self.inv_tau)
    }

    /// True if any subpixel of macropixel `(mx, my)` has received an update.
    pub fn macropixel_active(&self, mx: u16, my: u16) -> bool {
        let (x, y) = (2 * mx, 2 * my);
        [(0u16, 0u16), (1, 0), (0, 1), (1, 1)]
            .iter()
            .any(|&(dx, dy)| {
                self.rect.contains(x + dx, y + dy)
                    && self.touched[self.rect.index_of(x + dx, y + dy)]
            })
    }

    /// Difference-channel analog of the Stokes vector at a macropixel, all
    /// four states decayed to the common instant `t_us`. `s0` is set to the
    /// linear norm; only the (s1, s2) direction is meaningful.
    pub fn stokes_analog_at(
        &self,
        mx: u16,
        my: u16,
        t_us: u64,
    ) -> Result<StokesSample, ReconError> {
        let (x, y) = (2 * mx, 2 * my);
        // mosaic cell: [0 45; 135 90]
        if !self.rect.contains(x, y) || !self.rect.contains(x + 1, y + 1) {
            return Err(ReconError::UndefinedAop);
        }
        let v0 = self.dl_at(x, y, t_us);
        let v45 = self.dl_at(x + 1, y, t_us);
        let v135 = self.dl_at(x, y + 1, t_us);
        let v90 = self.dl_at(x + 1, y + 1, t_us);
        let (s1, s2, _) = kernel::aop_channels(v0, v45, v90, v135);
        Ok(StokesSample::new(s1.hypot(s2), s1, s2))
    }

    /// AoP of one macropixel at `t_us`; errors while the difference channels
    /// are all zero.
    pub fn aop_at(&self, mx: u16, my: u16, t_us: u64) -> Result<f64, ReconError> {
        let s = self.stokes_analog_at(mx, my, t_us)?;
        if s.s1 == 0.0 && s.s2 == 0.0 {
            return Err(ReconError::UndefinedAop);
        }
        Ok(crate::polarization::wrap_aop(0.5 * s.s2.atan2(s.s1)))
    }

    /// Process one event and emit the polarization event of its macropixel.
    pub fn emit(&mut self, ev: &DvsEvent) -> Result<Option<PolarizationEventOut>, ReconError> {
        self.process(ev)?;
        let (mx, my) = (ev.x / 2, ev.y / 2);
        match self.aop_at(mx, my, ev.t_us) {
            Ok(aop) => Ok(Some(PolarizationEventOut {
                t_us: ev.t_us,
                mx,
                my,
                aop,
                dolp: None,
                method: Method::Events,
            })),
            Err(ReconError::UndefinedAop) => Ok(None),
            Err(e) => Err(e),
        }
    }
}
