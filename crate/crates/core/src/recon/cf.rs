//! Complementary filter: fuse lowpassed frame intensity with highpassed
//! event-driven changes into an absolute log intensity per subpixel.
//!
//! Event updates decay the state and add the signed threshold; frame updates
//! pull the state toward the frame's log intensity with weight `1 - alpha`.
//! Near the ADC limits the frame weight is reduced (adaptive gain), so badly
//! exposed frames do not drag the event-reconstructed signal.

use std::f64::consts::PI;

use crate::polarization::{dolp_of, StokesSample};
use crate::recon::{kernel, Method, PolarizationEventOut, ReconError};
use crate::sensor::{ApsFrame, DvsEvent, PixelRect, Polarity};

#[derive(Debug, Clone, PartialEq)]
pub struct CfConfig {
    /// Crossover frequency between the frame and event paths.
    pub f3db_hz: f64,
    pub theta_on: f64,
    pub theta_off: f64,
    /// Floor of the APS confidence weight outside the DN limits.
    pub lambda: f64,
    /// DN band considered well exposed.
    pub l1_dn: u16,
    pub l2_dn: u16,
    pub dark_offset_dn: u16,
}

impl Default for CfConfig {
    fn default() -> Self {
        Self {
            f3db_hz: 1.6,
            theta_on: 0.14,
            theta_off: 0.14,
            lambda: 0.1,
            l1_dn: 10,
            l2_dn: 200,
            dark_offset_dn: 0,
        }
    }
}

/// Per-subpixel complementary filter state over a region.
pub struct CfRecon {
    cfg: CfConfig,
    rect: PixelRect,
    inv_tau: f64,
    weight_margin_dn: f64,
    l: Vec<f64>,
    last_t_us: Vec<u64>,
    initialized: Vec<bool>,
    any_frame: bool,
    dropped_pre_init: u64,
}

impl CfRecon {
    pub fn new(rect: PixelRect, cfg: CfConfig) -> Self {
        let n = rect.pixel_count();
        let inv_tau = 2.0 * PI * cfg.f3db_hz;
        // ramp width: 10% of the well-exposed DN range
        let weight_margin_dn = 0.1 * (cfg.l2_dn as f64 - cfg.l1_dn as f64);
        Self {
            cfg,
            rect,
            inv_tau,
            weight_margin_dn,
            l: vec![0.0; n],
            last_t_us: vec![0; n],
            initialized: vec![false; n],
            any_frame: false,
            dropped_pre_init: 0,
        }
    }

    pub fn config(&self) -> &CfConfig {
        &self.cfg
    }

    pub fn tau_s(&self) -> f64 {
        1.0 / self.inv_tau
    }

    /// Events that arrived before the first frame and were discarded.
    pub fn dropped_pre_init(&self) -> u64 {
        self.dropped_pre_init
    }

    /// Apply one event. Events before initialization are dropped and
    /// counted; events outside the region are ignored.
    pub fn process_event(&mut self, ev: &DvsEvent) -> Result<(), ReconError> {
        if !self.rect.contains(ev.x, ev.y) {
            return Ok(());
        }
        let idx = self.rect.index_of(ev.x, ev.y);
        if !self.initialized[idx] {
            self.dropped_pre_init += 1;
            return Ok(());
        }
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
        let dt_s = (ev.t_us - self.last_t_us[idx]) as f64 * 1e-6;
        self.l[idx] = kernel::iir_decay_add(self.l[idx], dt_s, self.inv_tau, p);
        self.last_t_us[idx] = ev.t_us;
        Ok(())
    }

    /// Apply one frame, sampled at its exposure midpoint. The first frame
    /// seeds the filter state outright to avoid the startup transient.
    pub fn process_frame(&mut self, frame: &ApsFrame) -> Result<(), ReconError> {
        let t_us = frame.mid_t_us();
        let dark = self.cfg.dark_offset_dn as f64;
        for (x, y) in frame.rect.iter_pixels() {
            if !self.rect.contains(x, y) {
                continue;
            }
            let idx = self.rect.index_of(x, y);
            let dn = frame.dn(x, y) as f64;
            let l_aps = kernel::aps_log_sample(dn, dark);
            if !self.initialized[idx] {
                self.l[idx] = l_aps;
                self.last_t_us[idx] = t_us;
                self.initialized[idx] = true;
                continue;
            }
            if t_us < self.last_t_us[idx] {
                return Err(ReconError::OutOfOrder {
                    x,
                    y,
                    t_us,
                    last_t_us: self.last_t_us[idx],
                });
            }
            let weight = kernel::aps_weight(
                dn,
                self.cfg.l1_dn as f64,
                self.cfg.l2_dn as f64,
                self.weight_margin_dn,
                self.cfg.lambda,
            );
            let dt_s = (t_us - self.last_t_us[idx]) as f64 * 1e-6;
            self.l[idx] = kernel::cf_frame_update(self.l[idx], dt_s, self.inv_tau, weight, l_aps);
            self.last_t_us[idx] = t_us;
        }
        self.any_frame = true;
        Ok(())
    }

    /// Reconstructed log intensity of one subpixel (state as of its last
    /// update; the filter outputs the most recent value between updates).
    pub fn log_intensity(&self, x: u16, y: u16) -> Result<f64, ReconError> {
        let idx = self.rect.index_of(x, y);
        if !self.initialized[idx] {
            return Err(ReconError::NotInitialized);
        }
        Ok(self.l[idx])
    }

    /// Stokes sample of one macropixel from the exponentiated subpixel log
    /// intensities. Macropixels with uninitialized subpixels are skipped.
    pub fn reconstruct(&self, mx: u16, my: u16) -> Result<StokesSample, ReconError> {
        let (x, y) = (2 * mx, 2 * my);
        if !self.rect.contains(x, y) || !self.rect.contains(x + 1, y + 1) {
            return Err(ReconError::NotInitialized);
        }
        // mosaic cell: [0 45; 135 90]
        let i0 = self.log_intensity(x, y)?.exp();
        let i45 = self.log_intensity(x + 1, y)?.exp();
        let i135 = self.log_intensity(x, y + 1)?.exp();
        let i90 = self.log_intensity(x + 1, y + 1)?.exp();
        Ok(crate::polarization::stokes_from_intensities(
            i0, i45, i90, i135,
        ))
    }

    /// Polarization sample of one macropixel at `t_us` (the emission cadence
    /// is the caller's: per packet by default).
    pub fn sample(&self, mx: u16, my: u16, t_us: u64) -> Result<PolarizationEventOut, ReconError> {
        let stokes = self.reconstruct(mx, my)?;
        let aop = crate::polarization::aop_of(&stokes).map_err(|_| ReconError::UndefinedAop)?;
        Ok(PolarizationEventOut {
            t_us,
            mx,
            my,
            aop,
            dolp: dolp_of(&stokes).ok(),
            method: Method::Cf,
        })
    }
}
