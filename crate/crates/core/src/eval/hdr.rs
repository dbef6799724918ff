//! HDR fan comparison: per-sector AoP recoverability of each method under
//! extreme bright/dark illumination ratios.
//!
//! Evaluation runs over macropixels in an annulus around the fan center so
//! all sectors are sampled as the wheel turns. A sector counts as
//! recoverable for a method when enough of its samples produce a usable AoP
//! and their aligned MAE stays below the threshold.

use crate::eval::EvalError;
use crate::polarization::{aop_error, aop_of, wrap_aop, ExtinctionRatio};
use crate::recon::{
    reconstruct_frame, CfConfig, CfRecon, EventsRecon, EventsReconConfig, FrameStokes, Method,
};
use crate::sensor::{
    simulate_aps, ApsParams, DvsPixelParams, DvsSimulator, PixelRect, SensorGeometry, Stimulus,
};

#[derive(Debug, Clone)]
pub struct HdrSpec {
    /// The fan stimulus (rpm, sector layout, bright/dark fluxes).
    pub stim: Stimulus,
    pub methods: Vec<Method>,
    pub geom: SensorGeometry,
    pub dvs: DvsPixelParams,
    pub aps: ApsParams,
    pub er: ExtinctionRatio,
    pub events_cfg: EventsReconConfig,
    pub cf_cfg: CfConfig,
    /// Radial band of evaluated macropixels, subpixels from the fan center.
    pub annulus_px: (f64, f64),
    pub duration_s: f64,
    pub grid_rate_hz: f64,
    pub recoverable_max_mae_deg: f64,
    pub min_usable_fraction: f64,
}

impl HdrSpec {
    pub fn default_with(geom: SensorGeometry) -> Self {
        Self {
            stim: Stimulus::hdr_fan(200.0, 2000.0, 1.0),
            methods: vec![Method::Frames, Method::Events, Method::Cf],
            geom,
            dvs: DvsPixelParams::default(),
            aps: ApsParams::default(),
            er: ExtinctionRatio::new(40.0).unwrap(),
            events_cfg: EventsReconConfig::default(),
            cf_cfg: CfConfig::default(),
            annulus_px: (14.0, 34.0),
            duration_s: 1.5,
            grid_rate_hz: 200.0,
            recoverable_max_mae_deg: 15.0,
            min_usable_fraction: 0.5,
        }
    }
}

/// Per-(method, sector) outcome.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SectorReport {
    #[serde(serialize_with = "serialize_method")]
    pub method: Method,
    pub sector: u32,
    /// MAE over usable samples, degrees; 90 when nothing was usable.
    pub aop_mae_deg: f64,
    /// Fraction of samples with no usable AoP (saturated, dark, or
    /// undefined).
    pub masked_fraction: f64,
    pub recoverable: bool,
    pub samples: u64,
}

fn serialize_method<S: serde::Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.as_str())
}

pub fn hdr_comparison(spec: &HdrSpec) -> Result<Vec<SectorReport>, EvalError> {
    let sector_count = match &spec.stim {
        Stimulus::HdrFan {
            sector_count,
            bright_flux,
            dark_flux,
            ..
        } => {
            if bright_flux / dark_flux <= 1.0 {
                return Err(EvalError::InvalidSpec(
                    "bright/dark ratio must exceed 1".into(),
                ));
            }
            *sector_count
        }
        _ => {
            return Err(EvalError::InvalidSpec(
                "hdr comparison needs an HdrFan stimulus".into(),
            ))
        }
    };

    let (r_in, r_out) = spec.annulus_px;
    if !(r_in >= 0.0) || r_out <= r_in {
        return Err(EvalError::InvalidSpec("bad annulus radii".into()));
    }
    let (cx, cy) = Stimulus::center(&spec.geom);

    // evaluated macropixels plus a margin-padded simulation crop around them
    let mut eval_macros: Vec<(u16, u16)> = Vec::new();
    for my in 0..spec.geom.height() / 2 {
        for mx in 0..spec.geom.width() / 2 {
            let (px, py) = (2.0 * mx as f64 + 0.5, 2.0 * my as f64 + 0.5);
            let r = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
            if r >= r_in && r <= r_out {
                eval_macros.push((mx, my));
            }
        }
    }
    if eval_macros.is_empty() {
        return Err(EvalError::InvalidSpec(
            "annulus selects no macropixels".into(),
        ));
    }
    let side = (2.0 * (r_out + 6.0)).ceil() as u16;
    let sim_rect = PixelRect::centered(
        &spec.geom,
        side.min(spec.geom.width()).min(spec.geom.height()),
    );

    let frame_period_s = 1.0 / spec.aps.frame_rate_hz;
    let tau_events = 1.0 / (2.0 * std::f64::consts::PI * spec.events_cfg.f3db_hz);
    let tau_cf = 1.0 / (2.0 * std::f64::consts::PI * spec.cf_cfg.f3db_hz);
    let warmup_s = (2.0 * frame_period_s)
        .max(2.0 * tau_events)
        .max(frame_period_s + 2.0 * tau_cf);
    let warmup_us = (warmup_s * 1e6).ceil() as u64;
    let t_end_us = warmup_us + (spec.duration_s * 1e6).round() as u64;
    let step_us = 1e6 / spec.grid_rate_hz;
    let grid: Vec<u64> = (0..((t_end_us - warmup_us) as f64 / step_us).floor() as u64)
        .map(|k| warmup_us + (k as f64 * step_us).round() as u64)
        .collect();

    let needs_events = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::Events | Method::Cf));
    let needs_frames = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::Frames | Method::Cf));
    let events = if needs_events {
        DvsSimulator::new(spec.geom, spec.dvs.clone())?.simulate(
            &spec.stim,
            spec.er,
            0,
            t_end_us,
            Some(sim_rect),
        )?
    } else {
        Vec::new()
    };
    let frames = if needs_frames {
        simulate_aps(
            &spec.stim,
            spec.geom,
            spec.aps.clone(),
            spec.er,
            0,
            t_end_us + spec.aps.exposure_us,
            Some(sim_rect),
        )?
    } else {
        Vec::new()
    };
    let frame_recs: Vec<FrameStokes> = frames
        .iter()
        .map(|f| reconstruct_frame(f, spec.aps.dark_offset_dn))
        .collect::<Result<_, _>>()?;

    let mut reports = Vec::new();
    for &method in &spec.methods {
        // (recon, truth) per sector, plus total sample counts
        let mut pairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); sector_count as usize];
        let mut totals: Vec<u64> = vec![0; sector_count as usize];

        match method {
            Method::Frames => {
                let mut cursor = 0usize;
                for &t in &grid {
                    while cursor + 1 < frame_recs.len() && frame_recs[cursor + 1].t_us <= t {
                        cursor += 1;
                    }
                    let rec = (frame_recs.get(cursor)).filter(|r| r.t_us <= t);
                    for &(mx, my) in &eval_macros {
                        let sector =
                            spec.stim.hdr_sector(&spec.geom, 2 * mx, 2 * my, t).unwrap() as usize;
                        totals[sector] += 1;
                        if let Some(rec) = rec {
                            let s = rec.get(mx, my);
                            if !s.saturated {
                                if let Ok(aop) = aop_of(&s.stokes) {
                                    let truth =
                                        spec.stim.state_at(&spec.geom, 2 * mx, 2 * my, t).aop();
                                    pairs[sector].push((aop, truth));
                                }
                            }
                        }
                    }
                }
            }
            Method::Events => {
                let mut engine = EventsRecon::new(sim_rect, spec.events_cfg.clone());
                let mut cursor = 0usize;
                for &t in &grid {
                    while cursor < events.len() && events[cursor].t_us <= t {
                        engine.process(&events[cursor])?;
                        cursor += 1;
                    }
                    for &(mx, my) in &eval_macros {
                        let sector =
                            spec.stim.hdr_sector(&spec.geom, 2 * mx, 2 * my, t).unwrap() as usize;
                        totals[sector] += 1;
                        if let Ok(aop) = engine.aop_at(mx, my, t) {
                            let truth = spec.stim.state_at(&spec.geom, 2 * mx, 2 * my, t).aop();
                            pairs[sector].push((aop, truth));
                        }
                    }
                }
            }
            Method::Cf => {
                let mut engine = CfRecon::new(sim_rect, spec.cf_cfg.clone());
                let mut ev_cursor = 0usize;
                let mut fr_cursor = 0usize;
                for &t in &grid {
                    loop {
                        let next_ev = events.get(ev_cursor).map(|e| e.t_us);
                        let next_fr = frames.get(fr_cursor).map(|f| f.mid_t_us());
                        match (next_ev, next_fr) {
                            (Some(te), Some(tf)) if te <= t && (te <= tf || tf > t) => {
                                engine.process_event(&events[ev_cursor])?;
                                ev_cursor += 1;
                            }
                            (Some(te), None) if te <= t => {
                                engine.process_event(&events[ev_cursor])?;
                                ev_cursor += 1;
                            }
                            (_, Some(tf)) if tf <= t => {
                                engine.process_frame(&frames[fr_cursor])?;
                                fr_cursor += 1;
                            }
                            _ => break,
                        }
                    }
                    for &(mx, my) in &eval_macros {
                        let sector =
                            spec.stim.hdr_sector(&spec.geom, 2 * mx, 2 * my, t).unwrap() as usize;
                        totals[sector] += 1;
                        if let Ok(stokes) = engine.reconstruct(mx, my) {
                            if let Ok(aop) = aop_of(&stokes) {
                                let truth = spec.stim.state_at(&spec.geom, 2 * mx, 2 * my, t).aop();
                                pairs[sector].push((aop, truth));
                            }
                        }
                    }
                }
            }
        }

        // one circular shift per method, pooled over every sector, applied
        // identically (same alignment convention as the sweeps)
        let mut sum_sin = 0.0;
        let mut sum_cos = 0.0;
        for sector_pairs in &pairs {
            for &(recon, truth) in sector_pairs {
                let d = 2.0 * (truth - recon);
                sum_sin += d.sin();
                sum_cos += d.cos();
            }
        }
        let shift = if sum_sin == 0.0 && sum_cos == 0.0 {
            0.0
        } else {
            0.5 * sum_sin.atan2(sum_cos)
        };

        for sector in 0..sector_count as usize {
            let usable = pairs[sector].len() as u64;
            let total = totals[sector];
            let mae_deg = if usable == 0 {
                90.0
            } else {
                let sum: f64 = pairs[sector]
                    .iter()
                    .map(|&(recon, truth)| aop_error(wrap_aop(recon + shift), truth))
                    .sum();
                (sum / usable as f64).to_degrees()
            };
            let usable_fraction = if total == 0 {
                0.0
            } else {
                usable as f64 / total as f64
            };
            reports.push(SectorReport {
                method,
                sector: sector as u32,
                aop_mae_deg: mae_deg,
                masked_fraction: 1.0 - usable_fraction,
                recoverable: usable_fraction >= spec.min_usable_fraction
                    && mae_deg < spec.recoverable_max_mae_deg,
                samples: total,
            });
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_fan_stimulus_and_flat_ratio() {
        let mut spec = HdrSpec::default_with(SensorGeometry::default());
        spec.stim = Stimulus::RotatingPolarizer {
            rpm: 100.0,
            base_flux: 1.0,
            background_flux: 1.0,
        };
        assert!(matches!(
            hdr_comparison(&spec),
            Err(EvalError::InvalidSpec(_))
        ));
        let mut flat = HdrSpec::default_with(SensorGeometry::default());
        flat.stim = Stimulus::hdr_fan(100.0, 1.0, 1.0);
        assert!(matches!(
            hdr_comparison(&flat),
            Err(EvalError::InvalidSpec(_))
        ));
    }

    /// Moderate ratio: every sector is recoverable by every method. The
    /// ratio-2000 split lives in the acceptance suite.
    #[test]
    fn mild_ratio_recovers_everywhere() {
        let mut spec = HdrSpec::default_with(SensorGeometry::default());
        spec.stim = Stimulus::hdr_fan(100.0, 600.0, 300.0);
        spec.dvs.threshold_sigma = 0.0;
        spec.dvs.leak_rate_hz = 0.0;
        spec.duration_s = 0.9;
        spec.grid_rate_hz = 100.0;
        spec.annulus_px = (14.0, 24.0);
        spec.methods = vec![Method::Frames, Method::Cf];
        let reports = hdr_comparison(&spec).unwrap();
        assert_eq!(reports.len(), 12);
        for r in &reports {
            assert!(
                r.recoverable,
                "{:?} sector {} unrecoverable: mae={:.1} masked={:.2}",
                r.method, r.sector, r.aop_mae_deg, r.masked_fraction
            );
        }
    }
}
