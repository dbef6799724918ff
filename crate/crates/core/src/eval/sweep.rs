//! Accuracy-vs-rotation-speed sweeps.
//!
//! Each sweep point simulates a rotation speed, runs the requested
//! reconstruction methods over a margin-padded crop around the ROI, samples
//! reconstruction and ground truth on a uniform time grid, aligns the AoP
//! series by a constant circular shift (the phase-alignment convention:
//! maximize circular cross-correlation, report the shift), and reduces to
//! MAE numbers. The first stretch of each run is discarded to skip filter
//! transients.

use std::time::Instant;

use rayon::prelude::*;

use crate::eval::EvalError;
use crate::polarization::{aop_error, wrap_aop, ExtinctionRatio, StokesSample};
use crate::recon::{
    reconstruct_frame, CfConfig, CfRecon, EventsRecon, EventsReconConfig, FrameStokes, Method,
};
use crate::sensor::{
    simulate_aps, ApsFrame, ApsParams, DvsEvent, DvsPixelParams, DvsSimulator, PixelRect,
    SensorGeometry, Stimulus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStimulusKind {
    RotatingPolarizer,
    PolarizerPlusQwp,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub kind: SweepStimulusKind,
    pub rpm_list: Vec<f64>,
    pub methods: Vec<Method>,
    pub geom: SensorGeometry,
    pub dvs: DvsPixelParams,
    pub aps: ApsParams,
    pub er: ExtinctionRatio,
    pub events_cfg: EventsReconConfig,
    pub cf_cfg: CfConfig,
    pub base_flux: f64,
    pub background_flux: f64,
    /// QWP fast-axis angle, radians (PolarizerPlusQwp only).
    pub qwp_axis: f64,
    /// ROI side length in subpixels, centered on the stimulus.
    pub roi_side: u16,
    /// Evaluation window, after transients.
    pub duration_s: f64,
    pub grid_rate_hz: f64,
}

impl SweepSpec {
    /// Spec with library defaults for the rotating-polarizer experiment.
    pub fn default_with(geom: SensorGeometry, kind: SweepStimulusKind) -> Self {
        Self {
            kind,
            rpm_list: vec![30.0, 60.0, 100.0, 200.0, 500.0, 1000.0],
            methods: vec![Method::Frames, Method::Events, Method::Cf],
            geom,
            dvs: DvsPixelParams::default(),
            aps: ApsParams::default(),
            er: ExtinctionRatio::new(40.0).unwrap(),
            events_cfg: EventsReconConfig::default(),
            cf_cfg: CfConfig::default(),
            base_flux: 500.0,
            background_flux: 50.0,
            qwp_axis: 0.0,
            roi_side: 12,
            duration_s: 3.0,
            grid_rate_hz: 1000.0,
        }
    }

    fn stimulus(&self, rpm: f64) -> Stimulus {
        match self.kind {
            SweepStimulusKind::RotatingPolarizer => Stimulus::RotatingPolarizer {
                rpm,
                base_flux: self.base_flux,
                background_flux: self.background_flux,
            },
            SweepStimulusKind::PolarizerPlusQwp => Stimulus::PolarizerPlusQwp {
                rpm,
                qwp_axis: self.qwp_axis,
                base_flux: self.base_flux,
            },
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.rpm_list.is_empty() || self.rpm_list.iter().any(|&r| !(r > 0.0)) {
            return Err(EvalError::InvalidSpec(
                "rpm_list must be nonempty and positive".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(EvalError::InvalidSpec("no methods requested".into()));
        }
        if self.roi_side == 0 || self.roi_side % 2 != 0 {
            return Err(EvalError::InvalidSpec(format!(
                "roi_side must be even and nonzero, got {}",
                self.roi_side
            )));
        }
        if !(self.duration_s > 0.0) || !(self.grid_rate_hz > 0.0) {
            return Err(EvalError::InvalidSpec(
                "duration and grid rate must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Transient skip shared by all methods of a point: the slowest filter
    /// (or frame cadence) decides, so every method is scored on the same
    /// window.
    fn warmup_us(&self) -> u64 {
        let frame_period_s = 1.0 / self.aps.frame_rate_hz;
        let tau_events = 1.0 / (2.0 * std::f64::consts::PI * self.events_cfg.f3db_hz);
        let tau_cf = 1.0 / (2.0 * std::f64::consts::PI * self.cf_cfg.f3db_hz);
        let mut warmup = 2.0 * frame_period_s;
        if self.methods.contains(&Method::Events) {
            warmup = warmup.max(2.0 * tau_events);
        }
        if self.methods.contains(&Method::Cf) {
            warmup = warmup.max(frame_period_s + 2.0 * tau_cf);
        }
        (warmup * 1e6).ceil() as u64
    }
}

/// One (rpm, method) cell of the sweep result table.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SweepPoint {
    pub rpm: f64,
    #[serde(serialize_with = "serialize_method")]
    pub method: Method,
    pub aop_mae_deg: f64,
    /// Absent for methods that cannot reconstruct DoLP (events).
    pub dolp_mae: Option<f64>,
    /// In-ROI event rate per subpixel; absent for the frames method.
    pub event_rate_hz_per_pixel: Option<f64>,
    /// Circular shift applied before scoring, degrees.
    pub applied_shift_deg: f64,
    /// Fraction of grid instants with a defined reconstruction.
    pub coverage: f64,
    pub wall_time_s: f64,
}

/// Error-growth curve entry, relative to the lowest rotation speed.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrowthPoint {
    #[serde(serialize_with = "serialize_method")]
    pub method: Method,
    pub rpm: f64,
    pub growth: f64,
}

fn serialize_method<S: serde::Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.as_str())
}

/// Run the full sweep; points are independent and run in parallel, the
/// result table is ordered (rpm outer, method inner).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>, EvalError> {
    spec.validate()?;
    let results: Result<Vec<Vec<SweepPoint>>, EvalError> = spec
        .rpm_list
        .par_iter()
        .map(|&rpm| run_point(spec, rpm))
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

/// DoLP error growth vs the slowest speed, per method.
pub fn dolp_error_growth(spec: &SweepSpec) -> Result<Vec<GrowthPoint>, EvalError> {
    let methods: Vec<Method> = spec
        .methods
        .iter()
        .copied()
        .filter(|m| *m != Method::Events)
        .collect();
    if methods.is_empty() {
        return Err(EvalError::InvalidSpec(
            "dolp growth needs frames and/or cf".into(),
        ));
    }
    let spec = SweepSpec {
        methods,
        ..spec.clone()
    };
    let points = run_sweep(&spec)?;
    let rpm_min = spec.rpm_list.iter().copied().fold(f64::INFINITY, f64::min);
    let mut growth = Vec::new();
    for m in &spec.methods {
        let base = points
            .iter()
            .find(|p| p.method == *m && p.rpm == rpm_min)
            .and_then(|p| p.dolp_mae)
            .ok_or_else(|| {
                EvalError::InvalidSpec(format!("no baseline DoLP MAE for {}", m.as_str()))
            })?;
        for p in points.iter().filter(|p| p.method == *m) {
            let mae = p.dolp_mae.ok_or_else(|| {
                EvalError::InvalidSpec(format!("missing DoLP MAE for {}", m.as_str()))
            })?;
            growth.push(GrowthPoint {
                method: *m,
                rpm: p.rpm,
                growth: mae - base,
            });
        }
    }
    Ok(growth)
}

fn run_point(spec: &SweepSpec, rpm: f64) -> Result<Vec<SweepPoint>, EvalError> {
    let stim = spec.stimulus(rpm);
    let roi = PixelRect::centered(&spec.geom, spec.roi_side);
    let sim_rect = PixelRect::centered(&spec.geom, spec.roi_side + 8);
    let warmup_us = spec.warmup_us();
    let t_end_us = warmup_us + (spec.duration_s * 1e6).round() as u64;
    let grid = make_grid(warmup_us, t_end_us, spec.grid_rate_hz);

    // ground truth at the ROI center, which both sweep stimuli cover
    // uniformly
    let (cx, cy) = (roi.x0 + roi.width / 2, roi.y0 + roi.height / 2);
    let truth: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| {
            let s = stim.state_at(&spec.geom, cx, cy, t);
            (s.aop(), s.dolp())
        })
        .collect();

    let needs_events = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::Events | Method::Cf));
    let needs_frames = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::Frames | Method::Cf));

    let events: Vec<DvsEvent> = if needs_events {
        DvsSimulator::new(spec.geom, spec.dvs.clone())?.simulate(
            &stim,
            spec.er,
            0,
            t_end_us,
            Some(sim_rect),
        )?
    } else {
        Vec::new()
    };
    let frames: Vec<ApsFrame> = if needs_frames {
        simulate_aps(
            &stim,
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

    let mut out = Vec::new();
    for &method in &spec.methods {
        let start = Instant::now();
        let series = match method {
            Method::Frames => frames_series(spec, &frames, roi, &grid)?,
            Method::Events => events_series(spec, &events, sim_rect, roi, &grid)?,
            Method::Cf => cf_series(spec, &events, &frames, sim_rect, roi, &grid)?,
        };
        let scored = score_series(&series, &truth);
        let event_rate = if method == Method::Frames {
            None
        } else {
            Some(event_rate_per_pixel(&events, roi, warmup_us, t_end_us))
        };
        out.push(SweepPoint {
            rpm,
            method,
            aop_mae_deg: scored.aop_mae_deg,
            dolp_mae: if method == Method::Events {
                None
            } else {
                scored.dolp_mae
            },
            event_rate_hz_per_pixel: event_rate,
            applied_shift_deg: scored.shift_deg,
            coverage: scored.coverage,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

fn make_grid(t0_us: u64, t1_us: u64, rate_hz: f64) -> Vec<u64> {
    let step_us = 1e6 / rate_hz;
    let n = ((t1_us - t0_us) as f64 / step_us).floor() as u64;
    (0..n)
        .map(|k| t0_us + (k as f64 * step_us).round() as u64)
        .collect()
}

/// ROI-mean series of one method on the grid: `(aop, dolp)` per instant.
type Series = Vec<(Option<f64>, Option<f64>)>;

fn frames_series(
    spec: &SweepSpec,
    frames: &[ApsFrame],
    roi: PixelRect,
    grid: &[u64],
) -> Result<Series, EvalError> {
    let recs: Vec<FrameStokes> = frames
        .iter()
        .map(|f| reconstruct_frame(f, spec.aps.dark_offset_dn))
        .collect::<Result<_, _>>()?;
    // per-frame ROI means
    let mut samples: Vec<(u64, Option<f64>, Option<f64>)> = Vec::with_capacity(recs.len());
    for rec in &recs {
        let mut stokes = Vec::new();
        for (mx, my) in roi_macropixels(roi) {
            let s = rec.get(mx, my);
            if !s.saturated {
                stokes.push(s.stokes);
            }
        }
        let aop = crate::polarization::roi_mean_aop(&stokes).ok();
        let dolp = crate::polarization::roi_mean_dolp(&stokes).ok();
        samples.push((rec.t_us, aop, dolp));
    }
    // resample onto the grid by circular interpolation between frame instants
    let mut series = Vec::with_capacity(grid.len());
    let mut hi = 0usize;
    for &t in grid {
        while hi < samples.len() && samples[hi].0 <= t {
            hi += 1;
        }
        let interp = if hi == 0 {
            (None, None)
        } else if hi == samples.len() {
            let (_, a, d) = samples[hi - 1];
            (a, d)
        } else {
            let (t0, a0, d0) = samples[hi - 1];
            let (t1, a1, d1) = samples[hi];
            let f = (t - t0) as f64 / (t1 - t0) as f64;
            (circular_lerp(a0, a1, f), lerp_opt(d0, d1, f))
        };
        series.push(interp);
    }
    Ok(series)
}

fn events_series(
    spec: &SweepSpec,
    events: &[DvsEvent],
    sim_rect: PixelRect,
    roi: PixelRect,
    grid: &[u64],
) -> Result<Series, EvalError> {
    let mut engine = EventsRecon::new(sim_rect, spec.events_cfg.clone());
    let mut cursor = 0usize;
    let mut series = Vec::with_capacity(grid.len());
    for &t in grid {
        while cursor < events.len() && events[cursor].t_us <= t {
            engine.process(&events[cursor])?;
            cursor += 1;
        }
        let mut stokes = Vec::new();
        for (mx, my) in roi_macropixels(roi) {
            if let Ok(s) = engine.stokes_analog_at(mx, my, t) {
                if s.linear_norm() > 0.0 {
                    stokes.push(s);
                }
            }
        }
        series.push((crate::polarization::roi_mean_aop(&stokes).ok(), None));
    }
    Ok(series)
}

fn cf_series(
    spec: &SweepSpec,
    events: &[DvsEvent],
    frames: &[ApsFrame],
    sim_rect: PixelRect,
    roi: PixelRect,
    grid: &[u64],
) -> Result<Series, EvalError> {
    let mut engine = CfRecon::new(sim_rect, spec.cf_cfg.clone());
    let mut ev_cursor = 0usize;
    let mut fr_cursor = 0usize;
    let mut series = Vec::with_capacity(grid.len());
    for &t in grid {
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
        let mut stokes = Vec::new();
        for (mx, my) in roi_macropixels(roi) {
            if let Ok(s) = engine.reconstruct(mx, my) {
                stokes.push(s);
            }
        }
        let aop = crate::polarization::roi_mean_aop(&stokes).ok();
        let dolp = crate::polarization::roi_mean_dolp(&stokes).ok();
        series.push((aop, dolp));
    }
    Ok(series)
}

fn roi_macropixels(roi: PixelRect) -> impl Iterator<Item = (u16, u16)> {
    let mx0 = roi.x0 / 2;
    let my0 = roi.y0 / 2;
    let mw = roi.width / 2;
    let mh = roi.height / 2;
    (my0..my0 + mh).flat_map(move |my| (mx0..mx0 + mw).map(move |mx| (mx, my)))
}

struct Scored {
    aop_mae_deg: f64,
    dolp_mae: Option<f64>,
    shift_deg: f64,
    coverage: f64,
}

/// Align the reconstructed AoP series to truth by the circular-mean offset
/// (the shift maximizing circular cross-correlation at lag zero), then score.
fn score_series(series: &Series, truth: &[(f64, f64)]) -> Scored {
    let mut sum_sin = 0.0;
    let mut sum_cos = 0.0;
    let mut defined = 0usize;
    for ((aop, _), (t_aop, _)) in series.iter().zip(truth) {
        if let Some(a) = aop {
            let delta = 2.0 * (t_aop - a);
            sum_sin += delta.sin();
            sum_cos += delta.cos();
            defined += 1;
        }
    }
    if defined == 0 {
        return Scored {
            aop_mae_deg: 90.0,
            dolp_mae: None,
            shift_deg: 0.0,
            coverage: 0.0,
        };
    }
    let shift = 0.5 * sum_sin.atan2(sum_cos);
    let mut aop_err_sum = 0.0;
    let mut dolp_err_sum = 0.0;
    let mut dolp_n = 0usize;
    for ((aop, dolp), (t_aop, t_dolp)) in series.iter().zip(truth) {
        if let Some(a) = aop {
            aop_err_sum += aop_error(wrap_aop(a + shift), *t_aop);
        }
        if let Some(d) = dolp {
            dolp_err_sum += (d - t_dolp).abs();
            dolp_n += 1;
        }
    }
    Scored {
        aop_mae_deg: (aop_err_sum / defined as f64).to_degrees(),
        dolp_mae: (dolp_n > 0).then(|| dolp_err_sum / dolp_n as f64),
        shift_deg: shift.to_degrees(),
        coverage: defined as f64 / series.len() as f64,
    }
}

fn event_rate_per_pixel(events: &[DvsEvent], roi: PixelRect, t0_us: u64, t1_us: u64) -> f64 {
    let n = events
        .iter()
        .filter(|e| e.t_us >= t0_us && e.t_us < t1_us && roi.contains(e.x, e.y))
        .count();
    n as f64 / roi.pixel_count() as f64 / ((t1_us - t0_us) as f64 * 1e-6)
}

/// Circular interpolation of optional AoPs in doubled-angle space.
fn circular_lerp(a0: Option<f64>, a1: Option<f64>, f: f64) -> Option<f64> {
    match (a0, a1) {
        (Some(a0), Some(a1)) => {
            let (x0, y0) = ((2.0 * a0).cos(), (2.0 * a0).sin());
            let (x1, y1) = ((2.0 * a1).cos(), (2.0 * a1).sin());
            let x = x0 + f * (x1 - x0);
            let y = y0 + f * (y1 - y0);
            if x == 0.0 && y == 0.0 {
                None
            } else {
                Some(wrap_aop(0.5 * y.atan2(x)))
            }
        }
        (a0, None) => a0,
        (None, a1) => a1,
    }
}

fn lerp_opt(d0: Option<f64>, d1: Option<f64>, f: f64) -> Option<f64> {
    match (d0, d1) {
        (Some(d0), Some(d1)) => Some(d0 + f * (d1 - d0)),
        (d0, None) => d0,
        (None, d1) => d1,
    }
}

/// ROI-mean AoP over a slice of Stokes samples; helper re-exported for the
/// CLI and tests.
pub fn roi_stokes_mean(samples: &[StokesSample]) -> Option<(f64, f64)> {
    let aop = crate::polarization::roi_mean_aop(samples).ok()?;
    let dolp = crate::polarization::roi_mean_dolp(samples).ok()?;
    Some((aop, dolp))
}
