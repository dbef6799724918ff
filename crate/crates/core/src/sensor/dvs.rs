//! DVS event generation.
//!
//! Each subpixel tracks the log of its filtered flux. An ON (OFF) event fires
//! when the log intensity rises (falls) by the pixel's realized threshold
//! relative to the memorized level; after an event the memorized level moves
//! by exactly one threshold, so residual change carries over. Event times are
//! solved on the closed-form signal segments, not found by dense sampling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::polarization::ExtinctionRatio;
use crate::sensor::signal::{FluxModel, PixelSignal};
use crate::sensor::{
    DvsEvent, DvsPixelParams, PixelRect, Polarity, SensorGeometry, SimError, Stimulus,
};

const STREAM_THRESHOLDS: u64 = 0x7468_7265_7368_6f6c; // "threshol"
const STREAM_LEAK: u64 = 0x6c65_616b_6c65_616b; // "leakleak"

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn pixel_rng(seed: u64, pixel_index: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(pixel_index ^ stream)))
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random mantissa bits in (0, 1]
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / 9007199254740992.0)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1 = uniform01(rng);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Convert a continuous crossing time to the first integer microsecond at
/// which the threshold has been passed. The small back-off keeps crossings
/// that land a rounding error above an integer on that integer.
fn ceil_us(t_s: f64) -> u64 {
    (t_s * 1e6 - 1e-7).ceil().max(0.0) as u64
}

/// Event generator with per-pixel realized thresholds drawn once from the
/// seed. With the same geometry, parameters and seed the output is
/// bit-identical across runs and across parallelism degrees.
pub struct DvsSimulator {
    geom: SensorGeometry,
    params: DvsPixelParams,
    /// Realized (theta_on, theta_off) per pixel, row-major over the full frame.
    thresholds: Vec<(f64, f64)>,
}

impl DvsSimulator {
    pub fn new(geom: SensorGeometry, params: DvsPixelParams) -> Result<Self, SimError> {
        params.validate()?;
        let n = geom.pixel_count();
        let thresholds = (0..n as u64)
            .map(|idx| {
                if params.threshold_sigma == 0.0 {
                    (params.theta_on, params.theta_off)
                } else {
                    let mut rng = pixel_rng(params.rng_seed, idx, STREAM_THRESHOLDS);
                    let on = params.theta_on
                        * (params.threshold_sigma * standard_normal(&mut rng)).exp();
                    let off = params.theta_off
                        * (params.threshold_sigma * standard_normal(&mut rng)).exp();
                    (on, off)
                }
            })
            .collect();
        Ok(Self {
            geom,
            params,
            thresholds,
        })
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.geom
    }

    pub fn params(&self) -> &DvsPixelParams {
        &self.params
    }

    /// Realized thresholds of one pixel after mismatch.
    pub fn realized_thresholds(&self, x: u16, y: u16) -> (f64, f64) {
        self.thresholds[y as usize * self.geom.width() as usize + x as usize]
    }

    /// Generate the sorted event stream for `stim` over `[t0_us, t1_us)`,
    /// optionally restricted to a subpixel region.
    pub fn simulate(
        &self,
        stim: &Stimulus,
        er: ExtinctionRatio,
        t0_us: u64,
        t1_us: u64,
        region: Option<PixelRect>,
    ) -> Result<Vec<DvsEvent>, SimError> {
        if t1_us <= t0_us {
            return Err(SimError::InvalidParams(format!(
                "time window must be nonempty, got [{t0_us}, {t1_us})"
            )));
        }
        stim.validate()?;
        let rect = region.unwrap_or_else(|| self.geom.full_rect());
        if !self.geom.contains(rect.x0, rect.y0)
            || rect.x0 as u32 + rect.width as u32 > self.geom.width() as u32
            || rect.y0 as u32 + rect.height as u32 > self.geom.height() as u32
        {
            return Err(SimError::RegionOutOfBounds(rect));
        }

        // rows are independent; process them in parallel and concatenate in
        // scan order so the merge is deterministic
        let rows: Vec<Result<Vec<DvsEvent>, SimError>> = (rect.y0..rect.y0 + rect.height)
            .into_par_iter()
            .map(|y| {
                let mut out = Vec::new();
                for x in rect.x0..rect.x0 + rect.width {
                    self.pixel_events(stim, er, x, y, t0_us, t1_us, &mut out)?;
                }
                Ok(out)
            })
            .collect();

        let mut events = Vec::new();
        for row in rows {
            events.extend(row?);
        }
        // per-pixel streams are already time sorted; a stable sort on the
        // timestamp yields the (t, y, x) tie order
        events.sort_by_key(|e| e.t_us);
        Ok(events)
    }

    fn pixel_events(
        &self,
        stim: &Stimulus,
        er: ExtinctionRatio,
        x: u16,
        y: u16,
        t0_us: u64,
        t1_us: u64,
        out: &mut Vec<DvsEvent>,
    ) -> Result<(), SimError> {
        let signal = stim.compile_pixel(&self.geom, x, y, er, t0_us, t1_us)?;
        let (theta_on, theta_off) = self.realized_thresholds(x, y);

        let start = out.len();
        match self.params.photoreceptor_cutoff_hz {
            None => self.pixel_signal_events(&signal, theta_on, theta_off, x, y, t0_us, t1_us, out),
            Some(fc) => {
                self.lowpassed_events(&signal, fc, theta_on, theta_off, x, y, t0_us, t1_us, out)
            }
        }

        if self.params.leak_rate_hz > 0.0 {
            let pixel_index = y as u64 * self.geom.width() as u64 + x as u64;
            let mut rng = pixel_rng(self.params.rng_seed, pixel_index, STREAM_LEAK);
            let mut leaks: Vec<DvsEvent> = Vec::new();
            let mut t_s = t0_us as f64 * 1e-6;
            loop {
                t_s += -uniform01(&mut rng).ln() / self.params.leak_rate_hz;
                let t_us = ceil_us(t_s);
                if t_us >= t1_us {
                    break;
                }
                leaks.push(DvsEvent {
                    t_us: t_us.max(t0_us),
                    x,
                    y,
                    polarity: Polarity::On,
                });
            }
            if !leaks.is_empty() {
                let signal_events: Vec<DvsEvent> = out.split_off(start);
                let mut si = signal_events.into_iter().peekable();
                let mut li = leaks.into_iter().peekable();
                // merge by time, signal-path first on ties
                loop {
                    match (si.peek(), li.peek()) {
                        (Some(s), Some(l)) => {
                            if s.t_us <= l.t_us {
                                out.push(si.next().unwrap());
                            } else {
                                out.push(li.next().unwrap());
                            }
                        }
                        (Some(_), None) => out.push(si.next().unwrap()),
                        (None, Some(_)) => out.push(li.next().unwrap()),
                        (None, None) => break,
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact threshold-crossing generation on the closed-form signal.
    #[allow(clippy::too_many_arguments)]
    fn pixel_signal_events(
        &self,
        signal: &PixelSignal,
        theta_on: f64,
        theta_off: f64,
        x: u16,
        y: u16,
        t0_us: u64,
        t1_us: u64,
        out: &mut Vec<DvsEvent>,
    ) {
        signal_events(
            signal,
            theta_on,
            theta_off,
            self.params.refractory_us,
            t0_us,
            t1_us,
            &mut |t_us, polarity| {
                out.push(DvsEvent {
                    t_us,
                    x,
                    y,
                    polarity,
                })
            },
        );
    }

    /// Sampled-integration path used when the photoreceptor lowpass is
    /// enabled; the first-order filter has no closed form on these signals.
    /// Crossing times are linearly interpolated inside each sampling step.
    #[allow(clippy::too_many_arguments)]
    fn lowpassed_events(
        &self,
        signal: &PixelSignal,
        cutoff_hz: f64,
        theta_on: f64,
        theta_off: f64,
        x: u16,
        y: u16,
        t0_us: u64,
        t1_us: u64,
        out: &mut Vec<DvsEvent>,
    ) {
        let tau_s = 1.0 / (2.0 * std::f64::consts::PI * cutoff_hz);
        let step_us = ((tau_s * 1e6 / 16.0) as u64).max(1);
        let mut filtered = signal.log_flux_at(t0_us);
        let mut l_mem = filtered;
        let mut t_allowed_us = t0_us;
        let mut t = t0_us;
        while t < t1_us {
            let t_next = (t + step_us).min(t1_us);
            let dt_s = (t_next - t) as f64 * 1e-6;
            let alpha = (-dt_s / tau_s).exp();
            let input = signal.log_flux_at(t_next);
            let next_filtered = input + (filtered - input) * alpha;
            loop {
                let (target, polarity) = if next_filtered - l_mem >= theta_on {
                    (l_mem + theta_on, Polarity::On)
                } else if next_filtered - l_mem <= -theta_off {
                    (l_mem - theta_off, Polarity::Off)
                } else {
                    break;
                };
                let frac = if (next_filtered - filtered).abs() > 0.0 {
                    ((target - filtered) / (next_filtered - filtered)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let t_ev =
                    ceil_us(t as f64 * 1e-6 + frac * (t_next - t) as f64 * 1e-6).max(t_allowed_us);
                if t_ev >= t1_us {
                    return;
                }
                out.push(DvsEvent {
                    t_us: t_ev,
                    x,
                    y,
                    polarity,
                });
                match polarity {
                    Polarity::On => l_mem += theta_on,
                    Polarity::Off => l_mem -= theta_off,
                }
                t_allowed_us = t_ev + self.params.refractory_us;
                if t_allowed_us > t_next && self.params.refractory_us > 0 {
                    break;
                }
            }
            filtered = next_filtered;
            t = t_next;
        }
    }
}

/// Threshold-crossing event generation on a closed-form log-intensity drive.
///
/// The memorized level starts at the signal's value at `t0_us`; an ON (OFF)
/// crossing moves it up (down) by exactly one threshold. Crossing times are
/// solved on the signal segments and rounded up to the next microsecond;
/// level jumps at segment boundaries produce event bursts paced by the
/// refractory period. This is the exact inner loop of [`DvsSimulator`],
/// exposed so synthetic drives can be replayed and checked against a dense
/// integrator.
pub fn signal_events(
    signal: &PixelSignal,
    theta_on: f64,
    theta_off: f64,
    refractory_us: u64,
    t0_us: u64,
    t1_us: u64,
    emit: &mut dyn FnMut(u64, Polarity),
) {
    let mut state = GenState {
        l_mem: signal.log_flux_at(t0_us),
        t_allowed_us: t0_us,
        theta_on,
        theta_off,
        refractory_us,
        t1_us,
    };
    for (seg_start, seg_end, model) in signal.iter_spans() {
        let stop = match *model {
            FluxModel::Cosine { k, a, omega, phase } => cosine_segment_events(
                k,
                a,
                omega,
                phase,
                seg_start,
                seg_end.min(t1_us),
                &mut state,
                emit,
            ),
            _ => generic_segment_events(model, seg_start, seg_end.min(t1_us), &mut state, emit),
        };
        if stop {
            return;
        }
    }
}

struct GenState {
    l_mem: f64,
    t_allowed_us: u64,
    theta_on: f64,
    theta_off: f64,
    refractory_us: u64,
    t1_us: u64,
}

/// Crossing search through [`FluxModel::next_crossing`], used for the
/// non-cosine models. Returns true when the simulation window is exhausted.
fn generic_segment_events(
    model: &FluxModel,
    seg_start_us: u64,
    seg_end_us: u64,
    st: &mut GenState,
    emit: &mut dyn FnMut(u64, Polarity),
) -> bool {
    let seg_end_s = seg_end_us as f64 * 1e-6;
    let mut search_s = (seg_start_us.max(st.t_allowed_us) as f64) * 1e-6;
    loop {
        if search_s > seg_end_s {
            return false;
        }
        let up = st.l_mem + st.theta_on;
        let down = st.l_mem - st.theta_off;
        match model.next_crossing(search_s, seg_end_s, up, down) {
            None => return false,
            Some((t_s, polarity)) => {
                let t_ev = ceil_us(t_s).max(st.t_allowed_us);
                if t_ev >= st.t1_us {
                    return true;
                }
                emit(t_ev, polarity);
                match polarity {
                    Polarity::On => st.l_mem += st.theta_on,
                    Polarity::Off => st.l_mem -= st.theta_off,
                }
                st.t_allowed_us = t_ev + st.refractory_us;
                search_s = t_s.max(st.t_allowed_us as f64 * 1e-6);
            }
        }
    }
}

/// Fast crossing search on a raised-cosine segment, working in cosine space.
///
/// The memorized level maps to a normalized flux `em = exp(l_mem)/k`, which
/// updates multiplicatively by `exp(+/-theta)` per event, so the running
/// threshold translates to a target cosine with a couple of multiplies and
/// the crossing time needs a single `acos`. Semantics are identical to the
/// generic path (verified against it in tests).
#[allow(clippy::too_many_arguments)]
fn cosine_segment_events(
    k: f64,
    a: f64,
    omega: f64,
    phase: f64,
    seg_start_us: u64,
    seg_end_us: u64,
    st: &mut GenState,
    emit: &mut dyn FnMut(u64, Polarity),
) -> bool {
    const PI: f64 = std::f64::consts::PI;
    let seg_end_s = seg_end_us as f64 * 1e-6;
    let search_start_s = (seg_start_us.max(st.t_allowed_us) as f64) * 1e-6;
    if search_start_s > seg_end_s {
        return false;
    }
    let e_on = st.theta_on.exp();
    let e_off = (-st.theta_off).exp();
    let inv_a = 1.0 / a;
    let inv_omega = 1.0 / omega;
    let mut em = (st.l_mem - k.ln()).exp();

    let theta_end = omega * seg_end_s + phase;
    let mut theta_cur = omega * search_start_s + phase;
    let mut cos_cur = theta_cur.cos();
    let mut arc = (theta_cur / PI).floor();

    loop {
        let c_up = (em * e_on - 1.0) * inv_a;
        let c_dn = (em * e_off - 1.0) * inv_a;

        // earliest crossing at or after theta_cur
        let found: Option<(f64, f64, Polarity)> = if cos_cur >= c_up {
            Some((theta_cur, cos_cur, Polarity::On))
        } else if cos_cur <= c_dn {
            Some((theta_cur, cos_cur, Polarity::Off))
        } else {
            let mut hit = None;
            let mut walk_arc = arc;
            let mut c_start = cos_cur;
            loop {
                let arc_end = (walk_arc + 1.0) * PI;
                // even arc: cosine (and the log flux) decreasing
                if (walk_arc as i64).rem_euclid(2) == 0 {
                    if c_dn >= -1.0 && c_dn <= c_start {
                        let theta_star = walk_arc * PI + c_dn.clamp(-1.0, 1.0).acos();
                        if theta_star <= theta_end {
                            hit = Some((theta_star, c_dn, Polarity::Off, walk_arc));
                        }
                        break;
                    }
                } else if c_up <= 1.0 && c_up >= c_start {
                    let theta_star = arc_end - c_up.clamp(-1.0, 1.0).acos();
                    if theta_star <= theta_end {
                        hit = Some((theta_star, c_up, Polarity::On, walk_arc));
                    }
                    break;
                }
                if arc_end >= theta_end {
                    break;
                }
                c_start = if (walk_arc as i64).rem_euclid(2) == 0 {
                    -1.0
                } else {
                    1.0
                };
                walk_arc += 1.0;
            }
            match hit {
                Some((theta_star, c_star, pol, at_arc)) => {
                    arc = at_arc;
                    Some((theta_star, c_star, pol))
                }
                None => return false,
            }
        };

        let (theta_star, c_star, polarity) = found.expect("crossing checked above");
        let t_star_s = ((theta_star - phase) * inv_omega).max(search_start_s);
        let t_ev = ceil_us(t_star_s).max(st.t_allowed_us);
        if t_ev >= st.t1_us {
            return true;
        }
        emit(t_ev, polarity);
        match polarity {
            Polarity::On => {
                st.l_mem += st.theta_on;
                em *= e_on;
            }
            Polarity::Off => {
                st.l_mem -= st.theta_off;
                em *= e_off;
            }
        }
        st.t_allowed_us = t_ev + st.refractory_us;
        let t_allowed_s = st.t_allowed_us as f64 * 1e-6;
        if t_star_s >= t_allowed_s {
            theta_cur = theta_star;
            cos_cur = c_star;
        } else {
            if t_allowed_s > seg_end_s {
                return false;
            }
            theta_cur = omega * t_allowed_s + phase;
            cos_cur = theta_cur.cos();
            arc = (theta_cur / PI).floor();
        }
    }
}

/// One-shot convenience wrapper over [`DvsSimulator`].
pub fn simulate_dvs(
    stim: &Stimulus,
    geom: SensorGeometry,
    params: DvsPixelParams,
    er: ExtinctionRatio,
    t0_us: u64,
    t1_us: u64,
) -> Result<Vec<DvsEvent>, SimError> {
    DvsSimulator::new(geom, params)?.simulate(stim, er, t0_us, t1_us, None)
}
