//! Event stream statistics: per-pixel inter-event intervals pooled over an
//! ROI, log-binned histograms, and rate curves.

use crate::eval::EvalError;
use crate::sensor::{DvsEvent, PixelRect};

#[derive(Debug, Clone, PartialEq)]
pub struct StatsParams {
    /// Log-spaced histogram bins between `lo_us` and `hi_us`.
    pub bins: usize,
    pub lo_us: f64,
    pub hi_us: f64,
    /// Width of the rate-vs-time bins.
    pub rate_bin_s: f64,
}

impl Default for StatsParams {
    fn default() -> Self {
        Self {
            bins: 50,
            lo_us: 10.0,
            hi_us: 1e7,
            rate_bin_s: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalHistogram {
    /// `bins + 1` logarithmically spaced edges, microseconds.
    pub edges_us: Vec<f64>,
    pub counts: Vec<u64>,
}

impl IntervalHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn bin_center_ln(&self, i: usize) -> f64 {
        0.5 * (self.edges_us[i].ln() + self.edges_us[i + 1].ln())
    }

    /// Histogram mode in microseconds: the peak bin refined by parabolic
    /// interpolation over log-interval space, which removes most of the bin
    /// quantization.
    pub fn mode_us(&self) -> Option<f64> {
        if self.total() == 0 {
            return None;
        }
        let p = self
            .counts
            .iter()
            .enumerate()
            .max_by_key(|&(_, c)| *c)
            .map(|(i, _)| i)
            .unwrap();
        let center = self.bin_center_ln(p);
        if p == 0 || p + 1 >= self.counts.len() {
            return Some(center.exp());
        }
        let (cm, c0, cp) = (
            self.counts[p - 1] as f64,
            self.counts[p] as f64,
            self.counts[p + 1] as f64,
        );
        let denom = cm - 2.0 * c0 + cp;
        let delta = if denom.abs() > 0.0 {
            (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let width = self.bin_center_ln(p + 1) - self.bin_center_ln(p);
        Some((center + delta * width).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStats {
    pub events_in_roi: u64,
    pub window_s: f64,
    /// Mean event rate per subpixel over the window.
    pub per_pixel_rate_hz: f64,
    pub histogram: IntervalHistogram,
    /// `(window-center seconds, events/s/pixel)` curve.
    pub rate_vs_time: Vec<(f64, f64)>,
}

/// Pool per-pixel inter-event intervals over the ROI and bin them, plus the
/// rate curve. The stream must be sorted; events outside the ROI or window
/// are ignored.
pub fn event_statistics(
    events: &[DvsEvent],
    roi: PixelRect,
    t0_us: u64,
    t1_us: u64,
    params: &StatsParams,
) -> Result<EventStats, EvalError> {
    if t1_us <= t0_us {
        return Err(EvalError::InvalidSpec("empty statistics window".into()));
    }
    if params.bins == 0 || !(params.lo_us > 0.0) || params.hi_us <= params.lo_us {
        return Err(EvalError::InvalidSpec("bad histogram binning".into()));
    }
    let window_s = (t1_us - t0_us) as f64 * 1e-6;
    let ratio = (params.hi_us / params.lo_us).ln();
    let edges_us: Vec<f64> = (0..=params.bins)
        .map(|i| params.lo_us * (ratio * i as f64 / params.bins as f64).exp())
        .collect();
    let mut counts = vec![0u64; params.bins];

    let mut last_seen: Vec<u64> = vec![u64::MAX; roi.pixel_count()];
    let rate_bins = (window_s / params.rate_bin_s).ceil().max(1.0) as usize;
    let mut rate_counts = vec![0u64; rate_bins];
    let mut in_roi = 0u64;
    let mut prev_t = 0u64;
    for (i, ev) in events.iter().enumerate() {
        if i > 0 && ev.t_us < prev_t {
            return Err(EvalError::UnsortedInput(format!(
                "event {i} at t={} after t={prev_t}",
                ev.t_us
            )));
        }
        prev_t = ev.t_us;
        if ev.t_us < t0_us || ev.t_us >= t1_us || !roi.contains(ev.x, ev.y) {
            continue;
        }
        in_roi += 1;
        let rate_bin = (((ev.t_us - t0_us) as f64 * 1e-6) / params.rate_bin_s) as usize;
        rate_counts[rate_bin.min(rate_bins - 1)] += 1;
        let idx = roi.index_of(ev.x, ev.y);
        if last_seen[idx] != u64::MAX {
            let dt = (ev.t_us - last_seen[idx]) as f64;
            let bin = if dt <= params.lo_us {
                0
            } else {
                let b = ((dt / params.lo_us).ln() / ratio * params.bins as f64) as usize;
                b.min(params.bins - 1)
            };
            counts[bin] += 1;
        }
        last_seen[idx] = ev.t_us;
    }

    let pixel_count = roi.pixel_count() as f64;
    let rate_vs_time = rate_counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            (
                (i as f64 + 0.5) * params.rate_bin_s,
                c as f64 / pixel_count / params.rate_bin_s,
            )
        })
        .collect();
    Ok(EventStats {
        events_in_roi: in_roi,
        window_s,
        per_pixel_rate_hz: in_roi as f64 / pixel_count / window_s,
        histogram: IntervalHistogram { edges_us, counts },
        rate_vs_time,
    })
}

/// Least-squares line through the origin; returns `(slope, r_squared)` with
/// the uncentered total sum of squares convention.
pub fn through_origin_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| {
            let r = y - slope * x;
            r * r
        })
        .sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| y * y).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        0.0
    };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::Polarity;

    fn ev(t_us: u64, x: u16, y: u16) -> DvsEvent {
        DvsEvent {
            t_us,
            x,
            y,
            polarity: Polarity::On,
        }
    }

    #[test]
    fn empty_stream_gives_empty_histogram_and_zero_rate() {
        let roi = PixelRect::new(0, 0, 4, 4);
        let s = event_statistics(&[], roi, 0, 1_000_000, &StatsParams::default()).unwrap();
        assert_eq!(s.events_in_roi, 0);
        assert_eq!(s.per_pixel_rate_hz, 0.0);
        assert_eq!(s.histogram.total(), 0);
        assert_eq!(s.histogram.mode_us(), None);
    }

    #[test]
    fn periodic_single_pixel_stream_masses_one_bin() {
        let roi = PixelRect::new(0, 0, 2, 2);
        // 1 kHz stream: all intervals exactly 1 ms
        let events: Vec<DvsEvent> = (0..1000u64).map(|i| ev(i * 1_000, 0, 0)).collect();
        let s = event_statistics(&events, roi, 0, 1_000_000, &StatsParams::default()).unwrap();
        assert_eq!(s.histogram.total(), 999);
        let peak = s.histogram.counts.iter().max().unwrap();
        assert_eq!(*peak, 999, "all intervals in one bin");
        let mode = s.histogram.mode_us().unwrap();
        assert!(
            (mode / 1_000.0 - 1.0).abs() < 0.2,
            "mode {mode} us should be near 1 ms"
        );
    }

    #[test]
    fn intervals_are_per_pixel_not_global() {
        let roi = PixelRect::new(0, 0, 2, 2);
        // two interleaved pixels at 500 Hz each: global spacing 1 ms, but
        // per-pixel intervals are 2 ms
        let mut events = Vec::new();
        for i in 0..500u64 {
            events.push(ev(i * 2_000, 0, 0));
            events.push(ev(i * 2_000 + 1_000, 1, 0));
        }
        let s = event_statistics(&events, roi, 0, 1_000_000, &StatsParams::default()).unwrap();
        let mode = s.histogram.mode_us().unwrap();
        assert!(
            (mode / 2_000.0 - 1.0).abs() < 0.2,
            "mode {mode} us should be near 2 ms"
        );
    }

    #[test]
    fn unsorted_stream_is_an_error() {
        let roi = PixelRect::new(0, 0, 2, 2);
        let events = vec![ev(10, 0, 0), ev(5, 0, 0)];
        assert!(matches!(
            event_statistics(&events, roi, 0, 100, &StatsParams::default()),
            Err(EvalError::UnsortedInput(_))
        ));
    }

    #[test]
    fn rate_counts_only_roi_and_window() {
        let roi = PixelRect::new(0, 0, 2, 2);
        let events = vec![
            ev(100, 0, 0),
            ev(200, 5, 5), // outside roi
            ev(300, 1, 1),
            ev(2_000_000, 0, 0), // outside window
        ];
        let s = event_statistics(&events, roi, 0, 1_000_000, &StatsParams::default()).unwrap();
        assert_eq!(s.events_in_roi, 2);
        assert!((s.per_pixel_rate_hz - 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn through_origin_fit_recovers_slope() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64, 3.0 * k as f64)).collect();
        let (slope, r2) = through_origin_fit(&pts);
        assert!((slope - 3.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        // noisy data departs from 1
        let noisy: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y + x * x)).collect();
        let (_, r2n) = through_origin_fit(&noisy);
        assert!(r2n < 1.0);
    }
}
