//! Closed-form per-subpixel flux signals.
//!
//! Every stimulus compiles, per subpixel, into a short list of time segments
//! whose flux is either constant, a raised cosine `k*(1 + a*cos(w*t + p))`,
//! or exponential in time (a log-intensity ramp, used by tests and
//! synthetic drives). Threshold crossings of the log intensity are solved in
//! closed form on these segments, which is what makes microsecond-exact event
//! generation cheap.

use crate::sensor::Polarity;

#[derive(Debug, Clone, Copy)]
pub enum FluxModel {
    /// `I(t) = k`
    Constant { k: f64 },
    /// `I(t) = k*(1 + a*cos(omega*t + phase))` with `0 <= a < 1`, `omega > 0`,
    /// `t` in absolute seconds.
    Cosine {
        k: f64,
        a: f64,
        omega: f64,
        phase: f64,
    },
    /// `ln I(t) = l0 + slope*t`, `t` in absolute seconds.
    LogRamp { l0: f64, slope: f64 },
}

impl FluxModel {
    /// Normalizing constructor for the cosine form: folds negative depth into
    /// the phase, degenerates to a constant when the modulation vanishes.
    pub fn cosine(k: f64, a: f64, omega: f64, phase: f64) -> FluxModel {
        let (a, phase) = if a < 0.0 {
            (-a, phase + std::f64::consts::PI)
        } else {
            (a, phase)
        };
        if a == 0.0 {
            FluxModel::Constant { k }
        } else if omega == 0.0 {
            FluxModel::Constant {
                k: k * (1.0 + a * phase.cos()),
            }
        } else if omega < 0.0 {
            // cos(-w*t + p) = cos(w*t - p)
            FluxModel::Cosine {
                k,
                a,
                omega: -omega,
                phase: -phase,
            }
        } else {
            FluxModel::Cosine { k, a, omega, phase }
        }
    }

    pub fn flux(&self, t_s: f64) -> f64 {
        match *self {
            FluxModel::Constant { k } => k,
            FluxModel::Cosine { k, a, omega, phase } => k * (1.0 + a * (omega * t_s + phase).cos()),
            FluxModel::LogRamp { l0, slope } => (l0 + slope * t_s).exp(),
        }
    }

    pub fn log_flux(&self, t_s: f64) -> f64 {
        match *self {
            FluxModel::Constant { k } => k.ln(),
            FluxModel::Cosine { k, a, omega, phase } => {
                k.ln() + (1.0 + a * (omega * t_s + phase).cos()).ln_1p_safe()
            }
            FluxModel::LogRamp { l0, slope } => l0 + slope * t_s,
        }
    }

    /// Lowest flux the model can reach; must stay positive for the log to be
    /// defined.
    pub fn min_flux(&self) -> f64 {
        match *self {
            FluxModel::Constant { k } => k,
            FluxModel::Cosine { k, a, .. } => k * (1.0 - a),
            FluxModel::LogRamp { .. } => f64::MIN_POSITIVE,
        }
    }

    /// Exact integral of the flux over `[a_s, b_s]`; quadrature oracle.
    pub fn exact_integral(&self, a_s: f64, b_s: f64) -> f64 {
        match *self {
            FluxModel::Constant { k } => k * (b_s - a_s),
            FluxModel::Cosine { k, a, omega, phase } => {
                k * ((b_s - a_s)
                    + a / omega * ((omega * b_s + phase).sin() - (omega * a_s + phase).sin()))
            }
            FluxModel::LogRamp { l0, slope } => {
                if slope == 0.0 {
                    l0.exp() * (b_s - a_s)
                } else {
                    ((l0 + slope * b_s).exp() - (l0 + slope * a_s).exp()) / slope
                }
            }
        }
    }

    /// Earliest `t` in `[from_s, end_s]` where the log flux reaches `up` (ON)
    /// or `down` (OFF). A level already beyond a threshold at `from_s`
    /// reports a crossing right there, which is how jump discontinuities at
    /// segment boundaries turn into event bursts.
    pub fn next_crossing(
        &self,
        from_s: f64,
        end_s: f64,
        up: f64,
        down: f64,
    ) -> Option<(f64, Polarity)> {
        if from_s > end_s {
            return None;
        }
        let l_from = self.log_flux(from_s);
        if l_from >= up {
            return Some((from_s, Polarity::On));
        }
        if l_from <= down {
            return Some((from_s, Polarity::Off));
        }
        match *self {
            FluxModel::Constant { .. } => None,
            FluxModel::LogRamp { l0, slope } => {
                if slope > 0.0 {
                    let t = (up - l0) / slope;
                    (t <= end_s).then(|| (t.max(from_s), Polarity::On))
                } else if slope < 0.0 {
                    let t = (down - l0) / slope;
                    (t <= end_s).then(|| (t.max(from_s), Polarity::Off))
                } else {
                    None
                }
            }
            FluxModel::Cosine { k, a, omega, phase } => {
                // cos(theta) value at which the log flux equals `target`
                let cos_at = |target: f64| ((target - k.ln()).exp() - 1.0) / a;
                let c_up = cos_at(up);
                let c_down = cos_at(down);
                let theta_from = omega * from_s + phase;
                let theta_end = omega * end_s + phase;
                let mut arc = (theta_from / std::f64::consts::PI).floor();
                // walk monotone arcs of the cosine until a crossing or the end
                loop {
                    let arc_start = arc * std::f64::consts::PI;
                    let arc_end = arc_start + std::f64::consts::PI;
                    if arc_start > theta_end {
                        return None;
                    }
                    let lo = arc_start.max(theta_from);
                    let hi = arc_end.min(theta_end);
                    // even arc: cos (and the log flux) decreasing
                    let decreasing = (arc as i64).rem_euclid(2) == 0;
                    if decreasing {
                        if c_down >= -1.0 && c_down >= hi.cos() && c_down <= lo.cos() {
                            let theta_star = arc_start + c_down.clamp(-1.0, 1.0).acos();
                            if theta_star <= hi + 1e-12 {
                                let t = ((theta_star - phase) / omega).max(from_s);
                                if t <= end_s {
                                    return Some((t, Polarity::Off));
                                }
                            }
                        }
                    } else if c_up <= 1.0 && c_up <= hi.cos() && c_up >= lo.cos() {
                        let theta_star = arc_end - c_up.clamp(-1.0, 1.0).acos();
                        if theta_star >= lo - 1e-12 && theta_star <= hi + 1e-12 {
                            let t = ((theta_star - phase) / omega).max(from_s);
                            if t <= end_s {
                                return Some((t, Polarity::On));
                            }
                        }
                    }
                    arc += 1.0;
                }
            }
        }
    }
}

/// `ln(x)` guarded against the argument underflowing to values <= 0 from
/// floating point cancellation; the caller validates positivity upstream.
trait Ln1pSafe {
    fn ln_1p_safe(self) -> f64;
}

impl Ln1pSafe for f64 {
    fn ln_1p_safe(self) -> f64 {
        self.max(f64::MIN_POSITIVE).ln()
    }
}

/// One subpixel's drive over a simulation window: contiguous segments, each
/// valid on `[start_us, next start_us)`, the last one up to `end_us`.
#[derive(Debug, Clone)]
pub struct PixelSignal {
    pub segments: Vec<(u64, FluxModel)>,
    pub end_us: u64,
}

impl PixelSignal {
    pub fn constant(flux: f64, t0_us: u64, t1_us: u64) -> Self {
        Self {
            segments: vec![(t0_us, FluxModel::Constant { k: flux })],
            end_us: t1_us,
        }
    }

    pub fn log_flux_at(&self, t_us: u64) -> f64 {
        let model = self.model_at(t_us);
        model.log_flux(t_us as f64 * 1e-6)
    }

    pub fn model_at(&self, t_us: u64) -> &FluxModel {
        let idx = match self.segments.binary_search_by_key(&t_us, |(s, _)| *s) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        &self.segments[idx].1
    }

    /// Segment spans as `(start_us, end_us, model)`.
    pub fn iter_spans(&self) -> impl Iterator<Item = (u64, u64, &FluxModel)> + '_ {
        self.segments.iter().enumerate().map(move |(i, (s, m))| {
            let end = self
                .segments
                .get(i + 1)
                .map(|(n, _)| *n)
                .unwrap_or(self.end_us);
            (*s, end, m)
        })
    }

    pub fn min_flux(&self) -> f64 {
        self.segments
            .iter()
            .map(|(_, m)| m.min_flux())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_constructor_normalizes() {
        let m = FluxModel::cosine(1.0, -0.5, 2.0, 0.0);
        // negative depth folded into phase: value at t=0 must match original
        assert_abs_diff_eq!(m.flux(0.0), 0.5, epsilon = 1e-15);
        match m {
            FluxModel::Cosine { a, .. } => assert!(a > 0.0),
            _ => panic!("expected cosine"),
        }
        assert!(matches!(
            FluxModel::cosine(2.0, 0.0, 5.0, 1.0),
            FluxModel::Constant { .. }
        ));
    }

    #[test]
    fn ramp_crossing_matches_closed_form() {
        // L = 0.1*t: ON threshold 0.14 crossed at t = 1.4 s
        let m = FluxModel::LogRamp {
            l0: 0.0,
            slope: 0.1,
        };
        let (t, pol) = m.next_crossing(0.0, 10.0, 0.14, -0.14).unwrap();
        assert_eq!(pol, Polarity::On);
        assert_abs_diff_eq!(t, 1.4, epsilon = 1e-9);
    }

    #[test]
    fn crossing_is_immediate_after_a_jump() {
        let m = FluxModel::Constant { k: 10.0 };
        // memorized level far below the new constant level
        let (t, pol) = m.next_crossing(3.0, 5.0, 1.0, -1.0).unwrap();
        assert_eq!((t, pol), (3.0, Polarity::On));
    }

    #[test]
    fn cosine_crossing_agrees_with_dense_scan() {
        let m = FluxModel::cosine(2.0, 0.8, 7.0, 1.3);
        let l0 = m.log_flux(0.0);
        for (up_off, down_off) in [(0.3, 0.3), (0.05, 0.4), (0.7, 0.1)] {
            let up = l0 + up_off;
            let down = l0 - down_off;
            let got = m.next_crossing(0.0, 5.0, up, down);
            // dense reference scan at 0.1 us
            let mut expected = None;
            let mut t = 0.0;
            while t <= 5.0 {
                let l = m.log_flux(t);
                if l >= up {
                    expected = Some((t, Polarity::On));
                    break;
                }
                if l <= down {
                    expected = Some((t, Polarity::Off));
                    break;
                }
                t += 1e-7;
            }
            let (tg, pg) = got.expect("crossing expected");
            let (te, pe) = expected.expect("scan found none");
            assert_eq!(pg, pe);
            assert!((tg - te).abs() < 1e-6, "analytic {tg} vs scan {te}");
        }
    }

    #[test]
    fn exact_integral_matches_numeric_reference() {
        let m = FluxModel::cosine(3.0, 0.6, 11.0, 0.4);
        let (a, b) = (0.2, 1.7);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            s += m.flux(a + (i as f64 + 0.5) * h) * h;
        }
        assert_abs_diff_eq!(m.exact_integral(a, b), s, epsilon = 1e-6);
    }

    #[test]
    fn pixel_signal_segment_lookup() {
        let sig = PixelSignal {
            segments: vec![
                (0, FluxModel::Constant { k: 1.0 }),
                (500, FluxModel::Constant { k: 2.0 }),
            ],
            end_us: 1000,
        };
        assert_abs_diff_eq!(sig.log_flux_at(0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sig.log_flux_at(499), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sig.log_flux_at(500), 2.0f64.ln(), epsilon = 1e-12);
        let spans: Vec<_> = sig.iter_spans().map(|(s, e, _)| (s, e)).collect();
        assert_eq!(spans, vec![(0, 500), (500, 1000)]);
    }
}
