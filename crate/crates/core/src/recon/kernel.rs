//! Arithmetic kernels of the reconstruction inner loops, generic over the
//! scalar type.
//!
//! The engines instantiate these with `f64` (compiles to the bare
//! intrinsics); the operation-count harness instantiates them with
//! [`CountingF64`] to measure the per-update arithmetic cost against the
//! per-pixel operation budgets (events 12, frames 8, CF 14, each allowed 2x).

use std::cell::Cell;

/// Scalar interface covering exactly the operations the kernels need.
pub trait Real: Copy {
    fn lit(v: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan2(self, o: Self) -> Self;
    fn max(self, o: Self) -> Self;
    fn min(self, o: Self) -> Self;
    /// Reduce an angle into `[0, pi)`.
    fn wrap_pi(self) -> Self;
}

impl Real for f64 {
    #[inline(always)]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline(always)]
    fn sub(self, o: Self) -> Self {
        self - o
    }
    #[inline(always)]
    fn mul(self, o: Self) -> Self {
        self * o
    }
    #[inline(always)]
    fn div(self, o: Self) -> Self {
        self / o
    }
    #[inline(always)]
    fn neg(self) -> Self {
        -self
    }
    #[inline(always)]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline(always)]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline(always)]
    fn atan2(self, o: Self) -> Self {
        f64::atan2(self, o)
    }
    #[inline(always)]
    fn max(self, o: Self) -> Self {
        f64::max(self, o)
    }
    #[inline(always)]
    fn min(self, o: Self) -> Self {
        f64::min(self, o)
    }
    #[inline(always)]
    fn wrap_pi(self) -> Self {
        crate::polarization::wrap_aop(self)
    }
}

thread_local! {
    static OP_COUNT: Cell<u64> = const { Cell::new(0) };
}

pub fn reset_op_count() {
    OP_COUNT.with(|c| c.set(0));
}

pub fn op_count() -> u64 {
    OP_COUNT.with(|c| c.get())
}

fn bump() {
    OP_COUNT.with(|c| c.set(c.get() + 1));
}

/// `f64` wrapper that counts every arithmetic operation (unary negation is
/// treated as a sign flip, not an operation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingF64(pub f64);

impl Real for CountingF64 {
    fn lit(v: f64) -> Self {
        CountingF64(v)
    }
    fn add(self, o: Self) -> Self {
        bump();
        CountingF64(self.0 + o.0)
    }
    fn sub(self, o: Self) -> Self {
        bump();
        CountingF64(self.0 - o.0)
    }
    fn mul(self, o: Self) -> Self {
        bump();
        CountingF64(self.0 * o.0)
    }
    fn div(self, o: Self) -> Self {
        bump();
        CountingF64(self.0 / o.0)
    }
    fn neg(self) -> Self {
        CountingF64(-self.0)
    }
    fn exp(self) -> Self {
        bump();
        CountingF64(self.0.exp())
    }
    fn ln(self) -> Self {
        bump();
        CountingF64(self.0.ln())
    }
    fn sqrt(self) -> Self {
        bump();
        CountingF64(self.0.sqrt())
    }
    fn atan2(self, o: Self) -> Self {
        bump();
        CountingF64(self.0.atan2(o.0))
    }
    fn max(self, o: Self) -> Self {
        bump();
        CountingF64(self.0.max(o.0))
    }
    fn min(self, o: Self) -> Self {
        bump();
        CountingF64(self.0.min(o.0))
    }
    fn wrap_pi(self) -> Self {
        bump();
        CountingF64(crate::polarization::wrap_aop(self.0))
    }
}

/// First-order IIR: decay the state by `exp(-dt/tau)` and accumulate `p`.
/// This is the per-subpixel update of both the events method and the CF
/// event path.
#[inline(always)]
pub fn iir_decay_add<R: Real>(state: R, dt_s: R, inv_tau: R, p: R) -> R {
    let alpha = dt_s.mul(inv_tau).neg().exp();
    state.mul(alpha).add(p)
}

/// Decay only, used to sample a state at a later instant without an input.
#[inline(always)]
pub fn iir_decay<R: Real>(state: R, dt_s: R, inv_tau: R) -> R {
    state.mul(dt_s.mul(inv_tau).neg().exp())
}

/// Stokes difference channels and AoP from the four per-angle values
/// (log-change analogs or intensities). Returns `(s1, s2, aop)`.
#[inline(always)]
pub fn aop_channels<R: Real>(v0: R, v45: R, v90: R, v135: R) -> (R, R, R) {
    let s1 = v0.sub(v90);
    let s2 = v45.sub(v135);
    let aop = s2.atan2(s1).mul(R::lit(0.5)).wrap_pi();
    (s1, s2, aop)
}

/// Frames method, one macropixel: dark subtraction, Stokes, DoLP, AoP.
/// Returns `(s0, s1, s2, dolp, aop)`.
#[inline(always)]
pub fn frames_macropixel<R: Real>(dn0: R, dn45: R, dn90: R, dn135: R, dark: R) -> (R, R, R, R, R) {
    let i0 = dn0.sub(dark);
    let i45 = dn45.sub(dark);
    let i90 = dn90.sub(dark);
    let i135 = dn135.sub(dark);
    let s0 = i0.add(i90);
    let s1 = i0.sub(i90);
    let s2 = i45.sub(i135);
    let dolp = s1.mul(s1).add(s2.mul(s2)).sqrt().div(s0);
    let aop = s2.atan2(s1).mul(R::lit(0.5)).wrap_pi();
    (s0, s1, s2, dolp, aop)
}

/// CF frame-path update: pull the log intensity toward the frame sample with
/// the adaptively weighted time constant.
#[inline(always)]
pub fn cf_frame_update<R: Real>(l: R, dt_s: R, inv_tau: R, weight: R, l_aps: R) -> R {
    let alpha = dt_s.mul(inv_tau).mul(weight).neg().exp();
    l.mul(alpha).add(R::lit(1.0).sub(alpha).mul(l_aps))
}

/// Log intensity of a frame sample: `ln(max(dn - dark, 1))`.
#[inline(always)]
pub fn aps_log_sample<R: Real>(dn: R, dark: R) -> R {
    dn.sub(dark).max(R::lit(1.0)).ln()
}

/// APS confidence weight: 1 inside `[lo, hi]`, ramping linearly down to
/// `lambda` over `margin` DN outside the limits.
#[inline(always)]
pub fn aps_weight<R: Real>(dn: R, lo: R, hi: R, margin: R, lambda: R) -> R {
    let up_ramp = dn.sub(lo.sub(margin)).div(margin);
    let down_ramp = hi.add(margin).sub(dn).div(margin);
    let ramp = up_ramp.min(down_ramp).max(R::lit(0.0)).min(R::lit(1.0));
    lambda.add(R::lit(1.0).sub(lambda).mul(ramp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn decay_add_matches_closed_form() {
        // dt = tau, state 1, p = 0.14: e^-1 + 0.14
        let got = iir_decay_add(1.0f64, 0.5, 2.0, 0.14);
        assert_abs_diff_eq!(got, (-1.0f64).exp() + 0.14, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.5079, epsilon = 1e-4);
        // dt = 0: pure accumulation
        assert_abs_diff_eq!(iir_decay_add(1.0f64, 0.0, 2.0, 0.14), 1.14, epsilon = 1e-15);
    }

    #[test]
    fn aps_weight_shape() {
        let w = |dn: f64| aps_weight(dn, 10.0, 200.0, 19.0, 0.1);
        assert_abs_diff_eq!(w(100.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w(10.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w(200.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w(0.0), 0.1 + 0.9 * (9.0 / 19.0), epsilon = 1e-12);
        assert_abs_diff_eq!(w(1023.0), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(w(219.0), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn counting_scalar_counts() {
        reset_op_count();
        let a = CountingF64(2.0);
        let b = CountingF64(3.0);
        let _ = a.add(b).mul(a).exp();
        assert_eq!(op_count(), 3);
        reset_op_count();
        assert_eq!(op_count(), 0);
    }

    #[test]
    fn event_update_within_op_budget() {
        reset_op_count();
        let c = CountingF64::lit;
        let _ = iir_decay_add(c(0.3), c(0.01), c(3.2), c(0.14));
        let update_ops = op_count();
        assert!(update_ops <= 5, "events update used {update_ops} ops");
    }
}
