//! Frame-based Stokes reconstruction: invert the four mosaic channels of
//! each macropixel directly, per frame.

use crate::polarization::StokesSample;
use crate::recon::{kernel, ReconError};
use crate::sensor::{ApsFrame, ApsParams};

/// Stokes sample of one macropixel; flagged when any subpixel clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacropixelSample {
    pub stokes: StokesSample,
    pub saturated: bool,
}

/// Per-frame reconstruction over the frame's macropixel grid, timestamped at
/// the exposure midpoint.
#[derive(Debug, Clone)]
pub struct FrameStokes {
    pub t_us: u64,
    /// Macropixel origin (subpixel coordinates / 2).
    pub mx0: u16,
    pub my0: u16,
    pub mwidth: u16,
    pub mheight: u16,
    samples: Vec<MacropixelSample>,
}

impl FrameStokes {
    pub fn get(&self, mx: u16, my: u16) -> &MacropixelSample {
        let idx = (my - self.my0) as usize * self.mwidth as usize + (mx - self.mx0) as usize;
        &self.samples[idx]
    }

    pub fn contains(&self, mx: u16, my: u16) -> bool {
        mx >= self.mx0
            && mx < self.mx0 + self.mwidth
            && my >= self.my0
            && my < self.my0 + self.mheight
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, u16, &MacropixelSample)> + '_ {
        self.samples.iter().enumerate().map(move |(i, s)| {
            let mx = self.mx0 + (i % self.mwidth as usize) as u16;
            let my = self.my0 + (i / self.mwidth as usize) as u16;
            (mx, my, s)
        })
    }
}

/// Reconstruct Stokes parameters for every macropixel of a frame.
///
/// DN values are treated as linear flux after dark subtraction. Macropixels
/// with any saturated subpixel are flagged; their AoP/DoLP are unreliable.
pub fn reconstruct_frame(frame: &ApsFrame, dark_offset_dn: u16) -> Result<FrameStokes, ReconError> {
    let r = frame.rect;
    if r.x0 % 2 != 0 || r.y0 % 2 != 0 || r.width % 2 != 0 || r.height % 2 != 0 {
        return Err(ReconError::MisalignedFrame(format!("{r:?}")));
    }
    let (mwidth, mheight) = (r.width / 2, r.height / 2);
    let dark = dark_offset_dn as f64;
    let mut samples = Vec::with_capacity(mwidth as usize * mheight as usize);
    for my in 0..mheight {
        for mx in 0..mwidth {
            let (x, y) = (r.x0 + 2 * mx, r.y0 + 2 * my);
            // mosaic cell: [0 45; 135 90]
            let dn0 = frame.dn(x, y);
            let dn45 = frame.dn(x + 1, y);
            let dn135 = frame.dn(x, y + 1);
            let dn90 = frame.dn(x + 1, y + 1);
            let saturated = [dn0, dn45, dn135, dn90].contains(&ApsParams::DN_MAX);
            let (s0, s1, s2, _, _) =
                kernel::frames_macropixel(dn0 as f64, dn45 as f64, dn90 as f64, dn135 as f64, dark);
            samples.push(MacropixelSample {
                stokes: StokesSample::new(s0, s1, s2),
                saturated,
            });
        }
    }
    Ok(FrameStokes {
        t_us: frame.mid_t_us(),
        mx0: r.x0 / 2,
        my0: r.y0 / 2,
        mwidth,
        mheight,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::{aop_error, aop_of, dolp_of, ExtinctionRatio, PolarizationState};
    use crate::sensor::{simulate_aps, PixelRect, SensorGeometry, Stimulus};

    #[test]
    fn uniform_frame_is_unpolarized() {
        let frame = ApsFrame {
            t_start_us: 0,
            t_end_us: 20_000,
            rect: PixelRect::new(0, 0, 4, 4),
            samples: vec![300; 16],
        };
        let rec = reconstruct_frame(&frame, 0).unwrap();
        assert_eq!(rec.t_us, 10_000);
        for (_, _, s) in rec.iter() {
            assert_eq!(dolp_of(&s.stokes).unwrap(), 0.0);
            assert!(aop_of(&s.stokes).is_err());
            assert!(!s.saturated);
        }
    }

    #[test]
    fn static_polarized_scene_inverts_to_input_angle() {
        // forward-simulate a DoLP=1, 30 deg static stimulus and invert
        let aop = 30.0f64.to_radians();
        let stim = Stimulus::PiecewiseConstantField {
            background: PolarizationState::new(800.0, 1.0, aop).unwrap(),
            patches: vec![],
        };
        let geom = SensorGeometry::new(8, 8).unwrap();
        let frames = simulate_aps(
            &stim,
            geom,
            Default::default(),
            ExtinctionRatio::IDEAL,
            0,
            100_000,
            None,
        )
        .unwrap();
        let rec = reconstruct_frame(&frames[0], 0).unwrap();
        for (_, _, s) in rec.iter() {
            let got = aop_of(&s.stokes).unwrap();
            assert!(
                aop_error(got, aop).to_degrees() < 0.3,
                "aop {} deg off",
                aop_error(got, aop).to_degrees()
            );
            assert!((dolp_of(&s.stokes).unwrap() - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn saturated_subpixel_flags_macropixel() {
        let mut samples = vec![100u16; 16];
        samples[5] = ApsParams::DN_MAX; // (1,1) subpixel of macropixel (0,0)
        let frame = ApsFrame {
            t_start_us: 0,
            t_end_us: 20_000,
            rect: PixelRect::new(0, 0, 4, 4),
            samples,
        };
        let rec = reconstruct_frame(&frame, 0).unwrap();
        assert!(rec.get(0, 0).saturated);
        assert!(!rec.get(1, 0).saturated);
        assert!(!rec.get(0, 1).saturated);
    }

    #[test]
    fn misaligned_region_is_rejected() {
        let frame = ApsFrame {
            t_start_us: 0,
            t_end_us: 1,
            rect: PixelRect::new(1, 0, 4, 4),
            samples: vec![0; 16],
        };
        assert!(matches!(
            reconstruct_frame(&frame, 0),
            Err(ReconError::MisalignedFrame(_))
        ));
    }
}
