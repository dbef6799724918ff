//! Stokes algebra, Malus transmission with finite extinction ratio, and
//! circular angle metrics.
//!
//! Angles are radians everywhere in this crate; degrees appear only at the
//! CLI/file boundary. The angle of polarization (AoP) lives on a circle of
//! circumference pi, so every AoP is stored reduced into `[0, pi)` and all
//! comparisons go through [`aop_error`].

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolError {
    #[error("total flux must be finite and >= 0, got {0}")]
    InvalidFlux(f64),
    #[error("DoLP must be within [0, 1], got {0}")]
    InvalidDolp(f64),
    #[error("angle must be finite, got {0}")]
    InvalidAngle(f64),
    #[error("extinction ratio must be > 1 (or infinite), got {0}")]
    InvalidExtinctionRatio(f64),
    #[error("DoLP undefined: S0 = {0} is not positive")]
    UndefinedDolp(f64),
    #[error("AoP undefined: light is unpolarized (S1 = S2 = 0)")]
    UndefinedAop,
    #[error("cannot average an empty set of Stokes samples")]
    EmptyRoi,
}

/// Reduce an angle modulo pi into `[0, pi)`.
pub fn wrap_aop(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    // rem_euclid can round up to exactly pi for tiny negative inputs
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Incident light at one point and instant: total flux plus the linear
/// polarization summary (DoLP, AoP).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    total_flux: f64,
    dolp: f64,
    aop: f64,
}

impl PolarizationState {
    pub fn new(total_flux: f64, dolp: f64, aop: f64) -> Result<Self, PolError> {
        if !total_flux.is_finite() || total_flux < 0.0 {
            return Err(PolError::InvalidFlux(total_flux));
        }
        if !dolp.is_finite() || !(0.0..=1.0).contains(&dolp) {
            return Err(PolError::InvalidDolp(dolp));
        }
        if !aop.is_finite() {
            return Err(PolError::InvalidAngle(aop));
        }
        Ok(Self {
            total_flux,
            dolp,
            aop: wrap_aop(aop),
        })
    }

    pub fn unpolarized(total_flux: f64) -> Result<Self, PolError> {
        Self::new(total_flux, 0.0, 0.0)
    }

    pub fn total_flux(&self) -> f64 {
        self.total_flux
    }

    pub fn dolp(&self) -> f64 {
        self.dolp
    }

    /// AoP in `[0, pi)`.
    pub fn aop(&self) -> f64 {
        self.aop
    }
}

/// Linear Stokes components. S3 (circular) is not represented; the mosaic
/// sensor is blind to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesSample {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

impl StokesSample {
    pub fn new(s0: f64, s1: f64, s2: f64) -> Self {
        Self { s0, s1, s2 }
    }

    /// Magnitude of the linear polarization vector, `sqrt(s1^2 + s2^2)`.
    pub fn linear_norm(&self) -> f64 {
        self.s1.hypot(self.s2)
    }
}

/// One of the four mosaic filter orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterAngle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl FilterAngle {
    pub const ALL: [FilterAngle; 4] = [
        FilterAngle::Deg0,
        FilterAngle::Deg45,
        FilterAngle::Deg90,
        FilterAngle::Deg135,
    ];

    pub fn radians(self) -> f64 {
        match self {
            FilterAngle::Deg0 => 0.0,
            FilterAngle::Deg45 => PI / 4.0,
            FilterAngle::Deg90 => FRAC_PI_2,
            FilterAngle::Deg135 => 3.0 * PI / 4.0,
        }
    }

    /// Channel index in intensity-vector order (I0, I45, I90, I135).
    pub fn index(self) -> usize {
        match self {
            FilterAngle::Deg0 => 0,
            FilterAngle::Deg45 => 1,
            FilterAngle::Deg90 => 2,
            FilterAngle::Deg135 => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Polarizer extinction ratio: the aligned/crossed transmission ratio.
/// `ExtinctionRatio::IDEAL` models a perfect filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionRatio(f64);

impl ExtinctionRatio {
    pub const IDEAL: ExtinctionRatio = ExtinctionRatio(f64::INFINITY);

    pub fn new(er: f64) -> Result<Self, PolError> {
        if er.is_nan() || er <= 1.0 {
            return Err(PolError::InvalidExtinctionRatio(er));
        }
        Ok(Self(er))
    }

    pub fn get(&self) -> f64 {
        self.0
    }

    pub fn is_ideal(&self) -> bool {
        self.0.is_infinite()
    }

    /// Modulation depth of the transmitted intensity for fully polarized
    /// input: `(ER - 1) / (ER + 1)`, 1 for an ideal filter.
    pub fn modulation(&self) -> f64 {
        if self.is_ideal() {
            1.0
        } else {
            (self.0 - 1.0) / (self.0 + 1.0)
        }
    }
}

/// Flux transmitted through one mosaic filter.
///
/// For an ideal filter this is Malus's law generalized to partial
/// polarization: `It*DoLP*cos^2(aop - i) + It/2*(1 - DoLP)`. A finite
/// extinction ratio leaks the crossed component: the result mixes the ideal
/// parallel and perpendicular transmissions with weights ER : 1.
pub fn malus_intensity(state: &PolarizationState, angle: FilterAngle, er: ExtinctionRatio) -> f64 {
    let delta = state.aop - angle.radians();
    let cos2 = delta.cos().powi(2);
    let parallel =
        state.total_flux * state.dolp * cos2 + 0.5 * state.total_flux * (1.0 - state.dolp);
    if er.is_ideal() {
        parallel
    } else {
        // parallel + perpendicular always sum to the total flux
        let perpendicular = state.total_flux - parallel;
        (er.get() * parallel + perpendicular) / (er.get() + 1.0)
    }
}

/// Assemble linear Stokes components from the four filtered intensities:
/// `S0 = I0 + I90`, `S1 = I0 - I90`, `S2 = I45 - I135`.
///
/// Total on finite reals; negative inputs are allowed because reconstructions
/// may undershoot.
pub fn stokes_from_intensities(i0: f64, i45: f64, i90: f64, i135: f64) -> StokesSample {
    StokesSample {
        s0: i0 + i90,
        s1: i0 - i90,
        s2: i45 - i135,
    }
}

/// Degree of linear polarization `sqrt(S1^2 + S2^2)/S0`, clamped to `[0, 1]`.
///
/// The clamp absorbs noisy reconstructed samples that land slightly outside
/// the physical cone; errors if `S0 <= 0` (unexposed or degenerate pixel).
pub fn dolp_of(s: &StokesSample) -> Result<f64, PolError> {
    if !(s.s0 > 0.0) {
        return Err(PolError::UndefinedDolp(s.s0));
    }
    Ok((s.linear_norm() / s.s0).clamp(0.0, 1.0))
}

/// Angle of polarization `0.5*atan2(S2, S1)` reduced into `[0, pi)`.
///
/// atan2 rather than a plain arctangent so the full half-turn range is
/// recovered; errors when the sample is unpolarized (`S1 = S2 = 0`).
pub fn aop_of(s: &StokesSample) -> Result<f64, PolError> {
    if s.s1 == 0.0 && s.s2 == 0.0 {
        return Err(PolError::UndefinedAop);
    }
    Ok(wrap_aop(0.5 * s.s2.atan2(s.s1)))
}

/// Distance between two AoPs on the half-turn circle, in `[0, pi/2]`.
pub fn aop_error(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(PI);
    d.min(PI - d)
}

/// Circular mean AoP of a set of Stokes samples.
///
/// Averaging runs in doubled-angle space on unit vectors `(s1, s2)/|s|`, so
/// the 0/pi wraparound and per-sample intensity differences do not bias the
/// mean. Samples with no linear component are skipped; errors if none remain.
pub fn roi_mean_aop(samples: &[StokesSample]) -> Result<f64, PolError> {
    if samples.is_empty() {
        return Err(PolError::EmptyRoi);
    }
    let mut sum1 = 0.0;
    let mut sum2 = 0.0;
    let mut used = 0usize;
    for s in samples {
        let norm = s.linear_norm();
        if norm > 0.0 {
            sum1 += s.s1 / norm;
            sum2 += s.s2 / norm;
            used += 1;
        }
    }
    if used == 0 || (sum1 == 0.0 && sum2 == 0.0) {
        return Err(PolError::UndefinedAop);
    }
    Ok(wrap_aop(0.5 * sum2.atan2(sum1)))
}

/// ROI mean of DoLP over samples where it is defined.
pub fn roi_mean_dolp(samples: &[StokesSample]) -> Result<f64, PolError> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for s in samples {
        if let Ok(d) = dolp_of(s) {
            sum += d;
            used += 1;
        }
    }
    if used == 0 {
        return Err(PolError::EmptyRoi);
    }
    Ok(sum / used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const FRAC_PI_4: f64 = PI / 4.0;

    #[test]
    fn malus_aligned_ideal_passes_everything() {
        let state = PolarizationState::new(1.0, 1.0, 0.0).unwrap();
        let i = malus_intensity(&state, FilterAngle::Deg0, ExtinctionRatio::IDEAL);
        assert_abs_diff_eq!(i, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn malus_unpolarized_passes_half() {
        for aop in [0.0, 0.3, 1.2, 3.0] {
            let state = PolarizationState::new(1.0, 0.0, aop).unwrap();
            let i = malus_intensity(&state, FilterAngle::Deg45, ExtinctionRatio::IDEAL);
            assert_abs_diff_eq!(i, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn malus_crossed_finite_er_leaks() {
        // ER = 40: crossed transmission mixes 0 parallel with full
        // perpendicular as 1/(ER+1).
        let state = PolarizationState::new(1.0, 1.0, 0.0).unwrap();
        let er = ExtinctionRatio::new(40.0).unwrap();
        let i = malus_intensity(&state, FilterAngle::Deg90, er);
        assert_abs_diff_eq!(i, 1.0 / 41.0, epsilon = 1e-12);
        assert_abs_diff_eq!(i, 0.02439, epsilon = 1e-5);
    }

    #[test]
    fn extinction_ratio_rejects_at_most_one() {
        assert!(ExtinctionRatio::new(1.0).is_err());
        assert!(ExtinctionRatio::new(0.5).is_err());
        assert!(ExtinctionRatio::new(f64::NAN).is_err());
        assert!(ExtinctionRatio::new(f64::INFINITY).is_ok());
    }

    #[test]
    fn state_rejects_invalid_fields() {
        assert_eq!(
            PolarizationState::new(-1.0, 0.0, 0.0),
            Err(PolError::InvalidFlux(-1.0))
        );
        assert_eq!(
            PolarizationState::new(1.0, 1.5, 0.0),
            Err(PolError::InvalidDolp(1.5))
        );
        assert!(PolarizationState::new(1.0, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn stokes_examples() {
        let s = stokes_from_intensities(1.0, 0.5, 0.0, 0.5);
        assert_eq!((s.s0, s.s1, s.s2), (1.0, 1.0, 0.0));

        let s = stokes_from_intensities(0.5, 0.5, 0.5, 0.5);
        assert_eq!((s.s0, s.s1, s.s2), (1.0, 0.0, 0.0));

        // theta = 22.5 deg, DoLP = 1/sqrt(2) pushed through the ideal Malus
        // law lands on (1, 0.5, 0.5)
        let state = PolarizationState::new(1.0, 0.5f64.sqrt(), FRAC_PI_4 / 2.0).unwrap();
        let i: Vec<f64> = FilterAngle::ALL
            .iter()
            .map(|&a| malus_intensity(&state, a, ExtinctionRatio::IDEAL))
            .collect();
        assert_abs_diff_eq!(i[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(i[1], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(i[2], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(i[3], 0.25, epsilon = 1e-12);
        let s = stokes_from_intensities(i[0], i[1], i[2], i[3]);
        assert_abs_diff_eq!(s.s0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.s1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.s2, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn dolp_examples() {
        assert_abs_diff_eq!(
            dolp_of(&StokesSample::new(1.0, 1.0, 0.0)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dolp_of(&StokesSample::new(1.0, 0.0, 0.0)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dolp_of(&StokesSample::new(2.0, 1.0, 1.0)).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(matches!(
            dolp_of(&StokesSample::new(0.0, 0.0, 0.0)),
            Err(PolError::UndefinedDolp(_))
        ));
        // noisy reconstruction outside the cone clamps instead of exceeding 1
        assert_eq!(dolp_of(&StokesSample::new(1.0, 2.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn aop_examples() {
        assert_abs_diff_eq!(
            aop_of(&StokesSample::new(1.0, 1.0, 0.0)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            aop_of(&StokesSample::new(1.0, 0.0, 1.0)).unwrap(),
            FRAC_PI_4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            aop_of(&StokesSample::new(1.0, -1.0, 0.0)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_eq!(
            aop_of(&StokesSample::new(1.0, 0.0, 0.0)),
            Err(PolError::UndefinedAop)
        );
    }

    #[test]
    fn aop_error_examples() {
        assert_eq!(aop_error(0.0, 0.0), 0.0);
        assert_abs_diff_eq!(aop_error(0.1, PI - 0.1), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(aop_error(PI / 3.0, PI / 6.0), PI / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn roi_mean_examples() {
        let s = |s1: f64, s2: f64| StokesSample::new(1.0, s1, s2);
        assert_abs_diff_eq!(
            roi_mean_aop(&[s(1.0, 0.0), s(1.0, 0.0)]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            roi_mean_aop(&[
                s(0.2f64.cos(), 0.2f64.sin()),
                s(0.2f64.cos(), -0.2f64.sin())
            ])
            .unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            roi_mean_aop(&[s(1.0, 0.0), s(0.0, 1.0)]).unwrap(),
            PI / 8.0,
            epsilon = 1e-12
        );
        assert_eq!(roi_mean_aop(&[]), Err(PolError::EmptyRoi));
        assert_eq!(
            roi_mean_aop(&[s(0.0, 0.0), s(0.0, 0.0)]),
            Err(PolError::UndefinedAop)
        );
    }

    #[test]
    fn wrap_aop_stays_in_range() {
        for a in [-1e-20, -PI, PI, 2.0 * PI, 7.5, -123.456] {
            let w = wrap_aop(a);
            assert!((0.0..PI).contains(&w), "wrap_aop({a}) = {w}");
        }
    }

    fn arb_state() -> impl Strategy<Value = PolarizationState> {
        (0.01f64..1e6, 0.0f64..=1.0, -10.0f64..10.0)
            .prop_map(|(f, d, a)| PolarizationState::new(f, d, a).unwrap())
    }

    proptest! {
        /// Crossed filter pairs each pass the total flux for an ideal filter.
        #[test]
        fn crossed_pairs_conserve_flux(state in arb_state()) {
            let i = |a| malus_intensity(&state, a, ExtinctionRatio::IDEAL);
            let sum_0_90 = i(FilterAngle::Deg0) + i(FilterAngle::Deg90);
            let sum_45_135 = i(FilterAngle::Deg45) + i(FilterAngle::Deg135);
            prop_assert!((sum_0_90 - state.total_flux()).abs() <= 1e-9 * state.total_flux());
            prop_assert!((sum_45_135 - state.total_flux()).abs() <= 1e-9 * state.total_flux());
        }

        /// Measuring through the ideal mosaic and inverting recovers the state.
        #[test]
        fn forward_inverse_identity(
            flux in 0.01f64..1e6,
            dolp in 0.001f64..=1.0,
            aop in -10.0f64..10.0,
        ) {
            let state = PolarizationState::new(flux, dolp, aop).unwrap();
            let i: Vec<f64> = FilterAngle::ALL
                .iter()
                .map(|&a| malus_intensity(&state, a, ExtinctionRatio::IDEAL))
                .collect();
            let s = stokes_from_intensities(i[0], i[1], i[2], i[3]);
            let d = dolp_of(&s).unwrap();
            let a = aop_of(&s).unwrap();
            prop_assert!((d - state.dolp()).abs() < 1e-12);
            prop_assert!(aop_error(a, state.aop()) < 1e-12);
        }

        /// Symmetry and triangle inequality on the half-turn circle.
        #[test]
        fn aop_error_is_a_metric(
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
            c in -10.0f64..10.0,
        ) {
            prop_assert!((aop_error(a, b) - aop_error(b, a)).abs() < 1e-12);
            prop_assert!(aop_error(a, c) <= aop_error(a, b) + aop_error(b, c) + 1e-12);
            prop_assert!(aop_error(a, a) < 1e-15);
            prop_assert!(aop_error(a, b) <= FRAC_PI_2 + 1e-15);
        }

        /// DoLP and AoP are invariant under common intensity scaling.
        #[test]
        fn dolp_aop_scale_invariant(
            i0 in 0.01f64..100.0,
            i45 in 0.01f64..100.0,
            i90 in 0.01f64..100.0,
            i135 in 0.01f64..100.0,
            k in 0.001f64..1000.0,
        ) {
            let s = stokes_from_intensities(i0, i45, i90, i135);
            let t = stokes_from_intensities(k * i0, k * i45, k * i90, k * i135);
            let d0 = dolp_of(&s).unwrap();
            let d1 = dolp_of(&t).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-9);
            if aop_of(&s).is_ok() {
                prop_assert!(aop_error(aop_of(&s).unwrap(), aop_of(&t).unwrap()) < 1e-9);
            }
        }

        /// Physically measured samples stay inside the Stokes cone.
        #[test]
        fn physical_samples_respect_the_cone(state in arb_state()) {
            for er in [ExtinctionRatio::IDEAL, ExtinctionRatio::new(40.0).unwrap()] {
                let i: Vec<f64> = FilterAngle::ALL
                    .iter()
                    .map(|&a| malus_intensity(&state, a, er))
                    .collect();
                let s = stokes_from_intensities(i[0], i[1], i[2], i[3]);
                prop_assert!(s.s0 >= 0.0);
                prop_assert!(s.linear_norm() <= s.s0 * (1.0 + 1e-9));
            }
        }

        /// The ROI mean does not depend on sample order.
        #[test]
        fn roi_mean_permutation_invariant(
            mut angles in proptest::collection::vec(0.0f64..PI, 1..12),
        ) {
            let to_sample = |a: &f64| StokesSample::new(1.0, (2.0 * a).cos(), (2.0 * a).sin());
            let forward: Vec<StokesSample> = angles.iter().map(to_sample).collect();
            angles.reverse();
            let reversed: Vec<StokesSample> = angles.iter().map(to_sample).collect();
            let m0 = roi_mean_aop(&forward);
            let m1 = roi_mean_aop(&reversed);
            match (m0, m1) {
                (Ok(a), Ok(b)) => prop_assert!(aop_error(a, b) < 1e-9),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
