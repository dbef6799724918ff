//! Cross-module invariants that need full simulation runs.

use pdsim::polarization::ExtinctionRatio;
use pdsim::sensor::{
    simulate_aps, ApsParams, DvsPixelParams, DvsSimulator, PixelRect, SensorGeometry, Stimulus,
};

fn quiet() -> DvsPixelParams {
    DvsPixelParams {
        threshold_sigma: 0.0,
        leak_rate_hz: 0.0,
        ..DvsPixelParams::default()
    }
}

/// The DVS responds to log contrast: the dark fan sectors produce the same
/// event counts as the 2000x brighter ones, while a single APS exposure
/// cannot cover both (dark below 1 DN or bright saturated).
#[test]
fn hdr_gap_events_see_both_sides_frames_do_not() {
    let geom = SensorGeometry::default();
    let stim = Stimulus::hdr_fan(200.0, 2000.0, 1.0);
    let er = ExtinctionRatio::new(40.0).unwrap();
    let region = PixelRect::centered(&geom, 60);
    let events = DvsSimulator::new(geom, quiet())
        .unwrap()
        .simulate(&stim, er, 0, 600_000, Some(region))
        .unwrap();
    assert!(!events.is_empty());

    // bucket events by the sector parity (bright/dark) the pixel saw
    let mut bright = 0u64;
    let mut dark = 0u64;
    for e in &events {
        let sector = stim.hdr_sector(&geom, e.x, e.y, e.t_us).unwrap();
        if sector % 2 == 0 {
            bright += 1;
        } else {
            dark += 1;
        }
    }
    let ratio = bright as f64 / dark as f64;
    assert!(
        (0.8..1.25).contains(&ratio),
        "log response should equalize bright/dark event counts, got {bright}/{dark}"
    );

    // one 20 ms exposure: every pixel that stays inside a single sector for
    // the whole exposure is either saturated (bright) or starved below a
    // couple of DN (dark); pixels crossing a boundary blur into mixtures
    let frames = simulate_aps(
        &stim,
        geom,
        ApsParams::default(),
        er,
        0,
        200_000,
        Some(region),
    )
    .unwrap();
    let frame = &frames[0];
    let mut saturated = 0u64;
    let mut starved = 0u64;
    let mut wrong = 0u64;
    let mut total = 0u64;
    for my in region.y0 / 2..(region.y0 + region.height) / 2 {
        for mx in region.x0 / 2..(region.x0 + region.width) / 2 {
            let subs = [
                (2 * mx, 2 * my),
                (2 * mx + 1, 2 * my),
                (2 * mx, 2 * my + 1),
                (2 * mx + 1, 2 * my + 1),
            ];
            let sectors: Vec<u32> = subs
                .iter()
                .flat_map(|&(x, y)| {
                    [
                        stim.hdr_sector(&geom, x, y, frame.t_start_us).unwrap(),
                        stim.hdr_sector(&geom, x, y, frame.t_end_us).unwrap(),
                    ]
                })
                .collect();
            if sectors.iter().any(|&s| s != sectors[0]) {
                continue;
            }
            total += 1;
            if sectors[0] % 2 == 0 {
                // bright: the best-aligned subpixel always overdrives the ADC
                if subs.iter().any(|&(x, y)| frame.is_saturated(x, y)) {
                    saturated += 1;
                } else {
                    wrong += 1;
                }
            } else if subs.iter().all(|&(x, y)| frame.dn(x, y) <= 2) {
                starved += 1;
            } else {
                wrong += 1;
            }
        }
    }
    assert!(
        total > 300,
        "blur filter left too few clean macropixels: {total}"
    );
    assert_eq!(
        wrong, 0,
        "single-sector macropixels must clip: sat {saturated}, starved {starved} of {total}"
    );
    assert!(saturated > 0 && starved > 0);
}

/// A static fully polarized scene reaches DoLP near 1 through the
/// complementary filter after two frames.
#[test]
fn cf_static_scene_reaches_full_dolp() {
    use pdsim::polarization::{dolp_of, PolarizationState};
    use pdsim::recon::{CfConfig, CfRecon};

    let geom = SensorGeometry::new(8, 8).unwrap();
    let stim = Stimulus::PiecewiseConstantField {
        background: PolarizationState::new(800.0, 1.0, 0.3).unwrap(),
        patches: vec![],
    };
    let frames = simulate_aps(
        &stim,
        geom,
        ApsParams::default(),
        ExtinctionRatio::IDEAL,
        0,
        150_000,
        None,
    )
    .unwrap();
    assert!(frames.len() >= 2);
    let mut cf = CfRecon::new(geom.full_rect(), CfConfig::default());
    for f in frames.iter().take(2) {
        cf.process_frame(f).unwrap();
    }
    for my in 0..4 {
        for mx in 0..4 {
            let s = cf.reconstruct(mx, my).unwrap();
            let dolp = dolp_of(&s).unwrap();
            assert!(dolp > 0.95, "macropixel ({mx},{my}): dolp {dolp}");
        }
    }
}

/// Event count per unit time scales linearly with rotation speed (leak off).
#[test]
fn event_count_scales_with_rpm() {
    let geom = SensorGeometry::default();
    let er = ExtinctionRatio::new(40.0).unwrap();
    let region = PixelRect::centered(&geom, 12);
    let sim = DvsSimulator::new(geom, quiet()).unwrap();
    let count_at = |rpm: f64| {
        let stim = Stimulus::RotatingPolarizer {
            rpm,
            base_flux: 500.0,
            background_flux: 50.0,
        };
        sim.simulate(&stim, er, 0, 2_000_000, Some(region))
            .unwrap()
            .len() as f64
    };
    let base = count_at(100.0);
    for k in [2.0, 5.0] {
        let scaled = count_at(100.0 * k);
        let ratio = scaled / base;
        assert!(
            (ratio / k - 1.0).abs() < 0.05,
            "rpm x{k}: count ratio {ratio:.3}, want {k} within 5%"
        );
    }
}
