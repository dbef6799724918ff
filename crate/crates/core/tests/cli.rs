//! End-to-end tests of the command-line interface: pipelines, exit codes,
//! determinism and run manifests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdsim"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pdsim_cli_{}_{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Small, fast scene: cropped region, short window, quiet pixels.
fn small_sim_args(out: &Path) -> Vec<String> {
    [
        "simulate",
        "--set",
        "sim.duration_s=0.4",
        "--set",
        "sim.region=[160,120,20,20]",
        "--set",
        "stimulus.rpm=120",
        "-o",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.display().to_string()])
    .collect()
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = workdir("det_a");
    let b = workdir("det_b");
    run_ok(bin().args(small_sim_args(&a)));
    run_ok(bin().args(small_sim_args(&b)));
    let events_a = std::fs::read(a.join("events.pdevt")).unwrap();
    let events_b = std::fs::read(b.join("events.pdevt")).unwrap();
    assert!(!events_a.is_empty());
    assert_eq!(events_a, events_b);
    assert_eq!(
        std::fs::read(a.join("frames.pdfrm")).unwrap(),
        std::fs::read(b.join("frames.pdfrm")).unwrap()
    );
    // a different seed changes the stream
    let c = workdir("det_c");
    let mut args = small_sim_args(&c);
    args.extend(["--seed".into(), "99".into()]);
    run_ok(bin().args(args));
    assert_ne!(events_a, std::fs::read(c.join("events.pdevt")).unwrap());
}

#[test]
fn manifest_reproduces_the_run_exactly() {
    let a = workdir("mani_a");
    run_ok(bin().args(small_sim_args(&a)));
    let manifest = std::fs::read_to_string(a.join("manifest.toml")).unwrap();
    let parsed: toml::Table = toml::from_str(&manifest).unwrap();
    assert_eq!(parsed["tool"].as_str(), Some("pdsim"));
    assert!(parsed["config_hash"].as_str().unwrap().len() == 64);
    // replay from the embedded config alone
    let config_text = toml::to_string(parsed["config"].as_table().unwrap()).unwrap();
    let b = workdir("mani_b");
    let cfg_path = b.join("replay.toml");
    std::fs::write(&cfg_path, config_text).unwrap();
    run_ok(bin().args([
        "simulate",
        "-c",
        cfg_path.to_str().unwrap(),
        "-o",
        b.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(a.join("events.pdevt")).unwrap(),
        std::fs::read(b.join("events.pdevt")).unwrap()
    );
}

#[test]
fn reconstruct_pipeline_and_missing_input_error() {
    let dir = workdir("recon");
    run_ok(bin().args(small_sim_args(&dir)));
    // events method over the simulated stream
    run_ok(bin().args([
        "reconstruct",
        "--method",
        "events",
        "--events",
        dir.join("events.pdevt").to_str().unwrap(),
        "-o",
        dir.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(dir.join("samples_events.csv")).unwrap();
    assert!(csv.starts_with("t_us,X,Y,s0,s1,s2,dolp,aop_deg,method,flags"));
    assert!(csv.lines().count() > 1);
    assert!(dir.join("polarization_events.pdpol").exists());

    // cf method needs both inputs
    run_ok(bin().args([
        "reconstruct",
        "--method",
        "cf",
        "--events",
        dir.join("events.pdevt").to_str().unwrap(),
        "--frames",
        dir.join("frames.pdfrm").to_str().unwrap(),
        "-o",
        dir.to_str().unwrap(),
    ]));
    let cf_csv = std::fs::read_to_string(dir.join("samples_cf.csv")).unwrap();
    assert!(cf_csv.lines().count() > 1);

    // events method without an event stream: domain error, exit 4, message
    // names the missing input
    let out = bin()
        .args([
            "reconstruct",
            "--method",
            "events",
            "--frames",
            dir.join("frames.pdfrm").to_str().unwrap(),
            "-o",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("event stream") && stderr.contains("--events"),
        "unhelpful error: {stderr}"
    );
}

#[test]
fn exit_codes_by_category() {
    let dir = workdir("codes");
    // config error: 2
    let out = bin()
        .args([
            "simulate",
            "--set",
            "dvs.theta_on=-3",
            "-o",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // unknown key is also a config error
    let out = bin()
        .args([
            "simulate",
            "--set",
            "dvs.bogus=1",
            "-o",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // io error: 3
    let out = bin()
        .args([
            "simulate",
            "-c",
            "/definitely/not/a/file.toml",
            "-o",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // domain error: 4 (frame file fed as an event file)
    run_ok(bin().args(small_sim_args(&dir)));
    let out = bin()
        .args([
            "stats",
            "--events",
            dir.join("frames.pdfrm").to_str().unwrap(),
            "-o",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_emits_documented_schema_and_json() {
    let dir = workdir("sweep");
    run_ok(bin().args([
        "sweep",
        "--set",
        "sweep.rpm_list=[60,300]",
        "--set",
        "sweep.duration_s=0.5",
        "--set",
        "sweep.methods=[\"events\"]",
        "--set",
        "dvs.leak_rate_hz=0",
        "--json",
        "-o",
        dir.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rpm,method,aop_mae_deg,dolp_mae,event_rate_hz_per_pixel,applied_shift_deg,coverage,wall_time_s"
    );
    assert_eq!(lines.count(), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[0]["method"], "events");
    assert!(json[0]["aop_mae_deg"].as_f64().unwrap() < 10.0);
}

#[test]
fn stats_and_convert_round_out_the_pipeline() {
    let dir = workdir("stats");
    run_ok(bin().args(small_sim_args(&dir)));
    let out = run_ok(bin().args([
        "stats",
        "--events",
        dir.join("events.pdevt").to_str().unwrap(),
        "--roi",
        "166,126,8,8",
        "-o",
        dir.to_str().unwrap(),
    ]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Hz/pixel"));
    let manifest = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("stats --events"));
    let hist = std::fs::read_to_string(dir.join("interevent_histogram.csv")).unwrap();
    assert!(hist.starts_with("bin_lo_us,bin_hi_us,count"));
    assert_eq!(hist.lines().count(), 51);

    let csv_path = dir.join("events.csv");
    run_ok(bin().args([
        "convert",
        "--events",
        dir.join("events.pdevt").to_str().unwrap(),
        "-o",
        csv_path.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("t_us,x,y,polarity"));
    assert!(text.lines().count() > 1);
}

#[test]
fn help_documents_config_keys() {
    for (sub, keys) in [
        (
            "simulate",
            vec![
                "seed",
                "geometry.width",
                "optics.extinction_ratio",
                "stimulus.kind",
                "stimulus.rpm",
                "dvs.theta_on",
                "dvs.threshold_sigma",
                "dvs.leak_rate_hz",
                "dvs.refractory_us",
                "dvs.photoreceptor_cutoff_hz",
                "aps.frame_rate_hz",
                "aps.exposure_us",
                "aps.full_scale_flux",
                "aps.dark_offset_dn",
                "sim.t0_us",
                "sim.region",
            ],
        ),
        (
            "sweep",
            vec![
                "sweep.rpm_list",
                "sweep.methods",
                "sweep.roi_side",
                "sweep.duration_s",
                "sweep.grid_rate_hz",
                "recon.events_f3db_hz",
                "recon.cf_f3db_hz",
                "recon.lambda",
                "recon.neighbor_updates",
            ],
        ),
        (
            "hdr",
            vec![
                "hdr.annulus_inner_px",
                "hdr.duration_s",
                "hdr.recoverable_max_mae_deg",
                "hdr.min_usable_fraction",
                "stimulus.bright_flux",
            ],
        ),
        ("reconstruct", vec!["recon.theta_on", "aps.dark_offset_dn"]),
    ] {
        let out = run_ok(bin().args([sub, "--help"]));
        let help = String::from_utf8_lossy(&out.stdout);
        for key in keys {
            assert!(
                help.contains(key),
                "`pdsim {sub} --help` does not document `{key}`"
            );
        }
    }
}
