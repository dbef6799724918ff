//! Command-line entry point: simulate, reconstruct, sweep, stats, hdr,
//! convert.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdsim::eval::{
    dolp_error_growth, event_statistics, hdr_comparison, run_sweep, HdrSpec, StatsParams,
    SweepSpec, SweepStimulusKind,
};
use pdsim::io::{
    self, config::RunConfig, events::EventFileHeader, EvioError, RunManifest, StokesRow,
};
use pdsim::polarization::{aop_of, dolp_of};
use pdsim::recon::{
    reconstruct_frame, CfRecon, EventsRecon, Method, PolarizationEventOut, ReconError,
};
use pdsim::sensor::{simulate_aps, DvsSimulator, PixelRect, SensorGeometry};

const CONFIG_KEYS_COMMON: &str = "\
Config keys read (TOML; every key has a default, unknown keys are rejected):
  seed                        RNG seed for threshold mismatch and leak noise
  geometry.width/.height      sensor size in subpixels (even, default 346x260)
  optics.extinction_ratio     mosaic filter ER (>1 or inf, default 40)";

const CONFIG_KEYS_STIMULUS: &str = "\
  stimulus.kind               rotating_polarizer | polarizer_qwp | hdr_fan | uniform_field
  stimulus.rpm                rotation speed
  stimulus.base_flux          polarizer / uniform-field flux
  stimulus.background_flux    unpolarized surround (rotating_polarizer)
  stimulus.qwp_axis_deg       QWP fast axis (polarizer_qwp)
  stimulus.bright_flux/.dark_flux, .sector_count, .sector_step_deg (hdr_fan)
  stimulus.dolp/.aop_deg      uniform_field polarization";

const CONFIG_KEYS_DVS: &str = "\
  dvs.theta_on/.theta_off     nominal event thresholds (log units, default 0.14)
  dvs.threshold_sigma         per-pixel mismatch (default 0.035)
  dvs.leak_rate_hz            leak ON-event rate per pixel (default 0.7)
  dvs.refractory_us           per-pixel dead time (default 100)
  dvs.photoreceptor_cutoff_hz optional first-order lowpass";

const CONFIG_KEYS_APS: &str = "\
  aps.frame_rate_hz           frame cadence (default 20)
  aps.exposure_us             exposure (default 20000)
  aps.full_scale_flux         flux at ADC code 1023
  aps.dark_offset_dn          DN offset";

const CONFIG_KEYS_RECON: &str = "\
  recon.events_f3db_hz        events-method corner frequency (default 0.5)
  recon.cf_f3db_hz            CF crossover frequency (default 1.6)
  recon.lambda/.l1_dn/.l2_dn  CF adaptive gain floor and DN limits
  recon.neighbor_updates      spread updates to same-angle neighbors
  recon.theta_on/.theta_off   reconstructor threshold override";

#[derive(Parser)]
#[command(
    name = "pdsim",
    version,
    about = "Polarization event camera simulator and reconstruction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Dotted-key override, e.g. --set dvs.theta_on=0.12 (repeatable, last
    /// writer wins).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shortcut for --set seed=N.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Cap worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Also emit machine-readable JSON summaries next to the CSVs.
    #[arg(long)]
    json: bool,
    /// Verbose progress output.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the sensor: write an event file and a frame file.
    #[command(after_help = format!("{CONFIG_KEYS_COMMON}\n{CONFIG_KEYS_STIMULUS}\n{CONFIG_KEYS_DVS}\n{CONFIG_KEYS_APS}\n  sim.t0_us/.duration_s       simulation window\n  sim.region                  optional [x0, y0, w, h] subpixel crop"))]
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Reconstruct polarization from event/frame files.
    #[command(after_help = format!("{CONFIG_KEYS_COMMON}\n{CONFIG_KEYS_APS}\n{CONFIG_KEYS_RECON}"))]
    Reconstruct {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Event file (.pdevt); required by the events and cf methods.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Frame file (.pdfrm); required by the frames and cf methods.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// ROI for CSV export as x0,y0,w,h in subpixels (default: 12x12
        /// centered). The binary stream always covers the full grid.
        #[arg(long, value_parser = parse_rect)]
        roi: Option<PixelRect>,
    },
    /// Accuracy-vs-RPM sweep (plus DoLP error growth for polarizer_qwp).
    #[command(after_help = format!("{CONFIG_KEYS_COMMON}\n{CONFIG_KEYS_STIMULUS}\n{CONFIG_KEYS_DVS}\n{CONFIG_KEYS_APS}\n{CONFIG_KEYS_RECON}\n  sweep.rpm_list              speeds to sweep\n  sweep.methods               subset of frames|events|cf\n  sweep.roi_side              ROI side in subpixels (default 12)\n  sweep.duration_s            scored window per point\n  sweep.grid_rate_hz          evaluation grid (default 1000)"))]
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Event statistics: inter-event histogram and rate curve.
    #[command(after_help = "Reads no config keys; all parameters are flags.")]
    Stats {
        /// Event file (.pdevt).
        #[arg(long)]
        events: PathBuf,
        /// ROI as x0,y0,w,h in subpixels (default: 12x12 centered).
        #[arg(long, value_parser = parse_rect)]
        roi: Option<PixelRect>,
        /// Window start/end, microseconds (default: full stream).
        #[arg(long)]
        t0_us: Option<u64>,
        #[arg(long)]
        t1_us: Option<u64>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// HDR fan comparison: per-sector recoverability report.
    #[command(after_help = format!("{CONFIG_KEYS_COMMON}\n{CONFIG_KEYS_STIMULUS}\n{CONFIG_KEYS_DVS}\n{CONFIG_KEYS_APS}\n{CONFIG_KEYS_RECON}\n  hdr.annulus_inner_px/.annulus_outer_px  evaluated radius band\n  hdr.duration_s/.grid_rate_hz            scored window and sampling\n  hdr.recoverable_max_mae_deg             sector pass threshold (default 15)\n  hdr.min_usable_fraction                 minimum usable samples (default 0.5)"))]
    Hdr {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Dump an event file as CSV (t_us,x,y,polarity).
    #[command(after_help = "Reads no config keys.")]
    Convert {
        /// Event file (.pdevt).
        #[arg(long)]
        events: PathBuf,
        /// Output CSV path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method `{s}` (frames|events|cf)"))
}

fn parse_rect(s: &str) -> Result<PixelRect, String> {
    let parts: Vec<u16> = s
        .split(',')
        .map(|p| p.trim().parse::<u16>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err("expected x0,y0,w,h".into());
    }
    Ok(PixelRect::new(parts[0], parts[1], parts[2], parts[3]))
}

/// Error category determines the exit code: config 2, io 3, domain 4.
enum CliError {
    Config(String),
    Io(String),
    Domain(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Domain(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Domain(m) => m,
        }
    }
}

impl From<io::ConfigError> for CliError {
    fn from(e: io::ConfigError) -> Self {
        match e {
            io::ConfigError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<EvioError> for CliError {
    fn from(e: EvioError) -> Self {
        match e {
            EvioError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Domain(format!("malformed input: {other}")),
        }
    }
}

impl From<pdsim::sensor::SimError> for CliError {
    fn from(e: pdsim::sensor::SimError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<ReconError> for CliError {
    fn from(e: ReconError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<pdsim::eval::EvalError> for CliError {
    fn from(e: pdsim::eval::EvalError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdsim: error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { cfg } => simulate_cmd(cfg),
        Command::Reconstruct {
            cfg,
            events,
            frames,
            method,
            roi,
        } => reconstruct_cmd(cfg, events, frames, method, roi),
        Command::Sweep { cfg } => sweep_cmd(cfg),
        Command::Hdr { cfg } => hdr_cmd(cfg),
        Command::Stats {
            events,
            roi,
            t0_us,
            t1_us,
            out,
        } => stats_cmd(events, roi, t0_us, t1_us, out),
        Command::Convert { events, out } => convert_cmd(events, out),
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    if args.jobs > 0 {
        // best effort: a global pool may already exist
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global();
    }
    Ok(RunConfig::from_toml_with_overrides(&text, &overrides)?)
}

fn prepare_out(args: &ConfigArgs, command: &str, config: &RunConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&args.out)?;
    RunManifest::new(command, config).write_to(&args.out)?;
    Ok(args.out.clone())
}

fn simulate_cmd(args: ConfigArgs) -> Result<(), CliError> {
    let config = load_config(&args)?;
    let out = prepare_out(&args, "simulate", &config)?;
    let geom = config.geometry()?;
    let stim = config.stimulus()?;
    let er = config.extinction_ratio()?;
    let (t0, t1) = config.sim_window_us();
    let region = config.sim_region()?;

    let sim = DvsSimulator::new(geom, config.dvs_params())?;
    let events = sim.simulate(&stim, er, t0, t1, region)?;
    let frames = simulate_aps(&stim, geom, config.aps_params(), er, t0, t1, region)?;

    let header = EventFileHeader::new(geom.width(), geom.height(), SensorGeometry::MOSAIC_CODE);
    let event_path = out.join("events.pdevt");
    let frame_path = out.join("frames.pdfrm");
    io::write_events(&event_path, &header, events.iter().copied())?;
    io::write_frames(&frame_path, &frames)?;
    if args.verbose {
        eprintln!(
            "simulated [{t0}, {t1}) us over {:?}",
            region.unwrap_or_else(|| geom.full_rect())
        );
    }
    println!(
        "{} ({} events), {} ({} frames)",
        event_path.display(),
        events.len(),
        frame_path.display(),
        frames.len()
    );
    Ok(())
}

fn reconstruct_cmd(
    args: ConfigArgs,
    events_path: Option<PathBuf>,
    frames_path: Option<PathBuf>,
    method: Method,
    roi: Option<PixelRect>,
) -> Result<(), CliError> {
    let config = load_config(&args)?;
    let needs_events = matches!(method, Method::Events | Method::Cf);
    let needs_frames = matches!(method, Method::Frames | Method::Cf);
    if needs_events && events_path.is_none() {
        return Err(CliError::Domain(format!(
            "the {} method requires an event stream; pass --events <file.pdevt>",
            method.as_str()
        )));
    }
    if needs_frames && frames_path.is_none() {
        return Err(CliError::Domain(format!(
            "the {} method requires frames; pass --frames <file.pdfrm>",
            method.as_str()
        )));
    }

    let out = prepare_out(
        &args,
        &format!("reconstruct --method {}", method.as_str()),
        &config,
    )?;

    let (events, geom) = match events_path.filter(|_| needs_events) {
        Some(p) => {
            let (header, events) = io::read_events(&p)?;
            let geom = SensorGeometry::new(header.width, header.height)?;
            (events, Some(geom))
        }
        None => (Vec::new(), None),
    };
    let frames = match frames_path.filter(|_| needs_frames) {
        Some(p) => io::read_frames(&p)?,
        None => Vec::new(),
    };
    let geom = match geom {
        Some(g) => g,
        None => {
            let rect = frames
                .first()
                .map(|f| f.rect)
                .ok_or_else(|| CliError::Domain("frame file is empty".into()))?;
            SensorGeometry::new(rect.x0 + rect.width, rect.y0 + rect.height)?
        }
    };
    let full = geom.full_rect();
    let roi = roi.unwrap_or_else(|| PixelRect::centered(&geom, 12));
    let (mw, mh) = (geom.width() / 2, geom.height() / 2);

    let pol_path = out.join(format!("polarization_{}.pdpol", method.as_str()));
    let csv_path = out.join(format!("samples_{}.csv", method.as_str()));
    let mut pol_samples: Vec<PolarizationEventOut> = Vec::new();
    let mut csv_rows: Vec<StokesRow> = Vec::new();

    match method {
        Method::Frames => {
            for frame in &frames {
                let rec = reconstruct_frame(frame, config.aps.dark_offset_dn)?;
                for (mx, my, s) in rec.iter() {
                    let aop = aop_of(&s.stokes).ok();
                    let dolp = dolp_of(&s.stokes).ok();
                    if let Some(a) = aop {
                        pol_samples.push(PolarizationEventOut {
                            t_us: rec.t_us,
                            mx,
                            my,
                            aop: a,
                            dolp,
                            method,
                        });
                    }
                    if roi.contains(2 * mx, 2 * my) {
                        csv_rows.push(StokesRow {
                            t_us: rec.t_us,
                            mx,
                            my,
                            stokes: Some(s.stokes),
                            dolp,
                            aop,
                            method,
                            saturated: s.saturated,
                            unpolarized: aop.is_none(),
                        });
                    }
                }
            }
        }
        Method::Events => {
            let mut engine = EventsRecon::new(full, config.events_recon_config());
            for ev in &events {
                if let Some(sample) = engine.emit(ev)? {
                    if roi.contains(2 * sample.mx, 2 * sample.my) {
                        let analog = engine.stokes_analog_at(sample.mx, sample.my, sample.t_us)?;
                        csv_rows.push(StokesRow {
                            t_us: sample.t_us,
                            mx: sample.mx,
                            my: sample.my,
                            stokes: Some(analog),
                            dolp: None,
                            aop: Some(sample.aop),
                            method,
                            saturated: false,
                            unpolarized: false,
                        });
                    }
                    pol_samples.push(sample);
                }
            }
        }
        Method::Cf => {
            let mut engine = CfRecon::new(full, config.cf_config());
            let mut ev_cursor = 0usize;
            // packet cadence: emit the macropixel grid after each frame
            for frame in &frames {
                let t = frame.mid_t_us();
                while ev_cursor < events.len() && events[ev_cursor].t_us <= t {
                    engine.process_event(&events[ev_cursor])?;
                    ev_cursor += 1;
                }
                engine.process_frame(frame)?;
                for my in 0..mh {
                    for mx in 0..mw {
                        let Ok(stokes) = engine.reconstruct(mx, my) else {
                            continue;
                        };
                        let aop = aop_of(&stokes).ok();
                        let dolp = dolp_of(&stokes).ok();
                        if let Some(a) = aop {
                            pol_samples.push(PolarizationEventOut {
                                t_us: t,
                                mx,
                                my,
                                aop: a,
                                dolp,
                                method,
                            });
                        }
                        if roi.contains(2 * mx, 2 * my) {
                            csv_rows.push(StokesRow {
                                t_us: t,
                                mx,
                                my,
                                stokes: Some(stokes),
                                dolp,
                                aop,
                                method,
                                saturated: false,
                                unpolarized: aop.is_none(),
                            });
                        }
                    }
                }
            }
            if args.verbose {
                eprintln!("cf dropped {} pre-init events", engine.dropped_pre_init());
            }
        }
    }

    io::write_polarization_events(&pol_path, mw, mh, method, pol_samples.iter().copied())?;
    io::export_csv_path(&csv_path, csv_rows.iter().copied())?;
    println!(
        "{} ({} samples), {} ({} rows)",
        pol_path.display(),
        pol_samples.len(),
        csv_path.display(),
        csv_rows.len()
    );
    Ok(())
}

fn sweep_spec_from_config(config: &RunConfig) -> Result<SweepSpec, CliError> {
    let kind = match config.stimulus.kind.as_str() {
        "rotating_polarizer" => SweepStimulusKind::RotatingPolarizer,
        "polarizer_qwp" => SweepStimulusKind::PolarizerPlusQwp,
        other => {
            return Err(CliError::Domain(format!(
                "sweep needs stimulus.kind rotating_polarizer or polarizer_qwp, got `{other}`"
            )))
        }
    };
    Ok(SweepSpec {
        kind,
        rpm_list: config.sweep.rpm_list.clone(),
        methods: config.sweep_methods(),
        geom: config.geometry()?,
        dvs: config.dvs_params(),
        aps: config.aps_params(),
        er: config.extinction_ratio()?,
        events_cfg: config.events_recon_config(),
        cf_cfg: config.cf_config(),
        base_flux: config.stimulus.base_flux,
        background_flux: config.stimulus.background_flux,
        qwp_axis: config.stimulus.qwp_axis_deg.to_radians(),
        roi_side: config.sweep.roi_side,
        duration_s: config.sweep.duration_s,
        grid_rate_hz: config.sweep.grid_rate_hz,
    })
}

fn opt_col(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn sweep_cmd(args: ConfigArgs) -> Result<(), CliError> {
    let config = load_config(&args)?;
    let out = prepare_out(&args, "sweep", &config)?;
    let spec = sweep_spec_from_config(&config)?;
    let points = run_sweep(&spec)?;

    let path = out.join("sweep.csv");
    let mut text = String::from(
        "rpm,method,aop_mae_deg,dolp_mae,event_rate_hz_per_pixel,applied_shift_deg,coverage,wall_time_s\n",
    );
    for p in &points {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.rpm,
            p.method.as_str(),
            p.aop_mae_deg,
            opt_col(p.dolp_mae),
            opt_col(p.event_rate_hz_per_pixel),
            p.applied_shift_deg,
            p.coverage,
            p.wall_time_s
        ));
    }
    std::fs::write(&path, text)?;
    println!("{} ({} points)", path.display(), points.len());
    if args.json {
        let jpath = out.join("sweep.json");
        std::fs::write(
            &jpath,
            serde_json::to_string_pretty(&points).expect("serializable"),
        )?;
        println!("{}", jpath.display());
    }

    if spec.kind == SweepStimulusKind::PolarizerPlusQwp
        && spec.methods.iter().any(|m| *m != Method::Events)
    {
        let growth = dolp_error_growth(&spec)?;
        let gpath = out.join("dolp_growth.csv");
        let mut text = String::from("method,rpm,dolp_mae_growth\n");
        for g in &growth {
            text.push_str(&format!("{},{},{}\n", g.method.as_str(), g.rpm, g.growth));
        }
        std::fs::write(&gpath, text)?;
        println!("{} ({} points)", gpath.display(), growth.len());
        if args.json {
            let jpath = out.join("dolp_growth.json");
            std::fs::write(
                &jpath,
                serde_json::to_string_pretty(&growth).expect("serializable"),
            )?;
            println!("{}", jpath.display());
        }
    }
    Ok(())
}

fn hdr_cmd(args: ConfigArgs) -> Result<(), CliError> {
    let config = load_config(&args)?;
    if config.stimulus.kind != "hdr_fan" {
        return Err(CliError::Domain(format!(
            "hdr needs stimulus.kind = hdr_fan, got `{}`",
            config.stimulus.kind
        )));
    }
    let out = prepare_out(&args, "hdr", &config)?;
    let spec = HdrSpec {
        stim: config.stimulus()?,
        methods: config.sweep_methods(),
        geom: config.geometry()?,
        dvs: config.dvs_params(),
        aps: config.aps_params(),
        er: config.extinction_ratio()?,
        events_cfg: config.events_recon_config(),
        cf_cfg: config.cf_config(),
        annulus_px: (config.hdr.annulus_inner_px, config.hdr.annulus_outer_px),
        duration_s: config.hdr.duration_s,
        grid_rate_hz: config.hdr.grid_rate_hz,
        recoverable_max_mae_deg: config.hdr.recoverable_max_mae_deg,
        min_usable_fraction: config.hdr.min_usable_fraction,
    };
    let reports = hdr_comparison(&spec)?;
    let path = out.join("hdr_sectors.csv");
    let mut text = String::from("method,sector,aop_mae_deg,masked_fraction,recoverable,samples\n");
    for r in &reports {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method.as_str(),
            r.sector,
            r.aop_mae_deg,
            r.masked_fraction,
            r.recoverable,
            r.samples
        ));
    }
    std::fs::write(&path, text)?;
    println!("{} ({} rows)", path.display(), reports.len());
    if args.json {
        let jpath = out.join("hdr_sectors.json");
        std::fs::write(
            &jpath,
            serde_json::to_string_pretty(&reports).expect("serializable"),
        )?;
        println!("{}", jpath.display());
    }
    for r in &reports {
        if !r.recoverable {
            println!(
                "  {} sector {}: unrecoverable (mae {:.1} deg, masked {:.0}%)",
                r.method.as_str(),
                r.sector,
                r.aop_mae_deg,
                100.0 * r.masked_fraction
            );
        }
    }
    Ok(())
}

fn stats_cmd(
    events_path: PathBuf,
    roi: Option<PixelRect>,
    t0_us: Option<u64>,
    t1_us: Option<u64>,
    out: PathBuf,
) -> Result<(), CliError> {
    let (header, events) = io::read_events(&events_path)?;
    let geom = SensorGeometry::new(header.width, header.height)?;
    let roi = roi.unwrap_or_else(|| PixelRect::centered(&geom, 12));
    let t0 = t0_us.unwrap_or(0);
    let t1 = t1_us
        .or_else(|| events.last().map(|e| e.t_us + 1))
        .unwrap_or(1);
    let stats = event_statistics(&events, roi, t0, t1, &StatsParams::default())?;

    std::fs::create_dir_all(&out)?;
    // config-free command: the manifest records the exact invocation
    std::fs::write(
        out.join("manifest.toml"),
        format!(
            "tool = \"pdsim\"\nversion = \"{}\"\ncommand = \"stats --events {} --roi {},{},{},{} --t0-us {t0} --t1-us {t1}\"\n",
            env!("CARGO_PKG_VERSION"),
            events_path.display(),
            roi.x0,
            roi.y0,
            roi.width,
            roi.height
        ),
    )?;
    let hist_path = out.join("interevent_histogram.csv");
    let mut text = String::from("bin_lo_us,bin_hi_us,count\n");
    for (i, &c) in stats.histogram.counts.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{}\n",
            stats.histogram.edges_us[i],
            stats.histogram.edges_us[i + 1],
            c
        ));
    }
    std::fs::write(&hist_path, text)?;

    let rate_path = out.join("event_rate.csv");
    let mut text = String::from("t_s,rate_hz_per_pixel\n");
    for (t, r) in &stats.rate_vs_time {
        text.push_str(&format!("{t},{r}\n"));
    }
    std::fs::write(&rate_path, text)?;

    println!(
        "{} events in ROI, {:.3} Hz/pixel, interval mode {} us",
        stats.events_in_roi,
        stats.per_pixel_rate_hz,
        stats
            .histogram
            .mode_us()
            .map(|m| format!("{m:.1}"))
            .unwrap_or_else(|| "n/a".into())
    );
    println!("{}, {}", hist_path.display(), rate_path.display());
    Ok(())
}

fn convert_cmd(events_path: PathBuf, out: Option<PathBuf>) -> Result<(), CliError> {
    let (_, events) = io::read_events(&events_path)?;
    let mut text = String::from("t_us,x,y,polarity\n");
    for e in &events {
        text.push_str(&format!(
            "{},{},{},{}\n",
            e.t_us,
            e.x,
            e.y,
            (e.polarity == pdsim::sensor::Polarity::On) as u8
        ));
    }
    match out {
        Some(path) => {
            std::fs::write(&path, text)?;
            println!("{} ({} events)", path.display(), events.len());
        }
        None => print!("{text}"),
    }
    Ok(())
}
