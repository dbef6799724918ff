//! Run configuration: a strict TOML document covering stimulus, sensor,
//! reconstruction and experiment parameters.
//!
//! Unknown keys are rejected, every field has a documented default, and the
//! canonical serialization is hashed into run manifests so any output can be
//! reproduced exactly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::polarization::{ExtinctionRatio, PolarizationState};
use crate::recon::{CfConfig, EventsReconConfig, Method};
use crate::sensor::{ApsParams, DvsPixelParams, PixelRect, SensorGeometry, SimError, Stimulus};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value: {0}")]
    Invalid(String),
    #[error("bad override `{0}`: expected dotted.key=value")]
    BadOverride(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub width: u16,
    pub height: u16,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            width: SensorGeometry::DEFAULT_WIDTH,
            height: SensorGeometry::DEFAULT_HEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsConfig {
    /// Mosaic filter extinction ratio; `inf` for an ideal filter.
    pub extinction_ratio: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            extinction_ratio: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StimulusConfig {
    /// One of `rotating_polarizer`, `polarizer_qwp`, `hdr_fan`,
    /// `uniform_field`.
    pub kind: String,
    pub rpm: f64,
    /// Flux transmitted by the rotating polarizer (rotating_polarizer,
    /// polarizer_qwp) or of a uniform_field scene.
    pub base_flux: f64,
    /// Unpolarized flux outside the polarizer disc (rotating_polarizer).
    pub background_flux: f64,
    /// QWP fast-axis angle (polarizer_qwp).
    pub qwp_axis_deg: f64,
    /// Bright/dark sector illumination (hdr_fan).
    pub bright_flux: f64,
    pub dark_flux: f64,
    pub sector_count: u32,
    pub sector_step_deg: f64,
    /// DoLP and AoP of a uniform_field scene.
    pub dolp: f64,
    pub aop_deg: f64,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            kind: "rotating_polarizer".into(),
            rpm: 30.0,
            base_flux: 500.0,
            background_flux: 50.0,
            qwp_axis_deg: 0.0,
            bright_flux: 2000.0,
            dark_flux: 1.0,
            sector_count: 6,
            sector_step_deg: 30.0,
            dolp: 0.0,
            aop_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DvsConfig {
    pub theta_on: f64,
    pub theta_off: f64,
    pub threshold_sigma: f64,
    pub leak_rate_hz: f64,
    pub refractory_us: u64,
    pub photoreceptor_cutoff_hz: Option<f64>,
}

impl Default for DvsConfig {
    fn default() -> Self {
        let p = DvsPixelParams::default();
        Self {
            theta_on: p.theta_on,
            theta_off: p.theta_off,
            threshold_sigma: p.threshold_sigma,
            leak_rate_hz: p.leak_rate_hz,
            refractory_us: p.refractory_us,
            photoreceptor_cutoff_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApsConfig {
    pub frame_rate_hz: f64,
    pub exposure_us: u64,
    pub full_scale_flux: f64,
    pub dark_offset_dn: u16,
}

impl Default for ApsConfig {
    fn default() -> Self {
        let p = ApsParams::default();
        Self {
            frame_rate_hz: p.frame_rate_hz,
            exposure_us: p.exposure_us,
            full_scale_flux: p.full_scale_flux,
            dark_offset_dn: p.dark_offset_dn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconConfig {
    pub events_f3db_hz: f64,
    pub cf_f3db_hz: f64,
    /// APS weight floor of the CF adaptive gain.
    pub lambda: f64,
    /// Well-exposed DN band for the CF adaptive gain.
    pub l1_dn: u16,
    pub l2_dn: u16,
    pub neighbor_updates: bool,
    /// Reconstructor's assumed thresholds; default to the simulator's.
    pub theta_on: Option<f64>,
    pub theta_off: Option<f64>,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            events_f3db_hz: 0.5,
            cf_f3db_hz: 1.6,
            lambda: 0.1,
            l1_dn: 10,
            l2_dn: 200,
            neighbor_updates: true,
            theta_on: None,
            theta_off: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimWindowConfig {
    pub t0_us: u64,
    pub duration_s: f64,
    /// Optional subpixel crop `[x0, y0, width, height]`.
    pub region: Option<[u16; 4]>,
}

impl Default for SimWindowConfig {
    fn default() -> Self {
        Self {
            t0_us: 0,
            duration_s: 2.0,
            region: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub rpm_list: Vec<f64>,
    /// Subset of `frames`, `events`, `cf`.
    pub methods: Vec<String>,
    /// ROI side length in subpixels, centered on the stimulus disc.
    pub roi_side: u16,
    /// Evaluation window per point, after filter transients.
    pub duration_s: f64,
    pub grid_rate_hz: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rpm_list: vec![30.0, 60.0, 100.0, 200.0, 500.0, 1000.0],
            methods: vec!["frames".into(), "events".into(), "cf".into()],
            roi_side: 12,
            duration_s: 3.0,
            grid_rate_hz: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdrConfig {
    /// Macropixels with centers inside this radius band (subpixels from the
    /// fan center) are evaluated.
    pub annulus_inner_px: f64,
    pub annulus_outer_px: f64,
    pub duration_s: f64,
    pub grid_rate_hz: f64,
    /// A sector counts as recoverable below this AoP MAE, with at least
    /// `min_usable_fraction` of its samples usable.
    pub recoverable_max_mae_deg: f64,
    pub min_usable_fraction: f64,
}

impl Default for HdrConfig {
    fn default() -> Self {
        Self {
            annulus_inner_px: 14.0,
            annulus_outer_px: 34.0,
            duration_s: 1.5,
            grid_rate_hz: 200.0,
            recoverable_max_mae_deg: 15.0,
            min_usable_fraction: 0.5,
        }
    }
}

/// Root of the run configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub optics: OpticsConfig,
    pub stimulus: StimulusConfig,
    pub dvs: DvsConfig,
    pub aps: ApsConfig,
    pub recon: ReconConfig,
    pub sim: SimWindowConfig,
    pub sweep: SweepConfig,
    pub hdr: HdrConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Parse with `dotted.key=value` overrides applied on top (last writer
    /// wins); the merged document is what gets hashed and recorded.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for ov in overrides {
            let (path, value) = ov
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(ov.clone()))?;
            let parsed: toml::Value = toml::from_str(&format!("v = {value}"))
                .map(|mut t: toml::Table| t.remove("v").unwrap())
                .or_else(|_: toml::de::Error| {
                    // bare words become strings
                    Ok::<_, ConfigError>(toml::Value::String(value.trim().to_string()))
                })?;
            let mut node = &mut table;
            let parts: Vec<&str> = path.trim().split('.').collect();
            if parts.iter().any(|p| p.is_empty()) {
                return Err(ConfigError::BadOverride(ov.clone()));
            }
            for part in &parts[..parts.len() - 1] {
                node = node
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| {
                        ConfigError::BadOverride(format!("{path}: `{part}` is not a table"))
                    })?;
            }
            node.insert(parts[parts.len() - 1].to_string(), parsed);
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex-encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry()?;
        self.extinction_ratio()?;
        self.stimulus()?.validate()?;
        self.dvs_params().validate()?;
        self.aps_params().validate()?;
        if !(self.recon.events_f3db_hz > 0.0) || !(self.recon.cf_f3db_hz > 0.0) {
            return Err(ConfigError::Invalid(
                "recon corner frequencies must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.recon.lambda) {
            return Err(ConfigError::Invalid(format!(
                "recon.lambda must be in [0,1], got {}",
                self.recon.lambda
            )));
        }
        if self.recon.l1_dn >= self.recon.l2_dn {
            return Err(ConfigError::Invalid(format!(
                "recon DN limits must satisfy l1 < l2, got {} >= {}",
                self.recon.l1_dn, self.recon.l2_dn
            )));
        }
        if !(self.sim.duration_s > 0.0) {
            return Err(ConfigError::Invalid(
                "sim.duration_s must be positive".into(),
            ));
        }
        if self.sweep.rpm_list.is_empty() || self.sweep.rpm_list.iter().any(|&r| !(r > 0.0)) {
            return Err(ConfigError::Invalid(
                "sweep.rpm_list must be nonempty and positive".into(),
            ));
        }
        for m in &self.sweep.methods {
            if Method::parse(m).is_none() {
                return Err(ConfigError::Invalid(format!("unknown sweep method `{m}`")));
            }
        }
        if self.sweep.roi_side == 0 || self.sweep.roi_side % 2 != 0 {
            return Err(ConfigError::Invalid(format!(
                "sweep.roi_side must be even and nonzero, got {}",
                self.sweep.roi_side
            )));
        }
        if let Some(r) = self.sim_region()? {
            let g = self.geometry()?;
            if r.x0 as u32 + r.width as u32 > g.width() as u32
                || r.y0 as u32 + r.height as u32 > g.height() as u32
            {
                return Err(ConfigError::Invalid(format!(
                    "sim.region {r:?} does not fit the sensor"
                )));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<SensorGeometry, ConfigError> {
        Ok(SensorGeometry::new(
            self.geometry.width,
            self.geometry.height,
        )?)
    }

    pub fn extinction_ratio(&self) -> Result<ExtinctionRatio, ConfigError> {
        ExtinctionRatio::new(self.optics.extinction_ratio)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn stimulus(&self) -> Result<Stimulus, ConfigError> {
        let s = &self.stimulus;
        let stim = match s.kind.as_str() {
            "rotating_polarizer" => Stimulus::RotatingPolarizer {
                rpm: s.rpm,
                base_flux: s.base_flux,
                background_flux: s.background_flux,
            },
            "polarizer_qwp" => Stimulus::PolarizerPlusQwp {
                rpm: s.rpm,
                qwp_axis: s.qwp_axis_deg.to_radians(),
                base_flux: s.base_flux,
            },
            "hdr_fan" => Stimulus::HdrFan {
                rpm: s.rpm,
                sector_count: s.sector_count,
                sector_step: s.sector_step_deg.to_radians(),
                bright_flux: s.bright_flux,
                dark_flux: s.dark_flux,
            },
            "uniform_field" => Stimulus::PiecewiseConstantField {
                background: PolarizationState::new(s.base_flux, s.dolp, s.aop_deg.to_radians())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                patches: vec![],
            },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown stimulus kind `{other}`"
                )))
            }
        };
        Ok(stim)
    }

    pub fn dvs_params(&self) -> DvsPixelParams {
        DvsPixelParams {
            theta_on: self.dvs.theta_on,
            theta_off: self.dvs.theta_off,
            threshold_sigma: self.dvs.threshold_sigma,
            leak_rate_hz: self.dvs.leak_rate_hz,
            refractory_us: self.dvs.refractory_us,
            photoreceptor_cutoff_hz: self.dvs.photoreceptor_cutoff_hz,
            rng_seed: self.seed,
        }
    }

    pub fn aps_params(&self) -> ApsParams {
        ApsParams {
            frame_rate_hz: self.aps.frame_rate_hz,
            exposure_us: self.aps.exposure_us,
            full_scale_flux: self.aps.full_scale_flux,
            dark_offset_dn: self.aps.dark_offset_dn,
        }
    }

    pub fn events_recon_config(&self) -> EventsReconConfig {
        EventsReconConfig {
            f3db_hz: self.recon.events_f3db_hz,
            theta_on: self.recon.theta_on.unwrap_or(self.dvs.theta_on),
            theta_off: self.recon.theta_off.unwrap_or(self.dvs.theta_off),
            neighbor_updates: self.recon.neighbor_updates,
        }
    }

    pub fn cf_config(&self) -> CfConfig {
        CfConfig {
            f3db_hz: self.recon.cf_f3db_hz,
            theta_on: self.recon.theta_on.unwrap_or(self.dvs.theta_on),
            theta_off: self.recon.theta_off.unwrap_or(self.dvs.theta_off),
            lambda: self.recon.lambda,
            l1_dn: self.recon.l1_dn,
            l2_dn: self.recon.l2_dn,
            dark_offset_dn: self.aps.dark_offset_dn,
        }
    }

    pub fn sim_region(&self) -> Result<Option<PixelRect>, ConfigError> {
        Ok(self
            .sim
            .region
            .map(|[x0, y0, w, h]| PixelRect::new(x0, y0, w, h)))
    }

    pub fn sim_window_us(&self) -> (u64, u64) {
        let t0 = self.sim.t0_us;
        (t0, t0 + (self.sim.duration_s * 1e6).round() as u64)
    }

    pub fn sweep_methods(&self) -> Vec<Method> {
        self.sweep
            .methods
            .iter()
            .filter_map(|m| Method::parse(m))
            .collect()
    }
}

/// Reproducibility record written next to every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: "pdsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.to_string(),
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }

    /// Write `manifest.toml` into `dir`; returns the path.
    pub fn write_to(
        &self,
        dir: impl AsRef<std::path::Path>,
    ) -> Result<std::path::PathBuf, ConfigError> {
        let path = dir.as_ref().join("manifest.toml");
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        // parse-print-parse fixed point
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("imaginary_knob = 3").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        let err = RunConfig::from_toml("[dvs]\nthreshold_typo = 0.1").unwrap_err();
        assert!(format!("{err}").contains("threshold_typo"));
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = RunConfig::from_toml("[stimulus]\nrpm = 123.0").unwrap();
        assert_eq!(cfg.stimulus.rpm, 123.0);
        assert_eq!(cfg.geometry.width, 346);
        assert_eq!(cfg.dvs.theta_on, 0.14);
    }

    #[test]
    fn overrides_apply_with_last_writer_wins() {
        let cfg = RunConfig::from_toml_with_overrides(
            "[stimulus]\nrpm = 10.0",
            &[
                "dvs.theta_on=0.12".into(),
                "stimulus.rpm=60".into(),
                "stimulus.rpm=90".into(),
                "stimulus.kind=polarizer_qwp".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.dvs.theta_on, 0.12);
        assert_eq!(cfg.stimulus.rpm, 90.0);
        assert_eq!(cfg.stimulus.kind, "polarizer_qwp");
    }

    #[test]
    fn bad_overrides_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml_with_overrides("", &["no_equals_sign".into()]),
            Err(ConfigError::BadOverride(_))
        ));
        assert!(RunConfig::from_toml_with_overrides("", &["dvs.nonexistent=1".into()]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn infinite_extinction_ratio_parses() {
        let cfg = RunConfig::from_toml("[optics]\nextinction_ratio = inf").unwrap();
        assert!(cfg.extinction_ratio().unwrap().is_ideal());
    }

    #[test]
    fn stimulus_kinds_construct() {
        for kind in [
            "rotating_polarizer",
            "polarizer_qwp",
            "hdr_fan",
            "uniform_field",
        ] {
            let cfg = RunConfig::from_toml(&format!("[stimulus]\nkind = \"{kind}\"\ndolp = 0.5"))
                .unwrap();
            cfg.stimulus().unwrap();
        }
        let bad = RunConfig::from_toml("[stimulus]\nkind = \"laser_show\"");
        assert!(bad.is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[geometry]\nwidth = 345").is_err());
        assert!(RunConfig::from_toml("[optics]\nextinction_ratio = 1.0").is_err());
        assert!(RunConfig::from_toml("[dvs]\ntheta_on = 0.0").is_err());
        assert!(RunConfig::from_toml("[aps]\nexposure_us = 60000").is_err());
        assert!(RunConfig::from_toml("[sweep]\nmethods = [\"dnn\"]").is_err());
        assert!(RunConfig::from_toml("[recon]\nl1_dn = 300").is_err());
    }

    #[test]
    fn manifest_contains_reproduction_data() {
        let cfg = RunConfig::default();
        let m = RunManifest::new("pdsim sweep -c cfg.toml", &cfg);
        let text = toml::to_string(&m).unwrap();
        assert!(text.contains("config_hash"));
        assert!(text.contains("[config.dvs]"));
        let back: RunManifest = toml::from_str(&text).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.config_hash, cfg.hash());
    }
}
