//! C ABI for the polarization event camera simulator.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns a [`PdsimStatus`] and the last error message is
//! retrievable per thread via [`pdsim_last_error`]. Event buffers expose a
//! flat array of [`PdsimEvent`] records whose layout matches the `.pdevt`
//! file records.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pdsim::io::config::RunConfig;
use pdsim::io::events::EventFileHeader;
use pdsim::polarization::{
    aop_of, dolp_of, malus_intensity, stokes_from_intensities, ExtinctionRatio, FilterAngle,
    PolarizationState,
};
use pdsim::recon::{EventsRecon, EventsReconConfig, ReconError};
use pdsim::sensor::{DvsEvent, DvsSimulator, PixelRect, Polarity, SensorGeometry};

/// Call outcome; negative values are errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdsimStatus {
    Ok = 0,
    NullArgument = -1,
    InvalidUtf8 = -2,
    InvalidConfig = -3,
    IoError = -4,
    DomainError = -5,
    OutOfOrder = -6,
    /// The requested value is undefined in this state (e.g. AoP of an
    /// unpolarized or untouched macropixel).
    Undefined = -7,
    BadArgument = -8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: PdsimStatus, msg: &str) -> PdsimStatus {
    set_error(msg);
    status
}

/// Opaque run configuration handle.
pub struct PdsimConfig(RunConfig);

/// Opaque event buffer handle.
pub struct PdsimEventBuffer {
    events: Vec<PdsimEvent>,
    width: u16,
    height: u16,
}

/// Opaque events-method reconstruction handle.
pub struct PdsimEventsRecon(EventsRecon);

/// One DVS event; identical layout to a `.pdevt` file record.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdsimEvent {
    pub t_us: u64,
    pub x: u16,
    pub y: u16,
    /// 0 = OFF, 1 = ON.
    pub polarity: u8,
    pub reserved: [u8; 3],
}

impl From<DvsEvent> for PdsimEvent {
    fn from(e: DvsEvent) -> Self {
        PdsimEvent {
            t_us: e.t_us,
            x: e.x,
            y: e.y,
            polarity: e.polarity as u8,
            reserved: [0; 3],
        }
    }
}

fn to_dvs(e: &PdsimEvent) -> Option<DvsEvent> {
    Some(DvsEvent {
        t_us: e.t_us,
        x: e.x,
        y: e.y,
        polarity: Polarity::from_u8(e.polarity)?,
    })
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, PdsimStatus> {
    if ptr.is_null() {
        return Err(PdsimStatus::NullArgument);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| PdsimStatus::InvalidUtf8)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the calling thread's last error message into `buf` (truncated to
/// `len - 1` bytes, always NUL-terminated when `len > 0`). Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be NULL with
/// `len == 0` to query the length only.
#[no_mangle]
pub unsafe extern "C" fn pdsim_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// New configuration with every key at its default.
#[no_mangle]
pub extern "C" fn pdsim_config_default() -> *mut PdsimConfig {
    Box::into_raw(Box::new(PdsimConfig(RunConfig::default())))
}

/// Parse a TOML configuration document. Returns NULL on error (see
/// [`pdsim_last_error`]).
///
/// # Safety
/// `toml_text` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pdsim_config_parse(toml_text: *const c_char) -> *mut PdsimConfig {
    let text = match cstr(toml_text) {
        Ok(t) => t,
        Err(_) => {
            set_error("config text is NULL or not UTF-8");
            return std::ptr::null_mut();
        }
    };
    match RunConfig::from_toml(text) {
        Ok(cfg) => Box::into_raw(Box::new(PdsimConfig(cfg))),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Apply one `dotted.key = value` override, e.g. `("stimulus.rpm", "200")`.
///
/// # Safety
/// `cfg` must be a live handle from this library; `key` and `value` must be
/// valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pdsim_config_set(
    cfg: *mut PdsimConfig,
    key: *const c_char,
    value: *const c_char,
) -> PdsimStatus {
    if cfg.is_null() {
        return fail(PdsimStatus::NullArgument, "config handle is NULL");
    }
    let (key, value) = match (cstr(key), cstr(value)) {
        (Ok(k), Ok(v)) => (k, v),
        _ => return fail(PdsimStatus::InvalidUtf8, "key/value not valid UTF-8"),
    };
    let current = (*cfg).0.to_toml();
    match RunConfig::from_toml_with_overrides(&current, &[format!("{key}={value}")]) {
        Ok(updated) => {
            (*cfg).0 = updated;
            PdsimStatus::Ok
        }
        Err(e) => fail(PdsimStatus::InvalidConfig, &e.to_string()),
    }
}

/// # Safety
/// `cfg` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdsim_config_free(cfg: *mut PdsimConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Simulate DVS events for the configured stimulus over `[t0_us, t1_us)`,
/// honoring `sim.region` when set. On success `*out` owns the buffer.
///
/// # Safety
/// `cfg` must be a live handle; `out` must point to writable pointer storage.
#[no_mangle]
pub unsafe extern "C" fn pdsim_simulate_events(
    cfg: *const PdsimConfig,
    t0_us: u64,
    t1_us: u64,
    out: *mut *mut PdsimEventBuffer,
) -> PdsimStatus {
    if cfg.is_null() || out.is_null() {
        return fail(PdsimStatus::NullArgument, "NULL config or output pointer");
    }
    let config = &(*cfg).0;
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<PdsimEventBuffer, String> {
        let geom = config.geometry().map_err(|e| e.to_string())?;
        let stim = config.stimulus().map_err(|e| e.to_string())?;
        let er = config.extinction_ratio().map_err(|e| e.to_string())?;
        let region = config.sim_region().map_err(|e| e.to_string())?;
        let sim = DvsSimulator::new(geom, config.dvs_params()).map_err(|e| e.to_string())?;
        let events = sim
            .simulate(&stim, er, t0_us, t1_us, region)
            .map_err(|e| e.to_string())?;
        Ok(PdsimEventBuffer {
            events: events.into_iter().map(PdsimEvent::from).collect(),
            width: geom.width(),
            height: geom.height(),
        })
    }));
    match result {
        Ok(Ok(buf)) => {
            *out = Box::into_raw(Box::new(buf));
            PdsimStatus::Ok
        }
        Ok(Err(msg)) => fail(PdsimStatus::DomainError, &msg),
        Err(_) => fail(PdsimStatus::DomainError, "internal panic in simulation"),
    }
}

/// # Safety
/// `buf` must be a live buffer handle.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_len(buf: *const PdsimEventBuffer) -> usize {
    if buf.is_null() {
        return 0;
    }
    (*buf).events.len()
}

/// Borrow the records; valid until the buffer is freed.
///
/// # Safety
/// `buf` must be a live buffer handle.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_data(buf: *const PdsimEventBuffer) -> *const PdsimEvent {
    if buf.is_null() {
        return std::ptr::null();
    }
    (*buf).events.as_ptr()
}

/// Sensor width/height the buffer was generated for.
///
/// # Safety
/// `buf` must be a live buffer handle; outputs may be NULL to skip.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_geometry(
    buf: *const PdsimEventBuffer,
    out_width: *mut u16,
    out_height: *mut u16,
) -> PdsimStatus {
    if buf.is_null() {
        return fail(PdsimStatus::NullArgument, "buffer handle is NULL");
    }
    if !out_width.is_null() {
        *out_width = (*buf).width;
    }
    if !out_height.is_null() {
        *out_height = (*buf).height;
    }
    PdsimStatus::Ok
}

/// # Safety
/// `buf` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_free(buf: *mut PdsimEventBuffer) {
    if !buf.is_null() {
        drop(Box::from_raw(buf));
    }
}

/// Write a buffer to a `.pdevt` file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `buf` a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_write(
    path: *const c_char,
    buf: *const PdsimEventBuffer,
) -> PdsimStatus {
    if buf.is_null() {
        return fail(PdsimStatus::NullArgument, "buffer handle is NULL");
    }
    let path = match cstr(path) {
        Ok(p) => p,
        Err(s) => return fail(s, "path is NULL or not UTF-8"),
    };
    let b = &*buf;
    let header = EventFileHeader::new(b.width, b.height, SensorGeometry::MOSAIC_CODE);
    let events = b.events.iter().filter_map(to_dvs);
    match pdsim::io::write_events(path, &header, events) {
        Ok(_) => PdsimStatus::Ok,
        Err(pdsim::io::EvioError::Io(e)) => fail(PdsimStatus::IoError, &e.to_string()),
        Err(e) => fail(PdsimStatus::DomainError, &e.to_string()),
    }
}

/// Read a `.pdevt` file into a new buffer.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_read(
    path: *const c_char,
    out: *mut *mut PdsimEventBuffer,
) -> PdsimStatus {
    if out.is_null() {
        return fail(PdsimStatus::NullArgument, "output pointer is NULL");
    }
    let path = match cstr(path) {
        Ok(p) => p,
        Err(s) => return fail(s, "path is NULL or not UTF-8"),
    };
    match pdsim::io::read_events(path) {
        Ok((header, events)) => {
            *out = Box::into_raw(Box::new(PdsimEventBuffer {
                events: events.into_iter().map(PdsimEvent::from).collect(),
                width: header.width,
                height: header.height,
            }));
            PdsimStatus::Ok
        }
        Err(pdsim::io::EvioError::Io(e)) => fail(PdsimStatus::IoError, &e.to_string()),
        Err(e) => fail(PdsimStatus::DomainError, &e.to_string()),
    }
}

/// New events-method reconstruction over a `width x height` subpixel grid.
/// Returns NULL when the parameters are invalid.
#[no_mangle]
pub extern "C" fn pdsim_events_recon_new(
    width: u16,
    height: u16,
    f3db_hz: f64,
    theta_on: f64,
    theta_off: f64,
    neighbor_updates: bool,
) -> *mut PdsimEventsRecon {
    if width == 0 || height == 0 || !(f3db_hz > 0.0) || !(theta_on > 0.0) || !(theta_off > 0.0) {
        set_error("recon parameters must be positive and the grid nonempty");
        return std::ptr::null_mut();
    }
    let cfg = EventsReconConfig {
        f3db_hz,
        theta_on,
        theta_off,
        neighbor_updates,
    };
    let rect = PixelRect::new(0, 0, width, height);
    Box::into_raw(Box::new(PdsimEventsRecon(EventsRecon::new(rect, cfg))))
}

/// Feed a batch of time-ordered events.
///
/// # Safety
/// `recon` must be a live handle; `events` must point to `len` records.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_recon_process(
    recon: *mut PdsimEventsRecon,
    events: *const PdsimEvent,
    len: usize,
) -> PdsimStatus {
    if recon.is_null() || (events.is_null() && len > 0) {
        return fail(PdsimStatus::NullArgument, "NULL recon or event pointer");
    }
    let engine = &mut (*recon).0;
    for i in 0..len {
        let raw = &*events.add(i);
        let Some(ev) = to_dvs(raw) else {
            return fail(
                PdsimStatus::BadArgument,
                &format!("event {i} has polarity byte {}", raw.polarity),
            );
        };
        match engine.process(&ev) {
            Ok(()) => {}
            Err(ReconError::OutOfOrder {
                x,
                y,
                t_us,
                last_t_us,
            }) => {
                return fail(
                    PdsimStatus::OutOfOrder,
                    &format!("event {i} at ({x},{y}) t={t_us} before t={last_t_us}"),
                )
            }
            Err(e) => return fail(PdsimStatus::DomainError, &e.to_string()),
        }
    }
    PdsimStatus::Ok
}

/// AoP of macropixel `(mx, my)` at `t_us`, radians in `[0, pi)`. Returns
/// `Undefined` while the macropixel has no signal.
///
/// # Safety
/// `recon` must be a live handle; `out_aop_rad` writable.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_recon_aop(
    recon: *const PdsimEventsRecon,
    mx: u16,
    my: u16,
    t_us: u64,
    out_aop_rad: *mut f64,
) -> PdsimStatus {
    if recon.is_null() || out_aop_rad.is_null() {
        return fail(PdsimStatus::NullArgument, "NULL recon or output pointer");
    }
    let engine = &(*recon).0;
    if 2 * mx + 1 >= engine.rect().width || 2 * my + 1 >= engine.rect().height {
        return fail(
            PdsimStatus::BadArgument,
            &format!("macropixel ({mx},{my}) outside the grid"),
        );
    }
    match engine.aop_at(mx, my, t_us) {
        Ok(aop) => {
            *out_aop_rad = aop;
            PdsimStatus::Ok
        }
        Err(ReconError::UndefinedAop) => fail(PdsimStatus::Undefined, "AoP undefined"),
        Err(e) => fail(PdsimStatus::DomainError, &e.to_string()),
    }
}

/// # Safety
/// `recon` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pdsim_events_recon_free(recon: *mut PdsimEventsRecon) {
    if !recon.is_null() {
        drop(Box::from_raw(recon));
    }
}

/// Flux transmitted through one mosaic filter (`filter_index` 0..3 for
/// 0/45/90/135 degrees). `extinction_ratio` may be infinity.
///
/// # Safety
/// `out_flux` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdsim_malus_intensity(
    total_flux: f64,
    dolp: f64,
    aop_rad: f64,
    filter_index: u32,
    extinction_ratio: f64,
    out_flux: *mut f64,
) -> PdsimStatus {
    if out_flux.is_null() {
        return fail(PdsimStatus::NullArgument, "output pointer is NULL");
    }
    let Some(angle) = FilterAngle::from_index(filter_index as usize) else {
        return fail(
            PdsimStatus::BadArgument,
            &format!("filter index {filter_index} not in 0..4"),
        );
    };
    let state = match PolarizationState::new(total_flux, dolp, aop_rad) {
        Ok(s) => s,
        Err(e) => return fail(PdsimStatus::DomainError, &e.to_string()),
    };
    let er = match ExtinctionRatio::new(extinction_ratio) {
        Ok(er) => er,
        Err(e) => return fail(PdsimStatus::DomainError, &e.to_string()),
    };
    *out_flux = malus_intensity(&state, angle, er);
    PdsimStatus::Ok
}

/// DoLP and AoP from the four filtered intensities. Undefined outputs are
/// written as NaN and reported via the status.
///
/// # Safety
/// `out_dolp` and `out_aop_rad` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdsim_stokes_dolp_aop(
    i0: f64,
    i45: f64,
    i90: f64,
    i135: f64,
    out_dolp: *mut f64,
    out_aop_rad: *mut f64,
) -> PdsimStatus {
    if out_dolp.is_null() || out_aop_rad.is_null() {
        return fail(PdsimStatus::NullArgument, "output pointer is NULL");
    }
    let s = stokes_from_intensities(i0, i45, i90, i135);
    let dolp = dolp_of(&s);
    let aop = aop_of(&s);
    *out_dolp = dolp.as_ref().copied().unwrap_or(f64::NAN);
    *out_aop_rad = aop.as_ref().copied().unwrap_or(f64::NAN);
    if dolp.is_ok() && aop.is_ok() {
        PdsimStatus::Ok
    } else {
        fail(
            PdsimStatus::Undefined,
            "DoLP or AoP undefined for this sample",
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn last_error_string() -> String {
        let mut buf = vec![0i8; 256];
        let n = unsafe { pdsim_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
        let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&b| b as u8).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(pdsim_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn config_parse_set_and_reject() {
        let cfg = unsafe { pdsim_config_parse(c"[stimulus]\nrpm = 99.0".as_ptr()) };
        assert!(!cfg.is_null());
        let key = CString::new("stimulus.rpm").unwrap();
        let val = CString::new("120").unwrap();
        assert_eq!(
            unsafe { pdsim_config_set(cfg, key.as_ptr(), val.as_ptr()) },
            PdsimStatus::Ok
        );
        let bad_key = CString::new("stimulus.warp_speed").unwrap();
        assert_eq!(
            unsafe { pdsim_config_set(cfg, bad_key.as_ptr(), val.as_ptr()) },
            PdsimStatus::InvalidConfig
        );
        assert!(last_error_string().contains("warp_speed"));
        unsafe { pdsim_config_free(cfg) };

        let broken = unsafe { pdsim_config_parse(c"not toml [".as_ptr()) };
        assert!(broken.is_null());
    }

    #[test]
    fn simulate_process_and_query_aop() {
        let cfg = pdsim_config_default();
        for (k, v) in [
            ("geometry.width", "16"),
            ("geometry.height", "16"),
            ("dvs.leak_rate_hz", "0"),
            ("dvs.threshold_sigma", "0"),
            ("stimulus.rpm", "300"),
        ] {
            let key = CString::new(k).unwrap();
            let val = CString::new(v).unwrap();
            assert_eq!(
                unsafe { pdsim_config_set(cfg, key.as_ptr(), val.as_ptr()) },
                PdsimStatus::Ok
            );
        }
        let mut buf: *mut PdsimEventBuffer = std::ptr::null_mut();
        assert_eq!(
            unsafe { pdsim_simulate_events(cfg, 0, 400_000, &mut buf) },
            PdsimStatus::Ok
        );
        let len = unsafe { pdsim_events_len(buf) };
        assert!(len > 100, "expected a healthy event count, got {len}");
        let data = unsafe { pdsim_events_data(buf) };
        let events = unsafe { std::slice::from_raw_parts(data, len) };
        assert!(events.windows(2).all(|w| w[0].t_us <= w[1].t_us));

        let recon = pdsim_events_recon_new(16, 16, 0.5, 0.14, 0.14, true);
        assert!(!recon.is_null());
        assert_eq!(
            unsafe { pdsim_events_recon_process(recon, data, len) },
            PdsimStatus::Ok
        );
        let mut aop = f64::NAN;
        let status = unsafe { pdsim_events_recon_aop(recon, 4, 4, 400_000, &mut aop) };
        assert_eq!(status, PdsimStatus::Ok);
        assert!((0.0..std::f64::consts::PI).contains(&aop));
        // out-of-grid macropixel
        let mut junk = 0.0;
        assert_eq!(
            unsafe { pdsim_events_recon_aop(recon, 90, 0, 0, &mut junk) },
            PdsimStatus::BadArgument
        );
        unsafe { pdsim_events_recon_free(recon) };

        // untouched engine reports Undefined
        let fresh = pdsim_events_recon_new(16, 16, 0.5, 0.14, 0.14, false);
        assert_eq!(
            unsafe { pdsim_events_recon_aop(fresh, 0, 0, 0, &mut junk) },
            PdsimStatus::Undefined
        );
        unsafe { pdsim_events_recon_free(fresh) };

        unsafe { pdsim_events_free(buf) };
        unsafe { pdsim_config_free(cfg) };
    }

    #[test]
    fn file_round_trip_through_the_c_surface() {
        let cfg = pdsim_config_default();
        for (k, v) in [
            ("geometry.width", "8"),
            ("geometry.height", "8"),
            ("dvs.leak_rate_hz", "20"),
            ("stimulus.kind", "uniform_field"),
            ("stimulus.dolp", "0"),
        ] {
            let key = CString::new(k).unwrap();
            let val = CString::new(v).unwrap();
            assert_eq!(
                unsafe { pdsim_config_set(cfg, key.as_ptr(), val.as_ptr()) },
                PdsimStatus::Ok
            );
        }
        let mut buf: *mut PdsimEventBuffer = std::ptr::null_mut();
        assert_eq!(
            unsafe { pdsim_simulate_events(cfg, 0, 500_000, &mut buf) },
            PdsimStatus::Ok
        );
        let dir = std::env::temp_dir().join("pdsim_ffi_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = CString::new(dir.join("roundtrip.pdevt").to_str().unwrap()).unwrap();
        assert_eq!(
            unsafe { pdsim_events_write(path.as_ptr(), buf) },
            PdsimStatus::Ok
        );
        let mut back: *mut PdsimEventBuffer = std::ptr::null_mut();
        assert_eq!(
            unsafe { pdsim_events_read(path.as_ptr(), &mut back) },
            PdsimStatus::Ok
        );
        unsafe {
            assert_eq!(pdsim_events_len(back), pdsim_events_len(buf));
            let (mut w, mut h) = (0u16, 0u16);
            assert_eq!(pdsim_events_geometry(back, &mut w, &mut h), PdsimStatus::Ok);
            assert_eq!((w, h), (8, 8));
            let a = std::slice::from_raw_parts(pdsim_events_data(buf), pdsim_events_len(buf));
            let b = std::slice::from_raw_parts(pdsim_events_data(back), pdsim_events_len(back));
            assert_eq!(a, b);
            pdsim_events_free(back);
            pdsim_events_free(buf);
            pdsim_config_free(cfg);
        }
        // missing file is an IO error
        let missing = CString::new(dir.join("missing.pdevt").to_str().unwrap()).unwrap();
        let mut none: *mut PdsimEventBuffer = std::ptr::null_mut();
        assert_eq!(
            unsafe { pdsim_events_read(missing.as_ptr(), &mut none) },
            PdsimStatus::IoError
        );
    }

    #[test]
    fn scalar_helpers() {
        let mut flux = 0.0;
        assert_eq!(
            unsafe { pdsim_malus_intensity(1.0, 1.0, 0.0, 2, 40.0, &mut flux) },
            PdsimStatus::Ok
        );
        assert!((flux - 1.0 / 41.0).abs() < 1e-12);
        assert_eq!(
            unsafe { pdsim_malus_intensity(1.0, 2.0, 0.0, 0, 40.0, &mut flux) },
            PdsimStatus::DomainError
        );
        assert_eq!(
            unsafe { pdsim_malus_intensity(1.0, 1.0, 0.0, 9, 40.0, &mut flux) },
            PdsimStatus::BadArgument
        );

        let (mut dolp, mut aop) = (0.0, 0.0);
        assert_eq!(
            unsafe { pdsim_stokes_dolp_aop(1.0, 0.5, 0.0, 0.5, &mut dolp, &mut aop) },
            PdsimStatus::Ok
        );
        assert!((dolp - 1.0).abs() < 1e-12);
        assert!(aop.abs() < 1e-12);
        assert_eq!(
            unsafe { pdsim_stokes_dolp_aop(0.5, 0.5, 0.5, 0.5, &mut dolp, &mut aop) },
            PdsimStatus::Undefined
        );
        assert!(aop.is_nan());
    }
}
