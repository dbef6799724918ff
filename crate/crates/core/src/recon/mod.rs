//! Polarization reconstruction engines.
//!
//! Three routes from sensor output back to polarization state, trading
//! latency against completeness:
//!
//! * [`frames`]: per-frame Stokes inversion of the four mosaic channels.
//!   AoP and DoLP, but limited to the frame cadence and dynamic range.
//! * [`events`]: per-event asynchronous first-order IIR on the log-intensity
//!   changes. AoP only (the event stream carries no absolute intensity), at
//!   event latency.
//! * [`cf`]: complementary filter fusing lowpassed frames with highpassed
//!   events into absolute log intensity per subpixel; AoP and DoLP at event
//!   latency with frame-anchored scale.

pub mod cf;
pub mod events;
pub mod frames;
pub mod kernel;

use thiserror::Error;

pub use cf::{CfConfig, CfRecon};
pub use events::{EventsRecon, EventsReconConfig};
pub use frames::{reconstruct_frame, FrameStokes, MacropixelSample};

#[derive(Debug, Error, PartialEq)]
pub enum ReconError {
    #[error("event at ({x},{y}) t={t_us} arrived before the pixel's last update {last_t_us}")]
    OutOfOrder {
        x: u16,
        y: u16,
        t_us: u64,
        last_t_us: u64,
    },
    #[error("AoP undefined for this macropixel")]
    UndefinedAop,
    #[error("filter state not initialized yet (no frame seen)")]
    NotInitialized,
    #[error("frame region is not macropixel aligned: {0}")]
    MisalignedFrame(String),
}

/// Which engine produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Frames,
    Events,
    Cf,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Frames => "frames",
            Method::Events => "events",
            Method::Cf => "cf",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "frames" => Some(Method::Frames),
            "events" => Some(Method::Events),
            "cf" => Some(Method::Cf),
            _ => None,
        }
    }
}

/// One reconstructed polarization sample at a macropixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationEventOut {
    pub t_us: u64,
    /// Macropixel coordinates.
    pub mx: u16,
    pub my: u16,
    /// AoP in `[0, pi)`.
    pub aop: f64,
    /// Not produced by the events-only method.
    pub dolp: Option<f64>,
    pub method: Method,
}
