//! Persistence and exchange: binary event/frame files, the polarization
//! sample stream, CSV export and run configuration.
//!
//! All binary formats are little-endian with fixed-size records behind an
//! 8-byte magic. Readers validate magic, record well-formedness, bounds and
//! time ordering as they stream, and report truncation with the byte offset.

pub mod config;
pub mod csv;
pub mod events;
pub mod frames;
pub mod polevents;

use thiserror::Error;

pub use config::{ConfigError, RunConfig, RunManifest};
pub use csv::{export_csv, export_csv_path, StokesRow};
pub use events::{read_events, write_events, EventFileHeader, EventFileReader};
pub use frames::{read_frames, write_frames};
pub use polevents::{read_polarization_events, write_polarization_events};

#[derive(Debug, Error)]
pub enum EvioError {
    #[error("bad magic: expected {expected:02x?}, found {found:02x?}")]
    BadMagic { expected: [u8; 8], found: [u8; 8] },
    #[error("file truncated at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("trailing data after declared record count, starting at byte offset {offset}")]
    TrailingData { offset: u64 },
    #[error("record {index} out of order: t={t_us} after t={prev_t_us}")]
    Unsorted {
        index: u64,
        prev_t_us: u64,
        t_us: u64,
    },
    #[error("record {index} address ({x},{y}) outside {width}x{height}")]
    OutOfBounds {
        index: u64,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
    },
    #[error("record {index} malformed: {reason}")]
    MalformedRecord { index: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
