//! Binary frame file format.
//!
//! Layout (little-endian):
//!
//! ```text
//! offset  size   field
//! 0       8      magic "PDFRM\0\0\x01"
//! 8       2+2    stored region width, height (subpixels)
//! 12      2+2    region origin x0, y0
//! 16      8      frame count
//! 24      ...    frames: t_start u64 | t_end u64 | width*height u16 samples
//! ```
//!
//! DN samples are 10-bit codes stored in 16-bit words, flat row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::io::EvioError;
use crate::sensor::{ApsFrame, ApsParams, PixelRect};

pub const FRAME_MAGIC: [u8; 8] = *b"PDFRM\0\0\x01";
pub const FRAME_FILE_HEADER_LEN: u64 = 24;

/// Write frames (all sharing one region) and return the bytes written.
pub fn write_frames(path: impl AsRef<Path>, frames: &[ApsFrame]) -> Result<u64, EvioError> {
    let rect = match frames.first() {
        Some(f) => f.rect,
        None => PixelRect::new(0, 0, 0, 0),
    };
    for (i, f) in frames.iter().enumerate() {
        if f.rect != rect {
            return Err(EvioError::MalformedRecord {
                index: i as u64,
                reason: format!("frame region {:?} differs from {:?}", f.rect, rect),
            });
        }
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&FRAME_MAGIC)?;
    w.write_all(&rect.width.to_le_bytes())?;
    w.write_all(&rect.height.to_le_bytes())?;
    w.write_all(&rect.x0.to_le_bytes())?;
    w.write_all(&rect.y0.to_le_bytes())?;
    w.write_all(&(frames.len() as u64).to_le_bytes())?;
    let mut bytes = FRAME_FILE_HEADER_LEN;
    for f in frames {
        w.write_all(&f.t_start_us.to_le_bytes())?;
        w.write_all(&f.t_end_us.to_le_bytes())?;
        for dn in &f.samples {
            w.write_all(&dn.to_le_bytes())?;
        }
        bytes += 16 + 2 * f.samples.len() as u64;
    }
    w.flush()?;
    Ok(bytes)
}

/// Read a frame file written by [`write_frames`].
pub fn read_frames(path: impl AsRef<Path>) -> Result<Vec<ApsFrame>, EvioError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut offset: u64 = 0;
    let mut header = [0u8; FRAME_FILE_HEADER_LEN as usize];
    read_exact(&mut r, &mut header, &mut offset)?;
    let magic: [u8; 8] = header[0..8].try_into().unwrap();
    if magic != FRAME_MAGIC {
        return Err(EvioError::BadMagic {
            expected: FRAME_MAGIC,
            found: magic,
        });
    }
    let rect = PixelRect::new(
        u16::from_le_bytes([header[12], header[13]]),
        u16::from_le_bytes([header[14], header[15]]),
        u16::from_le_bytes([header[8], header[9]]),
        u16::from_le_bytes([header[10], header[11]]),
    );
    let count = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let samples_len = rect.pixel_count();
    let mut frames = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut prev_start = 0u64;
    for index in 0..count {
        let mut ts = [0u8; 16];
        read_exact(&mut r, &mut ts, &mut offset)?;
        let t_start_us = u64::from_le_bytes(ts[0..8].try_into().unwrap());
        let t_end_us = u64::from_le_bytes(ts[8..16].try_into().unwrap());
        if t_end_us <= t_start_us {
            return Err(EvioError::MalformedRecord {
                index,
                reason: format!("exposure window [{t_start_us}, {t_end_us}] is empty"),
            });
        }
        if index > 0 && t_start_us < prev_start {
            return Err(EvioError::Unsorted {
                index,
                prev_t_us: prev_start,
                t_us: t_start_us,
            });
        }
        prev_start = t_start_us;
        let mut raw = vec![0u8; samples_len * 2];
        read_exact(&mut r, &mut raw, &mut offset)?;
        let samples: Vec<u16> = raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        if let Some(&dn) = samples.iter().find(|&&dn| dn > ApsParams::DN_MAX) {
            return Err(EvioError::MalformedRecord {
                index,
                reason: format!("DN {dn} exceeds 10-bit range"),
            });
        }
        frames.push(ApsFrame {
            t_start_us,
            t_end_us,
            rect,
            samples,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(EvioError::TrailingData { offset });
    }
    Ok(frames)
}

fn read_exact(r: &mut BufReader<File>, buf: &mut [u8], offset: &mut u64) -> Result<(), EvioError> {
    let mut filled = 0usize;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(EvioError::Truncated {
                offset: *offset + filled as u64,
            });
        }
        filled += n;
    }
    *offset += buf.len() as u64;
    Ok(())
}
