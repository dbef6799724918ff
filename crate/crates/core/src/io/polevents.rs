//! Binary polarization sample stream: the event-rate AoP/DoLP output of the
//! reconstruction engines.
//!
//! Layout (little-endian):
//!
//! ```text
//! offset  size   field
//! 0       8      magic "PDPOL\0\0\x01"
//! 8       2+2    macropixel grid width, height
//! 12      1      method (0 frames, 1 events, 2 cf)
//! 13      1      flags
//! 14      8      sample count
//! 22      24*n   records: t_us u64 | mx u16 | my u16 | aop_rad f32 |
//!                dolp f32 (NaN when undefined) | flags u8 | 3 zero bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::io::EvioError;
use crate::recon::{Method, PolarizationEventOut};

pub const POL_MAGIC: [u8; 8] = *b"PDPOL\0\0\x01";
pub const POL_HEADER_LEN: u64 = 22;
pub const POL_RECORD_LEN: u64 = 24;

fn method_code(m: Method) -> u8 {
    match m {
        Method::Frames => 0,
        Method::Events => 1,
        Method::Cf => 2,
    }
}

fn method_from_code(c: u8) -> Option<Method> {
    match c {
        0 => Some(Method::Frames),
        1 => Some(Method::Events),
        2 => Some(Method::Cf),
        _ => None,
    }
}

/// Write a time-sorted polarization sample stream. Returns bytes written.
pub fn write_polarization_events<I>(
    path: impl AsRef<Path>,
    macro_width: u16,
    macro_height: u16,
    method: Method,
    samples: I,
) -> Result<u64, EvioError>
where
    I: IntoIterator<Item = PolarizationEventOut>,
{
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&POL_MAGIC)?;
    w.write_all(&macro_width.to_le_bytes())?;
    w.write_all(&macro_height.to_le_bytes())?;
    w.write_all(&[method_code(method), 0])?;
    w.write_all(&0u64.to_le_bytes())?;
    let mut count = 0u64;
    let mut prev_t = 0u64;
    for s in samples {
        if count > 0 && s.t_us < prev_t {
            return Err(EvioError::Unsorted {
                index: count,
                prev_t_us: prev_t,
                t_us: s.t_us,
            });
        }
        if s.mx >= macro_width || s.my >= macro_height {
            return Err(EvioError::OutOfBounds {
                index: count,
                x: s.mx,
                y: s.my,
                width: macro_width,
                height: macro_height,
            });
        }
        let mut rec = [0u8; POL_RECORD_LEN as usize];
        rec[0..8].copy_from_slice(&s.t_us.to_le_bytes());
        rec[8..10].copy_from_slice(&s.mx.to_le_bytes());
        rec[10..12].copy_from_slice(&s.my.to_le_bytes());
        rec[12..16].copy_from_slice(&(s.aop as f32).to_le_bytes());
        let dolp = s.dolp.map(|d| d as f32).unwrap_or(f32::NAN);
        rec[16..20].copy_from_slice(&dolp.to_le_bytes());
        w.write_all(&rec)?;
        prev_t = s.t_us;
        count += 1;
    }
    w.seek(SeekFrom::Start(14))?;
    w.write_all(&count.to_le_bytes())?;
    w.flush()?;
    Ok(POL_HEADER_LEN + count * POL_RECORD_LEN)
}

/// Read a polarization sample stream; returns the macropixel grid size and
/// the samples.
#[allow(clippy::type_complexity)]
pub fn read_polarization_events(
    path: impl AsRef<Path>,
) -> Result<((u16, u16), Vec<PolarizationEventOut>), EvioError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; POL_HEADER_LEN as usize];
    let mut offset = 0u64;
    read_exact(&mut r, &mut header, &mut offset)?;
    let magic: [u8; 8] = header[0..8].try_into().unwrap();
    if magic != POL_MAGIC {
        return Err(EvioError::BadMagic {
            expected: POL_MAGIC,
            found: magic,
        });
    }
    let width = u16::from_le_bytes([header[8], header[9]]);
    let height = u16::from_le_bytes([header[10], header[11]]);
    let method = method_from_code(header[12]).ok_or_else(|| EvioError::MalformedRecord {
        index: 0,
        reason: format!("unknown method code {}", header[12]),
    })?;
    let count = u64::from_le_bytes(header[14..22].try_into().unwrap());
    let mut samples = Vec::with_capacity(count.min(1 << 24) as usize);
    for index in 0..count {
        let mut rec = [0u8; POL_RECORD_LEN as usize];
        read_exact(&mut r, &mut rec, &mut offset)?;
        let dolp = f32::from_le_bytes(rec[16..20].try_into().unwrap());
        if rec[21] != 0 || rec[22] != 0 || rec[23] != 0 {
            return Err(EvioError::MalformedRecord {
                index,
                reason: "nonzero reserved bytes".into(),
            });
        }
        samples.push(PolarizationEventOut {
            t_us: u64::from_le_bytes(rec[0..8].try_into().unwrap()),
            mx: u16::from_le_bytes([rec[8], rec[9]]),
            my: u16::from_le_bytes([rec[10], rec[11]]),
            aop: f32::from_le_bytes(rec[12..16].try_into().unwrap()) as f64,
            dolp: if dolp.is_nan() {
                None
            } else {
                Some(dolp as f64)
            },
            method,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(EvioError::TrailingData { offset });
    }
    Ok(((width, height), samples))
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

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn polarization_stream_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.pdpol");
        let samples: Vec<PolarizationEventOut> = (0..100u64)
            .map(|i| PolarizationEventOut {
                t_us: i * 11,
                mx: (i % 8) as u16,
                my: (i % 4) as u16,
                aop: (i as f64 * 0.01) % std::f64::consts::PI,
                dolp: if i % 3 == 0 { None } else { Some(0.5) },
                method: Method::Events,
            })
            .collect();
        write_polarization_events(&path, 8, 4, Method::Events, samples.iter().copied()).unwrap();
        let ((w, h), back) = read_polarization_events(&path).unwrap();
        assert_eq!((w, h), (8, 4));
        assert_eq!(back.len(), samples.len());
        for (a, b) in back.iter().zip(&samples) {
            assert_eq!(a.t_us, b.t_us);
            assert_eq!((a.mx, a.my), (b.mx, b.my));
            assert!((a.aop - b.aop).abs() < 1e-6);
            assert_eq!(a.dolp.is_none(), b.dolp.is_none());
            assert_eq!(a.method, b.method);
        }
    }
}
