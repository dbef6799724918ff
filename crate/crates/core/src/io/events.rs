//! Binary event file format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "PDEVT\0\0\x01"
//! 8       2     width (subpixels)
//! 10      2     height
//! 12      1     mosaic code
//! 13      1     flags
//! 14      8     event count
//! 22      16*n  records: t_us u64 | x u16 | y u16 | polarity u8 | 3 zero bytes
//! ```
//!
//! Records are sorted by timestamp. Absolute 64-bit microsecond timestamps
//! replace the hardware's rolling 16-bit stamps, so readers never reconstruct
//! wraparounds.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::io::EvioError;
use crate::sensor::{DvsEvent, Polarity};

pub const EVENT_MAGIC: [u8; 8] = *b"PDEVT\0\0\x01";
pub const EVENT_HEADER_LEN: u64 = 22;
pub const EVENT_RECORD_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventFileHeader {
    pub width: u16,
    pub height: u16,
    pub mosaic_code: u8,
    pub flags: u8,
    pub event_count: u64,
}

impl EventFileHeader {
    pub fn new(width: u16, height: u16, mosaic_code: u8) -> Self {
        Self {
            width,
            height,
            mosaic_code,
            flags: 0,
            event_count: 0,
        }
    }
}

fn encode_record(ev: &DvsEvent) -> [u8; EVENT_RECORD_LEN as usize] {
    let mut rec = [0u8; EVENT_RECORD_LEN as usize];
    rec[0..8].copy_from_slice(&ev.t_us.to_le_bytes());
    rec[8..10].copy_from_slice(&ev.x.to_le_bytes());
    rec[10..12].copy_from_slice(&ev.y.to_le_bytes());
    rec[12] = ev.polarity as u8;
    rec
}

/// Write a sorted event stream; the declared count in `header` is ignored
/// and patched from the stream. Returns the total bytes written.
pub fn write_events<I>(
    path: impl AsRef<Path>,
    header: &EventFileHeader,
    events: I,
) -> Result<u64, EvioError>
where
    I: IntoIterator<Item = DvsEvent>,
{
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&EVENT_MAGIC)?;
    w.write_all(&header.width.to_le_bytes())?;
    w.write_all(&header.height.to_le_bytes())?;
    w.write_all(&[header.mosaic_code, header.flags])?;
    w.write_all(&0u64.to_le_bytes())?; // count patched below

    let mut count: u64 = 0;
    let mut prev_t: u64 = 0;
    for ev in events {
        if count > 0 && ev.t_us < prev_t {
            return Err(EvioError::Unsorted {
                index: count,
                prev_t_us: prev_t,
                t_us: ev.t_us,
            });
        }
        if ev.x >= header.width || ev.y >= header.height {
            return Err(EvioError::OutOfBounds {
                index: count,
                x: ev.x,
                y: ev.y,
                width: header.width,
                height: header.height,
            });
        }
        w.write_all(&encode_record(&ev))?;
        prev_t = ev.t_us;
        count += 1;
    }
    w.seek(SeekFrom::Start(14))?;
    w.write_all(&count.to_le_bytes())?;
    w.flush()?;
    Ok(EVENT_HEADER_LEN + count * EVENT_RECORD_LEN)
}

/// Streaming reader; validates records as they are pulled, in constant
/// memory.
pub struct EventFileReader {
    reader: BufReader<File>,
    header: EventFileHeader,
    next_index: u64,
    prev_t: u64,
    finished: bool,
}

impl EventFileReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EvioError> {
        let file = File::open(path)?;
        let mut reader = BufReader::new(file);
        let mut magic = [0u8; 8];
        read_exact_at(&mut reader, &mut magic, 0)?;
        if magic != EVENT_MAGIC {
            return Err(EvioError::BadMagic {
                expected: EVENT_MAGIC,
                found: magic,
            });
        }
        let mut rest = [0u8; (EVENT_HEADER_LEN - 8) as usize];
        read_exact_at(&mut reader, &mut rest, 8)?;
        let header = EventFileHeader {
            width: u16::from_le_bytes([rest[0], rest[1]]),
            height: u16::from_le_bytes([rest[2], rest[3]]),
            mosaic_code: rest[4],
            flags: rest[5],
            event_count: u64::from_le_bytes(rest[6..14].try_into().unwrap()),
        };
        Ok(Self {
            reader,
            header,
            next_index: 0,
            prev_t: 0,
            finished: false,
        })
    }

    pub fn header(&self) -> &EventFileHeader {
        &self.header
    }

    fn byte_offset(&self) -> u64 {
        EVENT_HEADER_LEN + self.next_index * EVENT_RECORD_LEN
    }

    fn read_record(&mut self) -> Result<DvsEvent, EvioError> {
        let mut rec = [0u8; EVENT_RECORD_LEN as usize];
        let offset = self.byte_offset();
        let mut filled = 0usize;
        while filled < rec.len() {
            let n = self.reader.read(&mut rec[filled..])?;
            if n == 0 {
                return Err(EvioError::Truncated {
                    offset: offset + filled as u64,
                });
            }
            filled += n;
        }
        let index = self.next_index;
        let t_us = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let polarity = Polarity::from_u8(rec[12]).ok_or_else(|| EvioError::MalformedRecord {
            index,
            reason: format!("polarity byte {}", rec[12]),
        })?;
        if rec[13] != 0 || rec[14] != 0 || rec[15] != 0 {
            return Err(EvioError::MalformedRecord {
                index,
                reason: "nonzero reserved bytes".into(),
            });
        }
        if index > 0 && t_us < self.prev_t {
            return Err(EvioError::Unsorted {
                index,
                prev_t_us: self.prev_t,
                t_us,
            });
        }
        if x >= self.header.width || y >= self.header.height {
            return Err(EvioError::OutOfBounds {
                index,
                x,
                y,
                width: self.header.width,
                height: self.header.height,
            });
        }
        self.prev_t = t_us;
        self.next_index += 1;
        Ok(DvsEvent {
            t_us,
            x,
            y,
            polarity,
        })
    }

    fn check_eof(&mut self) -> Result<(), EvioError> {
        let mut probe = [0u8; 1];
        if self.reader.read(&mut probe)? != 0 {
            return Err(EvioError::TrailingData {
                offset: self.byte_offset(),
            });
        }
        Ok(())
    }
}

impl Iterator for EventFileReader {
    type Item = Result<DvsEvent, EvioError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        if self.next_index >= self.header.event_count {
            self.finished = true;
            return match self.check_eof() {
                Ok(()) => None,
                Err(e) => Some(Err(e)),
            };
        }
        match self.read_record() {
            Ok(ev) => Some(Ok(ev)),
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

fn read_exact_at(
    reader: &mut BufReader<File>,
    buf: &mut [u8],
    base_offset: u64,
) -> Result<(), EvioError> {
    let mut filled = 0usize;
    while filled < buf.len() {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(EvioError::Truncated {
                offset: base_offset + filled as u64,
            });
        }
        filled += n;
    }
    Ok(())
}

/// Read a whole event file into memory.
pub fn read_events(path: impl AsRef<Path>) -> Result<(EventFileHeader, Vec<DvsEvent>), EvioError> {
    let mut reader = EventFileReader::open(path)?;
    let header = *reader.header();
    let mut events = Vec::with_capacity(header.event_count.min(1 << 24) as usize);
    for ev in &mut reader {
        events.push(ev?);
    }
    Ok((header, events))
}
