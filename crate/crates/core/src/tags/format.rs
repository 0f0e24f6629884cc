//! TTAG binary format, little-endian throughout:
//!
//! ```text
//! header  magic "TTAG" | version u16 = 1 | reserved u16 = 0 | record count u64
//! record  timestamp u64 (ps) | channel u8 (0 = A, 1 = B, 2 = T) | 7 zero bytes
//! ```
//!
//! Instrument-native formats are not read directly. A converter only has to
//! produce a sorted `Vec<Tag>` and hand it to [`TagStream::new`].

use std::io::{Read, Write};

use super::{Channel, Tag, TagStream};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TTAG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 16;

fn format_error(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, reason: reason.into() }
}

pub fn to_ttag_bytes(s: &TagStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * s.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    for t in s.tags() {
        out.extend_from_slice(&t.time_ps.to_le_bytes());
        out.push(t.channel.code());
        out.extend_from_slice(&[0; 7]);
    }
    out
}

pub fn write_tags<W: Write>(s: &TagStream, mut w: W) -> Result<()> {
    w.write_all(&to_ttag_bytes(s))?;
    w.flush()?;
    Ok(())
}

/// Parses a complete TTAG image. The declared record count must match the
/// byte length exactly, so truncated or padded files are rejected.
pub fn parse_tags(bytes: &[u8]) -> Result<TagStream> {
    if bytes.len() < HEADER_LEN {
        return Err(format_error(bytes.len(), format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(format_error(0, "bad magic, expected \"TTAG\""));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format_error(4, format!("unsupported version {version}")));
    }
    if bytes[6..8] != [0, 0] {
        return Err(format_error(6, "reserved header field is not zero"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = bytes.len() - HEADER_LEN;
    let expected = count.checked_mul(RECORD_LEN as u64);
    if expected != Some(body as u64) {
        return Err(format_error(
            HEADER_LEN + (body / RECORD_LEN) * RECORD_LEN,
            format!("header declares {count} records but {body} bytes of records follow"),
        ));
    }

    let mut tags = Vec::with_capacity(count as usize);
    let mut prev = 0u64;
    for (i, rec) in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN).enumerate() {
        let offset = HEADER_LEN + i * RECORD_LEN;
        let time_ps = u64::from_le_bytes(rec[..8].try_into().unwrap());
        let channel = Channel::from_code(rec[8]).ok_or_else(|| format_error(offset + 8, format!("unknown channel {}", rec[8])))?;
        if rec[9..].iter().any(|&b| b != 0) {
            return Err(format_error(offset + 9, "non-zero padding"));
        }
        if time_ps < prev {
            return Err(Error::Unsorted { index: i as u64, offset: offset as u64 });
        }
        prev = time_ps;
        tags.push(Tag { time_ps, channel });
    }
    Ok(TagStream::new(tags).expect("order checked while parsing"))
}

pub fn read_tags<R: Read>(mut r: R) -> Result<TagStream> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_tags(&bytes)
}

/// `channel,timestamp_ps` rows; channel is A/B/T or 0/1/2. A header row is
/// allowed if its second field is not a number.
pub fn parse_csv<R: Read>(r: R) -> Result<TagStream> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(r);
    let mut tags = Vec::new();
    let mut prev = 0u64;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let offset = e.position().map_or(0, |p| p.byte() as usize);
            format_error(offset, e.to_string())
        })?;
        let offset = rec.position().map_or(0, |p| p.byte() as usize);
        if rec.len() != 2 {
            return Err(format_error(offset, format!("expected 2 fields, found {}", rec.len())));
        }
        let time = rec[1].parse::<u64>();
        if row == 0 && time.is_err() {
            continue;
        }
        let time_ps = time.map_err(|_| format_error(offset, format!("bad timestamp {:?}", &rec[1])))?;
        let channel = match &rec[0] {
            "A" | "a" | "0" => Channel::A,
            "B" | "b" | "1" => Channel::B,
            "T" | "t" | "2" => Channel::Trigger,
            other => return Err(format_error(offset, format!("unknown channel {other:?}"))),
        };
        if time_ps < prev {
            return Err(Error::Unsorted { index: tags.len() as u64, offset: offset as u64 });
        }
        prev = time_ps;
        tags.push(Tag { time_ps, channel });
    }
    TagStream::new(tags)
}

pub fn write_csv<W: Write>(s: &TagStream, mut w: W) -> Result<()> {
    writeln!(w, "channel,timestamp_ps")?;
    for t in s.tags() {
        writeln!(w, "{},{}", t.channel.label(), t.time_ps)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TagStream {
        TagStream::new(vec![
            Tag::new(Channel::Trigger, 0),
            Tag::new(Channel::A, 40),
            Tag::new(Channel::B, 40),
            Tag::new(Channel::Trigger, 14_285_712),
            Tag::new(Channel::A, u64::MAX),
        ])
        .unwrap()
    }

    #[test]
    fn empty_stream_round_trips() {
        let bytes = to_ttag_bytes(&TagStream::default());
        assert_eq!(bytes.len(), HEADER_LEN);
        assert!(parse_tags(&bytes).unwrap().is_empty());
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let s = sample();
        let bytes = to_ttag_bytes(&s);
        assert_eq!(parse_tags(&bytes).unwrap(), s);
        assert_eq!(to_ttag_bytes(&parse_tags(&bytes).unwrap()), bytes);
        let mut text = Vec::new();
        write_csv(&s, &mut text).unwrap();
        assert_eq!(parse_csv(&text[..]).unwrap(), s);
    }

    #[test]
    fn header_errors() {
        let good = to_ttag_bytes(&sample());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(parse_tags(&bad), Err(Error::Format { offset: 0, .. })));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(parse_tags(&bad), Err(Error::Format { offset: 4, .. })));
        assert!(matches!(parse_tags(&good[..good.len() - 1]), Err(Error::Format { .. })));
        let mut bad = good.clone();
        bad[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(parse_tags(&bad), Err(Error::Format { .. })));
    }

    #[test]
    fn record_errors_carry_offsets() {
        let good = to_ttag_bytes(&sample());
        let mut bad = good.clone();
        bad[HEADER_LEN + RECORD_LEN + 8] = 7;
        assert!(matches!(parse_tags(&bad), Err(Error::Format { offset: 40, .. })));
        let mut bad = good.clone();
        bad[HEADER_LEN + 2 * RECORD_LEN..HEADER_LEN + 2 * RECORD_LEN + 8].copy_from_slice(&1u64.to_le_bytes());
        assert!(matches!(parse_tags(&bad), Err(Error::Unsorted { index: 2, offset: 48 })));
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv(&b"A,10\nB,5\n"[..]), Err(Error::Unsorted { index: 1, .. })));
        assert!(matches!(parse_csv(&b"A,10\nC,20\n"[..]), Err(Error::Format { .. })));
        assert!(matches!(parse_csv(&b"A,10\nB,x\n"[..]), Err(Error::Format { .. })));
        assert!(matches!(parse_csv(&b"A,10,3\n"[..]), Err(Error::Format { .. })));
        assert_eq!(parse_csv(&b"0,1\n1,2\n# comment\n2,3\n"[..]).unwrap().len(), 3);
    }
}
