//! Time-tag streams and their analysis.
//!
//! A [`TagStream`] is a time-ordered list of detector (A, B) and trigger (T)
//! events with picosecond timestamps. Streams are read and written in the
//! fixed-width TTAG binary format or as `channel,timestamp_ps` CSV.
//! [`window_statistics`] classifies each trigger window as empty, an
//! exclusive single or a coincidence; [`g2_histogram`] counts A–B delays.

mod format;
mod g2;
mod window;

pub use format::{parse_csv, parse_tags, read_tags, to_ttag_bytes, write_csv, write_tags, HEADER_LEN, MAGIC, RECORD_LEN, VERSION};
pub use g2::{g2_histogram, g2_histogram_with, Gate, G2Histogram};
pub use window::{
    dark_corrected_alpha, window_statistics, window_statistics_with, ClickStatistics, DarkCorrectedAlpha, Estimate,
    RatioEstimate, WindowCounts,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    A = 0,
    B = 1,
    Trigger = 2,
}

impl Channel {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Channel::A),
            1 => Some(Channel::B),
            2 => Some(Channel::Trigger),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Channel::A => "A",
            Channel::B => "B",
            Channel::Trigger => "T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tag {
    pub time_ps: u64,
    pub channel: Channel,
}

impl Tag {
    pub fn new(channel: Channel, time_ps: u64) -> Self {
        Tag { time_ps, channel }
    }
}

/// Tags with non-decreasing timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagStream {
    tags: Vec<Tag>,
}

impl TagStream {
    /// Rejects out-of-order timestamps, reporting the first offending record
    /// and its byte offset in the TTAG encoding.
    pub fn new(tags: Vec<Tag>) -> Result<Self> {
        if let Some(i) = tags.windows(2).position(|w| w[1].time_ps < w[0].time_ps) {
            let index = i as u64 + 1;
            return Err(Error::Unsorted { index, offset: HEADER_LEN as u64 + index * RECORD_LEN as u64 });
        }
        Ok(TagStream { tags })
    }

    /// Sorts by timestamp (stable, so simultaneous tags keep their order).
    pub fn from_unsorted(mut tags: Vec<Tag>) -> Self {
        tags.sort_by_key(|t| t.time_ps);
        TagStream { tags }
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn into_tags(self) -> Vec<Tag> {
        self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.tags.iter().filter(|t| t.channel == channel).count()
    }

    /// Timestamps of one channel, in order.
    pub fn times(&self, channel: Channel) -> Vec<u64> {
        self.tags.iter().filter(|t| t.channel == channel).map(|t| t.time_ps).collect()
    }

    /// Every timestamp moved by `offset_ps`.
    pub fn shifted(&self, offset_ps: u64) -> Result<Self> {
        let tags = self
            .tags
            .iter()
            .map(|t| t.time_ps.checked_add(offset_ps).map(|time_ps| Tag { time_ps, ..*t }))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::config("timestamp overflow while shifting stream"))?;
        Ok(TagStream { tags })
    }

    /// Appends a stream that starts no earlier than this one ends.
    pub fn append(&mut self, other: &TagStream) -> Result<()> {
        if let (Some(last), Some(first)) = (self.tags.last(), other.tags.first()) {
            if first.time_ps < last.time_ps {
                return Err(Error::config("appended stream overlaps in time"));
            }
        }
        self.tags.extend_from_slice(&other.tags);
        Ok(())
    }
}
