use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use super::record::TagRecord;

/// Single-pass summary of a tag stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamStats {
    pub records: u64,
    pub per_channel: BTreeMap<u16, u64>,
    /// Records whose timestamp is earlier than the preceding record's.
    pub out_of_order: u64,
    pub first_timestamp: Option<u64>,
    pub last_timestamp: Option<u64>,
    pub elapsed: Duration,
}

impl StreamStats {
    /// Processing throughput in tags per second of wall time.
    pub fn tags_per_second(&self) -> f64 {
        let s = self.elapsed.as_secs_f64();
        if s > 0.0 {
            self.records as f64 / s
        } else {
            f64::INFINITY
        }
    }
}

pub fn stream_stats<I: IntoIterator<Item = TagRecord>>(records: I) -> StreamStats {
    let start = Instant::now();
    let mut counts = vec![0u64; 1 << 16];
    let mut n = 0u64;
    let mut out_of_order = 0u64;
    let mut prev: Option<u64> = None;
    let mut first = None;
    for r in records {
        let t = r.timestamp();
        if let Some(p) = prev {
            if t < p {
                out_of_order += 1;
            }
        } else {
            first = Some(t);
        }
        prev = Some(t);
        counts[r.channel() as usize] += 1;
        n += 1;
    }
    let per_channel = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(ch, &c)| (ch as u16, c))
        .collect();
    StreamStats {
        records: n,
        per_channel,
        out_of_order,
        first_timestamp: first,
        last_timestamp: prev,
        elapsed: start.elapsed(),
    }
}
