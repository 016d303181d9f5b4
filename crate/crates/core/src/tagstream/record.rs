use crate::error::{Error, Result};

/// Trigger channel. Pixels occupy channels 1–64, row-major.
pub const TRIGGER_CHANNEL: u16 = 0;

/// Largest representable timestamp (48 bits of picoseconds, about 78 h).
pub const MAX_TIMESTAMP: u64 = (1 << 48) - 1;

/// Size of one encoded record.
pub const RECORD_BYTES: usize = 8;

/// One time tag: a channel and a picosecond timestamp.
///
/// Packed as `timestamp << 16 | channel`, so the little-endian bytes of the
/// packed word are exactly the wire layout, and integer order is
/// `(timestamp, channel)` order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TagRecord(u64);

impl TagRecord {
    pub fn new(channel: u16, timestamp: u64) -> Result<Self> {
        if timestamp > MAX_TIMESTAMP {
            return Err(Error::Input(format!(
                "timestamp {timestamp} ps exceeds 48 bits"
            )));
        }
        Ok(Self::new_unchecked(channel, timestamp))
    }

    /// Caller guarantees `timestamp <= MAX_TIMESTAMP`; higher bits are lost.
    #[inline]
    pub const fn new_unchecked(channel: u16, timestamp: u64) -> Self {
        Self((timestamp << 16) | channel as u64)
    }

    #[inline]
    pub const fn channel(self) -> u16 {
        self.0 as u16
    }

    #[inline]
    pub const fn timestamp(self) -> u64 {
        self.0 >> 16
    }

    #[inline]
    pub fn is_trigger(self) -> bool {
        self.channel() == TRIGGER_CHANNEL
    }

    #[inline]
    pub fn encode(self) -> [u8; RECORD_BYTES] {
        self.0.to_le_bytes()
    }

    /// Decode the first eight bytes of `bytes`.
    #[inline]
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        match bytes.get(..RECORD_BYTES) {
            Some(b) => Ok(Self(u64::from_le_bytes(b.try_into().expect("8 bytes")))),
            None => Err(Error::Truncated {
                expected: RECORD_BYTES,
                got: bytes.len(),
            }),
        }
    }
}

impl std::fmt::Debug for TagRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TagRecord(ch {}, {} ps)", self.channel(), self.timestamp())
    }
}

/// Channel number of the 1-based `(row, col)` pixel on an array `cols` wide.
pub fn pixel_channel(row: usize, col: usize, cols: usize) -> u16 {
    ((row - 1) * cols + col) as u16
}

/// 1-based `(row, col)` of a pixel channel.
pub fn channel_pixel(channel: u16, cols: usize) -> (usize, usize) {
    let i = channel as usize - 1;
    (i / cols + 1, i % cols + 1)
}

/// A time-ordered sequence of tags, as produced by one acquisition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagStream {
    records: Vec<TagRecord>,
}

impl TagStream {
    /// Wrap records as-is; ordering is not checked.
    pub fn from_records(records: Vec<TagRecord>) -> Self {
        Self { records }
    }

    /// Sort records into `(timestamp, channel)` order.
    pub fn from_unsorted(mut records: Vec<TagRecord>) -> Self {
        records.sort_unstable();
        Self { records }
    }

    pub fn records(&self) -> &[TagRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TagRecord> {
        self.records
    }

    pub fn iter(&self) -> impl Iterator<Item = TagRecord> + '_ {
        self.records.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn channel_count(&self, channel: u16) -> u64 {
        self.records.iter().filter(|r| r.channel() == channel).count() as u64
    }

    /// Check global ordering and the per-channel dead time. Returns the number
    /// of violations of each kind.
    pub fn invariant_violations(&self, dead_time_ps: u64) -> (u64, u64) {
        let mut unordered = 0;
        let mut dead = 0;
        let mut last_on_channel = vec![None::<u64>; 1 << 16];
        let mut prev = 0;
        for r in &self.records {
            let t = r.timestamp();
            if t < prev {
                unordered += 1;
            }
            prev = t;
            if r.is_trigger() {
                continue;
            }
            let slot = &mut last_on_channel[r.channel() as usize];
            if let Some(p) = *slot {
                if t < p + dead_time_ps {
                    dead += 1;
                }
            }
            *slot = Some(t);
        }
        (unordered, dead)
    }
}

impl FromIterator<TagRecord> for TagStream {
    fn from_iter<I: IntoIterator<Item = TagRecord>>(iter: I) -> Self {
        Self::from_records(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        assert_eq!(TagRecord::new(0, 0).unwrap().encode(), [0u8; 8]);
        assert_eq!(
            TagRecord::new(1, 570).unwrap().encode(),
            [0x01, 0x00, 0x3A, 0x02, 0x00, 0x00, 0x00, 0x00]
        );
        assert_eq!(TagRecord::new(65535, MAX_TIMESTAMP).unwrap().encode(), [0xFF; 8]);
    }

    #[test]
    fn decode_rejects_short_input() {
        assert_eq!(
            TagRecord::decode(&[1, 2, 3]),
            Err(Error::Truncated { expected: 8, got: 3 })
        );
    }

    #[test]
    fn timestamp_range_checked() {
        assert!(TagRecord::new(3, MAX_TIMESTAMP + 1).is_err());
    }

    #[test]
    fn ordering_is_time_then_channel() {
        let a = TagRecord::new(9, 10).unwrap();
        let b = TagRecord::new(0, 11).unwrap();
        let c = TagRecord::new(2, 11).unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn pixel_channel_mapping() {
        assert_eq!(pixel_channel(1, 1, 8), 1);
        assert_eq!(pixel_channel(4, 4, 8), 28);
        assert_eq!(pixel_channel(8, 8, 8), 64);
        assert_eq!(channel_pixel(28, 8), (4, 4));
    }

    #[test]
    fn violations_detected() {
        let s = TagStream::from_records(vec![
            TagRecord::new(0, 0).unwrap(),
            TagRecord::new(5, 100).unwrap(),
            TagRecord::new(5, 150).unwrap(),
            TagRecord::new(6, 120).unwrap(),
        ]);
        assert_eq!(s.invariant_violations(100), (1, 1));
    }

    proptest! {
        #[test]
        fn roundtrip(ch in any::<u16>(), ts in 0..=MAX_TIMESTAMP) {
            let r = TagRecord::new(ch, ts).unwrap();
            let d = TagRecord::decode(&r.encode()).unwrap();
            prop_assert_eq!(d.channel(), ch);
            prop_assert_eq!(d.timestamp(), ts);
        }
    }
}
