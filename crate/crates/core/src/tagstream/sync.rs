//! Trigger-synchronised processing: every tag is referred to the most recent
//! trigger at or before it (start-stop convention). All routines are single
//! pass and reject streams whose timestamps go backwards.

use super::record::{TagRecord, TRIGGER_CHANNEL};
use crate::error::{Error, Result};

/// Tracks the most recent trigger and enforces time ordering.
#[derive(Debug, Clone, Default)]
struct TriggerClock {
    last_trigger: Option<u64>,
    prev: u64,
    index: u64,
}

impl TriggerClock {
    /// Feed one record; returns the trigger-relative delay for non-trigger
    /// records that follow a trigger.
    #[inline]
    fn step(&mut self, r: TagRecord) -> Result<Option<u64>> {
        let t = r.timestamp();
        if t < self.prev {
            return Err(Error::Unordered {
                index: self.index,
                previous: self.prev,
                timestamp: t,
            });
        }
        self.prev = t;
        self.index += 1;
        if r.channel() == TRIGGER_CHANNEL {
            self.last_trigger = Some(t);
            return Ok(None);
        }
        Ok(self.last_trigger.map(|tr| t - tr))
    }
}

/// Arrival-time histogram relative to the trigger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bin_width_ps: u64,
    /// Delay of the lower edge of bin 0.
    pub origin_ps: u64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_width_ps: u64, lo_ps: u64, hi_ps: u64) -> Result<Self> {
        if bin_width_ps == 0 {
            return Err(Error::Input("bin width must be > 0".into()));
        }
        if hi_ps <= lo_ps {
            return Err(Error::Input(format!("empty window [{lo_ps}, {hi_ps})")));
        }
        let n = (hi_ps - lo_ps).div_ceil(bin_width_ps) as usize;
        Ok(Self {
            bin_width_ps,
            origin_ps: lo_ps,
            counts: vec![0; n],
        })
    }

    pub fn upper_edge(&self) -> u64 {
        self.origin_ps + self.bin_width_ps * self.counts.len() as u64
    }

    pub fn bin_start(&self, i: usize) -> u64 {
        self.origin_ps + self.bin_width_ps * i as u64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Add the counts of another histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if other.bin_width_ps != self.bin_width_ps
            || other.origin_ps != self.origin_ps
            || other.counts.len() != self.counts.len()
        {
            return Err(Error::Input("histogram binning differs".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Sum of counts in bins whose lower edge lies in `[lo, hi)`.
    pub fn sum_between(&self, lo_ps: u64, hi_ps: u64) -> u64 {
        (0..self.counts.len())
            .filter(|&i| (lo_ps..hi_ps).contains(&self.bin_start(i)))
            .map(|i| self.counts[i])
            .sum()
    }
}

/// Where each tag of the histogrammed channel ended up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HistogramTally {
    pub binned: u64,
    pub out_of_window: u64,
    pub before_first_trigger: u64,
}

impl HistogramTally {
    pub fn total(&self) -> u64 {
        self.binned + self.out_of_window + self.before_first_trigger
    }
}

/// Streaming histogrammer for one channel, or all photon channels, over
/// delays in `[lo, hi)`.
#[derive(Debug, Clone)]
pub struct SyncHistogrammer {
    channel: Option<u16>,
    hist: Histogram,
    tally: HistogramTally,
    clock: TriggerClock,
}

impl SyncHistogrammer {
    pub fn new(channel: u16, bin_width_ps: u64, lo_ps: u64, hi_ps: u64) -> Result<Self> {
        if channel == TRIGGER_CHANNEL {
            return Err(Error::Input("cannot histogram the trigger channel".into()));
        }
        Ok(Self {
            channel: Some(channel),
            hist: Histogram::new(bin_width_ps, lo_ps, hi_ps)?,
            tally: HistogramTally::default(),
            clock: TriggerClock::default(),
        })
    }

    /// Histogram every non-trigger channel together.
    pub fn all_channels(bin_width_ps: u64, lo_ps: u64, hi_ps: u64) -> Result<Self> {
        Ok(Self {
            channel: None,
            hist: Histogram::new(bin_width_ps, lo_ps, hi_ps)?,
            tally: HistogramTally::default(),
            clock: TriggerClock::default(),
        })
    }

    #[inline]
    pub fn push(&mut self, r: TagRecord) -> Result<()> {
        let delay = self.clock.step(r)?;
        let wanted = match self.channel {
            Some(c) => r.channel() == c,
            None => !r.is_trigger(),
        };
        if !wanted {
            return Ok(());
        }
        match delay {
            None => self.tally.before_first_trigger += 1,
            Some(d) if d >= self.hist.origin_ps && d < self.hist.upper_edge() => {
                let bin = ((d - self.hist.origin_ps) / self.hist.bin_width_ps) as usize;
                self.hist.counts[bin] += 1;
                self.tally.binned += 1;
            }
            Some(_) => self.tally.out_of_window += 1,
        }
        Ok(())
    }

    pub fn finish(self) -> (Histogram, HistogramTally) {
        (self.hist, self.tally)
    }
}

/// Histogram of `channel` delays within `[lo, hi)` in one pass.
pub fn sync_histogram<I>(
    records: I,
    channel: u16,
    bin_width_ps: u64,
    window: (u64, u64),
) -> Result<(Histogram, HistogramTally)>
where
    I: IntoIterator<Item = TagRecord>,
{
    let mut h = SyncHistogrammer::new(channel, bin_width_ps, window.0, window.1)?;
    for r in records {
        h.push(r)?;
    }
    Ok(h.finish())
}

/// Inclusive delay window `[center − half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateWindow {
    pub lo_ps: u64,
    pub hi_ps: u64,
}

impl GateWindow {
    pub fn centered(center_ps: u64, half_width_ps: u64) -> Result<Self> {
        if half_width_ps == 0 {
            return Err(Error::Input("gate half-width must be > 0".into()));
        }
        Ok(Self {
            lo_ps: center_ps.saturating_sub(half_width_ps),
            hi_ps: center_ps + half_width_ps,
        })
    }

    pub fn width_ps(&self) -> u64 {
        self.hi_ps - self.lo_ps + 1
    }

    #[inline]
    pub fn contains(&self, delay: u64) -> bool {
        delay >= self.lo_ps && delay <= self.hi_ps
    }
}

/// Number of `channel` tags whose trigger-relative delay falls in the window.
pub fn post_select<I>(records: I, channel: u16, center_ps: u64, half_width_ps: u64) -> Result<u64>
where
    I: IntoIterator<Item = TagRecord>,
{
    let gate = GateWindow::centered(center_ps, half_width_ps)?;
    let mut clock = TriggerClock::default();
    let mut n = 0;
    for r in records {
        if let Some(d) = clock.step(r)? {
            if r.channel() == channel && gate.contains(d) {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Post-selected counts for every channel, split into acquisition intervals
/// by the timestamp of the associated trigger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatedCounts {
    /// `counts[interval][channel]`.
    pub counts: Vec<Vec<u64>>,
    /// Triggers seen per interval.
    pub triggers: Vec<u64>,
}

impl GatedCounts {
    pub fn channel_series(&self, channel: u16) -> Vec<u64> {
        self.counts.iter().map(|c| c[channel as usize]).collect()
    }

    pub fn channel_total(&self, channel: u16) -> u64 {
        self.counts.iter().map(|c| c[channel as usize]).sum()
    }
}

/// Gate every channel up to `max_channel` with `gate`, binning by interval.
/// `edges` are ascending interval boundaries in absolute picoseconds; triggers
/// outside `[edges[0], edges[last])` and their tags are ignored.
pub fn gated_counts<I>(
    records: I,
    gate: GateWindow,
    edges: &[u64],
    max_channel: u16,
) -> Result<GatedCounts>
where
    I: IntoIterator<Item = TagRecord>,
{
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("interval edges must be ascending, at least two".into()));
    }
    let n_int = edges.len() - 1;
    let width = max_channel as usize + 1;
    let mut counts = vec![vec![0u64; width]; n_int];
    let mut triggers = vec![0u64; n_int];
    let mut clock = TriggerClock::default();
    // Interval of the current trigger, or None when outside all intervals.
    let mut current: Option<usize> = None;
    let mut cursor = 0usize;

    for r in records {
        let delay = clock.step(r)?;
        if r.is_trigger() {
            let t = r.timestamp();
            while cursor < n_int && t >= edges[cursor + 1] {
                cursor += 1;
            }
            current = (t >= edges[0] && cursor < n_int).then_some(cursor);
            if let Some(i) = current {
                triggers[i] += 1;
            }
            continue;
        }
        if let (Some(d), Some(i)) = (delay, current) {
            let ch = r.channel() as usize;
            if ch < width && gate.contains(d) {
                counts[i][ch] += 1;
            }
        }
    }
    Ok(GatedCounts { counts, triggers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(ch: u16, t: u64) -> TagRecord {
        TagRecord::new(ch, t).unwrap()
    }

    fn three_peaks(pulses: u64) -> Vec<TagRecord> {
        let mut v = Vec::new();
        for k in 0..pulses {
            let t0 = k * 200_000;
            v.push(rec(0, t0));
            v.push(rec(5, t0 + 2000 + [0, 570, 1140][(k % 3) as usize]));
        }
        v
    }

    #[test]
    fn three_populated_bins() {
        let (h, tally) = sync_histogram(three_peaks(30), 5, 10, (1500, 3500)).unwrap();
        let populated: Vec<_> = (0..h.counts.len())
            .filter(|&i| h.counts[i] > 0)
            .map(|i| (h.bin_start(i), h.counts[i]))
            .collect();
        assert_eq!(populated, vec![(2000, 10), (2570, 10), (3140, 10)]);
        assert_eq!(tally.binned, 30);
    }

    #[test]
    fn empty_stream_gives_zero_histogram() {
        let (h, t) = sync_histogram(Vec::new(), 3, 16, (0, 1024)).unwrap();
        assert_eq!(h.counts.len(), 64);
        assert_eq!(h.total(), 0);
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn pre_trigger_and_window_tally() {
        let v = vec![rec(2, 5), rec(0, 10), rec(2, 15), rec(2, 5000), rec(0, 6000), rec(2, 6000)];
        let (h, t) = sync_histogram(v, 2, 5, (0, 100)).unwrap();
        assert_eq!(t, HistogramTally { binned: 2, out_of_window: 1, before_first_trigger: 1 });
        // tie with the trigger associates with that trigger (delay 0)
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[1], 1);
    }

    #[test]
    fn unordered_stream_rejected() {
        let v = vec![rec(0, 10), rec(2, 50), rec(2, 40)];
        assert!(matches!(
            sync_histogram(v.clone(), 2, 5, (0, 100)),
            Err(Error::Unordered { index: 2, .. })
        ));
        assert!(post_select(v, 2, 30, 30).is_err());
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(sync_histogram(Vec::new(), 1, 0, (0, 10)).is_err());
        assert!(sync_histogram(Vec::new(), 1, 1, (10, 10)).is_err());
        assert!(sync_histogram(Vec::new(), 0, 1, (0, 10)).is_err());
        assert!(post_select(Vec::new(), 1, 10, 0).is_err());
    }

    #[test]
    fn post_select_middle_peak() {
        let v = three_peaks(30);
        assert_eq!(post_select(v.iter().copied(), 5, 2570, 300).unwrap(), 10);
        assert_eq!(post_select(v.iter().copied(), 5, 2570, 2000).unwrap(), 30);
        assert_eq!(post_select(v.iter().copied(), 5, 50_000, 300).unwrap(), 0);
    }

    #[test]
    fn gated_counts_by_interval() {
        let v = three_peaks(30);
        let edges = [0, 10 * 200_000, 30 * 200_000];
        let g = gated_counts(v, GateWindow::centered(2570, 300).unwrap(), &edges, 8).unwrap();
        assert_eq!(g.triggers, vec![10, 20]);
        // pulses 1,4,7 in the first block, then 10..28 step 3
        assert_eq!(g.channel_series(5), vec![3, 7]);
        assert_eq!(g.channel_total(5), 10);
        assert!(gated_counts(Vec::new(), GateWindow::centered(1, 1).unwrap(), &[5, 5], 2).is_err());
    }

    /// Batch oracle: associate every tag with its trigger by binary search
    /// over the materialised trigger list.
    fn batch_histogram(v: &[TagRecord], ch: u16, bw: u64, lo: u64, hi: u64) -> Vec<u64> {
        let triggers: Vec<u64> = v.iter().filter(|r| r.is_trigger()).map(|r| r.timestamp()).collect();
        let n = (hi - lo).div_ceil(bw) as usize;
        let mut out = vec![0; n];
        for r in v.iter().filter(|r| r.channel() == ch) {
            let k = triggers.partition_point(|&t| t <= r.timestamp());
            if k == 0 {
                continue;
            }
            let d = r.timestamp() - triggers[k - 1];
            if d >= lo && d < lo + bw * n as u64 {
                out[((d - lo) / bw) as usize] += 1;
            }
        }
        out
    }

    fn arb_stream() -> impl Strategy<Value = Vec<TagRecord>> {
        prop::collection::vec((0u16..4, 0u64..5000), 0..300).prop_map(|mut v| {
            v.sort_by_key(|&(c, t)| (t, c));
            v.into_iter().map(|(c, t)| rec(c, t)).collect()
        })
    }

    proptest! {
        #[test]
        fn streaming_equals_batch(v in arb_stream(), bw in 1u64..50, lo in 0u64..200, span in 1u64..800) {
            let (h, tally) = sync_histogram(v.iter().copied(), 2, bw, (lo, lo + span)).unwrap();
            prop_assert_eq!(&h.counts, &batch_histogram(&v, 2, bw, lo, lo + span));
            // conservation
            let n = v.iter().filter(|r| r.channel() == 2).count() as u64;
            prop_assert_eq!(tally.total(), n);
            prop_assert_eq!(tally.binned, h.total());
        }

        #[test]
        fn post_select_matches_aligned_bins(v in arb_stream(), c in 300u64..1500, w in 1u64..300) {
            let n = post_select(v.iter().copied(), 3, c, w).unwrap();
            // 1 ps bins align with any integer window
            let (h, _) = sync_histogram(v.iter().copied(), 3, 1, (0, 2000)).unwrap();
            prop_assert_eq!(n, h.sum_between(c - w, c + w + 1));
        }

        #[test]
        fn all_channels_is_sum_of_channels(v in arb_stream(), bw in 1u64..50) {
            let mut all = SyncHistogrammer::all_channels(bw, 0, 1000).unwrap();
            for r in v.iter().copied() {
                all.push(r).unwrap();
            }
            let (h, tally) = all.finish();
            let mut expect = vec![0u64; h.counts.len()];
            for ch in 1..4 {
                for (e, c) in expect.iter_mut().zip(batch_histogram(&v, ch, bw, 0, 1000)) {
                    *e += c;
                }
            }
            prop_assert_eq!(&h.counts, &expect);
            prop_assert_eq!(tally.total(), v.iter().filter(|r| !r.is_trigger()).count() as u64);
        }
    }
}
