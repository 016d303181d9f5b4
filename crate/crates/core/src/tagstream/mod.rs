//! Binary time-tag records, tag files and trigger-synchronised histogramming.

mod file;
mod record;
mod stats;
mod sync;

pub use file::{
    decode_records, encode_stream, open_stream, read_stream, write_stream, TagReader, TagWriter,
    HEADER_BYTES, MAGIC,
};
pub use record::{
    channel_pixel, pixel_channel, TagRecord, TagStream, MAX_TIMESTAMP, RECORD_BYTES,
    TRIGGER_CHANNEL,
};
pub use stats::{stream_stats, StreamStats};
pub use sync::{
    gated_counts, post_select, sync_histogram, GateWindow, GatedCounts, Histogram,
    HistogramTally, SyncHistogrammer,
};
