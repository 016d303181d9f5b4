//! Fixtures shared by the benchmarks.

use timebin::tagstream::{encode_stream, TagRecord, TagStream};

/// Encoded tag file with `pulses` triggers 200 ns apart and a three-peak
/// photon pattern on eight channels.
pub fn three_peak_file(pulses: u64) -> Vec<u8> {
    let mut v = Vec::with_capacity(pulses as usize * 3);
    for k in 0..pulses {
        let t0 = k * 200_000;
        v.push(TagRecord::new(0, t0).unwrap());
        let ch = 1 + (k % 8) as u16;
        v.push(TagRecord::new(ch, t0 + 2000 + 570 * (k % 3)).unwrap());
        if k % 2 == 0 {
            v.push(TagRecord::new(ch + 8, t0 + 2570).unwrap());
        }
    }
    encode_stream(&TagStream::from_unsorted(v))
}
