//! On-disk tag files: an 8-byte header (`TBL1` followed by four reserved flag
//! bytes) and then packed little-endian 8-byte records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::record::{TagRecord, TagStream, RECORD_BYTES};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TBL1";
pub const HEADER_BYTES: usize = 8;

pub struct TagWriter<W: Write> {
    inner: W,
    written: u64,
}

impl<W: Write> TagWriter<W> {
    pub fn new(mut inner: W) -> Result<Self> {
        let mut header = [0u8; HEADER_BYTES];
        header[..4].copy_from_slice(&MAGIC);
        inner.write_all(&header)?;
        Ok(Self { inner, written: 0 })
    }

    pub fn write(&mut self, record: TagRecord) -> Result<()> {
        self.inner.write_all(&record.encode())?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Streaming reader; yields records until end of input.
pub struct TagReader<R: Read> {
    inner: R,
    flags: [u8; 4],
    done: bool,
}

impl<R: Read> TagReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = [0u8; HEADER_BYTES];
        let got = read_full(&mut inner, &mut header)?;
        if got < HEADER_BYTES {
            return Err(Error::Header(format!("file shorter than header ({got} bytes)")));
        }
        if header[..4] != MAGIC {
            return Err(Error::Header(format!("bad magic {:02x?}", &header[..4])));
        }
        Ok(Self {
            inner,
            flags: header[4..].try_into().expect("4 bytes"),
            done: false,
        })
    }

    pub fn flags(&self) -> [u8; 4] {
        self.flags
    }
}

impl<R: Read> Iterator for TagReader<R> {
    type Item = Result<TagRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut buf = [0u8; RECORD_BYTES];
        match read_full(&mut self.inner, &mut buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(n) if n < RECORD_BYTES => {
                self.done = true;
                Some(Err(Error::Truncated {
                    expected: RECORD_BYTES,
                    got: n,
                }))
            }
            Ok(_) => Some(TagRecord::decode(&buf)),
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

/// Decode a record body (no header) held in memory.
pub fn decode_records(bytes: &[u8]) -> impl Iterator<Item = TagRecord> + '_ {
    bytes
        .chunks_exact(RECORD_BYTES)
        .map(|c| TagRecord::decode(c).expect("exact chunk"))
}

/// Encode a whole stream, header included.
pub fn encode_stream(stream: &TagStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + stream.len() * RECORD_BYTES);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[0; 4]);
    for r in stream.iter() {
        out.extend_from_slice(&r.encode());
    }
    out
}

pub fn write_stream(path: impl AsRef<Path>, stream: &TagStream) -> Result<()> {
    let mut w = TagWriter::new(BufWriter::new(File::create(path)?))?;
    for r in stream.iter() {
        w.write(r)?;
    }
    w.finish()?;
    Ok(())
}

pub fn open_stream(path: impl AsRef<Path>) -> Result<TagReader<BufReader<File>>> {
    TagReader::new(BufReader::with_capacity(1 << 20, File::open(path)?))
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<TagStream> {
    open_stream(path)?.collect::<Result<Vec<_>>>().map(TagStream::from_records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TagStream {
        TagStream::from_records(vec![
            TagRecord::new(0, 0).unwrap(),
            TagRecord::new(28, 2570).unwrap(),
            TagRecord::new(0, 200_000).unwrap(),
        ])
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.tbl");
        write_stream(&p, &sample()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..8], b"TBL1\0\0\0\0");
        assert_eq!(bytes.len(), 8 + 3 * 8);
        assert_eq!(bytes, encode_stream(&sample()));
        assert_eq!(read_stream(&p).unwrap(), sample());
    }

    #[test]
    fn empty_file_has_only_header() {
        let bytes = encode_stream(&TagStream::default());
        assert_eq!(bytes.len(), HEADER_BYTES);
        let r = TagReader::new(&bytes[..]).unwrap();
        assert_eq!(r.count(), 0);
    }

    #[test]
    fn bad_magic_and_truncation() {
        assert!(matches!(TagReader::new(&b"XXXX\0\0\0\0"[..]), Err(Error::Header(_))));
        assert!(matches!(TagReader::new(&b"TBL"[..]), Err(Error::Header(_))));
        let mut bytes = encode_stream(&sample());
        bytes.truncate(bytes.len() - 3);
        let out: Vec<_> = TagReader::new(&bytes[..]).unwrap().collect();
        assert_eq!(out.len(), 3);
        assert!(matches!(out[2], Err(Error::Truncated { got: 5, .. })));
    }
}
