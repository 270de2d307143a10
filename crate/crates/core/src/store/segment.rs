use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;

use super::record::{ProvenanceKey, ProvenanceValue, Record};
use super::StoreError;

/// A live segment file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub path: PathBuf,
    pub record_count: u64,
    pub sorted: bool,
}

/// Writes strictly increasing records to `path` through a temporary file,
/// syncing before the final rename.
pub(crate) fn write_segment<I>(path: &Path, records: I, gzip: bool) -> Result<Segment, StoreError>
where
    I: IntoIterator<Item = Result<Record, StoreError>>,
{
    let tmp = path.with_extension("seg.tmp");
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
        let mut out = if gzip {
            SegmentOut::Gzip(GzEncoder::new(
                BufWriter::new(file),
                flate2::Compression::default(),
            ))
        } else {
            SegmentOut::Plain(BufWriter::new(file))
        };
        let mut count = 0u64;
        let mut last: Option<ProvenanceKey> = None;
        let mut line = String::new();
        for record in records {
            let record = record?;
            if last.as_ref().is_some_and(|k| *k >= record.key) {
                return Err(StoreError::Corrupt {
                    path: path.to_owned(),
                    line: count + 1,
                    reason: "records out of order".into(),
                });
            }
            line.clear();
            line.push_str(&record.to_line());
            line.push('\n');
            out.write_all(line.as_bytes())
                .map_err(|e| StoreError::io(&tmp, e))?;
            count += 1;
            last = Some(record.key);
        }
        let file = out.finish().map_err(|e| StoreError::io(&tmp, e))?;
        file.sync_all().map_err(|e| StoreError::io(&tmp, e))?;
        Ok(count)
    })();
    let count = match result {
        Ok(count) => count,
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
    };
    fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))?;
    Ok(Segment {
        path: path.to_owned(),
        record_count: count,
        sorted: true,
    })
}

enum SegmentOut {
    Plain(BufWriter<File>),
    Gzip(GzEncoder<BufWriter<File>>),
}

impl SegmentOut {
    fn write_all(&mut self, bytes: &[u8]) -> io::Result<()> {
        match self {
            SegmentOut::Plain(w) => w.write_all(bytes),
            SegmentOut::Gzip(w) => w.write_all(bytes),
        }
    }

    fn finish(self) -> io::Result<File> {
        let buffered = match self {
            SegmentOut::Plain(w) => w,
            SegmentOut::Gzip(w) => w.finish()?,
        };
        buffered.into_inner().map_err(|e| e.into_error())
    }
}

/// Streams the records of one segment file, plain or gzip.
pub struct SegmentReader {
    path: PathBuf,
    reader: Box<dyn BufRead + Send>,
    line_no: u64,
    buf: String,
}

impl SegmentReader {
    pub fn open(path: &Path) -> Result<SegmentReader, StoreError> {
        let file = File::open(path).map_err(|e| StoreError::io(path, e))?;
        let mut reader = BufReader::with_capacity(1 << 16, file);
        let is_gzip = reader
            .fill_buf()
            .map_err(|e| StoreError::io(path, e))?
            .starts_with(&[0x1f, 0x8b]);
        let reader: Box<dyn BufRead + Send> = if is_gzip {
            Box::new(BufReader::with_capacity(
                1 << 16,
                MultiGzDecoder::new(reader),
            ))
        } else {
            Box::new(reader)
        };
        Ok(SegmentReader {
            path: path.to_owned(),
            reader,
            line_no: 0,
            buf: String::new(),
        })
    }
}

impl Iterator for SegmentReader {
    type Item = Result<Record, StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.reader.read_line(&mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line_no += 1;
                let line = self.buf.trim_end_matches('\n');
                Some(
                    Record::parse_line(line).map_err(|reason| StoreError::Corrupt {
                        path: self.path.clone(),
                        line: self.line_no,
                        reason,
                    }),
                )
            }
            Err(e) => Some(Err(StoreError::io(&self.path, e))),
        }
    }
}

/// K-way merge over sorted record streams. Equal keys are folded into one
/// record (min of starts, max of ends); the output is sorted and duplicate
/// free.
pub struct MergedRecords<I> {
    inputs: Vec<I>,
    heads: Vec<Option<ProvenanceValue>>,
    heap: BinaryHeap<Reverse<(ProvenanceKey, usize)>>,
    failed: bool,
    pending_error: Option<StoreError>,
    consumed: u64,
}

impl<I> MergedRecords<I>
where
    I: Iterator<Item = Result<Record, StoreError>>,
{
    pub fn new(inputs: Vec<I>) -> Self {
        let heads = vec![None; inputs.len()];
        let mut merged = MergedRecords {
            inputs,
            heads,
            heap: BinaryHeap::new(),
            failed: false,
            pending_error: None,
            consumed: 0,
        };
        for idx in 0..merged.inputs.len() {
            merged.advance(idx);
        }
        merged
    }

    /// Input records read so far, before folding.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    fn advance(&mut self, idx: usize) {
        match self.inputs[idx].next() {
            Some(Ok(record)) => {
                self.consumed += 1;
                self.heads[idx] = Some(record.value);
                self.heap.push(Reverse((record.key, idx)));
            }
            Some(Err(e)) => {
                if self.pending_error.is_none() {
                    self.pending_error = Some(e);
                }
            }
            None => self.heads[idx] = None,
        }
    }
}

impl<I> Iterator for MergedRecords<I>
where
    I: Iterator<Item = Result<Record, StoreError>>,
{
    type Item = Result<Record, StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if let Some(e) = self.pending_error.take() {
            self.failed = true;
            return Some(Err(e));
        }
        let Reverse((key, idx)) = self.heap.pop()?;
        let mut value = self.heads[idx].take().expect("head present for heap entry");
        self.advance(idx);
        while let Some(Reverse((next_key, _))) = self.heap.peek() {
            if *next_key != key {
                break;
            }
            let Reverse((_, other)) = self.heap.pop().expect("peeked");
            let other_value = self.heads[other]
                .take()
                .expect("head present for heap entry");
            value.merge(&other_value);
            self.advance(other);
        }
        if let Some(e) = self.pending_error.take() {
            self.failed = true;
            return Some(Err(e));
        }
        Some(Ok(Record { key, value }))
    }
}
