//! Append-only consolidated dataset of registered domains with per-source,
//! per-origin provenance.
//!
//! Layout of a store directory:
//!
//! ```text
//! MANIFEST            live segment file names, one per line
//! LOCK                present while a writer updates MANIFEST
//! segments/NNNN.seg   sorted records `domain\tsource\torigin\tmin_start\tmax_end`
//! checkpoints/        per-log CT ingest checkpoints
//! ```
//!
//! Segments are immutable. Appends are buffered per writer and land in a new
//! segment on flush; compaction k-way merges all live segments into one.

mod query;
mod record;
mod segment;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use crate::cc::CrawlObservation;
use crate::ct::{CertObservation, CertSink};

pub use query::AsOfView;
pub use record::{ProvenanceKey, ProvenanceValue, Record, Source};
pub use segment::{MergedRecords, Segment, SegmentReader};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: no space left on device")]
    StorageFull { path: PathBuf },
    #[error("{path}:{line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("store is locked by another writer ({0}); remove it if no writer is running")]
    Locked(PathBuf),
    #[error("no records under TLD {0:?}")]
    UnknownTld(String),
    #[error("invalid origin {0:?}")]
    InvalidOrigin(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: io::Error) -> StoreError {
        if source.kind() == io::ErrorKind::StorageFull {
            StoreError::StorageFull {
                path: path.to_owned(),
            }
        } else {
            StoreError::Io {
                path: path.to_owned(),
                source,
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct StoreOptions {
    /// Gzip-compress new segment files.
    pub gzip: bool,
    /// Buffered records per writer before an automatic flush.
    pub flush_threshold: usize,
    /// How long to wait for another process holding `LOCK`.
    pub lock_timeout: Duration,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            gzip: false,
            flush_threshold: 500_000,
            lock_timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompactStats {
    pub input_segments: usize,
    pub input_records: u64,
    pub output_records: u64,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    options: StoreOptions,
    manifest_lock: Mutex<()>,
}

struct LockGuard<'a> {
    path: PathBuf,
    _inner: MutexGuard<'a, ()>,
}

impl Drop for LockGuard<'_> {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        Self::open_with(root, StoreOptions::default())
    }

    pub fn open_with(root: impl Into<PathBuf>, options: StoreOptions) -> Result<Store, StoreError> {
        let root = root.into();
        let segments = root.join("segments");
        fs::create_dir_all(&segments).map_err(|e| StoreError::io(&segments, e))?;
        Ok(Store {
            root,
            options,
            manifest_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn options(&self) -> &StoreOptions {
        &self.options
    }

    pub fn checkpoint_path(&self, log_name: &str) -> PathBuf {
        let safe: String = log_name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.root.join("checkpoints").join(format!("{safe}.ckpt"))
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join("MANIFEST")
    }

    fn lock_path(&self) -> PathBuf {
        self.root.join("LOCK")
    }

    /// True while some writer holds the store lock.
    pub fn is_locked(&self) -> bool {
        self.lock_path().exists()
    }

    fn lock(&self) -> Result<LockGuard<'_>, StoreError> {
        let inner = self.manifest_lock.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.lock_path();
        let deadline = Instant::now() + self.options.lock_timeout;
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(LockGuard {
                        path,
                        _inner: inner,
                    });
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    if Instant::now() >= deadline {
                        return Err(StoreError::Locked(path));
                    }
                    thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(StoreError::io(&path, e)),
            }
        }
    }

    fn read_manifest(&self) -> Result<Vec<String>, StoreError> {
        let path = self.manifest_path();
        match fs::read_to_string(&path) {
            Ok(text) => Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }

    fn write_manifest(&self, names: &[String]) -> Result<(), StoreError> {
        let path = self.manifest_path();
        let tmp = self.root.join("MANIFEST.tmp");
        let mut text = String::new();
        for name in names {
            text.push_str(name);
            text.push('\n');
        }
        let write = || -> io::Result<()> {
            let mut f = File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, &path)?;
            sync_dir(&self.root)
        };
        write().map_err(|e| StoreError::io(&path, e))
    }

    fn next_segment_name(&self, live: &[String]) -> Result<String, StoreError> {
        let dir = self.root.join("segments");
        let mut max = 0u64;
        let entries = fs::read_dir(&dir).map_err(|e| StoreError::io(&dir, e))?;
        let on_disk = entries
            .filter_map(Result::ok)
            .filter_map(|e| e.file_name().into_string().ok());
        for name in live.iter().cloned().chain(on_disk) {
            let stem = name.split('.').next().unwrap_or_default();
            if let Ok(n) = stem.parse::<u64>() {
                max = max.max(n);
            }
        }
        Ok(format!("{:04}.seg", max + 1))
    }

    /// Live segments in manifest order.
    pub fn segments(&self) -> Result<Vec<PathBuf>, StoreError> {
        Ok(self
            .read_manifest()?
            .into_iter()
            .map(|name| self.root.join("segments").join(name))
            .collect())
    }

    /// Writes sorted, duplicate-free records as a new live segment.
    fn add_segment(&self, records: Vec<Record>) -> Result<Segment, StoreError> {
        let _guard = self.lock()?;
        let mut live = self.read_manifest()?;
        let name = self.next_segment_name(&live)?;
        let path = self.root.join("segments").join(&name);
        let segment =
            segment::write_segment(&path, records.into_iter().map(Ok), self.options.gzip)?;
        sync_dir(&self.root.join("segments")).map_err(|e| StoreError::io(&path, e))?;
        live.push(name);
        self.write_manifest(&live)?;
        Ok(segment)
    }

    pub fn writer(&self) -> StoreWriter<'_> {
        StoreWriter {
            store: self,
            buffer: BTreeMap::new(),
        }
    }

    /// Merged view of every live segment, sorted by key with equal keys folded.
    pub fn scan(&self) -> Result<MergedRecords<SegmentReader>, StoreError> {
        let _guard = self.lock()?;
        let readers = self
            .segments()?
            .iter()
            .map(|p| SegmentReader::open(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MergedRecords::new(readers))
    }

    /// Merges all live segments into one. Inputs are removed only after the
    /// output segment and the manifest naming it are durable.
    pub fn compact(&self) -> Result<CompactStats, StoreError> {
        let _guard = self.lock()?;
        let live = self.read_manifest()?;
        if live.len() <= 1 {
            let mut stats = CompactStats {
                input_segments: live.len(),
                ..CompactStats::default()
            };
            if let Some(name) = live.first() {
                let path = self.root.join("segments").join(name);
                let count = SegmentReader::open(&path)?.count() as u64;
                stats.input_records = count;
                stats.output_records = count;
            }
            return Ok(stats);
        }

        let paths: Vec<PathBuf> = live
            .iter()
            .map(|name| self.root.join("segments").join(name))
            .collect();
        let readers = paths
            .iter()
            .map(|p| SegmentReader::open(p))
            .collect::<Result<Vec<_>, _>>()?;
        let name = self.next_segment_name(&live)?;
        let out_path = self.root.join("segments").join(&name);
        let mut merged = MergedRecords::new(readers);
        let segment = segment::write_segment(&out_path, &mut merged, self.options.gzip)?;
        let input_records = merged.consumed();
        sync_dir(&self.root.join("segments")).map_err(|e| StoreError::io(&out_path, e))?;
        self.write_manifest(std::slice::from_ref(&name))?;
        for path in &paths {
            let _ = fs::remove_file(path);
        }
        Ok(CompactStats {
            input_segments: paths.len(),
            input_records,
            output_records: segment.record_count,
        })
    }
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    File::open(dir)?.sync_all()
}

/// Per-worker append buffer. Values for one key merge in memory; `flush`
/// writes the buffer as a new segment.
pub struct StoreWriter<'a> {
    store: &'a Store,
    buffer: BTreeMap<ProvenanceKey, ProvenanceValue>,
}

impl StoreWriter<'_> {
    pub fn append(&mut self, record: Record) -> Result<(), StoreError> {
        let origin = &record.key.origin;
        if origin.is_empty() || origin.contains(['\t', '\n', '\r']) {
            return Err(StoreError::InvalidOrigin(origin.clone()));
        }
        self.buffer
            .entry(record.key)
            .and_modify(|v| v.merge(&record.value))
            .or_insert(record.value);
        if self.buffer.len() >= self.store.options.flush_threshold {
            self.flush()?;
        }
        Ok(())
    }

    pub fn append_cert(&mut self, observation: &CertObservation) -> Result<(), StoreError> {
        self.append(Record::from(observation))
    }

    pub fn append_crawl(&mut self, observation: &CrawlObservation) -> Result<(), StoreError> {
        self.append(Record::from(observation))
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Makes every buffered record durable. Returns the new segment, if any.
    pub fn flush(&mut self) -> Result<Option<Segment>, StoreError> {
        if self.buffer.is_empty() {
            return Ok(None);
        }
        let records: Vec<Record> = std::mem::take(&mut self.buffer)
            .into_iter()
            .map(|(key, value)| Record { key, value })
            .collect();
        self.store.add_segment(records).map(Some)
    }

    /// Drops buffered records without writing them.
    pub fn discard(&mut self) {
        self.buffer.clear();
    }
}

impl CertSink for StoreWriter<'_> {
    fn append(&mut self, observations: &[CertObservation]) -> Result<(), crate::ct::SinkError> {
        for o in observations {
            self.append_cert(o)?;
        }
        Ok(())
    }

    fn commit(&mut self) -> Result<(), crate::ct::SinkError> {
        self.flush()?;
        Ok(())
    }
}
