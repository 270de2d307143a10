//! Common Crawl URL-index (CDX-J) ingestion.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, Weekday};
use flate2::read::MultiGzDecoder;

use crate::domain::{
    normalize_name, registered_domain, DomainName, RegisteredDomain, SuffixRuleSet,
};

#[derive(Debug, thiserror::Error)]
pub enum CcError {
    #[error("invalid crawl snapshot id {0:?} (expected CC-MAIN-YYYY-WW)")]
    InvalidSnapshotId(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A crawl snapshot such as `CC-MAIN-2020-24`, dated to the Monday of its ISO
/// week.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CrawlSnapshotId {
    raw_id: String,
    derived_date: NaiveDate,
}

impl CrawlSnapshotId {
    pub fn parse(raw: &str) -> Result<Self, CcError> {
        let invalid = || CcError::InvalidSnapshotId(raw.to_owned());
        let rest = raw.strip_prefix("CC-MAIN-").ok_or_else(invalid)?;
        let (year, week) = rest.split_once('-').ok_or_else(invalid)?;
        if year.len() != 4 || week.len() != 2 {
            return Err(invalid());
        }
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(year) || !all_digits(week) {
            return Err(invalid());
        }
        let year: i32 = year.parse().map_err(|_| invalid())?;
        let week: u32 = week.parse().map_err(|_| invalid())?;
        if !(2008..=2100).contains(&year) {
            return Err(invalid());
        }
        // from_isoywd_opt rejects week 53 in 52-week years.
        let derived_date =
            NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).ok_or_else(invalid)?;
        Ok(CrawlSnapshotId {
            raw_id: raw.to_owned(),
            derived_date,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.raw_id
    }

    pub fn derived_date(&self) -> NaiveDate {
        self.derived_date
    }
}

impl FromStr for CrawlSnapshotId {
    type Err = CcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for CrawlSnapshotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw_id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrawlObservation {
    pub domain: RegisteredDomain,
    pub snapshot: CrawlSnapshotId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexLine {
    Url(String),
    Blank,
    Malformed,
}

/// Parses one `<SURT key> <14-digit timestamp> <JSON>` line and returns the
/// JSON `url` field.
pub fn parse_index_line(line: &str) -> IndexLine {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() {
        return IndexLine::Blank;
    }
    let mut parts = line.splitn(3, ' ');
    let (Some(key), Some(timestamp), Some(json)) = (parts.next(), parts.next(), parts.next())
    else {
        return IndexLine::Malformed;
    };
    if key.is_empty() || timestamp.len() != 14 || !timestamp.bytes().all(|b| b.is_ascii_digit()) {
        return IndexLine::Malformed;
    }
    match serde_json::from_str::<serde_json::Value>(json) {
        Ok(value) => match value.get("url").and_then(|u| u.as_str()) {
            Some(url) => IndexLine::Url(url.to_owned()),
            None => IndexLine::Malformed,
        },
        Err(_) => IndexLine::Malformed,
    }
}

/// Host of an absolute URL as a domain name; `None` for IP literals, missing
/// hosts and names that fail normalization.
pub fn host_of(url: &str) -> Option<DomainName> {
    let parsed = url::Url::parse(url).ok()?;
    match parsed.host()? {
        url::Host::Domain(host) => normalize_name(host).ok(),
        url::Host::Ipv4(_) | url::Host::Ipv6(_) => None,
    }
}

/// Per-input counters. Every line lands in exactly one bucket, so
/// `lines == observations + skipped()`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CcStats {
    pub lines: u64,
    pub observations: u64,
    pub blank_lines: u64,
    pub malformed_lines: u64,
    pub skipped_hosts: u64,
    pub skipped_suffix: u64,
    pub filtered_tld: u64,
}

impl CcStats {
    pub fn skipped(&self) -> u64 {
        self.blank_lines
            + self.malformed_lines
            + self.skipped_hosts
            + self.skipped_suffix
            + self.filtered_tld
    }

    pub fn merge(&mut self, other: &CcStats) {
        self.lines += other.lines;
        self.observations += other.observations;
        self.blank_lines += other.blank_lines;
        self.malformed_lines += other.malformed_lines;
        self.skipped_hosts += other.skipped_hosts;
        self.skipped_suffix += other.skipped_suffix;
        self.filtered_tld += other.filtered_tld;
    }
}

/// Runs parse, host extraction and suffix reduction over every line of one
/// snapshot's index, handing each observation to `emit`. Duplicates are left
/// for the sink to collapse.
pub fn extract_observations<R, F>(
    input: R,
    snapshot: &CrawlSnapshotId,
    rules: &SuffixRuleSet,
    tld_filter: Option<&HashSet<String>>,
    mut emit: F,
) -> io::Result<CcStats>
where
    R: BufRead,
    F: FnMut(CrawlObservation) -> io::Result<()>,
{
    let mut stats = CcStats::default();
    let mut buf = Vec::new();
    let mut reader = input;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        stats.lines += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            stats.malformed_lines += 1;
            continue;
        };
        let url = match parse_index_line(line) {
            IndexLine::Url(url) => url,
            IndexLine::Blank => {
                stats.blank_lines += 1;
                continue;
            }
            IndexLine::Malformed => {
                stats.malformed_lines += 1;
                continue;
            }
        };
        let Some(host) = host_of(&url) else {
            stats.skipped_hosts += 1;
            continue;
        };
        let domain = match registered_domain(&host, rules) {
            Ok(domain) => domain,
            Err(_) => {
                stats.skipped_suffix += 1;
                continue;
            }
        };
        if let Some(filter) = tld_filter {
            if !filter.contains(domain.tld()) {
                stats.filtered_tld += 1;
                continue;
            }
        }
        stats.observations += 1;
        emit(CrawlObservation {
            domain,
            snapshot: snapshot.clone(),
        })?;
    }
    Ok(stats)
}

/// Opens an index file, decompressing it when it starts with the gzip magic.
pub fn open_index(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let mut file = BufReader::new(File::open(path)?);
    let is_gzip = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Reads a whole index into memory; small inputs and tests only.
pub fn read_index(path: &Path) -> io::Result<String> {
    let mut out = String::new();
    open_index(path)?.read_to_string(&mut out)?;
    Ok(out)
}
