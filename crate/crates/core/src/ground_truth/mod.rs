//! Ground-truth inputs: zone snapshots, A-record tables and port scans.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::domain::{
    normalize_name, registered_domain, registered_domain_of, RegisteredDomain, SuffixRuleSet,
};

#[derive(Debug, thiserror::Error)]
pub enum GroundTruthError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("zone series is not sorted by strictly increasing date ({0} follows {1})")]
    UnsortedSeries(NaiveDate, NaiveDate),
    #[error("zone series mixes TLDs {0:?} and {1:?}")]
    MixedTlds(String, String),
}

/// Delegated registered domains of one TLD on one date.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZoneSnapshot {
    pub tld: String,
    pub date: NaiveDate,
    pub domains: BTreeSet<RegisteredDomain>,
}

impl ZoneSnapshot {
    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ZoneLoadStats {
    pub lines: u64,
    pub blank: u64,
    pub malformed: u64,
    pub other_tld: u64,
    pub duplicates: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadedZone {
    pub snapshot: ZoneSnapshot,
    pub stats: ZoneLoadStats,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Skip the first line of the file.
    pub header: bool,
}

fn open(path: &Path) -> Result<BufReader<File>, GroundTruthError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| GroundTruthError::Io {
            path: path.to_owned(),
            source,
        })
}

/// Loads a flat list of names (first whitespace-separated token per line).
/// Names are normalized and reduced to registered domains; names under other
/// TLDs are rejected and counted.
pub fn load_zone_snapshot(
    path: &Path,
    tld: &str,
    date: NaiveDate,
    rules: &SuffixRuleSet,
    options: LoadOptions,
) -> Result<LoadedZone, GroundTruthError> {
    let io_err = |source| GroundTruthError::Io {
        path: path.to_owned(),
        source,
    };
    read_zone(open(path)?, tld, date, rules, options).map_err(io_err)
}

/// [`load_zone_snapshot`] over any reader.
pub fn read_zone<R: Read>(
    input: R,
    tld: &str,
    date: NaiveDate,
    rules: &SuffixRuleSet,
    options: LoadOptions,
) -> io::Result<LoadedZone> {
    let tld = tld.trim_start_matches('.').to_ascii_lowercase();
    let mut stats = ZoneLoadStats::default();
    let mut domains = BTreeSet::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if idx == 0 && options.header {
            continue;
        }
        stats.lines += 1;
        let Some(token) = line.split_whitespace().next() else {
            stats.blank += 1;
            continue;
        };
        let domain = match registered_domain_of(token, rules) {
            Ok(domain) => domain,
            Err(_) => {
                stats.malformed += 1;
                continue;
            }
        };
        if domain.tld() != tld {
            stats.other_tld += 1;
            continue;
        }
        if !domains.insert(domain) {
            stats.duplicates += 1;
        }
    }
    let mut warnings = Vec::new();
    if domains.is_empty() {
        warnings.push(format!("zone for .{tld} on {date} is empty"));
    }
    Ok(LoadedZone {
        snapshot: ZoneSnapshot { tld, date, domains },
        stats,
        warnings,
    })
}

/// Earliest date each domain appears, for domains absent from the first
/// snapshot. Domains present on the first day have unknown registration dates
/// and are left out.
pub fn zone_first_seen(
    series: &[ZoneSnapshot],
) -> Result<BTreeMap<RegisteredDomain, NaiveDate>, GroundTruthError> {
    for pair in series.windows(2) {
        if pair[1].date <= pair[0].date {
            return Err(GroundTruthError::UnsortedSeries(pair[1].date, pair[0].date));
        }
        if pair[1].tld != pair[0].tld {
            return Err(GroundTruthError::MixedTlds(
                pair[0].tld.clone(),
                pair[1].tld.clone(),
            ));
        }
    }
    let Some((first, rest)) = series.split_first() else {
        return Ok(BTreeMap::new());
    };
    let mut out = BTreeMap::new();
    for snapshot in rest {
        for domain in &snapshot.domains {
            if !first.domains.contains(domain) {
                out.entry(domain.clone()).or_insert(snapshot.date);
            }
        }
    }
    Ok(out)
}

/// Domain to IPv4 addresses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ARecordTable {
    pub records: BTreeMap<RegisteredDomain, BTreeSet<Ipv4Addr>>,
    pub malformed: u64,
}

impl ARecordTable {
    pub fn addresses(&self, domain: &RegisteredDomain) -> Option<&BTreeSet<Ipv4Addr>> {
        self.records.get(domain).filter(|a| !a.is_empty())
    }
}

/// IPv4 address to open ports.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PortScanTable {
    pub open: BTreeMap<Ipv4Addr, BTreeSet<u16>>,
    pub malformed: u64,
}

impl PortScanTable {
    pub fn ports(&self, addr: &Ipv4Addr) -> Option<&BTreeSet<u16>> {
        self.open.get(addr)
    }
}

fn csv_reader<R: Read>(input: R, header: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Loads `domain,ipv4` rows. Rows for one domain union their addresses.
/// Names must already be registered domains under `rules`.
pub fn load_a_records(
    path: &Path,
    rules: &SuffixRuleSet,
    options: LoadOptions,
) -> Result<ARecordTable, GroundTruthError> {
    read_a_records(open(path)?, rules, options).map_err(|source| GroundTruthError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_a_records<R: Read>(
    input: R,
    rules: &SuffixRuleSet,
    options: LoadOptions,
) -> io::Result<ARecordTable> {
    let mut table = ARecordTable::default();
    for row in csv_reader(input, options.header).records() {
        let parsed = row.ok().and_then(|row| {
            if row.len() != 2 {
                return None;
            }
            let name = normalize_name(&row[0]).ok()?;
            let domain = registered_domain(&name, rules).ok()?;
            if domain.as_str() != name.as_str() {
                return None;
            }
            let addr: Ipv4Addr = row[1].parse().ok()?;
            Some((domain, addr))
        });
        match parsed {
            Some((domain, addr)) => {
                table.records.entry(domain).or_default().insert(addr);
            }
            None => table.malformed += 1,
        }
    }
    Ok(table)
}

/// Loads `ipv4,port` rows.
pub fn load_port_scan(
    path: &Path,
    options: LoadOptions,
) -> Result<PortScanTable, GroundTruthError> {
    read_port_scan(open(path)?, options).map_err(|source| GroundTruthError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_port_scan<R: Read>(input: R, options: LoadOptions) -> io::Result<PortScanTable> {
    let mut table = PortScanTable::default();
    for row in csv_reader(input, options.header).records() {
        let parsed = row.ok().and_then(|row| {
            if row.len() != 2 {
                return None;
            }
            let addr: Ipv4Addr = row[0].parse().ok()?;
            let port: u16 = row[1].parse().ok().filter(|p| *p >= 1)?;
            Some((addr, port))
        });
        match parsed {
            Some((addr, port)) => {
                table.open.entry(addr).or_default().insert(port);
            }
            None => table.malformed += 1,
        }
    }
    Ok(table)
}

/// Reads zone files named `YYYY-MM-DD[.ext]` from a directory, sorted by date.
pub fn load_zone_series(
    dir: &Path,
    tld: &str,
    rules: &SuffixRuleSet,
    options: LoadOptions,
) -> Result<Vec<LoadedZone>, GroundTruthError> {
    let entries = std::fs::read_dir(dir).map_err(|source| GroundTruthError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut dated: Vec<(NaiveDate, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| GroundTruthError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let stem = name.split('.').next().unwrap_or_default();
        if let Ok(date) = NaiveDate::parse_from_str(stem, "%Y-%m-%d") {
            dated.push((date, entry.path()));
        }
    }
    dated.sort();
    dated
        .into_iter()
        .map(|(date, path)| load_zone_snapshot(&path, tld, date, rules, options))
        .collect()
}
