use std::collections::BTreeSet;
use std::error::Error as StdError;
use std::io;

use rayon::prelude::*;

use super::{
    parse_entry, CertObservation, CertificateInfo, CtClient, CtError, CtLogDescriptor, EntryKind,
    IngestCheckpoint,
};
use crate::domain::{registered_domain_of, RegisteredDomain, SuffixRuleSet};

pub type SinkError = Box<dyn StdError + Send + Sync>;

/// Destination for certificate observations. `commit` must make everything
/// appended so far durable before it returns; the ingest loop only advances
/// its checkpoint afterwards.
pub trait CertSink {
    fn append(&mut self, observations: &[CertObservation]) -> Result<(), SinkError>;
    fn commit(&mut self) -> Result<(), SinkError>;
}

impl CertSink for Vec<CertObservation> {
    fn append(&mut self, observations: &[CertObservation]) -> Result<(), SinkError> {
        self.extend_from_slice(observations);
        Ok(())
    }

    fn commit(&mut self) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Observations from one certificate plus the number of names that were not
/// domains or had no registered domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Extracted {
    pub observations: Vec<CertObservation>,
    pub skipped_names: u64,
}

/// Maps every name of a certificate to its registered domain. Duplicate
/// registered domains within the certificate collapse to one observation.
pub fn extract_observations(
    info: &CertificateInfo,
    log: &CtLogDescriptor,
    index: u64,
    rules: &SuffixRuleSet,
) -> Extracted {
    let mut domains: BTreeSet<RegisteredDomain> = BTreeSet::new();
    let mut skipped_names = 0;
    for name in &info.names {
        match registered_domain_of(name, rules) {
            Ok(domain) => {
                domains.insert(domain);
            }
            Err(_) => skipped_names += 1,
        }
    }
    let observations = domains
        .into_iter()
        .map(|domain| CertObservation {
            domain,
            log_name: log.name.clone(),
            not_before: info.not_before,
            not_after: info.not_after,
            entry_index: index,
            entry_kind: info.kind,
        })
        .collect();
    Extracted {
        observations,
        skipped_names,
    }
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    /// Entries requested per page; the checkpoint advances once per page.
    pub page_size: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { page_size: 256 }
    }
}

/// Counters for one ingest run. `certificates + malformed_leaf + malformed_der`
/// always equals `entries_fetched`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub pages: u64,
    pub entries_fetched: u64,
    pub certificates: u64,
    pub precertificates: u64,
    pub malformed_leaf: u64,
    pub malformed_der: u64,
    pub observations: u64,
    pub skipped_names: u64,
}

impl IngestStats {
    pub fn skipped_entries(&self) -> u64 {
        self.malformed_leaf + self.malformed_der
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IngestOutcome {
    pub checkpoint: IngestCheckpoint,
    pub tree_size: u64,
    pub stats: IngestStats,
}

/// Streams a log from `checkpoint.next_index` to its current tree size.
///
/// After each page the sink is committed and then `persist` is called with
/// the advanced checkpoint, so a crash re-ingests at most one page. On error
/// the last persisted checkpoint stays valid.
pub fn run_ingest(
    client: &CtClient,
    log: &CtLogDescriptor,
    rules: &SuffixRuleSet,
    checkpoint: IngestCheckpoint,
    sink: &mut dyn CertSink,
    persist: &mut dyn FnMut(&IngestCheckpoint, &IngestStats) -> io::Result<()>,
    options: &IngestOptions,
) -> Result<IngestOutcome, CtError> {
    if checkpoint.log_name != log.name {
        return Err(CtError::Checkpoint(format!(
            "checkpoint for {:?} used with log {:?}",
            checkpoint.log_name, log.name
        )));
    }
    let sth = client.fetch_sth(log)?;
    let tree_size = sth.tree_size;
    if tree_size < checkpoint.sth_size {
        return Err(CtError::TreeShrank {
            log: log.name.clone(),
            previous: checkpoint.sth_size,
            current: tree_size,
        });
    }

    let page_size = options.page_size.max(1);
    let mut stats = IngestStats::default();
    let mut current = checkpoint;
    while current.next_index < tree_size {
        let start = current.next_index;
        let end = (start + page_size).min(tree_size) - 1;
        let entries = client.fetch_entries(log, start..=end, tree_size)?;

        let results: Vec<Result<(EntryKind, Extracted), CtError>> = entries
            .par_iter()
            .enumerate()
            .map(|(offset, raw)| {
                let info = parse_entry(raw)?;
                let extracted = extract_observations(&info, log, start + offset as u64, rules);
                Ok((info.kind, extracted))
            })
            .collect();

        let mut page: Vec<CertObservation> = Vec::new();
        for result in results {
            stats.entries_fetched += 1;
            match result {
                Ok((kind, extracted)) => {
                    stats.certificates += 1;
                    if kind == EntryKind::Precert {
                        stats.precertificates += 1;
                    }
                    stats.skipped_names += extracted.skipped_names;
                    stats.observations += extracted.observations.len() as u64;
                    page.extend(extracted.observations);
                }
                Err(CtError::MalformedLeaf(_)) => stats.malformed_leaf += 1,
                Err(CtError::MalformedDer(_)) => stats.malformed_der += 1,
                Err(other) => return Err(other),
            }
        }

        sink.append(&page)
            .map_err(|e| CtError::Sink(e.to_string()))?;
        sink.commit().map_err(|e| CtError::Sink(e.to_string()))?;
        stats.pages += 1;

        let next = IngestCheckpoint {
            log_name: current.log_name.clone(),
            next_index: end + 1,
            sth_size: tree_size,
        };
        persist(&next, &stats).map_err(|e| CtError::Checkpoint(e.to_string()))?;
        current = next;
    }

    Ok(IngestOutcome {
        checkpoint: current,
        tree_size,
        stats,
    })
}
