use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, NaiveDate, Utc};

use super::record::{midnight, Record, Source};
use super::{Store, StoreError};
use crate::domain::RegisteredDomain;

/// Names under one TLD learned strictly before 00:00:00 UTC on the cut-off
/// date.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsOfView {
    pub tld: String,
    pub cutoff: NaiveDate,
    /// Domains with any CT evidence whose validity started before the cut-off.
    pub ct_names: BTreeSet<RegisteredDomain>,
    /// Domains seen in any crawl snapshot dated before the cut-off.
    pub cc_names: BTreeSet<RegisteredDomain>,
    /// Per CT log: domains with evidence in that log starting before the cut-off.
    pub per_log_names: BTreeMap<String, BTreeSet<RegisteredDomain>>,
    /// Members of `ct_names` whose CT evidence, over all logs, ended before the
    /// cut-off.
    pub expired_only_names: BTreeSet<RegisteredDomain>,
}

impl AsOfView {
    pub fn empty(tld: &str, cutoff: NaiveDate) -> AsOfView {
        AsOfView {
            tld: tld.to_owned(),
            cutoff,
            ct_names: BTreeSet::new(),
            cc_names: BTreeSet::new(),
            per_log_names: BTreeMap::new(),
            expired_only_names: BTreeSet::new(),
        }
    }

    /// Builds a view from records in any order. Records under other TLDs are
    /// ignored.
    pub fn from_records<'a, I>(tld: &str, cutoff: NaiveDate, records: I) -> AsOfView
    where
        I: IntoIterator<Item = &'a Record>,
    {
        let mut sorted: Vec<&Record> = records.into_iter().collect();
        sorted.sort_by(|a, b| a.key.cmp(&b.key));
        let mut builder = ViewBuilder::new(tld, cutoff);
        for record in sorted {
            builder.add(record);
        }
        builder.finish()
    }
}

/// What is known about the domain currently being folded.
#[derive(Default)]
struct Pending {
    ct: bool,
    cc: bool,
    ct_max_end: Option<DateTime<Utc>>,
    logs: Vec<String>,
}

/// Folds records grouped by domain, as a store scan yields them. Names are
/// collected in order and turned into sets once at the end.
struct ViewBuilder {
    tld: String,
    cutoff: NaiveDate,
    cutoff_at: DateTime<Utc>,
    current: Option<RegisteredDomain>,
    pending: Pending,
    ct_names: Vec<RegisteredDomain>,
    cc_names: Vec<RegisteredDomain>,
    expired: Vec<RegisteredDomain>,
    per_log: BTreeMap<String, Vec<RegisteredDomain>>,
    seen: bool,
}

impl ViewBuilder {
    fn new(tld: &str, cutoff: NaiveDate) -> Self {
        ViewBuilder {
            tld: tld.to_owned(),
            cutoff,
            cutoff_at: midnight(cutoff),
            current: None,
            pending: Pending::default(),
            ct_names: Vec::new(),
            cc_names: Vec::new(),
            expired: Vec::new(),
            per_log: BTreeMap::new(),
            seen: false,
        }
    }

    fn add(&mut self, record: &Record) {
        let domain = &record.key.domain;
        if domain.tld() != self.tld {
            return;
        }
        self.seen = true;
        if self.current.as_ref() != Some(domain) {
            self.flush();
            self.current = Some(domain.clone());
        }
        let started = record.value.min_start < self.cutoff_at;
        let pending = &mut self.pending;
        match record.key.source {
            Source::Ct => {
                pending.ct_max_end = pending.ct_max_end.max(Some(record.value.max_end));
                if started {
                    pending.ct = true;
                    pending.logs.push(record.key.origin.clone());
                }
            }
            Source::Cc => pending.cc |= started,
        }
    }

    fn flush(&mut self) {
        let Some(domain) = self.current.take() else {
            return;
        };
        let pending = std::mem::take(&mut self.pending);
        for log in pending.logs {
            self.per_log.entry(log).or_default().push(domain.clone());
        }
        if pending.cc {
            self.cc_names.push(domain.clone());
        }
        if pending.ct {
            if pending.ct_max_end.is_some_and(|end| end < self.cutoff_at) {
                self.expired.push(domain.clone());
            }
            self.ct_names.push(domain);
        }
    }

    fn finish(mut self) -> AsOfView {
        self.flush();
        AsOfView {
            tld: self.tld,
            cutoff: self.cutoff,
            ct_names: self.ct_names.into_iter().collect(),
            cc_names: self.cc_names.into_iter().collect(),
            per_log_names: self
                .per_log
                .into_iter()
                .map(|(log, names)| (log, names.into_iter().collect()))
                .collect(),
            expired_only_names: self.expired.into_iter().collect(),
        }
    }
}

impl Store {
    /// Names under `tld` learned before `cutoff`. With `strict`, a TLD without
    /// any record is an error rather than an empty view.
    pub fn query_asof(
        &self,
        tld: &str,
        cutoff: NaiveDate,
        strict: bool,
    ) -> Result<AsOfView, StoreError> {
        let mut builder = ViewBuilder::new(tld, cutoff);
        for record in self.scan()? {
            builder.add(&record?);
        }
        if strict && !builder.seen {
            return Err(StoreError::UnknownTld(tld.to_owned()));
        }
        Ok(builder.finish())
    }

    /// Earliest evidence date per domain under `tld` for one source,
    /// optionally restricted to evidence starting before `before`.
    pub fn first_seen(
        &self,
        tld: &str,
        source: Source,
        before: Option<NaiveDate>,
    ) -> Result<BTreeMap<RegisteredDomain, NaiveDate>, StoreError> {
        let limit = before.map(midnight);
        let mut out: BTreeMap<RegisteredDomain, NaiveDate> = BTreeMap::new();
        for record in self.scan()? {
            let record = record?;
            if record.key.source != source || record.key.domain.tld() != tld {
                continue;
            }
            if limit.is_some_and(|limit| record.value.min_start >= limit) {
                continue;
            }
            let day = record.value.min_start.date_naive();
            out.entry(record.key.domain)
                .and_modify(|d| *d = (*d).min(day))
                .or_insert(day);
        }
        Ok(out)
    }

    /// Distinct TLDs present in the store.
    pub fn tlds(&self) -> Result<BTreeSet<String>, StoreError> {
        let mut out = BTreeSet::new();
        for record in self.scan()? {
            out.insert(record?.key.domain.tld().to_owned());
        }
        Ok(out)
    }
}
