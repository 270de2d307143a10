use std::fmt;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};

use crate::cc::CrawlObservation;
use crate::ct::CertObservation;
use crate::domain::RegisteredDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    // Declaration order matches the lexicographic order of the rendered names.
    Cc,
    Ct,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Cc => "CC",
            Source::Ct => "CT",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        match s {
            "CC" => Some(Source::Cc),
            "CT" => Some(Source::Ct),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a domain was seen: a CT log name or a crawl snapshot id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProvenanceKey {
    pub domain: RegisteredDomain,
    pub source: Source,
    pub origin: String,
}

/// Earliest start and latest end of the evidence for one key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProvenanceValue {
    pub min_start: DateTime<Utc>,
    pub max_end: DateTime<Utc>,
}

impl ProvenanceValue {
    pub fn merge(&mut self, other: &ProvenanceValue) {
        self.min_start = self.min_start.min(other.min_start);
        self.max_end = self.max_end.max(other.max_end);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub key: ProvenanceKey,
    pub value: ProvenanceValue,
}

pub(crate) fn midnight(date: NaiveDate) -> DateTime<Utc> {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
}

impl From<&CertObservation> for Record {
    fn from(o: &CertObservation) -> Self {
        Record {
            key: ProvenanceKey {
                domain: o.domain.clone(),
                source: Source::Ct,
                origin: o.log_name.clone(),
            },
            value: ProvenanceValue {
                min_start: o.not_before,
                max_end: o.not_after,
            },
        }
    }
}

impl From<&CrawlObservation> for Record {
    fn from(o: &CrawlObservation) -> Self {
        let at = midnight(o.snapshot.derived_date());
        Record {
            key: ProvenanceKey {
                domain: o.domain.clone(),
                source: Source::Cc,
                origin: o.snapshot.as_str().to_owned(),
            },
            value: ProvenanceValue {
                min_start: at,
                max_end: at,
            },
        }
    }
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

impl Record {
    /// `domain\tsource\torigin\tmin_start\tmax_end`, without the newline.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.key.domain,
            self.key.source,
            self.key.origin,
            timestamp(&self.value.min_start),
            timestamp(&self.value.max_end)
        )
    }

    pub fn parse_line(line: &str) -> Result<Record, String> {
        let mut fields = line.split('\t');
        let mut next = |what: &str| fields.next().ok_or_else(|| format!("missing {what}"));
        let domain =
            RegisteredDomain::from_canonical(next("domain")?).map_err(|e| e.to_string())?;
        let source_field = next("source")?;
        let source = Source::parse(source_field)
            .ok_or_else(|| format!("unknown source {source_field:?}"))?;
        let origin = next("origin")?;
        if origin.is_empty() {
            return Err("empty origin".into());
        }
        let parse_time = |s: &str| {
            DateTime::parse_from_rfc3339(s)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|e| format!("bad timestamp {s:?}: {e}"))
        };
        let min_start = parse_time(next("min_start")?)?;
        let max_end = parse_time(next("max_end")?)?;
        if fields.next().is_some() {
            return Err("too many fields".into());
        }
        if min_start > max_end {
            return Err("min_start after max_end".into());
        }
        Ok(Record {
            key: ProvenanceKey {
                domain,
                source,
                origin: origin.to_owned(),
            },
            value: ProvenanceValue { min_start, max_end },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn line_format() {
        let record = Record {
            key: ProvenanceKey {
                domain: RegisteredDomain::from_canonical("a.nl").unwrap(),
                source: Source::Ct,
                origin: "xenon2023".into(),
            },
            value: ProvenanceValue {
                min_start: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
                max_end: Utc.with_ymd_and_hms(2021, 2, 3, 4, 5, 6).unwrap(),
            },
        };
        let line = record.to_line();
        assert_eq!(
            line,
            "a.nl\tCT\txenon2023\t2020-01-01T00:00:00Z\t2021-02-03T04:05:06Z"
        );
        assert_eq!(Record::parse_line(&line).unwrap(), record);
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in [
            "a.nl\tCT\tx\t2020-01-01T00:00:00Z",
            "a.nl\tXX\tx\t2020-01-01T00:00:00Z\t2020-01-01T00:00:00Z",
            "a.nl\tCT\t\t2020-01-01T00:00:00Z\t2020-01-01T00:00:00Z",
            "nl\tCT\tx\t2020-01-01T00:00:00Z\t2020-01-01T00:00:00Z",
            "a.nl\tCT\tx\t2021-01-01T00:00:00Z\t2020-01-01T00:00:00Z",
            "a.nl\tCT\tx\tyesterday\t2020-01-01T00:00:00Z",
        ] {
            assert!(Record::parse_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn source_order_matches_rendering() {
        assert!(Source::Cc < Source::Ct);
        assert!(Source::Cc.as_str() < Source::Ct.as_str());
    }
}
