//! Certificate Transparency ingestion: RFC 6962 log client, leaf parsing and
//! per-certificate domain observations.

mod checkpoint;
mod client;
mod ingest;
mod leaf;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::RegisteredDomain;

pub use checkpoint::IngestCheckpoint;
pub use client::{CtClient, RetryPolicy};
pub use ingest::{
    extract_observations, run_ingest, CertSink, Extracted, IngestOptions, IngestOutcome,
    IngestStats, SinkError,
};
pub use leaf::{parse_entry, parse_leaf, CertificateInfo, EntryKind, LeafEntry};

#[derive(Debug, thiserror::Error)]
pub enum CtError {
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("malformed response from {url}: {message}")]
    MalformedResponse { url: String, message: String },
    #[error("range {start}..={end} is outside a tree of size {tree_size}")]
    RangeBeyondTree {
        start: u64,
        end: u64,
        tree_size: u64,
    },
    #[error("tree size of log {log} shrank from {previous} to {current}")]
    TreeShrank {
        log: String,
        previous: u64,
        current: u64,
    },
    #[error("malformed Merkle tree leaf: {0}")]
    MalformedLeaf(String),
    #[error("malformed DER certificate: {0}")]
    MalformedDer(String),
    #[error("invalid log descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("sink: {0}")]
    Sink(String),
}

impl CtError {
    /// Whether a failed request is worth repeating.
    pub fn is_retryable(&self) -> bool {
        match self {
            CtError::Http { status, .. } => *status == 429 || (500..600).contains(status),
            CtError::Transport { .. } => true,
            _ => false,
        }
    }
}

/// Inclusive validity window of a temporally sharded log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// A CT log to ingest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtLogDescriptor {
    pub name: String,
    pub base_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shard_window: Option<ShardWindow>,
}

impl CtLogDescriptor {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>) -> Self {
        CtLogDescriptor {
            name: name.into(),
            base_url: base_url.into(),
            shard_window: None,
        }
    }

    pub fn validate(&self) -> Result<(), CtError> {
        if self.name.is_empty() || self.name.contains(['\t', '\n', '\r']) {
            return Err(CtError::InvalidDescriptor(format!(
                "log name {:?} must be nonempty without tabs or newlines",
                self.name
            )));
        }
        let url = url::Url::parse(&self.base_url).map_err(|e| {
            CtError::InvalidDescriptor(format!("{}: base_url {:?}: {e}", self.name, self.base_url))
        })?;
        if !matches!(url.scheme(), "http" | "https") || url.host().is_none() {
            return Err(CtError::InvalidDescriptor(format!(
                "{}: base_url must be an absolute http(s) URL",
                self.name
            )));
        }
        if let Some(w) = self.shard_window {
            if w.start >= w.end {
                return Err(CtError::InvalidDescriptor(format!(
                    "{}: shard window start {} is not before end {}",
                    self.name, w.start, w.end
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn endpoint(&self, path: &str) -> String {
        format!("{}/ct/v1/{path}", self.base_url.trim_end_matches('/'))
    }
}

/// Tree size and timestamp from `get-sth`. The signature is not checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTreeHead {
    pub tree_size: u64,
    pub timestamp: u64,
}

/// One `get-entries` element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEntry {
    pub leaf_input: String,
    #[serde(default)]
    pub extra_data: String,
}

/// Evidence that `domain` appeared in a certificate logged at `entry_index`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertObservation {
    pub domain: RegisteredDomain,
    pub log_name: String,
    pub not_before: DateTime<Utc>,
    pub not_after: DateTime<Utc>,
    pub entry_index: u64,
    pub entry_kind: EntryKind,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_validation() {
        assert!(
            CtLogDescriptor::new("xenon2023", "https://ct.example/logs/xenon2023/")
                .validate()
                .is_ok()
        );
        assert!(CtLogDescriptor::new("x", "ct.example/logs")
            .validate()
            .is_err());
        assert!(CtLogDescriptor::new("x", "ftp://ct.example/")
            .validate()
            .is_err());
        assert!(CtLogDescriptor::new("", "https://ct.example/")
            .validate()
            .is_err());
        let mut shard = CtLogDescriptor::new("x", "https://ct.example/");
        shard.shard_window = Some(ShardWindow {
            start: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
        });
        assert!(shard.validate().is_err());
    }

    #[test]
    fn endpoint_joins_without_double_slash() {
        let log = CtLogDescriptor::new("x", "https://ct.example/logs/x/");
        assert_eq!(
            log.endpoint("get-sth"),
            "https://ct.example/logs/x/ct/v1/get-sth"
        );
    }
}
