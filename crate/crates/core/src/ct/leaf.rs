use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use chrono::{DateTime, Utc};
use x509_parser::certificate::TbsCertificate;
use x509_parser::extensions::GeneralName;
use x509_parser::prelude::{FromDer, X509Certificate};

use super::{CtError, RawEntry};
use crate::domain::normalize_name;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    X509,
    Precert,
}

/// A decoded `MerkleTreeLeaf` holding a `TimestampedEntry`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafEntry<'a> {
    /// Log timestamp in epoch milliseconds.
    pub timestamp: u64,
    pub kind: EntryKind,
    /// DER certificate for x509 entries, DER TBSCertificate for precerts.
    pub der: &'a [u8],
    pub issuer_key_hash: Option<[u8; 32]>,
}

/// Names and validity window extracted from one logged (pre)certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateInfo {
    pub kind: EntryKind,
    /// Distinct raw names: the subject CN when it parses as a domain, then
    /// every SAN dNSName, in certificate order.
    pub names: Vec<String>,
    pub not_before: DateTime<Utc>,
    pub not_after: DateTime<Utc>,
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CtError> {
        if self.buf.len() < n {
            return Err(CtError::MalformedLeaf(format!(
                "truncated {what}: need {n} bytes, have {}",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn uint(&mut self, width: usize, what: &str) -> Result<u64, CtError> {
        Ok(self
            .take(width, what)?
            .iter()
            .fold(0u64, |acc, &b| (acc << 8) | u64::from(b)))
    }

    fn opaque(&mut self, len_width: usize, what: &str) -> Result<&'a [u8], CtError> {
        let len = self.uint(len_width, what)? as usize;
        self.take(len, what)
    }
}

/// Decodes the binary `MerkleTreeLeaf` structure.
pub fn parse_leaf(bytes: &[u8]) -> Result<LeafEntry<'_>, CtError> {
    let mut cur = Cursor { buf: bytes };
    let version = cur.uint(1, "version")?;
    if version != 0 {
        return Err(CtError::MalformedLeaf(format!(
            "unknown leaf version {version}"
        )));
    }
    let leaf_type = cur.uint(1, "leaf type")?;
    if leaf_type != 0 {
        return Err(CtError::MalformedLeaf(format!(
            "unknown leaf type {leaf_type}"
        )));
    }
    let timestamp = cur.uint(8, "timestamp")?;
    let entry_type = cur.uint(2, "entry type")?;
    let (kind, issuer_key_hash, der) = match entry_type {
        0 => (EntryKind::X509, None, cur.opaque(3, "certificate")?),
        1 => {
            let mut hash = [0u8; 32];
            hash.copy_from_slice(cur.take(32, "issuer key hash")?);
            (
                EntryKind::Precert,
                Some(hash),
                cur.opaque(3, "TBS certificate")?,
            )
        }
        other => {
            return Err(CtError::MalformedLeaf(format!(
                "unknown entry type {other}"
            )));
        }
    };
    if der.is_empty() {
        return Err(CtError::MalformedLeaf("empty certificate".into()));
    }
    cur.opaque(2, "extensions")?;
    Ok(LeafEntry {
        timestamp,
        kind,
        der,
        issuer_key_hash,
    })
}

/// Parses a `get-entries` element into the names and validity it carries.
pub fn parse_entry(raw: &RawEntry) -> Result<CertificateInfo, CtError> {
    let bytes = STANDARD
        .decode(raw.leaf_input.trim())
        .map_err(|e| CtError::MalformedLeaf(format!("leaf_input is not base64: {e}")))?;
    let leaf = parse_leaf(&bytes)?;
    let der_err = |e: x509_parser::nom::Err<x509_parser::error::X509Error>| {
        CtError::MalformedDer(e.to_string())
    };
    match leaf.kind {
        EntryKind::X509 => {
            let (_, cert) = X509Certificate::from_der(leaf.der).map_err(der_err)?;
            certificate_info(leaf.kind, &cert.tbs_certificate)
        }
        EntryKind::Precert => {
            let (_, tbs) = TbsCertificate::from_der(leaf.der).map_err(der_err)?;
            certificate_info(leaf.kind, &tbs)
        }
    }
}

fn certificate_info(kind: EntryKind, tbs: &TbsCertificate<'_>) -> Result<CertificateInfo, CtError> {
    let mut names: Vec<String> = Vec::new();
    let mut push = |name: &str| {
        if !names.iter().any(|n| n == name) {
            names.push(name.to_owned());
        }
    };
    for cn in tbs.subject().iter_common_name() {
        if let Ok(cn) = cn.as_str() {
            if normalize_name(cn).is_ok() {
                push(cn);
            }
        }
    }
    let san = tbs
        .subject_alternative_name()
        .map_err(|e| CtError::MalformedDer(format!("subject alternative name: {e}")))?;
    if let Some(san) = san {
        for general_name in &san.value.general_names {
            if let GeneralName::DNSName(dns) = general_name {
                push(dns);
            }
        }
    }

    let to_utc = |t: &x509_parser::time::ASN1Time| {
        DateTime::<Utc>::from_timestamp(t.timestamp(), 0)
            .ok_or_else(|| CtError::MalformedDer(format!("validity time out of range: {t}")))
    };
    let validity = tbs.validity();
    let not_before = to_utc(&validity.not_before)?;
    let not_after = to_utc(&validity.not_after)?;
    if not_before > not_after {
        return Err(CtError::MalformedDer(format!(
            "validity window inverted: {not_before} > {not_after}"
        )));
    }
    Ok(CertificateInfo {
        kind,
        names,
        not_before,
        not_after,
    })
}
