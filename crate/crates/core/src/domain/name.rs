use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use super::DomainError;

const MAX_NAME_LEN: usize = 253;
const MAX_LABEL_LEN: usize = 63;

/// A canonical, lowercase, A-label domain name.
///
/// The name is kept as its dotted rendering (leaf label first, no trailing
/// dot). A leading `*.` wildcard is never part of the name; it is recorded in
/// [`DomainName::original_was_wildcard`] instead.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainName {
    name: String,
    wildcard: bool,
}

impl DomainName {
    /// Labels in leaf-first order (`www.example.nl` yields `www`, `example`, `nl`).
    pub fn labels(&self) -> impl DoubleEndedIterator<Item = &str> + '_ {
        self.name.split('.')
    }

    pub fn label_count(&self) -> usize {
        self.name.bytes().filter(|&b| b == b'.').count() + 1
    }

    /// The rightmost label.
    pub fn tld(&self) -> &str {
        match self.name.rfind('.') {
            Some(pos) => &self.name[pos + 1..],
            None => &self.name,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }

    pub fn original_was_wildcard(&self) -> bool {
        self.wildcard
    }

    /// The rightmost `count` labels as a dotted string slice.
    pub fn suffix(&self, count: usize) -> &str {
        if count == 0 {
            return "";
        }
        let mut seen = 0;
        for (pos, b) in self.name.bytes().enumerate().rev() {
            if b == b'.' {
                seen += 1;
                if seen == count {
                    return &self.name[pos + 1..];
                }
            }
        }
        &self.name
    }

    /// Same name without the wildcard marker.
    /// Text form that normalizes back to `self`, keeping a `*.` prefix when
    /// the original was a wildcard.
    pub fn render(&self) -> String {
        if self.wildcard {
            format!("*.{}", self.name)
        } else {
            self.name.clone()
        }
    }

    pub fn without_wildcard(&self) -> DomainName {
        DomainName {
            name: self.name.clone(),
            wildcard: false,
        }
    }

    /// Unicode rendering for display. Storage and comparison always use the
    /// A-label form.
    pub fn to_unicode(&self) -> String {
        let (unicode, result) = idna::domain_to_unicode(&self.name);
        match result {
            Ok(()) => unicode,
            Err(_) => self.name.clone(),
        }
    }

    /// Builds a name from an already-canonical dotted string, checking syntax
    /// but skipping IDNA processing. Used when decoding stored records.
    pub(crate) fn from_canonical(name: &str) -> Result<DomainName, DomainError> {
        check_syntax(name)?;
        Ok(DomainName {
            name: name.to_owned(),
            wildcard: false,
        })
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for DomainName {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_name(s)
    }
}

impl AsRef<str> for DomainName {
    fn as_ref(&self) -> &str {
        &self.name
    }
}

/// Canonicalizes a raw name harvested from a certificate or URL host.
///
/// Lowercases, strips one trailing dot and one leading `*.` label, converts
/// U-labels to A-labels and checks LDH syntax on every label.
pub fn normalize_name(raw: &str) -> Result<DomainName, DomainError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(DomainError::NotADomain(raw.to_owned()));
    }
    if trimmed
        .chars()
        .any(|c| c.is_whitespace() || c == '@' || c == '/' || c == ':' && !looks_like_ipv6(trimmed))
    {
        return Err(DomainError::NotADomain(raw.to_owned()));
    }
    if is_ip_literal(trimmed) {
        return Err(DomainError::NotADomain(raw.to_owned()));
    }

    let mut rest = trimmed.strip_suffix('.').unwrap_or(trimmed);
    let wildcard = match rest.strip_prefix("*.") {
        Some(stripped) => {
            rest = stripped;
            true
        }
        None => false,
    };
    if rest.is_empty() {
        return Err(DomainError::NotADomain(raw.to_owned()));
    }
    if rest.contains('*') {
        return Err(DomainError::LabelSyntax {
            name: raw.to_owned(),
            reason: "wildcard only allowed as the leading label".into(),
        });
    }
    if is_ip_literal(rest) {
        return Err(DomainError::NotADomain(raw.to_owned()));
    }

    let needs_idna = !rest.is_ascii() || rest.to_ascii_lowercase().contains("xn--");
    let name = if needs_idna {
        idna::domain_to_ascii(rest).map_err(|_| DomainError::IdnaFailure(raw.to_owned()))?
    } else {
        rest.to_ascii_lowercase()
    };

    check_syntax(&name).map_err(|e| match e {
        DomainError::LabelSyntax { reason, .. } => DomainError::LabelSyntax {
            name: raw.to_owned(),
            reason,
        },
        other => other,
    })?;
    Ok(DomainName { name, wildcard })
}

fn looks_like_ipv6(s: &str) -> bool {
    let inner = s.trim_start_matches('[').trim_end_matches(']');
    inner.parse::<Ipv6Addr>().is_ok()
}

fn is_ip_literal(s: &str) -> bool {
    let inner = s.trim_start_matches('[').trim_end_matches(']');
    inner.parse::<Ipv4Addr>().is_ok() || inner.parse::<Ipv6Addr>().is_ok()
}

fn check_syntax(name: &str) -> Result<(), DomainError> {
    let fail = |reason: String| DomainError::LabelSyntax {
        name: name.to_owned(),
        reason,
    };
    if name.is_empty() {
        return Err(DomainError::NotADomain(name.to_owned()));
    }
    if name.len() > MAX_NAME_LEN {
        return Err(fail(format!(
            "name is {} octets, limit {MAX_NAME_LEN}",
            name.len()
        )));
    }
    for label in name.split('.') {
        if label.is_empty() {
            return Err(fail("empty label".into()));
        }
        if label.len() > MAX_LABEL_LEN {
            return Err(fail(format!(
                "label `{label}` exceeds {MAX_LABEL_LEN} octets"
            )));
        }
        if !label
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        {
            return Err(fail(format!("label `{label}` has characters outside LDH")));
        }
        if label.starts_with('-') || label.ends_with('-') {
            return Err(fail(format!(
                "label `{label}` starts or ends with a hyphen"
            )));
        }
    }
    // An all-numeric rightmost label cannot be a TLD.
    let tld = name.rsplit('.').next().unwrap_or(name);
    if tld.bytes().all(|b| b.is_ascii_digit()) {
        return Err(DomainError::NotADomain(name.to_owned()));
    }
    Ok(())
}
