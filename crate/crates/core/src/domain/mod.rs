//! Canonical domain names and registered-domain extraction.

mod name;
mod psl;

pub use name::{normalize_name, DomainName};
pub use psl::{
    parse_suffix_rules, registered_domain, MatchPolicy, RegisteredDomain, RuleKind, SuffixRule,
    SuffixRuleSet,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("not a domain name: {0:?}")]
    NotADomain(String),
    #[error("bad label syntax in {name:?}: {reason}")]
    LabelSyntax { name: String, reason: String },
    #[error("IDNA conversion failed for {0:?}")]
    IdnaFailure(String),
    #[error("malformed suffix rule on line {line}: {reason}")]
    MalformedRule { line: usize, reason: String },
    #[error("{0} is a public suffix")]
    IsPublicSuffix(String),
    #[error("no suffix rule matches {0}")]
    NoMatchingRule(String),
}

/// Normalizes `raw` and reduces it to its registered domain.
pub fn registered_domain_of(
    raw: &str,
    rules: &SuffixRuleSet,
) -> Result<RegisteredDomain, DomainError> {
    registered_domain(&normalize_name(raw)?, rules)
}
