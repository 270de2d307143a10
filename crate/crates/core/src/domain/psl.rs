use std::collections::HashSet;
use std::fmt;

use sha2::{Digest, Sha256};

use super::name::{normalize_name, DomainName};
use super::DomainError;

/// What to do with a name whose rightmost labels match no rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchPolicy {
    /// The implicit `*` rule applies: an unlisted TLD is its own public suffix.
    #[default]
    ImplicitDefault,
    /// Unlisted names are rejected with [`DomainError::NoMatchingRule`].
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Normal,
    Wildcard,
    Exception,
}

/// One public-suffix rule. `base` is the dotted rule with its `*.` or `!`
/// marker removed; a bare `*` is a wildcard with an empty base.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SuffixRule {
    pub base: String,
    pub kind: RuleKind,
}

impl fmt::Display for SuffixRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RuleKind::Normal => f.write_str(&self.base),
            RuleKind::Wildcard if self.base.is_empty() => f.write_str("*"),
            RuleKind::Wildcard => write!(f, "*.{}", self.base),
            RuleKind::Exception => write!(f, "!{}", self.base),
        }
    }
}

/// A parsed public suffix list.
#[derive(Clone, Debug)]
pub struct SuffixRuleSet {
    normal: HashSet<String>,
    wildcard: HashSet<String>,
    exception: HashSet<String>,
    version_tag: String,
    policy: MatchPolicy,
}

impl SuffixRuleSet {
    /// Parses Public Suffix List text. The version tag defaults to a digest of
    /// the input so that every report can name the exact rule snapshot.
    pub fn parse(text: &str) -> Result<SuffixRuleSet, DomainError> {
        parse_suffix_rules(text)
    }

    /// Builds a rule set from rule strings in list syntax. Handy for fixtures.
    pub fn from_rules<'a>(rules: impl IntoIterator<Item = &'a str>) -> Result<Self, DomainError> {
        let text: Vec<&str> = rules.into_iter().collect();
        parse_suffix_rules(&text.join("\n"))
    }

    pub fn with_policy(mut self, policy: MatchPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_version_tag(mut self, tag: impl Into<String>) -> Self {
        self.version_tag = tag.into();
        self
    }

    pub fn policy(&self) -> MatchPolicy {
        self.policy
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }

    pub fn len(&self) -> usize {
        self.normal.len() + self.wildcard.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, rule: &SuffixRule) -> bool {
        match rule.kind {
            RuleKind::Normal => self.normal.contains(&rule.base),
            RuleKind::Wildcard => self.wildcard.contains(&rule.base),
            RuleKind::Exception => self.exception.contains(&rule.base),
        }
    }

    /// All rules, sorted by their list rendering.
    pub fn rules(&self) -> Vec<SuffixRule> {
        let mut out: Vec<SuffixRule> = self
            .normal
            .iter()
            .map(|b| (b, RuleKind::Normal))
            .chain(self.wildcard.iter().map(|b| (b, RuleKind::Wildcard)))
            .chain(self.exception.iter().map(|b| (b, RuleKind::Exception)))
            .map(|(base, kind)| SuffixRule {
                base: base.clone(),
                kind,
            })
            .collect();
        out.sort_by_key(|r| r.to_string());
        out
    }

    /// Number of labels in the public suffix of `name`, or `None` when no rule
    /// matches and the policy is strict.
    pub fn public_suffix_len(&self, name: &DomainName) -> Option<usize> {
        let n = name.label_count();
        let mut longest: Option<usize> = None;
        let mut exception: Option<usize> = None;
        for k in 1..=n {
            let suffix = name.suffix(k);
            if self.exception.contains(suffix) {
                exception = Some(exception.map_or(k, |e: usize| e.max(k)));
            }
            if self.normal.contains(suffix) {
                longest = Some(k);
            }
            // `*.base` matches k labels when `base` is the rightmost k-1.
            let base = name.suffix(k - 1);
            if self.wildcard.contains(base) {
                longest = Some(k);
            }
        }
        if let Some(k) = exception {
            return Some(k - 1);
        }
        match (longest, self.policy) {
            (Some(k), _) => Some(k),
            (None, MatchPolicy::ImplicitDefault) => Some(1),
            (None, MatchPolicy::Strict) => None,
        }
    }
}

/// A registered domain (eTLD+1): the public suffix plus one label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegisteredDomain(DomainName);

impl RegisteredDomain {
    pub fn name(&self) -> &DomainName {
        &self.0
    }

    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }

    pub fn tld(&self) -> &str {
        self.0.tld()
    }

    /// Decodes a stored name. Checks syntax and the two-label minimum but not
    /// suffix rules, which were applied when the record was written.
    pub fn from_canonical(name: &str) -> Result<RegisteredDomain, DomainError> {
        let name = DomainName::from_canonical(name)?;
        if name.label_count() < 2 {
            return Err(DomainError::IsPublicSuffix(name.to_string()));
        }
        Ok(RegisteredDomain(name))
    }
}

impl fmt::Display for RegisteredDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl AsRef<str> for RegisteredDomain {
    fn as_ref(&self) -> &str {
        self.0.as_str()
    }
}

/// Parses Public Suffix List text: one rule per line (first whitespace
/// separated token), `//` comments, `*.` wildcards and `!` exceptions.
pub fn parse_suffix_rules(text: &str) -> Result<SuffixRuleSet, DomainError> {
    let mut normal = HashSet::new();
    let mut wildcard = HashSet::new();
    let mut exception_lines: Vec<(String, usize)> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_start_matches('\u{feff}').trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let token = line.split_whitespace().next().unwrap_or_default();
        let malformed = |reason: &str| DomainError::MalformedRule {
            line: line_no,
            reason: format!("`{token}`: {reason}"),
        };

        let (kind, body) = if let Some(rest) = token.strip_prefix('!') {
            (RuleKind::Exception, rest)
        } else if token == "*" {
            (RuleKind::Wildcard, "")
        } else if let Some(rest) = token.strip_prefix("*.") {
            (RuleKind::Wildcard, rest)
        } else {
            (RuleKind::Normal, token)
        };

        let base = if body.is_empty() && kind == RuleKind::Wildcard {
            String::new()
        } else {
            if body.contains('*') || body.contains('!') {
                return Err(malformed("markers allowed only at the start"));
            }
            let name = normalize_name(body).map_err(|e| malformed(&e.to_string()))?;
            if name.original_was_wildcard() {
                return Err(malformed("nested wildcard"));
            }
            name.to_string()
        };

        match kind {
            RuleKind::Normal => {
                normal.insert(base);
            }
            RuleKind::Wildcard => {
                wildcard.insert(base);
            }
            RuleKind::Exception => {
                if !base.contains('.') {
                    return Err(malformed("exception must have at least two labels"));
                }
                exception_lines.push((base, line_no));
            }
        }
    }

    let mut exception = HashSet::new();
    for (base, line_no) in exception_lines {
        let parent = &base[base.find('.').map_or(0, |p| p + 1)..];
        if !wildcard.contains(parent) {
            return Err(DomainError::MalformedRule {
                line: line_no,
                reason: format!("exception `!{base}` has no wildcard `*.{parent}` to shadow"),
            });
        }
        exception.insert(base);
    }

    let digest = Sha256::digest(text.as_bytes());
    Ok(SuffixRuleSet {
        normal,
        wildcard,
        exception,
        version_tag: format!("psl-{}", &hex::encode(digest)[..12]),
        policy: MatchPolicy::ImplicitDefault,
    })
}

/// Maps a name to its registered domain with the standard public-suffix
/// algorithm: an exception rule beats every other match, otherwise the rule
/// with the most labels wins.
pub fn registered_domain(
    name: &DomainName,
    rules: &SuffixRuleSet,
) -> Result<RegisteredDomain, DomainError> {
    let suffix_len = rules
        .public_suffix_len(name)
        .ok_or_else(|| DomainError::NoMatchingRule(name.to_string()))?;
    if name.label_count() <= suffix_len {
        return Err(DomainError::IsPublicSuffix(name.to_string()));
    }
    let registered = name.suffix(suffix_len + 1);
    Ok(RegisteredDomain(DomainName::from_canonical(registered)?))
}
