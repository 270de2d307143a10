use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use super::CliError;
use crate::ct::{CtLogDescriptor, IngestOptions, RetryPolicy};
use crate::domain::{MatchPolicy, SuffixRuleSet};

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Concurrency {
    pub max_parallel_logs: usize,
    pub page_retry_limit: u32,
}

impl Default for Concurrency {
    fn default() -> Self {
        Concurrency {
            max_parallel_logs: 4,
            page_retry_limit: 5,
        }
    }
}

/// Operator configuration, read from a JSON file. Relative paths are resolved
/// against the file's directory.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub ct_logs: Vec<CtLogDescriptor>,
    pub psl_path: PathBuf,
    pub store_dir: PathBuf,
    #[serde(default)]
    pub tlds: Vec<String>,
    #[serde(default)]
    pub concurrency: Concurrency,
    #[serde(default)]
    pub strict_mode: bool,
    #[serde(default)]
    pub page_size: Option<u64>,
    #[serde(default)]
    pub retry_base_delay_ms: Option<u64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: Config = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.psl_path = base.join(&config.psl_path);
        config.store_dir = base.join(&config.store_dir);
        config.tlds = config
            .tlds
            .iter()
            .map(|t| t.trim_start_matches('.').to_ascii_lowercase())
            .collect();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.concurrency.max_parallel_logs == 0 {
            return Err(CliError::Usage(
                "concurrency.max_parallel_logs must be at least 1".into(),
            ));
        }
        if self.concurrency.page_retry_limit == 0 {
            return Err(CliError::Usage(
                "concurrency.page_retry_limit must be at least 1".into(),
            ));
        }
        if self.page_size == Some(0) {
            return Err(CliError::Usage("page_size must be at least 1".into()));
        }
        let mut names = HashSet::new();
        for log in &self.ct_logs {
            log.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            if !names.insert(log.name.as_str()) {
                return Err(CliError::Usage(format!(
                    "duplicate log name {:?}",
                    log.name
                )));
            }
        }
        Ok(())
    }

    pub fn rules(&self) -> Result<SuffixRuleSet, CliError> {
        let text = fs::read_to_string(&self.psl_path).map_err(|e| {
            CliError::Usage(format!("cannot read PSL {}: {e}", self.psl_path.display()))
        })?;
        let rules = SuffixRuleSet::parse(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", self.psl_path.display())))?;
        let policy = if self.strict_mode {
            MatchPolicy::Strict
        } else {
            MatchPolicy::ImplicitDefault
        };
        Ok(rules.with_policy(policy))
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        let mut policy = RetryPolicy {
            max_attempts: self.concurrency.page_retry_limit,
            ..RetryPolicy::default()
        };
        if let Some(ms) = self.retry_base_delay_ms {
            policy.base_delay = Duration::from_millis(ms);
        }
        policy
    }

    pub fn ingest_options(&self) -> IngestOptions {
        let mut options = IngestOptions::default();
        if let Some(page_size) = self.page_size {
            options.page_size = page_size;
        }
        options
    }
}
