use std::ops::RangeInclusive;
use std::thread;
use std::time::Duration;

use serde::Deserialize;

use super::{CtError, CtLogDescriptor, RawEntry, SignedTreeHead};

/// Retry schedule for 429, 5xx and transport failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            max_delay: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts.
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Exponential backoff for the given zero-based retry, with up to 50%
    /// random jitter added.
    pub fn delay(&self, retry: u32) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX))
            .min(self.max_delay);
        let jitter_ms = (exp.as_millis() / 2) as u64;
        if jitter_ms == 0 {
            return exp;
        }
        exp + Duration::from_millis(rand::random_range(0..=jitter_ms))
    }
}

#[derive(Deserialize)]
struct SthBody {
    tree_size: u64,
    timestamp: u64,
}

#[derive(Deserialize)]
struct EntriesBody {
    entries: Vec<RawEntry>,
}

/// Blocking client for the RFC 6962 read API.
#[derive(Clone, Debug)]
pub struct CtClient {
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl Default for CtClient {
    fn default() -> Self {
        CtClient::new(RetryPolicy::default())
    }
}

impl CtClient {
    pub fn new(retry: RetryPolicy) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        CtClient { agent, retry }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        self.retry
    }

    pub fn fetch_sth(&self, log: &CtLogDescriptor) -> Result<SignedTreeHead, CtError> {
        let url = log.endpoint("get-sth");
        let body = self.get_with_retry(&url, &[])?;
        let sth: SthBody = serde_json::from_str(&body).map_err(|e| CtError::MalformedResponse {
            url: url.clone(),
            message: e.to_string(),
        })?;
        Ok(SignedTreeHead {
            tree_size: sth.tree_size,
            timestamp: sth.timestamp,
        })
    }

    /// Fetches the inclusive index range, re-requesting the remainder whenever
    /// the log returns a short page.
    pub fn fetch_entries(
        &self,
        log: &CtLogDescriptor,
        range: RangeInclusive<u64>,
        tree_size: u64,
    ) -> Result<Vec<RawEntry>, CtError> {
        let (start, end) = (*range.start(), *range.end());
        if start > end || end >= tree_size {
            return Err(CtError::RangeBeyondTree {
                start,
                end,
                tree_size,
            });
        }
        let url = log.endpoint("get-entries");
        let wanted = (end - start + 1) as usize;
        let mut out = Vec::with_capacity(wanted);
        let mut next = start;
        while next <= end {
            let body = self.get_with_retry(
                &url,
                &[("start", next.to_string()), ("end", end.to_string())],
            )?;
            let page: EntriesBody =
                serde_json::from_str(&body).map_err(|e| CtError::MalformedResponse {
                    url: url.clone(),
                    message: e.to_string(),
                })?;
            if page.entries.is_empty() {
                return Err(CtError::MalformedResponse {
                    url,
                    message: format!("empty page for start={next} end={end}"),
                });
            }
            let remaining = (end - next + 1) as usize;
            let take = page.entries.len().min(remaining);
            out.extend(page.entries.into_iter().take(take));
            next += take as u64;
        }
        Ok(out)
    }

    fn get_with_retry(&self, url: &str, query: &[(&str, String)]) -> Result<String, CtError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            match self.get_once(url, query) {
                Ok(body) => return Ok(body),
                Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                    thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn get_once(&self, url: &str, query: &[(&str, String)]) -> Result<String, CtError> {
        let mut request = self.agent.get(url);
        for (k, v) in query {
            request = request.query(*k, v);
        }
        let transport = |e: ureq::Error| CtError::Transport {
            url: url.to_owned(),
            message: e.to_string(),
        };
        let mut response = request.call().map_err(transport)?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(CtError::Http {
                status,
                url: url.to_owned(),
            });
        }
        response.body_mut().read_to_string().map_err(transport)
    }
}
