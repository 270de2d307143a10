use std::collections::BTreeMap;

use serde::Serialize;

use super::CoverageReport;

/// Five-number summary of coverage fractions for TLDs whose zone holds
/// `10^exponent ..< 10^(exponent+1)` names.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bucket {
    pub exponent: u32,
    pub tld_count: u64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Bucket {
    pub fn lower(&self) -> u64 {
        10u64.pow(self.exponent)
    }

    pub fn upper(&self) -> u64 {
        10u64.saturating_pow(self.exponent + 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BucketReport {
    pub buckets: Vec<Bucket>,
    /// TLDs left out because their zone was empty.
    pub skipped_empty: u64,
}

/// Quantile `q` of ascending `sorted` by linear interpolation between the
/// closest ranks (`h = (n-1)q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups `(total, covered)` pairs by order of magnitude of `total`.
pub fn bucket_report(sizes: impl IntoIterator<Item = (u64, u64)>) -> BucketReport {
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut skipped_empty = 0;
    for (total, covered) in sizes {
        if total == 0 {
            skipped_empty += 1;
            continue;
        }
        groups
            .entry(total.ilog10())
            .or_default()
            .push(covered as f64 / total as f64);
    }
    let buckets = groups
        .into_iter()
        .map(|(exponent, mut fractions)| {
            fractions.sort_by(f64::total_cmp);
            Bucket {
                exponent,
                tld_count: fractions.len() as u64,
                min: fractions[0],
                q1: quantile(&fractions, 0.25),
                median: quantile(&fractions, 0.5),
                q3: quantile(&fractions, 0.75),
                max: fractions[fractions.len() - 1],
            }
        })
        .collect();
    BucketReport {
        buckets,
        skipped_empty,
    }
}

/// Bucket input from coverage reports.
pub fn bucket_report_from(reports: &[CoverageReport]) -> BucketReport {
    bucket_report(reports.iter().map(|r| (r.total, r.covered)))
}
