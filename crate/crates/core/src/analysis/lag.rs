use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use super::AnalysisError;
use crate::domain::RegisteredDomain;

/// Empirical CDF of the delay, in whole days, between a name entering the
/// zone and its first CT appearance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagCdf {
    /// `(lag_days, cumulative_fraction)` at each observed lag, ascending.
    pub points: Vec<(u32, f64)>,
    pub sample_count: u64,
    /// Names first seen in CT before the zone; counted as lag 0.
    pub negative_clamped: u64,
    /// Zone arrivals never seen in CT; not part of the CDF.
    pub excluded_never_seen: u64,
}

impl LagCdf {
    /// Fraction of samples with lag at most `day`.
    pub fn at(&self, day: u32) -> f64 {
        let idx = self.points.partition_point(|(lag, _)| *lag <= day);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }
}

pub fn lag_cdf(
    first_ct_seen: &BTreeMap<RegisteredDomain, NaiveDate>,
    first_zone_seen: &BTreeMap<RegisteredDomain, NaiveDate>,
) -> Result<LagCdf, AnalysisError> {
    if first_zone_seen.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut negative_clamped = 0;
    let mut excluded_never_seen = 0;
    for (domain, zone_day) in first_zone_seen {
        let Some(ct_day) = first_ct_seen.get(domain) else {
            excluded_never_seen += 1;
            continue;
        };
        let days = (*ct_day - *zone_day).num_days();
        if days < 0 {
            negative_clamped += 1;
        }
        *counts.entry(days.max(0) as u32).or_default() += 1;
    }
    let sample_count: u64 = counts.values().sum();
    let mut running = 0;
    let points = counts
        .into_iter()
        .map(|(lag, n)| {
            running += n;
            (lag, running as f64 / sample_count as f64)
        })
        .collect();
    Ok(LagCdf {
        points,
        sample_count,
        negative_clamped,
        excluded_never_seen,
    })
}
