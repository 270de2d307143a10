use serde::Serialize;

use super::AnalysisError;
use crate::ground_truth::ZoneSnapshot;
use crate::store::AsOfView;

/// How much of the in-zone CT coverage a single log provides on its own.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogCoverage {
    pub origin: String,
    pub covered: u64,
    /// `covered / |CT ∩ zone|`; `None` when no in-zone name came from CT.
    pub fraction: Option<f64>,
}

/// Ranks logs by the in-zone CT names each one holds, descending, ties broken
/// by log name.
pub fn single_log_ranking(zone: &ZoneSnapshot, view: &AsOfView) -> Vec<LogCoverage> {
    let ct_in_zone = view
        .ct_names
        .iter()
        .filter(|d| zone.domains.contains(*d))
        .count() as u64;
    let mut ranking: Vec<LogCoverage> = view
        .per_log_names
        .iter()
        .map(|(origin, names)| {
            let covered = names
                .iter()
                .filter(|d| zone.domains.contains(*d) && view.ct_names.contains(*d))
                .count() as u64;
            LogCoverage {
                origin: origin.clone(),
                covered,
                fraction: (ct_in_zone > 0).then(|| covered as f64 / ct_in_zone as f64),
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.covered
            .cmp(&a.covered)
            .then_with(|| a.origin.cmp(&b.origin))
    });
    ranking
}

/// Share of in-zone CT names whose only CT evidence had expired by the
/// cut-off.
pub fn expired_contribution(zone: &ZoneSnapshot, view: &AsOfView) -> Result<f64, AnalysisError> {
    let in_zone_ct = view
        .ct_names
        .iter()
        .filter(|d| zone.domains.contains(*d))
        .count();
    if in_zone_ct == 0 {
        return Err(AnalysisError::DivisionUndefined);
    }
    let expired = view
        .expired_only_names
        .iter()
        .filter(|d| zone.domains.contains(*d) && view.ct_names.contains(*d))
        .count();
    Ok(expired as f64 / in_zone_ct as f64)
}
