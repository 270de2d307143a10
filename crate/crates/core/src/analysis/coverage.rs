use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::Serialize;

use super::AnalysisError;
use crate::domain::RegisteredDomain;
use crate::ground_truth::ZoneSnapshot;
use crate::store::AsOfView;

/// Partition of a zone by whether each name was learned from CT, from Common
/// Crawl, from both or from neither. All counts are registered domains in the
/// zone, except `amassed_not_in_zone`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub tld: String,
    pub cutoff: NaiveDate,
    pub total: u64,
    pub covered: u64,
    pub not_covered: u64,
    pub ct_only: u64,
    pub cc_only: u64,
    pub both: u64,
    pub ct_total: u64,
    pub cc_total: u64,
    /// Amassed names under the TLD that are not in the zone snapshot.
    pub amassed_not_in_zone: u64,
}

impl CoverageReport {
    /// Derives every aggregate from the four disjoint parts.
    pub fn from_partition(
        tld: impl Into<String>,
        cutoff: NaiveDate,
        ct_only: u64,
        cc_only: u64,
        both: u64,
        not_covered: u64,
    ) -> CoverageReport {
        let covered = ct_only + cc_only + both;
        CoverageReport {
            tld: tld.into(),
            cutoff,
            total: covered + not_covered,
            covered,
            not_covered,
            ct_only,
            cc_only,
            both,
            ct_total: ct_only + both,
            cc_total: cc_only + both,
            amassed_not_in_zone: 0,
        }
    }

    /// Checks the partition identities exactly.
    pub fn check_identities(&self) -> Result<(), AnalysisError> {
        self.check_identities_within(0)
    }

    /// Checks the partition identities, allowing each side to differ by up
    /// to `tolerance`. Useful for published tables whose cells were rounded
    /// independently.
    pub fn check_identities_within(&self, tolerance: u64) -> Result<(), AnalysisError> {
        let identities = [
            (
                "covered = ct_only + cc_only + both",
                self.covered,
                self.ct_only + self.cc_only + self.both,
            ),
            (
                "ct_total = ct_only + both",
                self.ct_total,
                self.ct_only + self.both,
            ),
            (
                "cc_total = cc_only + both",
                self.cc_total,
                self.cc_only + self.both,
            ),
            (
                "total = covered + not_covered",
                self.total,
                self.covered + self.not_covered,
            ),
        ];
        for (name, lhs, rhs) in identities {
            if lhs.abs_diff(rhs) > tolerance {
                return Err(AnalysisError::IdentityViolation(format!(
                    "{} {}: {name} fails ({lhs} vs {rhs}, tolerance {tolerance})",
                    self.tld, self.cutoff
                )));
            }
        }
        Ok(())
    }

    /// `count / total`; `None` for an empty zone.
    pub fn fraction(&self, count: u64) -> Option<f64> {
        (self.total > 0).then(|| count as f64 / self.total as f64)
    }

    /// `count / total` as a whole percentage, rounded half up.
    pub fn display_percent(&self, count: u64) -> Option<u64> {
        percent_half_up(count, self.total)
    }

    /// Sums counts across reports for one cut-off. The result still satisfies
    /// every identity.
    pub fn aggregate(
        label: &str,
        reports: &[CoverageReport],
    ) -> Result<CoverageReport, AnalysisError> {
        let first = reports.first().ok_or(AnalysisError::EmptyInput)?;
        if let Some(other) = reports.iter().find(|r| r.cutoff != first.cutoff) {
            return Err(AnalysisError::CutoffMismatch(first.cutoff, other.cutoff));
        }
        let sum = |f: fn(&CoverageReport) -> u64| reports.iter().map(f).sum::<u64>();
        let mut out = CoverageReport::from_partition(
            label,
            first.cutoff,
            sum(|r| r.ct_only),
            sum(|r| r.cc_only),
            sum(|r| r.both),
            sum(|r| r.not_covered),
        );
        out.amassed_not_in_zone = sum(|r| r.amassed_not_in_zone);
        Ok(out)
    }
}

/// Integer percentage of `count / total`, rounded half up.
pub fn percent_half_up(count: u64, total: u64) -> Option<u64> {
    if total == 0 {
        return None;
    }
    let scaled = u128::from(count) * 200 + u128::from(total);
    Some((scaled / (2 * u128::from(total))) as u64)
}

/// Intersects the amassed CT and CC names with the zone and partitions it.
pub fn coverage_report(
    zone: &ZoneSnapshot,
    view: &AsOfView,
) -> Result<CoverageReport, AnalysisError> {
    if zone.tld != view.tld {
        return Err(AnalysisError::TldMismatch(
            zone.tld.clone(),
            view.tld.clone(),
        ));
    }
    let mut ct_only = 0;
    let mut cc_only = 0;
    let mut both = 0;
    let mut not_covered = 0;
    for domain in &zone.domains {
        match (
            view.ct_names.contains(domain),
            view.cc_names.contains(domain),
        ) {
            (true, true) => both += 1,
            (true, false) => ct_only += 1,
            (false, true) => cc_only += 1,
            (false, false) => not_covered += 1,
        }
    }
    let mut report =
        CoverageReport::from_partition(&zone.tld, view.cutoff, ct_only, cc_only, both, not_covered);
    let amassed: BTreeSet<&RegisteredDomain> = view.ct_names.union(&view.cc_names).collect();
    report.amassed_not_in_zone = amassed
        .into_iter()
        .filter(|d| !zone.domains.contains(*d))
        .count() as u64;
    report.check_identities()?;
    Ok(report)
}

/// Covered names over zone names, summed across TLDs.
pub fn weighted_average(reports: &[CoverageReport]) -> Result<f64, AnalysisError> {
    let total = CoverageReport::aggregate("*", reports)?;
    total
        .fraction(total.covered)
        .ok_or(AnalysisError::DivisionUndefined)
}
