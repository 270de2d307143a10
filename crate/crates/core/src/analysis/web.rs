use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ground_truth::{ARecordTable, PortScanTable, ZoneSnapshot};
use crate::store::AsOfView;

/// Which public source(s) a zone name was learned from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Category {
    Both,
    CtOnly,
    CcOnly,
    Neither,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Both,
        Category::CtOnly,
        Category::CcOnly,
        Category::Neither,
    ];

    pub fn of(in_ct: bool, in_cc: bool) -> Category {
        match (in_ct, in_cc) {
            (true, true) => Category::Both,
            (true, false) => Category::CtOnly,
            (false, true) => Category::CcOnly,
            (false, false) => Category::Neither,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Both => "both",
            Category::CtOnly => "ct_only",
            Category::CcOnly => "cc_only",
            Category::Neither => "neither",
        }
    }
}

/// Web ports open across all addresses of a name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PortClass {
    No,
    HttpOnly,
    HttpsOnly,
    BothPorts,
}

impl PortClass {
    pub const ALL: [PortClass; 4] = [
        PortClass::No,
        PortClass::HttpOnly,
        PortClass::HttpsOnly,
        PortClass::BothPorts,
    ];

    pub fn from_ports(ports: &BTreeSet<u16>) -> PortClass {
        match (ports.contains(&80), ports.contains(&443)) {
            (true, true) => PortClass::BothPorts,
            (true, false) => PortClass::HttpOnly,
            (false, true) => PortClass::HttpsOnly,
            (false, false) => PortClass::No,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PortClass::No => "no",
            PortClass::HttpOnly => "http_only",
            PortClass::HttpsOnly => "https_only",
            PortClass::BothPorts => "both_ports",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CategoryRow {
    pub size: u64,
    pub a_record_yes: u64,
    pub a_record_no: u64,
    pub ports: BTreeMap<PortClass, u64>,
}

impl CategoryRow {
    pub fn port_count(&self, class: PortClass) -> u64 {
        self.ports.get(&class).copied().unwrap_or(0)
    }

    /// `count / size`; `None` for an empty category.
    pub fn fraction(&self, count: u64) -> Option<f64> {
        (self.size > 0).then(|| count as f64 / self.size as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WebPresenceReport {
    pub tld: String,
    pub rows: BTreeMap<Category, CategoryRow>,
}

impl WebPresenceReport {
    pub fn row(&self, category: Category) -> &CategoryRow {
        &self.rows[&category]
    }

    /// Every row's A-record split and port cross-tab must sum to its size.
    pub fn rows_are_consistent(&self) -> bool {
        self.rows.values().all(|row| {
            row.a_record_yes + row.a_record_no == row.size
                && row.ports.values().sum::<u64>() == row.size
        })
    }

    pub fn total(&self) -> u64 {
        self.rows.values().map(|r| r.size).sum()
    }
}

/// Cross-tabulates zone names by source category, A-record presence and open
/// web ports.
pub fn web_presence_report(
    zone: &ZoneSnapshot,
    view: &AsOfView,
    a_records: &ARecordTable,
    ports: &PortScanTable,
) -> WebPresenceReport {
    let mut rows: BTreeMap<Category, CategoryRow> = Category::ALL
        .iter()
        .map(|c| {
            let row = CategoryRow {
                ports: PortClass::ALL.iter().map(|p| (*p, 0)).collect(),
                ..CategoryRow::default()
            };
            (*c, row)
        })
        .collect();
    for domain in &zone.domains {
        let category = Category::of(
            view.ct_names.contains(domain),
            view.cc_names.contains(domain),
        );
        let row = rows.get_mut(&category).expect("all categories present");
        row.size += 1;
        let addresses = a_records.addresses(domain).filter(|a| !a.is_empty());
        let class = match addresses {
            None => {
                row.a_record_no += 1;
                PortClass::No
            }
            Some(addresses) => {
                row.a_record_yes += 1;
                let open: BTreeSet<u16> = addresses
                    .iter()
                    .filter_map(|a| ports.ports(a))
                    .flatten()
                    .copied()
                    .collect();
                PortClass::from_ports(&open)
            }
        };
        *row.ports.entry(class).or_default() += 1;
    }
    WebPresenceReport {
        tld: zone.tld.clone(),
        rows,
    }
}
