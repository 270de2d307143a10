//! Tabular report output: CSV with fixed headers and a JSON mirror using the
//! same field names.

use std::io::{self, Write};

use serde_json::{Map, Value};

use super::{Bucket, Category, CoverageReport, LagCdf, LogCoverage, PortClass, WebPresenceReport};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    /// Written with six decimals; `None` is an empty CSV field and JSON null.
    Frac(Option<f64>),
    Text(String),
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Frac(Some(f)) => format!("{f:.6}"),
            Cell::Frac(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(n) => Value::from(*n),
            Cell::Frac(Some(f)) => format!("{f:.6}")
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Frac(None) => Value::Null,
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Table {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.headers.len(),
            "row width must match headers"
        );
        self.rows.push(row);
    }

    /// Appends a column holding the same text on every row.
    pub fn with_constant(mut self, header: &str, value: &str) -> Table {
        self.headers.push(header.to_owned());
        for row in &mut self.rows {
            row.push(Cell::Text(value.to_owned()));
        }
        self
    }

    pub fn column(&self, header: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == header)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.headers)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::csv_field))?;
        }
        writer.flush()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let object: Map<String, Value> = self
                        .headers
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::json))
                        .collect();
                    Value::Object(object)
                })
                .collect(),
        )
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        out.write_all(b"\n")
    }
}

const COVERAGE_PARTS: [&str; 7] = [
    "covered",
    "not_covered",
    "ct_only",
    "cc_only",
    "both",
    "ct_total",
    "cc_total",
];

fn part(report: &CoverageReport, name: &str) -> u64 {
    match name {
        "covered" => report.covered,
        "not_covered" => report.not_covered,
        "ct_only" => report.ct_only,
        "cc_only" => report.cc_only,
        "both" => report.both,
        "ct_total" => report.ct_total,
        "cc_total" => report.cc_total,
        _ => unreachable!("unknown coverage column {name}"),
    }
}

/// One row per report. `expired` is the expired-only share for the same row,
/// if defined.
pub fn coverage_table(rows: &[(CoverageReport, Option<f64>)]) -> Table {
    let mut headers: Vec<String> = vec!["tld".into(), "cutoff".into(), "total".into()];
    headers.extend(COVERAGE_PARTS.iter().map(|p| p.to_string()));
    headers.extend(COVERAGE_PARTS.iter().map(|p| format!("{p}_frac")));
    headers.extend(COVERAGE_PARTS.iter().map(|p| format!("{p}_pct")));
    headers.push("amassed_not_in_zone".into());
    headers.push("expired_only_frac".into());
    let mut table = Table {
        headers,
        rows: Vec::new(),
    };
    for (report, expired) in rows {
        let mut row = vec![
            Cell::Text(report.tld.clone()),
            Cell::Text(report.cutoff.to_string()),
            Cell::Int(report.total),
        ];
        row.extend(COVERAGE_PARTS.iter().map(|p| Cell::Int(part(report, p))));
        row.extend(
            COVERAGE_PARTS
                .iter()
                .map(|p| Cell::Frac(report.fraction(part(report, p)))),
        );
        row.extend(
            COVERAGE_PARTS
                .iter()
                .map(|p| match report.display_percent(part(report, p)) {
                    Some(pct) => Cell::Int(pct),
                    None => Cell::Text(String::new()),
                }),
        );
        row.push(Cell::Int(report.amassed_not_in_zone));
        row.push(Cell::Frac(*expired));
        table.push(row);
    }
    table
}

pub fn ranking_table(tld: &str, ranking: &[LogCoverage]) -> Table {
    let mut table = Table::new(&["tld", "rank", "log", "covered", "fraction"]);
    for (i, entry) in ranking.iter().enumerate() {
        table.push(vec![
            Cell::Text(tld.to_owned()),
            Cell::Int(i as u64 + 1),
            Cell::Text(entry.origin.clone()),
            Cell::Int(entry.covered),
            Cell::Frac(entry.fraction),
        ]);
    }
    table
}

pub fn web_table(reports: &[WebPresenceReport]) -> Table {
    let mut headers = vec![
        "tld",
        "category",
        "size",
        "a_record_yes",
        "a_record_no",
        "a_record_yes_frac",
    ];
    let port_frac: Vec<String> = PortClass::ALL
        .iter()
        .map(|p| format!("{}_frac", p.as_str()))
        .collect();
    headers.extend(PortClass::ALL.iter().map(|p| p.as_str()));
    headers.extend(port_frac.iter().map(String::as_str));
    let mut table = Table::new(&headers);
    for report in reports {
        for category in Category::ALL {
            let row = report.row(category);
            let mut cells = vec![
                Cell::Text(report.tld.clone()),
                Cell::Text(category.as_str().to_owned()),
                Cell::Int(row.size),
                Cell::Int(row.a_record_yes),
                Cell::Int(row.a_record_no),
                Cell::Frac(row.fraction(row.a_record_yes)),
            ];
            cells.extend(PortClass::ALL.iter().map(|p| Cell::Int(row.port_count(*p))));
            cells.extend(
                PortClass::ALL
                    .iter()
                    .map(|p| Cell::Frac(row.fraction(row.port_count(*p)))),
            );
            table.push(cells);
        }
    }
    table
}

pub fn lag_table(tld: &str, cdf: &LagCdf) -> Table {
    let mut table = Table::new(&[
        "tld",
        "lag_days",
        "cumulative_fraction",
        "sample_count",
        "negative_clamped",
        "excluded_never_seen",
    ]);
    for (lag, fraction) in &cdf.points {
        table.push(vec![
            Cell::Text(tld.to_owned()),
            Cell::Int(u64::from(*lag)),
            Cell::Frac(Some(*fraction)),
            Cell::Int(cdf.sample_count),
            Cell::Int(cdf.negative_clamped),
            Cell::Int(cdf.excluded_never_seen),
        ]);
    }
    table
}

pub fn bucket_table(buckets: &[Bucket]) -> Table {
    let mut table = Table::new(&[
        "bucket_min",
        "bucket_max",
        "tld_count",
        "min",
        "q1",
        "median",
        "q3",
        "max",
    ]);
    for b in buckets {
        table.push(vec![
            Cell::Int(b.lower()),
            Cell::Int(b.upper()),
            Cell::Int(b.tld_count),
            Cell::Frac(Some(b.min)),
            Cell::Frac(Some(b.q1)),
            Cell::Frac(Some(b.median)),
            Cell::Frac(Some(b.q3)),
            Cell::Frac(Some(b.max)),
        ]);
    }
    table
}
