use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{CliError, Config, ReportArgs, ReportKind};
use crate::analysis::output::{
    bucket_table, coverage_table, lag_table, ranking_table, web_table, Table,
};
use crate::analysis::{
    bucket_report_from, coverage_report, expired_contribution, lag_cdf, single_log_ranking,
    web_presence_report, weighted_average, CoverageReport,
};
use crate::domain::SuffixRuleSet;
use crate::ground_truth::{
    load_a_records, load_port_scan, load_zone_series, load_zone_snapshot, zone_first_seen,
    LoadOptions, ZoneSnapshot,
};
use crate::store::{Source, Store, StoreError};

struct Context<'a> {
    config: &'a Config,
    args: &'a ReportArgs,
    rules: SuffixRuleSet,
    store: Store,
    options: LoadOptions,
}

pub fn report(config: &Config, args: &ReportArgs) -> Result<(), CliError> {
    let rules = config.rules()?;
    if !config.store_dir.is_dir() {
        return Err(CliError::Usage(format!(
            "store {} does not exist",
            config.store_dir.display()
        )));
    }
    let store = Store::open(&config.store_dir).map_err(CliError::runtime)?;
    if store.is_locked() {
        return Err(CliError::Runtime(format!(
            "store {} is locked by a running ingest or compaction (remove LOCK if it is stale)",
            store.root().display()
        )));
    }
    let ctx = Context {
        config,
        args,
        rules,
        store,
        options: LoadOptions {
            header: args.header,
        },
    };
    match args.kind {
        ReportKind::Coverage => ctx.coverage(),
        ReportKind::Web => ctx.web(),
        ReportKind::Lag => ctx.lag(),
        ReportKind::Buckets => ctx.buckets(),
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "input {} does not exist",
            path.display()
        )))
    }
}

fn normalize_tld(tld: &str) -> String {
    tld.trim_start_matches('.').to_ascii_lowercase()
}

impl Context<'_> {
    fn cutoff(&self) -> Result<NaiveDate, CliError> {
        self.args.cutoff.ok_or_else(|| {
            CliError::Usage("--cutoff YYYY-MM-DD is required for this report".into())
        })
    }

    fn tlds(&self) -> Vec<String> {
        if self.args.tlds.is_empty() {
            self.config.tlds.clone()
        } else {
            self.args.tlds.iter().map(|t| normalize_tld(t)).collect()
        }
    }

    /// Zone files keyed by TLD, from `--zone` and, for buckets, `--zone-dir`.
    fn zone_paths(&self) -> Result<BTreeMap<String, PathBuf>, CliError> {
        let tlds = self.tlds();
        let mut out = BTreeMap::new();
        for spec in &self.args.zones {
            let (tld, path) = match spec.split_once('=') {
                Some((tld, path)) => (normalize_tld(tld), PathBuf::from(path)),
                None if tlds.len() == 1 => (tlds[0].clone(), PathBuf::from(spec)),
                None => {
                    return Err(CliError::Usage(format!(
                        "--zone {spec}: use TLD=PATH when more or fewer than one TLD is selected"
                    )))
                }
            };
            require_file(&path)?;
            out.insert(tld, path);
        }
        if let Some(dir) = &self.args.zone_dir {
            let entries = fs::read_dir(dir)
                .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
            for entry in entries {
                let path = entry.map_err(CliError::runtime)?.path();
                let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                    continue;
                };
                let tld = normalize_tld(name.split('.').next().unwrap_or_default());
                if path.is_file() && !tld.is_empty() && (tlds.is_empty() || tlds.contains(&tld)) {
                    out.entry(tld).or_insert(path);
                }
            }
        }
        if let Some(missing) = tlds.iter().find(|t| !out.contains_key(*t)) {
            return Err(CliError::Usage(format!("no zone file for .{missing}")));
        }
        if out.is_empty() {
            return Err(CliError::Usage(
                "no zone file given (--zone or --zone-dir)".into(),
            ));
        }
        Ok(out)
    }

    fn load_zone(&self, tld: &str, path: &Path, date: NaiveDate) -> Result<ZoneSnapshot, CliError> {
        let loaded = load_zone_snapshot(path, tld, date, &self.rules, self.options)
            .map_err(CliError::runtime)?;
        for warning in &loaded.warnings {
            eprintln!("{}: {warning}", path.display());
        }
        Ok(loaded.snapshot)
    }

    fn query(&self, tld: &str, cutoff: NaiveDate) -> Result<crate::store::AsOfView, CliError> {
        self.store
            .query_asof(tld, cutoff, self.config.strict_mode)
            .map_err(|e| match e {
                StoreError::UnknownTld(_) => CliError::Runtime(format!("{e} (strict mode)")),
                other => CliError::runtime(other),
            })
    }

    fn write(&self, name: &str, table: Table) -> Result<(), CliError> {
        let table = table.with_constant("psl_version", self.rules.version_tag());
        let out = &self.args.out;
        fs::create_dir_all(out)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
        let write = |path: PathBuf, json: bool| -> Result<(), CliError> {
            let file = File::create(&path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let result = if json {
                table.write_json(BufWriter::new(file))
            } else {
                table.write_csv(BufWriter::new(file))
            };
            result.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
            Ok(())
        };
        write(out.join(format!("{name}.csv")), false)?;
        if self.args.json {
            write(out.join(format!("{name}.json")), true)?;
        }
        Ok(())
    }

    fn coverage(&self) -> Result<(), CliError> {
        let cutoff = self.cutoff()?;
        let zones = self.zone_paths()?;
        let mut rows = Vec::new();
        let mut ranking = Table::new(&["tld", "rank", "log", "covered", "fraction"]);
        for (tld, path) in &zones {
            let zone = self.load_zone(tld, path, cutoff)?;
            let view = self.query(tld, cutoff)?;
            let report = coverage_report(&zone, &view).map_err(CliError::runtime)?;
            let expired = expired_contribution(&zone, &view).ok();
            ranking
                .rows
                .extend(ranking_table(tld, &single_log_ranking(&zone, &view)).rows);
            rows.push((report, expired));
        }
        if rows.len() > 1 {
            let reports: Vec<CoverageReport> = rows.iter().map(|(r, _)| r.clone()).collect();
            let all = CoverageReport::aggregate("ALL", &reports).map_err(CliError::runtime)?;
            let expired_count: f64 = rows
                .iter()
                .map(|(r, e)| e.map_or(0.0, |f| (f * r.ct_total as f64).round()))
                .sum();
            let expired = (all.ct_total > 0).then(|| expired_count / all.ct_total as f64);
            println!(
                "weighted average coverage: {:.6}",
                weighted_average(&reports).map_err(CliError::runtime)?
            );
            rows.push((all, expired));
        }
        for (report, _) in &rows {
            report.check_identities().map_err(CliError::runtime)?;
            println!(
                "{} {}: covered {}/{} ({}%), ct_only {}, cc_only {}, both {}",
                report.tld,
                report.cutoff,
                report.covered,
                report.total,
                report
                    .display_percent(report.covered)
                    .map_or("-".into(), |p| p.to_string()),
                report.ct_only,
                report.cc_only,
                report.both
            );
        }
        self.write("coverage", coverage_table(&rows))?;
        self.write("log_ranking", ranking)
    }

    fn web(&self) -> Result<(), CliError> {
        let cutoff = self.cutoff()?;
        let a_path = self
            .args
            .a_records
            .as_ref()
            .ok_or_else(|| CliError::Usage("web report needs --a-records".into()))?;
        let ports_path = self
            .args
            .ports
            .as_ref()
            .ok_or_else(|| CliError::Usage("web report needs --ports".into()))?;
        require_file(a_path)?;
        require_file(ports_path)?;
        let zones = self.zone_paths()?;
        let a_records =
            load_a_records(a_path, &self.rules, self.options).map_err(CliError::runtime)?;
        let ports = load_port_scan(ports_path, self.options).map_err(CliError::runtime)?;
        if a_records.malformed + ports.malformed > 0 {
            eprintln!(
                "skipped {} malformed A-record and {} malformed port rows",
                a_records.malformed, ports.malformed
            );
        }
        let mut reports = Vec::new();
        for (tld, path) in &zones {
            let zone = self.load_zone(tld, path, cutoff)?;
            let view = self.query(tld, cutoff)?;
            let report = web_presence_report(&zone, &view, &a_records, &ports);
            if !report.rows_are_consistent() || report.total() != zone.len() as u64 {
                return Err(CliError::Runtime(format!(
                    "web presence cross-tab for .{tld} does not add up"
                )));
            }
            reports.push(report);
        }
        self.write("web_presence", web_table(&reports))
    }

    fn lag(&self) -> Result<(), CliError> {
        let tlds = self.tlds();
        let [tld] = tlds.as_slice() else {
            return Err(CliError::Usage("lag report needs exactly one --tld".into()));
        };
        let dir = self.args.zone_dir.as_ref().ok_or_else(|| {
            CliError::Usage("lag report needs --zone-dir with daily zone files".into())
        })?;
        if !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "{} is not a directory",
                dir.display()
            )));
        }
        let series =
            load_zone_series(dir, tld, &self.rules, self.options).map_err(CliError::runtime)?;
        if series.len() < 2 {
            return Err(CliError::Usage(format!(
                "{} holds {} dated zone file(s); at least two are needed",
                dir.display(),
                series.len()
            )));
        }
        let snapshots: Vec<ZoneSnapshot> = series.into_iter().map(|z| z.snapshot).collect();
        let first_zone = zone_first_seen(&snapshots).map_err(CliError::runtime)?;
        let first_ct = self
            .store
            .first_seen(tld, Source::Ct, self.args.cutoff)
            .map_err(CliError::runtime)?;
        let cdf = lag_cdf(&first_ct, &first_zone)
            .map_err(|e| CliError::Runtime(format!("no new registrations: {e}")))?;
        if cdf.sample_count > 0 && cdf.points.last().map(|p| p.1) != Some(1.0) {
            return Err(CliError::Runtime("lag CDF does not end at 1.0".into()));
        }
        println!(
            "{tld}: {} samples, {} never seen in CT, {} seen in CT first; same day {:.6}, within 5 days {:.6}",
            cdf.sample_count,
            cdf.excluded_never_seen,
            cdf.negative_clamped,
            cdf.at(0),
            cdf.at(5)
        );
        self.write("lag_cdf", lag_table(tld, &cdf))
    }

    fn buckets(&self) -> Result<(), CliError> {
        let cutoff = self.cutoff()?;
        let zones = self.zone_paths()?;
        let mut reports = Vec::new();
        for (tld, path) in &zones {
            let zone = self.load_zone(tld, path, cutoff)?;
            let view = self.query(tld, cutoff)?;
            let report = coverage_report(&zone, &view).map_err(CliError::runtime)?;
            report.check_identities().map_err(CliError::runtime)?;
            reports.push(report);
        }
        let buckets = bucket_report_from(&reports);
        if buckets.skipped_empty > 0 {
            eprintln!("left out {} TLD(s) with empty zones", buckets.skipped_empty);
        }
        self.write("buckets", bucket_table(&buckets.buckets))
    }
}
