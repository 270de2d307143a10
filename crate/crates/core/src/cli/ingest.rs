use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use super::{CliError, Config};
use crate::cc::{self, CcStats, CrawlSnapshotId};
use crate::ct::{run_ingest, CtClient, CtError, CtLogDescriptor, IngestCheckpoint, IngestOutcome};
use crate::domain::SuffixRuleSet;
use crate::store::{Store, StoreError};

fn open_store(config: &Config) -> Result<Store, CliError> {
    Store::open(&config.store_dir).map_err(|e| CliError::Usage(format!("store_dir: {e}")))
}

fn ingest_one(
    store: &Store,
    client: &CtClient,
    log: &CtLogDescriptor,
    rules: &SuffixRuleSet,
    config: &Config,
) -> Result<IngestOutcome, CtError> {
    let path = store.checkpoint_path(&log.name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CtError::Checkpoint(format!("{}: {e}", parent.display())))?;
    }
    let checkpoint = IngestCheckpoint::load(&path, &log.name)?;
    let mut writer = store.writer();
    let mut persist = |cp: &IngestCheckpoint, stats: &crate::ct::IngestStats| {
        cp.save(&path)?;
        eprintln!(
            "{}: {}/{} ({} certs, {} skipped entries)",
            cp.log_name,
            cp.next_index,
            cp.sth_size,
            stats.certificates,
            stats.skipped_entries()
        );
        Ok(())
    };
    let result = run_ingest(
        client,
        log,
        rules,
        checkpoint,
        &mut writer,
        &mut persist,
        &config.ingest_options(),
    );
    if result.is_err() {
        writer.discard();
    }
    result
}

/// Fetches the selected logs on a bounded pool of worker threads. Every log
/// is attempted; the command fails if any one of them did.
pub fn ingest_ct(config: &Config, filter: &[String]) -> Result<(), CliError> {
    let selected: Vec<&CtLogDescriptor> = if filter.is_empty() {
        config.ct_logs.iter().collect()
    } else {
        let known: HashSet<&str> = config.ct_logs.iter().map(|l| l.name.as_str()).collect();
        if let Some(missing) = filter.iter().find(|f| !known.contains(f.as_str())) {
            return Err(CliError::Usage(format!(
                "no configured log named {missing:?}"
            )));
        }
        config
            .ct_logs
            .iter()
            .filter(|l| filter.contains(&l.name))
            .collect()
    };
    if selected.is_empty() {
        return Err(CliError::Usage("no CT logs configured".into()));
    }
    let rules = config.rules()?;
    let store = open_store(config)?;
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    let workers = config.concurrency.max_parallel_logs.min(selected.len());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let client = CtClient::new(config.retry_policy());
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(log) = selected.get(i) else { break };
                    match ingest_one(&store, &client, log, &rules, config) {
                        Ok(outcome) => {
                            let s = outcome.stats;
                            println!(
                                "{}: done at {}/{}; pages {} entries {} certs {} precerts {} observations {} malformed_leaf {} malformed_der {} skipped_names {}",
                                log.name,
                                outcome.checkpoint.next_index,
                                outcome.tree_size,
                                s.pages,
                                s.entries_fetched,
                                s.certificates,
                                s.precertificates,
                                s.observations,
                                s.malformed_leaf,
                                s.malformed_der,
                                s.skipped_names
                            );
                        }
                        Err(e) => {
                            eprintln!("{}: failed: {e}", log.name);
                            failures.lock().unwrap().push(log.name.clone());
                        }
                    }
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} log(s) failed: {}",
            failures.len(),
            failures.join(", ")
        )))
    }
}

pub fn ingest_cc(config: &Config, snapshot: &str, files: &[PathBuf]) -> Result<(), CliError> {
    if files.is_empty() {
        return Err(CliError::Usage(
            "ingest cc needs at least one index file".into(),
        ));
    }
    let snapshot = CrawlSnapshotId::parse(snapshot).map_err(|e| CliError::Usage(e.to_string()))?;
    let rules = config.rules()?;
    let store = open_store(config)?;
    let filter: HashSet<String> = config.tlds.iter().cloned().collect();
    let filter = (!filter.is_empty()).then_some(&filter);
    let mut writer = store.writer();
    let mut total = CcStats::default();
    for file in files {
        let input = cc::open_index(file)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", file.display())))?;
        let stats = cc::extract_observations(input, &snapshot, &rules, filter, |obs| {
            writer.append_crawl(&obs).map_err(std::io::Error::other)
        })
        .map_err(|e| CliError::Runtime(format!("{}: {e}", file.display())))?;
        total.merge(&stats);
    }
    writer.flush().map_err(CliError::runtime)?;
    println!(
        "{snapshot}: lines {} observations {} blank {} malformed {} skipped_hosts {} skipped_suffix {} filtered_tld {}",
        total.lines,
        total.observations,
        total.blank_lines,
        total.malformed_lines,
        total.skipped_hosts,
        total.skipped_suffix,
        total.filtered_tld
    );
    Ok(())
}

pub fn compact(config: &Config) -> Result<(), CliError> {
    let store = open_store(config)?;
    let stats = store.compact().map_err(|e| match e {
        StoreError::Locked(_) => CliError::Runtime(format!("{e}; another process holds the store")),
        other => CliError::runtime(other),
    })?;
    println!(
        "compacted {} segment(s): {} records in, {} out",
        stats.input_segments, stats.input_records, stats.output_records
    );
    Ok(())
}
