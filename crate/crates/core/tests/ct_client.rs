mod common;

use std::sync::atomic::Ordering;

use cctld_amass::ct::{
    parse_entry, CtClient, CtError, CtLogDescriptor, EntryKind, RawEntry, RetryPolicy,
};
use common::*;

fn log(server: &FixtureServer, name: &str, entries: Vec<Entry>) -> CtLogDescriptor {
    CtLogDescriptor::new(name, server.add_log(name, entries))
}

fn small_log(n: usize) -> Vec<Entry> {
    (0..n)
        .map(|i| {
            let spec = CertSpec::new(&[&format!("n{i}.nl")], date(2022, 1, 1), date(2023, 1, 1));
            entry_for(&spec, i as u64)
        })
        .collect()
}

#[test]
fn sth_and_paged_entries() {
    let server = FixtureServer::start(10);
    let log = log(&server, "paged", small_log(23));
    let client = CtClient::new(RetryPolicy::immediate(3));
    let sth = client.fetch_sth(&log).unwrap();
    assert_eq!(sth.tree_size, 23);
    let entries = client.fetch_entries(&log, 0..=22, sth.tree_size).unwrap();
    assert_eq!(entries.len(), 23);
    // 1 STH + 3 capped pages
    assert_eq!(server.requests.load(Ordering::SeqCst), 4);
    let last = parse_entry(&entries[22]).unwrap();
    assert_eq!(last.names, ["n22.nl"]);
}

#[test]
fn range_beyond_tree_is_rejected_before_any_request() {
    let server = FixtureServer::start(10);
    let log = log(&server, "small", small_log(5));
    let client = CtClient::new(RetryPolicy::immediate(1));
    let err = client.fetch_entries(&log, 3..=7, 5).unwrap_err();
    assert!(matches!(
        err,
        CtError::RangeBeyondTree {
            start: 3,
            end: 7,
            tree_size: 5
        }
    ));
    assert_eq!(server.requests.load(Ordering::SeqCst), 0);
}

#[test]
fn transient_failures_are_retried() {
    let server = FixtureServer::start(10);
    let log = log(&server, "flaky", small_log(3));
    server.fail_next.store(2, Ordering::SeqCst);
    let client = CtClient::new(RetryPolicy::immediate(3));
    assert_eq!(client.fetch_sth(&log).unwrap().tree_size, 3);
    assert_eq!(server.requests.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_are_bounded() {
    let server = FixtureServer::start(10);
    let log = log(&server, "down", small_log(3));
    server.fail_next.store(10, Ordering::SeqCst);
    let client = CtClient::new(RetryPolicy::immediate(4));
    let err = client.fetch_sth(&log).unwrap_err();
    assert!(matches!(err, CtError::Http { status: 503, .. }));
    assert_eq!(server.requests.load(Ordering::SeqCst), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let server = FixtureServer::start(10);
    let missing = CtLogDescriptor::new("missing", server.base_url("missing"));
    let client = CtClient::new(RetryPolicy::immediate(4));
    assert!(matches!(
        client.fetch_sth(&missing),
        Err(CtError::Http { status: 404, .. })
    ));
    assert_eq!(server.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_log_is_a_transport_error() {
    let log = CtLogDescriptor::new("nowhere", "http://127.0.0.1:1/");
    let client = CtClient::new(RetryPolicy::immediate(2));
    let err = client.fetch_sth(&log).unwrap_err();
    assert!(matches!(err, CtError::Transport { .. }), "{err:?}");
}

#[test]
fn precert_and_x509_entries_parse_to_the_same_names() {
    let mut spec = CertSpec::new(
        &["a.example.nl", "*.b.nl"],
        date(2021, 5, 1),
        date(2021, 8, 1),
    );
    let x509 = entry_for(&spec, 0);
    spec.precert = true;
    let pre = entry_for(&spec, 1);
    let raw = |e: &Entry| RawEntry {
        leaf_input: e.leaf_input.clone(),
        extra_data: e.extra_data.clone(),
    };
    let a = parse_entry(&raw(&x509)).unwrap();
    let b = parse_entry(&raw(&pre)).unwrap();
    assert_eq!(a.kind, EntryKind::X509);
    assert_eq!(b.kind, EntryKind::Precert);
    assert_eq!(a.names, b.names);
    assert_eq!(a.names, ["a.example.nl", "*.b.nl"]);
    assert_eq!((a.not_before, a.not_after), (b.not_before, b.not_after));
    assert_eq!(a.not_before, spec.not_before_utc());
}

#[test]
fn subject_cn_only_counts_when_it_is_a_domain() {
    let mut spec = CertSpec::new(&["san.nl"], date(2021, 5, 1), date(2021, 8, 1));
    spec.common_name = Some("cn-only.nl".into());
    let e = entry_for(&spec, 0);
    let info = parse_entry(&RawEntry {
        leaf_input: e.leaf_input,
        extra_data: String::new(),
    })
    .unwrap();
    assert_eq!(info.names, ["cn-only.nl", "san.nl"]);

    spec.common_name = Some("Example Issuing CA".into());
    let e = entry_for(&spec, 0);
    let info = parse_entry(&RawEntry {
        leaf_input: e.leaf_input,
        extra_data: String::new(),
    })
    .unwrap();
    assert_eq!(info.names, ["san.nl"]);
}
