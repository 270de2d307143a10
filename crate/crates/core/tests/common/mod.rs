//! Test fixtures: an in-process RFC 6962 log server, certificate builders and
//! an independent leaf encoder.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use rcgen::{date_time_ymd, CertificateParams, DnType, KeyPair};

/// Suffix rules shared by the fixture corpus.
pub const FIXTURE_PSL: &str = "\
// fixture rules
nl
sk
uk
co.uk
*.ck
!www.ck
";

/// One certificate to put in a fixture log.
#[derive(Clone, Debug)]
pub struct CertSpec {
    /// SAN entries; IP literals become iPAddress SANs.
    pub sans: Vec<String>,
    pub common_name: Option<String>,
    pub not_before: NaiveDate,
    pub not_after: NaiveDate,
    pub precert: bool,
}

impl CertSpec {
    pub fn new(sans: &[&str], not_before: NaiveDate, not_after: NaiveDate) -> CertSpec {
        CertSpec {
            sans: sans.iter().map(|s| s.to_string()).collect(),
            common_name: None,
            not_before,
            not_after,
            precert: false,
        }
    }

    pub fn not_before_utc(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&self.not_before.and_hms_opt(0, 0, 0).unwrap())
    }
}

fn key() -> &'static KeyPair {
    static KEY: std::sync::OnceLock<KeyPair> = std::sync::OnceLock::new();
    KEY.get_or_init(|| KeyPair::generate().unwrap())
}

fn ymd(d: NaiveDate) -> (i32, u8, u8) {
    use chrono::Datelike;
    (d.year(), d.month() as u8, d.day() as u8)
}

/// Self-signed DER certificate for `spec`.
pub fn cert_der(spec: &CertSpec) -> Vec<u8> {
    let mut params = CertificateParams::new(spec.sans.clone()).unwrap();
    let (y, m, d) = ymd(spec.not_before);
    params.not_before = date_time_ymd(y, m, d);
    let (y, m, d) = ymd(spec.not_after);
    params.not_after = date_time_ymd(y, m, d);
    params.distinguished_name = rcgen::DistinguishedName::new();
    if let Some(cn) = &spec.common_name {
        params
            .distinguished_name
            .push(DnType::CommonName, cn.as_str());
    }
    params.self_signed(key()).unwrap().der().to_vec()
}

/// Reads one DER tag-length header, returning (header length, content length).
fn der_header(bytes: &[u8]) -> (usize, usize) {
    assert_eq!(bytes[0], 0x30, "expected a SEQUENCE");
    let first = bytes[1] as usize;
    if first < 0x80 {
        return (2, first);
    }
    let n = first & 0x7f;
    let len = bytes[2..2 + n]
        .iter()
        .fold(0usize, |acc, b| (acc << 8) | *b as usize);
    (2 + n, len)
}

/// The TBSCertificate element of a DER certificate.
pub fn tbs_of(cert: &[u8]) -> Vec<u8> {
    let (outer, _) = der_header(cert);
    let inner = &cert[outer..];
    let (header, len) = der_header(inner);
    inner[..header + len].to_vec()
}

/// Encodes a MerkleTreeLeaf by hand: x509 entries carry the certificate,
/// precert entries an issuer key hash and the TBS.
pub fn encode_leaf(precert: bool, body: &[u8], timestamp_ms: u64) -> Vec<u8> {
    let mut out = vec![0u8, 0u8];
    out.extend_from_slice(&timestamp_ms.to_be_bytes());
    if precert {
        out.extend_from_slice(&1u16.to_be_bytes());
        out.extend_from_slice(&[0xab; 32]);
    } else {
        out.extend_from_slice(&0u16.to_be_bytes());
    }
    let len = body.len() as u32;
    out.extend_from_slice(&len.to_be_bytes()[1..]);
    out.extend_from_slice(body);
    out.extend_from_slice(&0u16.to_be_bytes());
    out
}

/// A `get-entries` element as JSON fields.
#[derive(Clone, Debug)]
pub struct Entry {
    pub leaf_input: String,
    pub extra_data: String,
}

pub fn entry_for(spec: &CertSpec, index: u64) -> Entry {
    let der = cert_der(spec);
    let body = if spec.precert { tbs_of(&der) } else { der };
    Entry {
        leaf_input: STANDARD.encode(encode_leaf(spec.precert, &body, 1_600_000_000_000 + index)),
        extra_data: String::new(),
    }
}

pub fn garbage_entry() -> Entry {
    Entry {
        leaf_input: STANDARD.encode(encode_leaf(false, b"\x30\x03not a certificate", 0)),
        extra_data: String::new(),
    }
}

struct LogState {
    entries: Vec<Entry>,
}

/// Serves `/logs/<name>/ct/v1/{get-sth,get-entries}` on a loopback port.
pub struct FixtureServer {
    pub addr: String,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
    logs: Arc<Mutex<HashMap<String, LogState>>>,
    /// Requests still to be answered with 503.
    pub fail_next: Arc<AtomicU32>,
    pub requests: Arc<AtomicU32>,
}

impl FixtureServer {
    pub fn start(page_cap: usize) -> FixtureServer {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let addr = format!("http://{}", server.server_addr().to_ip().unwrap());
        let logs: Arc<Mutex<HashMap<String, LogState>>> = Arc::default();
        let fail_next = Arc::new(AtomicU32::new(0));
        let requests = Arc::new(AtomicU32::new(0));
        let handle = {
            let server = Arc::clone(&server);
            let logs = Arc::clone(&logs);
            let fail_next = Arc::clone(&fail_next);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    requests.fetch_add(1, Ordering::SeqCst);
                    let (status, body) = if fail_next
                        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                        .is_ok()
                    {
                        (503, "unavailable".to_string())
                    } else {
                        respond(&logs.lock().unwrap(), request.url(), page_cap)
                    };
                    let response = tiny_http::Response::from_string(body).with_status_code(status);
                    let _ = request.respond(response);
                }
            })
        };
        FixtureServer {
            addr,
            server,
            handle: Some(handle),
            logs,
            fail_next,
            requests,
        }
    }

    pub fn add_log(&self, name: &str, entries: Vec<Entry>) -> String {
        self.logs
            .lock()
            .unwrap()
            .insert(name.to_owned(), LogState { entries });
        self.base_url(name)
    }

    pub fn base_url(&self, name: &str) -> String {
        format!("{}/logs/{name}/", self.addr)
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn respond(logs: &HashMap<String, LogState>, url: &str, page_cap: usize) -> (u16, String) {
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let Some(rest) = path.strip_prefix("/logs/") else {
        return (404, "not found".into());
    };
    let Some((name, endpoint)) = rest.split_once("/ct/v1/") else {
        return (404, "not found".into());
    };
    let Some(log) = logs.get(name) else {
        return (404, "no such log".into());
    };
    match endpoint {
        "get-sth" => (
            200,
            serde_json::json!({
                "tree_size": log.entries.len(),
                "timestamp": 1_700_000_000_000u64,
                "sha256_root_hash": "",
                "tree_head_signature": "",
            })
            .to_string(),
        ),
        "get-entries" => {
            let param = |key: &str| {
                query
                    .split('&')
                    .filter_map(|kv| kv.split_once('='))
                    .find(|(k, _)| *k == key)
                    .and_then(|(_, v)| v.parse::<usize>().ok())
            };
            let (Some(start), Some(end)) = (param("start"), param("end")) else {
                return (400, "bad range".into());
            };
            if start > end || start >= log.entries.len() {
                return (400, "bad range".into());
            }
            let end = end.min(log.entries.len() - 1).min(start + page_cap - 1);
            let entries: Vec<_> = log.entries[start..=end]
                .iter()
                .map(
                    |e| serde_json::json!({"leaf_input": e.leaf_input, "extra_data": e.extra_data}),
                )
                .collect();
            (200, serde_json::json!({ "entries": entries }).to_string())
        }
        _ => (404, "not found".into()),
    }
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// The end-to-end fixture: 50 certificate specs over .nl/.sk/.co.uk names,
/// two of them precertificates, one with a wildcard SAN and one with an IP
/// SAN. A malformed entry is inserted at index 25 by [`corpus_entries`].
pub fn corpus_specs() -> Vec<CertSpec> {
    let mut specs = Vec::new();
    for i in 0..50u32 {
        let year = 2019 + (i % 5) as i32;
        let nb = date(year, 1 + i % 12, 1 + i % 28);
        let na = date(year + 1, 1 + i % 12, 1 + i % 28);
        let sans: Vec<String> = match i % 5 {
            0 => vec![format!("site{i}.nl"), format!("www.site{i}.nl")],
            1 => vec![format!("mail.site{}.nl", i - 1)],
            2 => vec![format!("shop{i}.sk"), format!("shop{}.nl", i % 7)],
            3 => vec![format!("brand{i}.co.uk")],
            _ => vec![format!("api.svc{}.nl", i % 9)],
        };
        let sans: Vec<&str> = sans.iter().map(String::as_str).collect();
        let mut spec = CertSpec::new(&sans, nb, na);
        spec.common_name = Some(sans[0].to_owned());
        specs.push(spec);
    }
    specs[7].precert = true;
    specs[31].precert = true;
    specs[12].sans.push("*.wild12.nl".into());
    specs[18].sans.push("192.0.2.18".into());
    specs[40].common_name = Some("Fixture Issuing CA".into());
    specs
}

pub fn corpus_entries(specs: &[CertSpec]) -> Vec<Entry> {
    let mut entries: Vec<Entry> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| entry_for(s, i as u64))
        .collect();
    entries.insert(25, garbage_entry());
    entries
}

/// 100 URL-index lines for snapshot CC-MAIN-2022-05 (dated 2022-01-31),
/// including blank, malformed and IP-host lines.
pub fn cdxj_fixture() -> Vec<String> {
    let mut lines = Vec::new();
    for i in 0..100u32 {
        let line = match i % 10 {
            0 => format!(
                "nl,site{})/ 20220120000000 {{\"url\": \"https://site{}.nl/\", \"status\": \"200\"}}",
                i, i
            ),
            1 => format!(
                "nl,crawl{})/x 20220120000000 {{\"url\": \"http://www.crawl{}.nl/x?y=1\"}}",
                i % 30,
                i % 30
            ),
            2 => format!(
                "sk,shop{})/ 20220120000000 {{\"url\": \"https://shop{}.sk/\"}}",
                i + 10,
                i + 10
            ),
            3 => format!(
                "uk,co,brand{})/ 20220120000000 {{\"url\": \"https://brand{}.co.uk/\"}}",
                i, i
            ),
            4 => "".to_string(),
            5 => "garbage without json".to_string(),
            6 => "1,2,0,192)/ 20220120000000 {\"url\": \"http://192.0.2.1/\"}".to_string(),
            7 => format!(
                "nl,svc{})/ 20220120000000 {{\"url\": \"https://api.svc{}.nl/\"}}",
                i % 9,
                i % 9
            ),
            8 => format!(
                "com,other{})/ 20220120000000 {{\"url\": \"https://other{}.com/\"}}",
                i, i
            ),
            _ => format!(
                "nl,mixed{})/ 20220120000000 {{\"url\": \"HTTPS://Mixed{}.NL./\"}}",
                i, i
            ),
        };
        lines.push(line);
    }
    lines
}

/// 40 zone names: a mix of names present in CT, in CC, in both and neither.
pub fn zone_fixture() -> Vec<String> {
    let mut names = Vec::new();
    for i in (0..50).step_by(5) {
        names.push(format!("site{i}.nl"));
    }
    for i in 0..7 {
        names.push(format!("shop{i}.nl"));
    }
    for i in 0..9 {
        names.push(format!("svc{i}.nl"));
    }
    for i in [1, 11, 21] {
        names.push(format!("crawl{i}.nl"));
    }
    for i in [9, 19, 29] {
        names.push(format!("mixed{i}.nl"));
    }
    for i in 0..8 {
        names.push(format!("quiet{i}.nl"));
    }
    assert_eq!(names.len(), 40);
    names
}
