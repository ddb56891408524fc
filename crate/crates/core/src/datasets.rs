//! Experiment inputs: content attack-surface records, requester sets,
//! attacker lists, and wantlist-log replay scoring.
//!
//! A content item (CID) is described by the IPs an attacker would have to
//! cut a requester off from: the providers holding the data, the DHT
//! resolvers (plus the default indexer, kept inline with a tag), and the
//! cache peers observed serving the CID over Bitswap. Cache peers come in
//! two flavors per record: the set the attacker's own monitor saw, and one
//! set per independent victim monitor. If any victim saw a cache peer the
//! attacker missed, the attacker cannot know the full surface and the attack
//! on that CID is considered infeasible.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefixdb::{resolve_endpoint, Endpoint, PrefixIndex, Resolution, RoaSet};
use crate::topology::AsId;

/// On-disk JSON-lines shape of one CID record. IP lists are kept verbatim
/// (deduplicated) so records serialize back to what was read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCidRecord {
    pub cid: String,
    pub providers: Vec<String>,
    pub resolvers: Vec<String>,
    pub ipni: Vec<String>,
    pub bitswap_attacker: Vec<String>,
    pub bitswap_victims: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolverEndpoint {
    pub endpoint: Endpoint,
    pub is_ipni: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CidRecord {
    pub cid: String,
    pub providers: Vec<Endpoint>,
    pub resolvers: Vec<ResolverEndpoint>,
    pub bitswap_attacker: Vec<Endpoint>,
    pub bitswap_victims: Vec<Vec<Endpoint>>,
    /// Raw attacker-view IPs (unmapped ones included): feasibility compares
    /// monitor views by address, not by resolved endpoint.
    pub attacker_view_ips: BTreeSet<IpAddr>,
    pub victim_view_ips: Vec<BTreeSet<IpAddr>>,
    /// No providers and no attacker-observed cache peers: nothing on the
    /// provider side to attack; kept for bookkeeping, never blockable there.
    pub unattackable_surface: bool,
    pub raw: RawCidRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Requester {
    pub ip: IpAddr,
    pub asn: AsId,
    pub prefix: crate::prefixdb::IpPrefix,
}

#[derive(Debug, Default)]
pub struct RequesterSet {
    pub requesters: Vec<Requester>,
    pub unmapped: usize,
}

impl RequesterSet {
    pub fn len(&self) -> usize {
        self.requesters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requesters.is_empty()
    }

    /// Requester indices grouped by AS, ascending. All requesters in one AS
    /// share every routing decision, so evaluation works per group.
    pub fn by_as(&self) -> Vec<(AsId, Vec<u32>)> {
        let mut groups: HashMap<AsId, Vec<u32>> = HashMap::new();
        for (i, r) in self.requesters.iter().enumerate() {
            groups.entry(r.asn).or_default().push(i as u32);
        }
        let mut out: Vec<_> = groups.into_iter().collect();
        out.sort_by_key(|(asn, _)| *asn);
        out
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub records: usize,
    pub unmapped_ips: usize,
    pub unattackable_records: usize,
}

fn parse_ip(s: &str, label: &str, lineno: usize) -> Result<IpAddr> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(label, lineno, format!("bad IP address {s:?}")))
}

fn dedup_preserving(ips: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for ip in ips {
        if seen.insert(ip.clone()) {
            out.push(ip.clone());
        }
    }
    out
}

struct EndpointCollector<'a> {
    index: &'a PrefixIndex,
    roas: &'a RoaSet,
    unmapped: usize,
}

impl EndpointCollector<'_> {
    fn resolve_list(
        &mut self,
        ips: &[String],
        label: &str,
        lineno: usize,
    ) -> Result<Vec<Endpoint>> {
        let mut out = Vec::with_capacity(ips.len());
        for s in ips {
            let ip = parse_ip(s, label, lineno)?;
            match resolve_endpoint(ip, self.index, self.roas) {
                Resolution::Mapped(e) => out.push(e),
                Resolution::Unmapped(_) => self.unmapped += 1,
            }
        }
        Ok(out)
    }
}

fn build_record(
    raw: RawCidRecord,
    collector: &mut EndpointCollector<'_>,
    label: &str,
    lineno: usize,
) -> Result<CidRecord> {
    let raw = RawCidRecord {
        cid: raw.cid,
        providers: dedup_preserving(&raw.providers),
        resolvers: dedup_preserving(&raw.resolvers),
        ipni: dedup_preserving(&raw.ipni),
        bitswap_attacker: dedup_preserving(&raw.bitswap_attacker),
        bitswap_victims: raw.bitswap_victims.iter().map(|v| dedup_preserving(v)).collect(),
    };
    let providers = collector.resolve_list(&raw.providers, label, lineno)?;
    let mut resolvers: Vec<ResolverEndpoint> = collector
        .resolve_list(&raw.resolvers, label, lineno)?
        .into_iter()
        .map(|endpoint| ResolverEndpoint { endpoint, is_ipni: false })
        .collect();
    resolvers.extend(
        collector
            .resolve_list(&raw.ipni, label, lineno)?
            .into_iter()
            .map(|endpoint| ResolverEndpoint { endpoint, is_ipni: true }),
    );
    let bitswap_attacker = collector.resolve_list(&raw.bitswap_attacker, label, lineno)?;
    let mut bitswap_victims = Vec::with_capacity(raw.bitswap_victims.len());
    let mut victim_view_ips = Vec::with_capacity(raw.bitswap_victims.len());
    for view in &raw.bitswap_victims {
        bitswap_victims.push(collector.resolve_list(view, label, lineno)?);
        let mut ips = BTreeSet::new();
        for s in view {
            ips.insert(parse_ip(s, label, lineno)?);
        }
        victim_view_ips.push(ips);
    }
    let mut attacker_view_ips = BTreeSet::new();
    for s in &raw.bitswap_attacker {
        attacker_view_ips.insert(parse_ip(s, label, lineno)?);
    }
    let unattackable_surface = raw.providers.is_empty() && raw.bitswap_attacker.is_empty();
    Ok(CidRecord {
        cid: raw.cid.clone(),
        providers,
        resolvers,
        bitswap_attacker,
        bitswap_victims,
        attacker_view_ips,
        victim_view_ips,
        unattackable_surface,
        raw,
    })
}

pub fn ingest_cid_dataset<R: Read>(
    reader: R,
    label: &str,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<(Vec<CidRecord>, IngestReport)> {
    let mut collector = EndpointCollector { index, roas, unmapped: 0 };
    let mut records = Vec::new();
    let mut unattackable = 0;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let raw: RawCidRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        let record = build_record(raw, &mut collector, label, lineno)?;
        if record.unattackable_surface {
            unattackable += 1;
        }
        records.push(record);
    }
    let report = IngestReport {
        records: records.len(),
        unmapped_ips: collector.unmapped,
        unattackable_records: unattackable,
    };
    Ok((records, report))
}

pub fn load_cid_dataset(
    path: &std::path::Path,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<(Vec<CidRecord>, IngestReport)> {
    let f = std::fs::File::open(path)?;
    ingest_cid_dataset(f, &path.display().to_string(), index, roas)
}

pub fn write_cid_records<W: Write>(records: &[CidRecord], mut w: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(&r.raw)
            .map_err(|e| Error::Validation(format!("serialize {}: {e}", r.cid)))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn ingest_requesters<R: Read>(
    reader: R,
    label: &str,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<RequesterSet> {
    let mut set = RequesterSet::default();
    let mut seen: BTreeSet<IpAddr> = BTreeSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ip = parse_ip(line, label, lineno)?;
        if !seen.insert(ip) {
            continue; // duplicate, first occurrence wins
        }
        match resolve_endpoint(ip, index, roas) {
            Resolution::Mapped(e) => set.requesters.push(Requester {
                ip,
                asn: e.origin,
                prefix: e.prefix,
            }),
            Resolution::Unmapped(_) => set.unmapped += 1,
        }
    }
    Ok(set)
}

pub fn load_requesters(
    path: &std::path::Path,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<RequesterSet> {
    let f = std::fs::File::open(path)?;
    ingest_requesters(f, &path.display().to_string(), index, roas)
}

/// One candidate-node IP per line, resolved against the routing table.
/// Returns the mapped endpoints in file order (duplicates dropped, first
/// wins) and the count of IPs outside every announced prefix.
pub fn ingest_endpoint_list<R: Read>(
    reader: R,
    label: &str,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<(Vec<Endpoint>, usize)> {
    let mut out = Vec::new();
    let mut unmapped = 0;
    let mut seen: BTreeSet<IpAddr> = BTreeSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ip = parse_ip(line, label, lineno)?;
        if !seen.insert(ip) {
            continue;
        }
        match resolve_endpoint(ip, index, roas) {
            Resolution::Mapped(e) => out.push(e),
            Resolution::Unmapped(_) => unmapped += 1,
        }
    }
    Ok((out, unmapped))
}

pub fn load_endpoint_list(
    path: &std::path::Path,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<(Vec<Endpoint>, usize)> {
    let f = std::fs::File::open(path)?;
    ingest_endpoint_list(f, &path.display().to_string(), index, roas)
}

/// One AS number per line; duplicates dropped, order preserved.
pub fn parse_attacker_list<R: Read>(reader: R, label: &str) -> Result<Vec<AsId>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let asn: AsId = line
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        if seen.insert(asn) {
            out.push(asn);
        }
    }
    Ok(out)
}

pub fn load_attacker_list(path: &std::path::Path) -> Result<Vec<AsId>> {
    let f = std::fs::File::open(path)?;
    parse_attacker_list(f, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitswapLogEvent {
    pub timestamp: String,
    pub peer: String,
    pub cid: String,
}

/// CSV `timestamp,peer,cid`; the CID field may itself contain commas.
pub fn parse_bitswap_log<R: Read>(reader: R, label: &str) -> Result<Vec<BitswapLogEvent>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 1 && line.starts_with("timestamp,") {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(ts), Some(peer), Some(cid)) if !peer.is_empty() && !cid.is_empty() => {
                out.push(BitswapLogEvent {
                    timestamp: ts.to_string(),
                    peer: peer.to_string(),
                    cid: cid.to_string(),
                });
            }
            _ => return Err(Error::parse(label, lineno, "expected timestamp,peer,cid")),
        }
    }
    Ok(out)
}

pub const DEFAULT_SCORE_CAPACITY: usize = 10_000;

/// FIFO window over recently requested CIDs and the peers asking for them.
/// A CID's slot is claimed on first sight and not refreshed by later events;
/// eviction is strictly by first-seen order.
#[derive(Debug)]
pub struct ScoreWindow {
    capacity: usize,
    order: VecDeque<String>,
    entries: HashMap<String, WindowEntry>,
    next_seq: u64,
    peak: usize,
    evictions: usize,
}

#[derive(Debug)]
struct WindowEntry {
    first_seen: u64,
    peers: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCid {
    pub cid: String,
    pub score: f64,
    pub peer_count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WindowStats {
    pub events: usize,
    pub peak_size: usize,
    pub evictions: usize,
}

impl ScoreWindow {
    pub fn new(capacity: usize) -> ScoreWindow {
        assert!(capacity > 0, "window capacity must be positive");
        ScoreWindow {
            capacity,
            order: VecDeque::new(),
            entries: HashMap::new(),
            next_seq: 0,
            peak: 0,
            evictions: 0,
        }
    }

    pub fn push(&mut self, peer: &str, cid: &str) {
        if let Some(entry) = self.entries.get_mut(cid) {
            entry.peers.insert(peer.to_string());
            return;
        }
        if self.order.len() == self.capacity {
            let evicted = self.order.pop_front().expect("non-empty at capacity");
            self.entries.remove(&evicted);
            self.evictions += 1;
        }
        self.order.push_back(cid.to_string());
        let mut peers = BTreeSet::new();
        peers.insert(peer.to_string());
        self.entries.insert(
            cid.to_string(),
            WindowEntry {
                first_seen: self.next_seq,
                peers,
            },
        );
        self.next_seq += 1;
        self.peak = self.peak.max(self.order.len());
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn peak_size(&self) -> usize {
        self.peak
    }

    pub fn contains(&self, cid: &str) -> bool {
        self.entries.contains_key(cid)
    }

    /// CIDs currently held, oldest first.
    pub fn cids_in_order(&self) -> Vec<String> {
        self.order.iter().cloned().collect()
    }

    /// Scores over the current window: each peer weighs 1 / (number of
    /// distinct CIDs it wants here); a CID scores the sum of its peers'
    /// weights. Descending score, ties to the earlier-seen CID.
    pub fn scores(&self) -> Vec<ScoredCid> {
        let mut peer_spread: HashMap<&str, u32> = HashMap::new();
        for entry in self.entries.values() {
            for p in &entry.peers {
                *peer_spread.entry(p.as_str()).or_insert(0) += 1;
            }
        }
        let mut scored: Vec<(&String, &WindowEntry)> = self.entries.iter().collect();
        scored.sort_by_key(|(_, e)| e.first_seen);
        let mut out: Vec<ScoredCid> = scored
            .into_iter()
            .map(|(cid, entry)| {
                // Fixed peer iteration order keeps the float sum bit-stable.
                let score: f64 = entry
                    .peers
                    .iter()
                    .map(|p| 1.0 / f64::from(peer_spread[p.as_str()]))
                    .sum();
                ScoredCid {
                    cid: cid.clone(),
                    score,
                    peer_count: entry.peers.len(),
                }
            })
            .collect();
        out.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("scores are finite"));
        out
    }
}

pub fn score_cids<'a, I>(events: I, capacity: usize) -> (Vec<ScoredCid>, WindowStats)
where
    I: IntoIterator<Item = &'a BitswapLogEvent>,
{
    let mut window = ScoreWindow::new(capacity);
    let mut count = 0;
    for e in events {
        window.push(&e.peer, &e.cid);
        count += 1;
    }
    let stats = WindowStats {
        events: count,
        peak_size: window.peak_size(),
        evictions: window.evictions,
    };
    (window.scores(), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefixdb::{parse_rib, parse_roas, RpkiCategory};

    fn db() -> (PrefixIndex, RoaSet) {
        let index = parse_rib(
            "10.1.0.0/16\t65001\n10.2.0.0/16\t65002\n2001:db8::/32\t65003\n".as_bytes(),
            "rib",
        )
        .unwrap();
        let roas = parse_roas("10.2.0.0/16,16,65002\n".as_bytes(), "roas").unwrap();
        (index, roas)
    }

    fn record_line(cid: &str) -> String {
        format!(
            r#"{{"cid":"{cid}","providers":["10.1.0.5"],"resolvers":["10.2.0.9"],"ipni":["2001:db8::1"],"bitswap_attacker":["10.1.0.200"],"bitswap_victims":[["10.1.0.200"],[]]}}"#
        )
    }

    #[test]
    fn ingest_resolves_roles_and_tags_ipni() {
        let (index, roas) = db();
        let (records, report) =
            ingest_cid_dataset(record_line("bafyA").as_bytes(), "cids", &index, &roas).unwrap();
        assert_eq!(report, IngestReport { records: 1, unmapped_ips: 0, unattackable_records: 0 });
        let r = &records[0];
        assert_eq!(r.providers.len(), 1);
        assert_eq!(r.providers[0].origin.get(), 65001);
        assert_eq!(r.resolvers.len(), 2);
        assert!(!r.resolvers[0].is_ipni);
        assert!(r.resolvers[1].is_ipni);
        assert_eq!(r.resolvers[1].endpoint.origin.get(), 65003);
        assert_eq!(r.resolvers[0].endpoint.category, RpkiCategory::RoaAtMax);
        assert_eq!(r.bitswap_victims.len(), 2);
        assert!(!r.unattackable_surface);
        assert_eq!(r.attacker_view_ips.len(), 1);
    }

    #[test]
    fn unmapped_ips_counted_and_excluded() {
        let (index, roas) = db();
        let line = r#"{"cid":"x","providers":["192.0.2.7"],"resolvers":[],"ipni":[],"bitswap_attacker":[],"bitswap_victims":[]}"#;
        let (records, report) = ingest_cid_dataset(line.as_bytes(), "cids", &index, &roas).unwrap();
        assert_eq!(report.unmapped_ips, 1);
        assert!(records[0].providers.is_empty());
        // Raw record keeps the IP so the file round-trips.
        assert_eq!(records[0].raw.providers, vec!["192.0.2.7".to_string()]);
    }

    #[test]
    fn empty_provider_and_bitswap_flags_unattackable() {
        let (index, roas) = db();
        let line = r#"{"cid":"x","providers":[],"resolvers":["10.1.0.5"],"ipni":[],"bitswap_attacker":[],"bitswap_victims":[]}"#;
        let (records, report) = ingest_cid_dataset(line.as_bytes(), "cids", &index, &roas).unwrap();
        assert!(records[0].unattackable_surface);
        assert_eq!(report.unattackable_records, 1);
    }

    #[test]
    fn schema_violation_reports_line() {
        let (index, roas) = db();
        let text = format!("{}\n{{\"cid\":\"y\"}}\n", record_line("ok"));
        let err = ingest_cid_dataset(text.as_bytes(), "cids", &index, &roas).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = ingest_cid_dataset("{\"cid\":1}".as_bytes(), "cids", &index, &roas).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn bad_ip_in_record_is_a_parse_error() {
        let (index, roas) = db();
        let line = r#"{"cid":"x","providers":["not-an-ip"],"resolvers":[],"ipni":[],"bitswap_attacker":[],"bitswap_victims":[]}"#;
        let err = ingest_cid_dataset(line.as_bytes(), "cids", &index, &roas).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn round_trip_is_identity() {
        let (index, roas) = db();
        let text = format!("{}\n{}\n", record_line("bafyA"), record_line("bafyB"));
        let (records, _) = ingest_cid_dataset(text.as_bytes(), "cids", &index, &roas).unwrap();
        let mut buf = Vec::new();
        write_cid_records(&records, &mut buf).unwrap();
        let (again, _) = ingest_cid_dataset(buf.as_slice(), "cids", &index, &roas).unwrap();
        assert_eq!(records, again);
    }

    #[test]
    fn requester_dedup_by_ip() {
        let (index, roas) = db();
        let set = ingest_requesters(
            "10.1.2.3\n10.1.2.3\n10.2.0.1\n".as_bytes(),
            "req",
            &index,
            &roas,
        )
        .unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.requesters[0].asn.get(), 65001);
        // Same prefix, distinct IPs: both kept.
        let set2 = ingest_requesters("10.1.2.3\n10.1.2.4\n".as_bytes(), "req", &index, &roas).unwrap();
        assert_eq!(set2.len(), 2);
        assert_eq!(set2.requesters[0].prefix, set2.requesters[1].prefix);
    }

    #[test]
    fn requester_unmapped_excluded() {
        let (index, roas) = db();
        let set = ingest_requesters("192.0.2.1\n10.1.0.1\n".as_bytes(), "req", &index, &roas).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.unmapped, 1);
    }

    #[test]
    fn empty_inputs() {
        let (index, roas) = db();
        let (records, report) = ingest_cid_dataset("".as_bytes(), "cids", &index, &roas).unwrap();
        assert!(records.is_empty());
        assert_eq!(report.records, 0);
        assert!(ingest_requesters("".as_bytes(), "req", &index, &roas).unwrap().is_empty());
    }

    #[test]
    fn attacker_list_dedups_preserving_order() {
        let list = parse_attacker_list("# top\n3356\n174\n3356\n1299\n".as_bytes(), "att").unwrap();
        let asns: Vec<u32> = list.iter().map(|a| a.get()).collect();
        assert_eq!(asns, vec![3356, 174, 1299]);
        assert!(parse_attacker_list("abc\n".as_bytes(), "att").is_err());
    }

    #[test]
    fn bitswap_log_parsing() {
        let events = parse_bitswap_log(
            "timestamp,peer,cid\n1700000000,p1,bafyA\n1700000001,p2,bafy,with,commas\n".as_bytes(),
            "log",
        )
        .unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].cid, "bafy,with,commas");
        assert!(parse_bitswap_log("justonefield\n".as_bytes(), "log").is_err());
    }

    fn ev(peer: &str, cid: &str) -> BitswapLogEvent {
        BitswapLogEvent {
            timestamp: "0".into(),
            peer: peer.into(),
            cid: cid.into(),
        }
    }

    #[test]
    fn score_example_two_cids() {
        let events = vec![ev("p1", "A"), ev("p2", "A"), ev("p1", "B")];
        let (scores, stats) = score_cids(&events, DEFAULT_SCORE_CAPACITY);
        assert_eq!(scores.len(), 2);
        assert_eq!(scores[0].cid, "A");
        assert!((scores[0].score - 1.5).abs() < 1e-12);
        assert_eq!(scores[1].cid, "B");
        assert!((scores[1].score - 0.5).abs() < 1e-12);
        assert_eq!(stats.peak_size, 2);
    }

    #[test]
    fn single_event_scores_one() {
        let events = vec![ev("p1", "A")];
        let (scores, _) = score_cids(&events, DEFAULT_SCORE_CAPACITY);
        assert_eq!(scores.len(), 1);
        assert_eq!(scores[0].score, 1.0);
    }

    #[test]
    fn capacity_one_keeps_latest() {
        let events = vec![ev("p1", "A"), ev("p1", "B")];
        let (scores, stats) = score_cids(&events, 1);
        assert_eq!(scores.len(), 1);
        assert_eq!(scores[0].cid, "B");
        assert_eq!(stats.evictions, 1);
        assert_eq!(stats.peak_size, 1);
    }

    #[test]
    fn repeat_event_does_not_refresh_fifo_position() {
        let mut w = ScoreWindow::new(2);
        w.push("p1", "A");
        w.push("p1", "B");
        w.push("p9", "A"); // A stays first in line for eviction
        w.push("p1", "C");
        assert_eq!(w.cids_in_order(), vec!["B".to_string(), "C".to_string()]);
    }

    #[test]
    fn score_ties_break_by_first_seen() {
        let events = vec![ev("p1", "B"), ev("p2", "A")];
        let (scores, _) = score_cids(&events, 10);
        assert_eq!(scores[0].cid, "B");
        assert_eq!(scores[1].cid, "A");
    }

    #[test]
    fn scores_depend_only_on_final_window() {
        let a = vec![ev("p1", "A"), ev("p2", "A"), ev("p1", "B")];
        let b = vec![ev("p1", "B"), ev("p2", "A"), ev("p1", "A")];
        let (sa, _) = score_cids(&a, 10);
        let (sb, _) = score_cids(&b, 10);
        let norm = |v: &[ScoredCid]| {
            let mut v: Vec<(String, f64)> = v.iter().map(|s| (s.cid.clone(), s.score)).collect();
            v.sort_by(|x, y| x.0.cmp(&y.0));
            v
        };
        assert_eq!(norm(&sa), norm(&sb));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn window_respects_capacity_and_fifo(
                events in proptest::collection::vec((0u8..12, 0u8..20), 0..200),
                capacity in 1usize..8,
            ) {
                let mut w = ScoreWindow::new(capacity);
                let mut model: Vec<String> = Vec::new(); // insertion order, oldest first
                for (p, c) in events {
                    let peer = format!("p{p}");
                    let cid = format!("c{c}");
                    w.push(&peer, &cid);
                    if !model.contains(&cid) {
                        if model.len() == capacity {
                            model.remove(0);
                        }
                        model.push(cid);
                    }
                    prop_assert!(w.len() <= capacity);
                    prop_assert_eq!(w.cids_in_order(), model.clone());
                }
                prop_assert!(w.peak_size() <= capacity);
            }
        }
    }
}
