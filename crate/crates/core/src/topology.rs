//! AS-level topology: provider/customer and peering relationships.
//!
//! The on-disk format is the serial-1 relationship dump: one edge per line,
//! `A|B|-1` meaning A is a provider of B, `A|B|0` meaning A and B peer.
//! IXP-derived peerings arrive separately as `asn_a,asn_b` pairs and are
//! merged on top, with relationship edges taking precedence.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Autonomous system number. Always nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct AsId(u32);

impl AsId {
    pub fn new(n: u32) -> Result<AsId> {
        if n == 0 {
            return Err(Error::Validation("AS number 0 is reserved".into()));
        }
        Ok(AsId(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for AsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for AsId {
    type Err = Error;

    fn from_str(s: &str) -> Result<AsId> {
        let n: u32 = s
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("bad AS number {s:?}")))?;
        AsId::new(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Provider-to-customer. Directed: the first AS sells transit to the second.
    P2c,
    /// Settlement-free peering. Undirected.
    P2p,
}

/// One relationship edge in canonical orientation: for `P2c` the provider
/// comes first; for `P2p` the smaller AS number comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelEdge {
    pub a: AsId,
    pub b: AsId,
    pub kind: EdgeKind,
}

/// Self-loop lines are dropped at parse time but remembered so validation
/// can reject the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelfLoop {
    pub line: usize,
    pub asn: AsId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairRel {
    P2c { provider: u32 },
    P2p,
}

/// Immutable AS graph with per-kind adjacency. Node indices are assigned in
/// ascending AS-number order, so index order and AS-number order agree; the
/// routing code leans on that for tie-breaking.
#[derive(Debug)]
pub struct TopologyGraph {
    asns: Vec<u32>,
    index: HashMap<u32, u32>,
    providers: Vec<Vec<u32>>,
    customers: Vec<Vec<u32>>,
    peers: Vec<Vec<u32>>,
    p2c_count: usize,
    p2p_count: usize,
    self_loops: Vec<SelfLoop>,
}

impl TopologyGraph {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    pub fn as_count(&self) -> usize {
        self.asns.len()
    }

    pub fn p2c_count(&self) -> usize {
        self.p2c_count
    }

    pub fn p2p_count(&self) -> usize {
        self.p2p_count
    }

    pub fn contains(&self, asn: AsId) -> bool {
        self.index.contains_key(&asn.get())
    }

    pub fn asns(&self) -> impl Iterator<Item = AsId> + '_ {
        self.asns.iter().map(|&n| AsId(n))
    }

    pub fn self_loops(&self) -> &[SelfLoop] {
        &self.self_loops
    }

    /// Canonical edge list, sorted: all p2c edges first (by provider, then
    /// customer), then p2p (by smaller endpoint).
    pub fn edges(&self) -> Vec<RelEdge> {
        let mut out = Vec::with_capacity(self.p2c_count + self.p2p_count);
        for (node, provs) in self.providers.iter().enumerate() {
            for &p in provs {
                out.push(RelEdge {
                    a: AsId(self.asns[p as usize]),
                    b: AsId(self.asns[node]),
                    kind: EdgeKind::P2c,
                });
            }
        }
        for (node, ps) in self.peers.iter().enumerate() {
            for &p in ps {
                if (node as u32) < p {
                    out.push(RelEdge {
                        a: AsId(self.asns[node]),
                        b: AsId(self.asns[p as usize]),
                        kind: EdgeKind::P2p,
                    });
                }
            }
        }
        out.sort_by_key(|e| (matches!(e.kind, EdgeKind::P2p), e.a, e.b));
        out
    }

    pub(crate) fn node_count(&self) -> usize {
        self.asns.len()
    }

    pub(crate) fn node_of(&self, asn: AsId) -> Option<u32> {
        self.index.get(&asn.get()).copied()
    }

    pub(crate) fn asn_of(&self, node: u32) -> AsId {
        AsId(self.asns[node as usize])
    }

    pub(crate) fn providers_of(&self, node: u32) -> &[u32] {
        &self.providers[node as usize]
    }

    pub(crate) fn customers_of(&self, node: u32) -> &[u32] {
        &self.customers[node as usize]
    }

    pub(crate) fn peers_of(&self, node: u32) -> &[u32] {
        &self.peers[node as usize]
    }

    pub fn provider_asns(&self, asn: AsId) -> Option<Vec<AsId>> {
        let n = self.node_of(asn)?;
        Some(self.providers[n as usize].iter().map(|&p| self.asn_of(p)).collect())
    }

    pub fn degree(&self, asn: AsId) -> Option<usize> {
        let n = self.node_of(asn)? as usize;
        Some(self.providers[n].len() + self.customers[n].len() + self.peers[n].len())
    }
}

#[derive(Default)]
pub struct TopologyBuilder {
    asns: Vec<u32>,
    seen: HashMap<u32, ()>,
    pairs: HashMap<(u32, u32), PairRel>,
    self_loops: Vec<SelfLoop>,
}

/// Outcome of offering a peering pair to the builder without erroring on
/// already-connected pairs. Used by the IXP merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerOffer {
    Added,
    AlreadyPeer,
    KeptP2c,
    SelfLoop,
}

impl TopologyBuilder {
    pub fn add_as(&mut self, asn: AsId) {
        if self.seen.insert(asn.get(), ()).is_none() {
            self.asns.push(asn.get());
        }
    }

    fn key(a: u32, b: u32) -> (u32, u32) {
        (a.min(b), a.max(b))
    }

    /// `provider` sells transit to `customer`. Errors if the pair already
    /// carries a different relationship (peer, or p2c the other way).
    pub fn add_p2c(&mut self, provider: AsId, customer: AsId) -> Result<()> {
        if provider == customer {
            return Err(Error::Validation(format!("self-loop on AS {provider}")));
        }
        self.add_as(provider);
        self.add_as(customer);
        let key = Self::key(provider.get(), customer.get());
        let rel = PairRel::P2c {
            provider: provider.get(),
        };
        match self.pairs.get(&key) {
            None => {
                self.pairs.insert(key, rel);
                Ok(())
            }
            Some(existing) if *existing == rel => Ok(()),
            Some(_) => Err(Error::Validation(format!(
                "contradictory relationship for pair {provider}|{customer}"
            ))),
        }
    }

    pub fn add_p2p(&mut self, a: AsId, b: AsId) -> Result<()> {
        if a == b {
            return Err(Error::Validation(format!("self-loop on AS {a}")));
        }
        self.add_as(a);
        self.add_as(b);
        let key = Self::key(a.get(), b.get());
        match self.pairs.get(&key) {
            None => {
                self.pairs.insert(key, PairRel::P2p);
                Ok(())
            }
            Some(PairRel::P2p) => Ok(()),
            Some(PairRel::P2c { .. }) => Err(Error::Validation(format!(
                "contradictory relationship for pair {a}|{b}"
            ))),
        }
    }

    /// Peering offer that never errors: p2c edges keep precedence, existing
    /// peerings are left alone.
    pub fn offer_p2p(&mut self, a: AsId, b: AsId) -> PeerOffer {
        if a == b {
            return PeerOffer::SelfLoop;
        }
        let key = Self::key(a.get(), b.get());
        match self.pairs.get(&key) {
            Some(PairRel::P2c { .. }) => PeerOffer::KeptP2c,
            Some(PairRel::P2p) => PeerOffer::AlreadyPeer,
            None => {
                self.add_as(a);
                self.add_as(b);
                self.pairs.insert(key, PairRel::P2p);
                PeerOffer::Added
            }
        }
    }

    pub fn record_self_loop(&mut self, line: usize, asn: AsId) {
        // The AS still exists in the graph, just without the edge.
        self.add_as(asn);
        self.self_loops.push(SelfLoop { line, asn });
    }

    pub fn finish(self) -> TopologyGraph {
        let mut asns = self.asns;
        asns.sort_unstable();
        asns.dedup();
        let index: HashMap<u32, u32> = asns
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i as u32))
            .collect();
        let n = asns.len();
        let mut providers = vec![Vec::new(); n];
        let mut customers = vec![Vec::new(); n];
        let mut peers = vec![Vec::new(); n];
        let mut p2c_count = 0;
        let mut p2p_count = 0;
        for (&(lo, hi), rel) in &self.pairs {
            let li = index[&lo];
            let hi_i = index[&hi];
            match *rel {
                PairRel::P2c { provider } => {
                    let (prov, cust) = if provider == lo { (li, hi_i) } else { (hi_i, li) };
                    customers[prov as usize].push(cust);
                    providers[cust as usize].push(prov);
                    p2c_count += 1;
                }
                PairRel::P2p => {
                    peers[li as usize].push(hi_i);
                    peers[hi_i as usize].push(li);
                    p2p_count += 1;
                }
            }
        }
        for v in providers.iter_mut().chain(&mut customers).chain(&mut peers) {
            v.sort_unstable();
        }
        let mut self_loops = self.self_loops;
        self_loops.sort_by_key(|s| s.line);
        TopologyGraph {
            asns,
            index,
            providers,
            customers,
            peers,
            p2c_count,
            p2p_count,
            self_loops,
        }
    }
}

/// Rebuild a builder holding everything in `graph`, for edits after parse.
fn to_builder(graph: &TopologyGraph) -> TopologyBuilder {
    let mut b = TopologyGraph::builder();
    for asn in graph.asns() {
        b.add_as(asn);
    }
    for e in graph.edges() {
        match e.kind {
            EdgeKind::P2c => b.add_p2c(e.a, e.b).expect("graph edges are consistent"),
            EdgeKind::P2p => b.add_p2p(e.a, e.b).expect("graph edges are consistent"),
        }
    }
    for s in &graph.self_loops {
        b.self_loops.push(*s);
    }
    b
}

pub fn parse_as_rel<R: Read>(reader: R, label: &str) -> Result<TopologyGraph> {
    let mut b = TopologyGraph::builder();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('|');
        let (a, b_, rel) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(r)) => (a, b, r),
            _ => return Err(Error::parse(label, lineno, format!("expected A|B|rel, got {line:?}"))),
        };
        let a: AsId = a
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        let b_: AsId = b_
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        if a == b_ {
            b.record_self_loop(lineno, a);
            continue;
        }
        let added = match rel.trim() {
            "-1" => b.add_p2c(a, b_),
            "0" => b.add_p2p(a, b_),
            other => {
                return Err(Error::parse(
                    label,
                    lineno,
                    format!("unknown relationship {other:?} (want -1 or 0)"),
                ));
            }
        };
        added.map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
    }
    Ok(b.finish())
}

pub fn load_as_rel(path: &Path) -> Result<TopologyGraph> {
    let f = std::fs::File::open(path)?;
    parse_as_rel(f, &path.display().to_string())
}

/// Parse `asn_a,asn_b` peering pairs. A single optional header line naming
/// the columns is tolerated; `#` comments and blank lines are skipped.
pub fn parse_ixp_pairs<R: Read>(reader: R, label: &str) -> Result<Vec<(AsId, AsId)>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 1 && line.chars().any(|c| c.is_ascii_alphabetic()) {
            continue; // header
        }
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::parse(label, lineno, format!("expected asn_a,asn_b, got {line:?}"))),
        };
        let a: AsId = a
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        let b: AsId = b
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        out.push((a, b));
    }
    Ok(out)
}

pub fn load_ixp_pairs(path: &Path) -> Result<Vec<(AsId, AsId)>> {
    let f = std::fs::File::open(path)?;
    parse_ixp_pairs(f, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct MergeReport {
    pub offered: usize,
    pub added: usize,
    /// Pair already present as p2c; the relationship edge wins.
    pub kept_p2c: usize,
    pub already_peer: usize,
    pub self_loops: usize,
}

pub fn merge_ixp_peerings(
    graph: &TopologyGraph,
    pairs: &[(AsId, AsId)],
) -> (TopologyGraph, MergeReport) {
    let mut b = to_builder(graph);
    let mut report = MergeReport::default();
    for &(x, y) in pairs {
        report.offered += 1;
        match b.offer_p2p(x, y) {
            PeerOffer::Added => report.added += 1,
            PeerOffer::KeptP2c => report.kept_p2c += 1,
            PeerOffer::AlreadyPeer => report.already_peer += 1,
            PeerOffer::SelfLoop => report.self_loops += 1,
        }
    }
    (b.finish(), report)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub as_count: usize,
    pub p2c_edges: usize,
    pub p2p_edges: usize,
    pub self_loops: usize,
    pub isolated_ases: usize,
    pub accepted: bool,
}

pub fn validate_topology(graph: &TopologyGraph) -> ValidationReport {
    let isolated = (0..graph.node_count() as u32)
        .filter(|&n| {
            graph.providers_of(n).is_empty()
                && graph.customers_of(n).is_empty()
                && graph.peers_of(n).is_empty()
        })
        .count();
    // Contradictory pairs cannot survive the builder, so acceptance hinges
    // on self-loops observed during parse.
    ValidationReport {
        as_count: graph.as_count(),
        p2c_edges: graph.p2c_count(),
        p2p_edges: graph.p2p_count(),
        self_loops: graph.self_loops().len(),
        isolated_ases: isolated,
        accepted: graph.self_loops().is_empty(),
    }
}

pub fn write_as_rel<W: Write>(graph: &TopologyGraph, mut w: W) -> Result<()> {
    for e in graph.edges() {
        let rel = match e.kind {
            EdgeKind::P2c => -1,
            EdgeKind::P2p => 0,
        };
        writeln!(w, "{}|{}|{}", e.a, e.b, rel)?;
    }
    Ok(())
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"CSTG";
const SNAPSHOT_VERSION: u16 = 1;

/// Binary snapshot layout (little-endian):
///   magic "CSTG", u16 version,
///   u32 AS count, that many u32 AS numbers (ascending),
///   u32 p2c count, pairs of u32 (provider, customer),
///   u32 p2p count, pairs of u32 (a < b),
///   u32 self-loop count, pairs of u32 (line, asn).
pub fn write_snapshot<W: Write>(graph: &TopologyGraph, mut w: W) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(graph.asns.len() as u32).to_le_bytes())?;
    for &n in &graph.asns {
        w.write_all(&n.to_le_bytes())?;
    }
    let edges = graph.edges();
    let p2c: Vec<&RelEdge> = edges.iter().filter(|e| e.kind == EdgeKind::P2c).collect();
    let p2p: Vec<&RelEdge> = edges.iter().filter(|e| e.kind == EdgeKind::P2p).collect();
    w.write_all(&(p2c.len() as u32).to_le_bytes())?;
    for e in p2c {
        w.write_all(&e.a.get().to_le_bytes())?;
        w.write_all(&e.b.get().to_le_bytes())?;
    }
    w.write_all(&(p2p.len() as u32).to_le_bytes())?;
    for e in p2p {
        w.write_all(&e.a.get().to_le_bytes())?;
        w.write_all(&e.b.get().to_le_bytes())?;
    }
    w.write_all(&(graph.self_loops.len() as u32).to_le_bytes())?;
    for s in &graph.self_loops {
        w.write_all(&(s.line as u32).to_le_bytes())?;
        w.write_all(&s.asn.get().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<TopologyGraph> {
    fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
        let mut buf = [0u8; 2];
        r.read_exact(&mut buf)?;
        Ok(u16::from_le_bytes(buf))
    }
    fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = read_u16(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported version {version} (want {SNAPSHOT_VERSION})"
        )));
    }
    let mut b = TopologyGraph::builder();
    let n = read_u32(&mut r)?;
    for _ in 0..n {
        b.add_as(AsId::new(read_u32(&mut r)?).map_err(|e| Error::Snapshot(e.to_string()))?);
    }
    let p2c = read_u32(&mut r)?;
    for _ in 0..p2c {
        let prov = AsId::new(read_u32(&mut r)?).map_err(|e| Error::Snapshot(e.to_string()))?;
        let cust = AsId::new(read_u32(&mut r)?).map_err(|e| Error::Snapshot(e.to_string()))?;
        b.add_p2c(prov, cust)
            .map_err(|e| Error::Snapshot(e.to_string()))?;
    }
    let p2p = read_u32(&mut r)?;
    for _ in 0..p2p {
        let a = AsId::new(read_u32(&mut r)?).map_err(|e| Error::Snapshot(e.to_string()))?;
        let c = AsId::new(read_u32(&mut r)?).map_err(|e| Error::Snapshot(e.to_string()))?;
        b.add_p2p(a, c).map_err(|e| Error::Snapshot(e.to_string()))?;
    }
    let loops = read_u32(&mut r)?;
    for _ in 0..loops {
        let line = read_u32(&mut r)? as usize;
        let asn = AsId::new(read_u32(&mut r)?).map_err(|e| Error::Snapshot(e.to_string()))?;
        b.record_self_loop(line, asn);
    }
    Ok(b.finish())
}
