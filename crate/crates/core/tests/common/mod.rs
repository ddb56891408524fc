//! Reference implementations the integration tests hold the library to.
//! Deliberately naive: exhaustive path enumeration instead of the phased
//! tree build, linear scans instead of the sorted index, full subset
//! enumeration instead of the greedy. Shared comparisons go through plain
//! (rank, length) tuples so none of the library's preference plumbing is
//! on both sides of a check.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::net::IpAddr;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use censim::attack::{attack_feasible, hijack_diverts, passive_intercepts, TiePolicy, Vector};
use censim::datasets::{BitswapLogEvent, CidRecord, RequesterSet};
use censim::prefixdb::{Endpoint, IpPrefix};
use censim::routing::{RouteClass, RoutePref, TreeCache};
use censim::strategy::BudgetContext;
use censim::topology::{AsId, EdgeKind, TopologyGraph};

pub fn asid(n: u32) -> AsId {
    AsId::new(n).expect("test AS numbers are nonzero")
}

// ---------------------------------------------------------------------------
// Random small topologies.

/// Random topology of 2..=8 ASes with mixed edge densities. Half the draws
/// use dense 1..=n AS numbers, half sparse ones, so the node-id mapping is
/// exercised too.
pub fn random_topology(rng: &mut ChaCha8Rng) -> Arc<TopologyGraph> {
    let n: usize = rng.gen_range(2..=8);
    let asns: Vec<u32> = if rng.gen_bool(0.5) {
        (1..=n as u32).collect()
    } else {
        let mut set = BTreeSet::new();
        while set.len() < n {
            set.insert(rng.gen_range(1..1_000_000u32));
        }
        set.into_iter().collect()
    };
    let mut b = TopologyGraph::builder();
    for &a in &asns {
        b.add_as(asid(a));
    }
    let edge_density = rng.gen_range(0.25..0.95);
    let peer_share = rng.gen_range(0.1..0.6);
    for i in 0..n {
        for j in (i + 1)..n {
            if !rng.gen_bool(edge_density) {
                continue;
            }
            let (x, y) = (asid(asns[i]), asid(asns[j]));
            if rng.gen_bool(peer_share) {
                b.add_p2p(x, y).expect("fresh pair");
            } else if rng.gen_bool(0.5) {
                b.add_p2c(x, y).expect("fresh pair");
            } else {
                b.add_p2c(y, x).expect("fresh pair");
            }
        }
    }
    Arc::new(b.finish())
}

// ---------------------------------------------------------------------------
// Brute-force valley-free routing.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Up,
    Flat,
    Down,
}

/// Adjacency with each directed edge labelled from the tail's point of
/// view: toward a provider, a peer, or a customer.
pub struct OracleGraph {
    pub asns: Vec<AsId>,
    adj: HashMap<AsId, Vec<(AsId, Step)>>,
}

impl OracleGraph {
    pub fn new(g: &TopologyGraph) -> OracleGraph {
        let mut adj: HashMap<AsId, Vec<(AsId, Step)>> = HashMap::new();
        for a in g.asns() {
            adj.entry(a).or_default();
        }
        for e in g.edges() {
            match e.kind {
                EdgeKind::P2c => {
                    adj.get_mut(&e.a).unwrap().push((e.b, Step::Down));
                    adj.get_mut(&e.b).unwrap().push((e.a, Step::Up));
                }
                EdgeKind::P2p => {
                    adj.get_mut(&e.a).unwrap().push((e.b, Step::Flat));
                    adj.get_mut(&e.b).unwrap().push((e.a, Step::Flat));
                }
            }
        }
        OracleGraph {
            asns: g.asns().collect(),
            adj,
        }
    }

    pub fn step(&self, from: AsId, to: AsId) -> Option<Step> {
        self.adj
            .get(&from)
            .and_then(|v| v.iter().find(|(n, _)| *n == to).map(|(_, s)| *s))
    }
}

/// Route preference as a bare tuple: rank 0 self, 1 customer, 2 peer,
/// 3 provider, 255 unreachable. Smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OraclePref {
    pub rank: u8,
    pub len: u64,
}

impl OraclePref {
    pub const UNREACHABLE: OraclePref = OraclePref {
        rank: 255,
        len: u64::MAX,
    };

    pub fn reachable(self) -> bool {
        self.rank != 255
    }

    pub fn from_library(p: RoutePref) -> OraclePref {
        let rank = match p.class {
            RouteClass::SelfRoute => 0,
            RouteClass::Customer => 1,
            RouteClass::Peer => 2,
            RouteClass::Provider => 3,
            RouteClass::Unreachable => return OraclePref::UNREACHABLE,
        };
        OraclePref {
            rank,
            len: u64::from(p.length),
        }
    }
}

fn steps(g: &OracleGraph, a: AsId, want: Step) -> impl Iterator<Item = AsId> + '_ {
    g.adj[&a]
        .iter()
        .filter(move |&&(_, s)| s == want)
        .map(|&(b, _)| b)
}

/// Stable (class, length) from src to dest under export-constrained
/// valley-free routing: every AS advertises only its selected best route,
/// customers hear everything, peers and providers hear customer routes
/// only. A plain all-valley-free-paths minimum would be wrong here: an AS
/// holding a customer route never uses a shorter peer or provider detour,
/// so nothing downstream of it sees that detour either. Computed as naive
/// relaxation fixpoints, one per route class, worst case O(V·E) rounds.
pub fn oracle_pref(g: &OracleGraph, src: AsId, dest: AsId) -> OraclePref {
    if src == dest {
        return OraclePref { rank: 0, len: 0 };
    }
    const INF: u64 = u64::MAX;
    // Customer routes: next hop is a customer, relaxed to fixpoint.
    let mut customer: HashMap<AsId, u64> = g.asns.iter().map(|&a| (a, INF)).collect();
    customer.insert(dest, 0);
    loop {
        let mut changed = false;
        for &a in &g.asns {
            for b in steps(g, a, Step::Down) {
                let l = customer[&b];
                if l != INF && l + 1 < customer[&a] {
                    customer.insert(a, l + 1);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Peer routes: one flat hop onto a customer route (or the destination
    // itself, length 0), only where no customer route exists. Never chains.
    let mut peer: HashMap<AsId, u64> = g.asns.iter().map(|&a| (a, INF)).collect();
    for &a in &g.asns {
        if customer[&a] != INF {
            continue;
        }
        for b in steps(g, a, Step::Flat) {
            let l = customer[&b];
            if l != INF && l + 1 < peer[&a] {
                peer.insert(a, l + 1);
            }
        }
    }
    // Provider routes: one up hop onto whatever the provider selected,
    // relaxed to fixpoint (providers may route through their own providers).
    let mut provider: HashMap<AsId, u64> = g.asns.iter().map(|&a| (a, INF)).collect();
    loop {
        let mut changed = false;
        for &a in &g.asns {
            if customer[&a] != INF || peer[&a] != INF {
                continue;
            }
            for b in steps(g, a, Step::Up) {
                let sel = if customer[&b] != INF {
                    customer[&b]
                } else if peer[&b] != INF {
                    peer[&b]
                } else {
                    provider[&b]
                };
                if sel != INF && sel + 1 < provider[&a] {
                    provider.insert(a, sel + 1);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if customer[&src] != INF {
        OraclePref { rank: 1, len: customer[&src] }
    } else if peer[&src] != INF {
        OraclePref { rank: 2, len: peer[&src] }
    } else if provider[&src] != INF {
        OraclePref { rank: 3, len: provider[&src] }
    } else {
        OraclePref::UNREACHABLE
    }
}

/// A path is valley-free iff its edge kinds match up* flat? down*.
pub fn valley_free(g: &OracleGraph, path: &[AsId]) -> bool {
    let mut seen_flat = false;
    let mut descending = false;
    for w in path.windows(2) {
        let Some(step) = g.step(w[0], w[1]) else {
            return false;
        };
        match step {
            Step::Up => {
                if seen_flat || descending {
                    return false;
                }
            }
            Step::Flat => {
                if seen_flat || descending {
                    return false;
                }
                seen_flat = true;
            }
            Step::Down => descending = true,
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Hijack rule table.

/// Category table plus preference comparison, stated directly: 1 and 3
/// divert unconditionally, 2 competes as announced, 4 competes with one
/// extra hop; legit-wins needs a strict win, attacker-wins takes ties.
pub fn hijack_oracle(
    category: u8,
    tie: TiePolicy,
    to_attacker: OraclePref,
    to_origin: OraclePref,
) -> bool {
    match category {
        1 | 3 => true,
        2 | 4 => {
            let offer = if category == 4 && to_attacker.reachable() {
                OraclePref {
                    rank: to_attacker.rank,
                    len: to_attacker.len + 1,
                }
            } else {
                to_attacker
            };
            match tie {
                TiePolicy::LegitWins => offer < to_origin,
                TiePolicy::AttackerWins => offer <= to_origin,
            }
        }
        _ => unreachable!("categories are 1..=4"),
    }
}

// ---------------------------------------------------------------------------
// Longest-prefix match by linear scan.

/// Among entries containing the address, the longest prefix wins. Two
/// distinct prefixes of equal length cannot both contain one address, so
/// the maximum is unique.
pub fn lpm_oracle(entries: &[(IpPrefix, AsId)], ip: IpAddr) -> Option<(IpPrefix, AsId)> {
    entries
        .iter()
        .filter(|(p, _)| p.contains_ip(ip))
        .max_by_key(|(p, _)| p.len())
        .copied()
}

// ---------------------------------------------------------------------------
// Budget evaluation by definition.

/// Surface sides of a CID for the budget vector, built from the public
/// record fields.
pub fn budget_sides(cid: &CidRecord, vector: Vector) -> Vec<Vec<Endpoint>> {
    let providers: Vec<Endpoint> = cid
        .providers
        .iter()
        .chain(cid.bitswap_attacker.iter())
        .copied()
        .collect();
    let resolvers: Vec<Endpoint> = cid
        .resolvers
        .iter()
        .map(|r| r.endpoint)
        .chain(cid.bitswap_attacker.iter().copied())
        .collect();
    match vector {
        Vector::Providers => vec![providers],
        Vector::Resolvers => vec![resolvers],
        Vector::Full => vec![providers, resolvers],
    }
}

/// Requester groups that survive the unknown-AS exclusion, with weights.
pub fn known_groups(trees: &TreeCache, requesters: &RequesterSet) -> Vec<(AsId, u64)> {
    requesters
        .by_as()
        .into_iter()
        .filter(|(a, _)| trees.graph().contains(*a))
        .map(|(a, idxs)| (a, idxs.len() as u64))
        .collect()
}

/// Pairs blocked once the chosen prefixes are hijacked, evaluated from the
/// definition: a side blocks a requester iff it is nonempty and every
/// endpoint in it is neutralized; an endpoint is neutralized by being
/// self-hosted, passively covered (when enabled), or hijack-diverted via a
/// chosen prefix; a pair counts when any side blocks.
pub fn oracle_blocked_pairs(
    trees: &TreeCache,
    ctx: &BudgetContext,
    cids: &[CidRecord],
    groups: &[(AsId, u64)],
    chosen: &HashSet<IpPrefix>,
) -> u64 {
    let graph = trees.graph();
    let mut total = 0u64;
    for cid in cids {
        if !attack_feasible(cid) {
            continue;
        }
        let sides = budget_sides(cid, ctx.vector);
        for &(group, weight) in groups {
            let blocked = sides.iter().any(|side| {
                !side.is_empty()
                    && side.iter().all(|e| {
                        if e.origin == ctx.attacker {
                            return true;
                        }
                        if graph.contains(e.origin) {
                            if ctx.include_passive
                                && passive_intercepts(trees, ctx.attacker, group, e.origin)
                                    .expect("all ASes verified in the graph")
                            {
                                return true;
                            }
                            chosen.contains(&e.prefix)
                                && hijack_diverts(trees, ctx.tie_policy, ctx.attacker, group, e)
                                    .expect("all ASes verified in the graph")
                        } else {
                            chosen.contains(&e.prefix) && e.category.always_divertable()
                        }
                    })
            });
            if blocked {
                total += weight;
            }
        }
    }
    total
}

/// Distinct surface prefixes over the feasible records, both sides.
pub fn oracle_candidates(cids: &[CidRecord]) -> Vec<IpPrefix> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for cid in cids {
        if !attack_feasible(cid) {
            continue;
        }
        for side in budget_sides(cid, Vector::Full) {
            for e in side {
                if seen.insert(e.prefix) {
                    out.push(e.prefix);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Scoring replay by definition.

pub struct ScoreOracle {
    pub final_order: Vec<String>,
    pub scores: HashMap<String, (f64, usize)>,
    pub insertions: usize,
    pub max_size: usize,
}

/// Replay the stream: a CID claims a slot on first sight, keeps collecting
/// peers while resident, and is evicted in first-seen order. Scores over
/// the final window only.
pub fn score_oracle(events: &[BitswapLogEvent], capacity: usize) -> ScoreOracle {
    let mut order: Vec<String> = Vec::new();
    let mut peers: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut head = 0usize;
    let mut insertions = 0usize;
    let mut max_size = 0usize;
    for e in events {
        if let Some(set) = peers.get_mut(&e.cid) {
            set.insert(e.peer.clone());
            continue;
        }
        if order.len() - head == capacity {
            let evicted = &order[head];
            peers.remove(evicted);
            head += 1;
        }
        order.push(e.cid.clone());
        peers.insert(e.cid.clone(), BTreeSet::from([e.peer.clone()]));
        insertions += 1;
        max_size = max_size.max(order.len() - head);
        assert!(order.len() - head <= capacity, "window exceeded capacity");
    }
    let final_order: Vec<String> = order[head..].to_vec();
    let mut spread: HashMap<&str, u32> = HashMap::new();
    for cid in &final_order {
        for p in &peers[cid] {
            *spread.entry(p.as_str()).or_insert(0) += 1;
        }
    }
    let mut scores = HashMap::new();
    for cid in &final_order {
        let set = &peers[cid];
        let score: f64 = set.iter().map(|p| 1.0 / f64::from(spread[p.as_str()])).sum();
        scores.insert(cid.clone(), (score, set.len()));
    }
    ScoreOracle {
        final_order,
        scores,
        insertions,
        max_size,
    }
}
