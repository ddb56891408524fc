//! Blocking verdicts: given a topology, a prefix database, and a CID's
//! attack surface, decide which requesters a single attacker AS can cut
//! off, either by sitting on the traffic path (passive) or by hijacking
//! the endpoint prefixes (active), per attack vector.
//!
//! A requester counts as blocked under a vector only when *every* endpoint
//! in that vector's surface is disrupted for it; content survives as long
//! as one reachable copy remains. The full vector blocks a requester when
//! either the provider-side or the resolver-side surface falls.
//!
//! Endpoints whose origin AS is missing from the topology are dataset
//! gaps, not attacker wins: they never count as disrupted except under
//! the purely local category rules (sub-prefix and max-length hijacks),
//! which need no routing knowledge.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::{CidRecord, RequesterSet};
use crate::error::{Error, Result};
use crate::prefixdb::{Endpoint, IpPrefix};
use crate::routing::{build_routing_tree, RoutingTree, TreeCache};
use crate::topology::AsId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Passive,
    Hijack,
    Combined,
}

pub const MODES: [Mode; 3] = [Mode::Passive, Mode::Hijack, Mode::Combined];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Vector {
    Providers,
    Resolvers,
    Full,
}

pub const VECTORS: [Vector; 3] = [Vector::Providers, Vector::Resolvers, Vector::Full];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum TiePolicy {
    /// Equal route preference keeps the legitimate origin's traffic.
    #[default]
    #[serde(rename = "legit-wins")]
    LegitWins,
    /// Equal preference breaks toward the attacker; upper bound for the
    /// roughly-half-the-traffic regime of preference ties.
    #[serde(rename = "attacker-wins")]
    AttackerWins,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Passive => "passive",
            Mode::Hijack => "hijack",
            Mode::Combined => "combined",
        }
    }

    fn index(self) -> usize {
        match self {
            Mode::Passive => 0,
            Mode::Hijack => 1,
            Mode::Combined => 2,
        }
    }
}

impl Vector {
    pub fn name(self) -> &'static str {
        match self {
            Vector::Providers => "providers",
            Vector::Resolvers => "resolvers",
            Vector::Full => "full",
        }
    }

    fn index(self) -> usize {
        match self {
            Vector::Providers => 0,
            Vector::Resolvers => 1,
            Vector::Full => 2,
        }
    }
}

impl TiePolicy {
    pub fn name(self) -> &'static str {
        match self {
            TiePolicy::LegitWins => "legit-wins",
            TiePolicy::AttackerWins => "attacker-wins",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "passive" => Ok(Mode::Passive),
            "hijack" => Ok(Mode::Hijack),
            "combined" => Ok(Mode::Combined),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected passive, hijack, or combined)"
            ))),
        }
    }
}

impl FromStr for Vector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Vector> {
        match s {
            "providers" => Ok(Vector::Providers),
            "resolvers" => Ok(Vector::Resolvers),
            "full" => Ok(Vector::Full),
            other => Err(Error::Config(format!(
                "unknown vector {other:?} (expected providers, resolvers, or full)"
            ))),
        }
    }
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<TiePolicy> {
        match s {
            "legit-wins" => Ok(TiePolicy::LegitWins),
            "attacker-wins" => Ok(TiePolicy::AttackerWins),
            other => Err(Error::Config(format!(
                "unknown tie policy {other:?} (expected legit-wins or attacker-wins)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackConfig {
    pub attacker: AsId,
    pub mode: Mode,
    pub vector: Vector,
    pub tie_policy: TiePolicy,
}

impl AttackConfig {
    pub fn new(attacker: AsId, mode: Mode, vector: Vector) -> AttackConfig {
        AttackConfig {
            attacker,
            mode,
            vector,
            tie_policy: TiePolicy::default(),
        }
    }
}

/// True iff the attacker sits on the requester→target path or on the
/// return path, endpoints included. Valley-free routes are asymmetric, so
/// both directions are checked; a direction with no route contributes
/// nothing.
pub fn passive_intercepts(
    trees: &TreeCache,
    attacker: AsId,
    requester: AsId,
    target: AsId,
) -> Result<bool> {
    let toward_target = trees.tree(target)?;
    let toward_requester = trees.tree(requester)?;
    Ok(toward_target.on_path(requester, attacker)? || toward_requester.on_path(target, attacker)?)
}

/// True iff a hijack announcement by the attacker diverts the requester's
/// traffic away from the endpoint. Sub-prefix announcements (categories 1
/// and 3) always win. At the announcement-length limit the attacker
/// competes on route preference; a forged-origin announcement (category 4)
/// carries one extra AS hop.
pub fn hijack_diverts(
    trees: &TreeCache,
    tie_policy: TiePolicy,
    attacker: AsId,
    requester: AsId,
    endpoint: &Endpoint,
) -> Result<bool> {
    debug_assert_ne!(attacker, endpoint.origin, "self-hijack is a caller bug");
    if endpoint.category.always_divertable() {
        return Ok(true);
    }
    let to_attacker = trees.tree(attacker)?.route_pref(requester)?;
    let to_origin = trees.tree(endpoint.origin)?.route_pref(requester)?;
    let extra = u32::from(endpoint.category.forged_origin());
    let offer = to_attacker.lengthened(extra);
    Ok(match tie_policy {
        TiePolicy::LegitWins => offer.beats(to_origin),
        TiePolicy::AttackerWins => offer.beats(to_origin) || offer.ties(to_origin),
    })
}

/// Mode dispatch for one (requester, endpoint) pair. An attacker that is
/// the endpoint's own origin trivially controls it.
pub fn endpoint_blocked(
    trees: &TreeCache,
    config: &AttackConfig,
    requester: AsId,
    endpoint: &Endpoint,
) -> Result<bool> {
    if config.attacker == endpoint.origin {
        // Validate the lookup contract even on the shortcut path.
        trees.graph().node_of(config.attacker).ok_or(Error::UnknownAs(config.attacker.get()))?;
        trees.graph().node_of(requester).ok_or(Error::UnknownAs(requester.get()))?;
        return Ok(true);
    }
    match config.mode {
        Mode::Passive => passive_intercepts(trees, config.attacker, requester, endpoint.origin),
        Mode::Hijack => {
            hijack_diverts(trees, config.tie_policy, config.attacker, requester, endpoint)
        }
        Mode::Combined => {
            Ok(
                passive_intercepts(trees, config.attacker, requester, endpoint.origin)?
                    || hijack_diverts(
                        trees,
                        config.tie_policy,
                        config.attacker,
                        requester,
                        endpoint,
                    )?,
            )
        }
    }
}

/// Endpoint verdict with the dataset-gap policy applied: origins absent
/// from the topology are never passively intercepted and win every
/// preference competition; only the local category rules still divert.
pub(crate) fn endpoint_blocked_lenient(
    trees: &TreeCache,
    config: &AttackConfig,
    requester: AsId,
    endpoint: &Endpoint,
) -> Result<bool> {
    if trees.graph().node_of(endpoint.origin).is_some() {
        return endpoint_blocked(trees, config, requester, endpoint);
    }
    Ok(match config.mode {
        Mode::Passive => false,
        Mode::Hijack | Mode::Combined => endpoint.category.always_divertable(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockedSet {
    /// Indices into the requester set, ascending.
    pub blocked: Vec<u32>,
    pub feasible: bool,
    /// Requesters skipped because their AS is not in the topology.
    pub excluded_unknown_as: u32,
}

impl BlockedSet {
    fn infeasible(excluded: u32) -> BlockedSet {
        BlockedSet {
            blocked: Vec::new(),
            feasible: false,
            excluded_unknown_as: excluded,
        }
    }
}

/// The attacker knows the full cache-peer surface only if every IP any
/// victim monitor saw also appears in the attacker's own view.
pub fn attack_feasible(cid: &CidRecord) -> bool {
    cid.victim_view_ips
        .iter()
        .flatten()
        .all(|ip| cid.attacker_view_ips.contains(ip))
}

pub(crate) fn surface_endpoints(cid: &CidRecord, vector: Vector) -> Vec<&Endpoint> {
    let mut out: Vec<&Endpoint> = Vec::new();
    match vector {
        Vector::Providers => {
            out.extend(cid.providers.iter());
            out.extend(cid.bitswap_attacker.iter());
        }
        Vector::Resolvers => {
            out.extend(cid.resolvers.iter().map(|r| &r.endpoint));
            out.extend(cid.bitswap_attacker.iter());
        }
        Vector::Full => unreachable!("full is evaluated as a union of the base vectors"),
    }
    out
}

/// Blocked requester set for one CID under one configuration.
///
/// Reference implementation: per-requester conjunction over the surface,
/// one preference/path query per endpoint. The batched evaluator in
/// [`evaluate_dataset`] must agree with this exactly.
pub fn requesters_blocked(
    trees: &TreeCache,
    config: &AttackConfig,
    cid: &CidRecord,
    requesters: &RequesterSet,
) -> Result<BlockedSet> {
    trees
        .graph()
        .node_of(config.attacker)
        .ok_or(Error::UnknownAs(config.attacker.get()))?;
    let excluded = requesters
        .requesters
        .iter()
        .filter(|r| trees.graph().node_of(r.asn).is_none())
        .count() as u32;
    if !attack_feasible(cid) {
        return Ok(BlockedSet::infeasible(excluded));
    }
    if config.vector == Vector::Full {
        let providers = requesters_blocked(
            trees,
            &AttackConfig { vector: Vector::Providers, ..*config },
            cid,
            requesters,
        )?;
        let resolvers = requesters_blocked(
            trees,
            &AttackConfig { vector: Vector::Resolvers, ..*config },
            cid,
            requesters,
        )?;
        let union: BTreeSet<u32> = providers
            .blocked
            .iter()
            .chain(resolvers.blocked.iter())
            .copied()
            .collect();
        return Ok(BlockedSet {
            blocked: union.into_iter().collect(),
            feasible: true,
            excluded_unknown_as: excluded,
        });
    }
    let surface = surface_endpoints(cid, config.vector);
    if surface.is_empty() {
        // Nothing on this side serves the CID, so there is no service for
        // the attacker to take away.
        return Ok(BlockedSet {
            blocked: Vec::new(),
            feasible: true,
            excluded_unknown_as: excluded,
        });
    }
    // One verdict per requester AS; endpoints deduplicated by what the
    // verdict actually depends on.
    let mut distinct: Vec<&Endpoint> = Vec::new();
    let mut seen: BTreeSet<(AsId, u8)> = BTreeSet::new();
    for e in &surface {
        if seen.insert((e.origin, e.category.as_u8())) {
            distinct.push(e);
        }
    }
    let mut verdicts: HashMap<AsId, bool> = HashMap::new();
    let mut blocked = Vec::new();
    for (idx, r) in requesters.requesters.iter().enumerate() {
        if trees.graph().node_of(r.asn).is_none() {
            continue;
        }
        let hit = match verdicts.get(&r.asn) {
            Some(&v) => v,
            None => {
                let mut all = true;
                for e in &distinct {
                    if !endpoint_blocked_lenient(trees, config, r.asn, e)? {
                        all = false;
                        break;
                    }
                }
                verdicts.insert(r.asn, all);
                all
            }
        };
        if hit {
            blocked.push(idx as u32);
        }
    }
    Ok(BlockedSet {
        blocked,
        feasible: true,
        excluded_unknown_as: excluded,
    })
}

/// Per (cid, attacker) blocked-requester counts for every mode and vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellCounts(pub [[u32; 3]; 3]);

impl CellCounts {
    pub fn get(&self, mode: Mode, vector: Vector) -> u32 {
        self.0[mode.index()][vector.index()]
    }

    fn add(&mut self, other: &CellCounts) {
        for m in 0..3 {
            for v in 0..3 {
                self.0[m][v] += other.0[m][v];
            }
        }
    }
}

#[derive(Debug)]
pub struct DatasetEval {
    pub attackers: Vec<AsId>,
    pub cids: Vec<String>,
    pub feasible: Vec<bool>,
    /// Indexed `cid * attackers.len() + attacker`.
    pub counts: Vec<CellCounts>,
    pub requesters_evaluated: u32,
    pub requesters_excluded: u32,
    pub tie_policy: TiePolicy,
}

impl DatasetEval {
    pub fn count(&self, cid: usize, attacker: usize, mode: Mode, vector: Vector) -> u32 {
        self.counts[cid * self.attackers.len() + attacker].get(mode, vector)
    }

    pub fn fraction(&self, cid: usize, attacker: usize, mode: Mode, vector: Vector) -> f64 {
        if self.requesters_evaluated == 0 {
            return 0.0;
        }
        f64::from(self.count(cid, attacker, mode, vector)) / f64::from(self.requesters_evaluated)
    }

    /// Strongest attacker per CID: (attacker index, blocked count), first
    /// listed attacker winning count ties.
    pub fn best_attacker(&self, cid: usize, mode: Mode, vector: Vector) -> (usize, u32) {
        let mut best = (0, 0);
        for a in 0..self.attackers.len() {
            let c = self.count(cid, a, mode, vector);
            if c > best.1 {
                best = (a, c);
            }
        }
        best
    }

    /// Mean over CIDs of the per-CID max-over-attackers blocked fraction.
    pub fn mean_max_fraction(&self, mode: Mode, vector: Vector) -> f64 {
        if self.cids.is_empty() || self.requesters_evaluated == 0 {
            return 0.0;
        }
        let total: u64 = (0..self.cids.len())
            .map(|c| u64::from(self.best_attacker(c, mode, vector).1))
            .sum();
        total as f64 / (self.cids.len() as u64 * u64::from(self.requesters_evaluated)) as f64
    }

    /// Blocked (cid, requester) pairs for one attacker.
    pub fn attacker_pairs(&self, attacker: usize, mode: Mode, vector: Vector) -> u64 {
        (0..self.cids.len())
            .map(|c| u64::from(self.count(c, attacker, mode, vector)))
            .sum()
    }

    /// Mean blocked fraction over all (cid, requester) pairs for one attacker.
    pub fn attacker_mean_fraction(&self, attacker: usize, mode: Mode, vector: Vector) -> f64 {
        if self.cids.is_empty() || self.requesters_evaluated == 0 {
            return 0.0;
        }
        self.attacker_pairs(attacker, mode, vector) as f64
            / (self.cids.len() as u64 * u64::from(self.requesters_evaluated)) as f64
    }

    /// Fraction of CIDs some attacker blocks for every evaluated requester.
    pub fn fully_blockable_fraction(&self, mode: Mode, vector: Vector) -> f64 {
        if self.cids.is_empty() || self.requesters_evaluated == 0 {
            return 0.0;
        }
        let n = (0..self.cids.len())
            .filter(|&c| self.best_attacker(c, mode, vector).1 == self.requesters_evaluated)
            .count();
        n as f64 / self.cids.len() as f64
    }
}

const KIND_PASSIVE: usize = 0;
const KIND_COMPETE: usize = 1;
const KIND_COMPETE_FORGED: usize = 2;

/// One base vector's surface, reduced to what verdicts depend on. Origin
/// indices refer to the dense table of in-topology endpoint origins.
#[derive(Debug, Default, Clone)]
struct Surface {
    empty: bool,
    /// Distinct known origins, every category: the passive conjunction.
    passive: Vec<u32>,
    /// Distinct known (origin, forged?) pairs still competing under
    /// hijack; always-divertable endpoints drop out of the conjunction.
    compete: Vec<(u32, bool)>,
    /// Some endpoint origin is unknown: passive can never block.
    passive_poisoned: bool,
    /// Some competing endpoint's origin is unknown: hijack (and with it
    /// combined) can never block.
    hijack_poisoned: bool,
}

impl Surface {
    fn build(
        endpoints: &[&Endpoint],
        origin_index: &HashMap<AsId, u32>,
    ) -> Surface {
        let mut s = Surface { empty: endpoints.is_empty(), ..Surface::default() };
        let mut seen_passive = BTreeSet::new();
        let mut seen_compete = BTreeSet::new();
        for e in endpoints {
            match origin_index.get(&e.origin) {
                Some(&idx) => {
                    if seen_passive.insert(idx) {
                        s.passive.push(idx);
                    }
                    if !e.category.always_divertable() {
                        let key = (idx, e.category.forged_origin());
                        if seen_compete.insert(key) {
                            s.compete.push(key);
                        }
                    }
                }
                None => {
                    s.passive_poisoned = true;
                    if !e.category.always_divertable() {
                        s.hijack_poisoned = true;
                    }
                }
            }
        }
        s
    }
}

struct EvalPlan {
    origins: Vec<u32>,
    origin_trees: Vec<Arc<RoutingTree>>,
    attacker_nodes: Vec<u32>,
    attacker_trees: Vec<Arc<RoutingTree>>,
    /// Per cid: [providers, resolvers] surfaces; None when infeasible.
    surfaces: Vec<Option<[Surface; 2]>>,
    groups: Vec<(u32, u32)>,
    tie_policy: TiePolicy,
}

/// Scratch buffers reused across requester groups on one worker thread.
struct GroupScratch {
    /// Verdict memo per (attacker, origin, kind): 0 unknown, 1 false, 2 true.
    table: Vec<u8>,
}

fn eval_group(
    plan: &EvalPlan,
    trees: &TreeCache,
    group_node: u32,
    group_size: u32,
    scratch: &mut GroupScratch,
    counts: &mut [CellCounts],
) {
    let graph = trees.graph();
    let n_origins = plan.origins.len();
    let table_len = plan.attacker_nodes.len() * n_origins * 3;
    scratch.table.clear();
    scratch.table.resize(table_len, 0);
    let group_tree = build_routing_tree(graph, graph.asn_of(group_node))
        .expect("group AS comes from the graph");
    let n_attackers = plan.attacker_nodes.len();
    for (a, &att_node) in plan.attacker_nodes.iter().enumerate() {
        let att_tree = &plan.attacker_trees[a];
        let pref_att = att_tree.pref_by_node(group_node);
        let base = a * n_origins * 3;
        let bit = |o: u32, kind: usize, scratch: &mut GroupScratch| -> bool {
            let slot = base + o as usize * 3 + kind;
            match scratch.table[slot] {
                1 => return false,
                2 => return true,
                _ => {}
            }
            let o_node = plan.origins[o as usize];
            let verdict = if o_node == att_node {
                true
            } else {
                match kind {
                    KIND_PASSIVE => {
                        let o_tree = &plan.origin_trees[o as usize];
                        o_tree.on_path_nodes(group_node, att_node)
                            || group_tree.on_path_nodes(o_node, att_node)
                    }
                    _ => {
                        let pref_origin = plan.origin_trees[o as usize].pref_by_node(group_node);
                        let offer = pref_att.lengthened(u32::from(kind == KIND_COMPETE_FORGED));
                        match plan.tie_policy {
                            TiePolicy::LegitWins => offer.beats(pref_origin),
                            TiePolicy::AttackerWins => {
                                offer.beats(pref_origin) || offer.ties(pref_origin)
                            }
                        }
                    }
                }
            };
            scratch.table[slot] = if verdict { 2 } else { 1 };
            verdict
        };
        for (c, surfaces) in plan.surfaces.iter().enumerate() {
            let Some(surfaces) = surfaces else { continue };
            let mut by_vector = [[false; 3]; 2];
            for (v, s) in surfaces.iter().enumerate() {
                if s.empty {
                    continue;
                }
                let passive = !s.passive_poisoned
                    && s.passive.iter().all(|&o| bit(o, KIND_PASSIVE, scratch));
                let hijack = !s.hijack_poisoned
                    && s.compete.iter().all(|&(o, forged)| {
                        bit(o, if forged { KIND_COMPETE_FORGED } else { KIND_COMPETE }, scratch)
                    });
                let combined = !s.hijack_poisoned
                    && s.compete.iter().all(|&(o, forged)| {
                        bit(o, if forged { KIND_COMPETE_FORGED } else { KIND_COMPETE }, scratch)
                            || bit(o, KIND_PASSIVE, scratch)
                    });
                by_vector[v] = [passive, hijack, combined];
            }
            let cell = &mut counts[c * n_attackers + a];
            for (m, row) in cell.0.iter_mut().enumerate() {
                let p = by_vector[0][m];
                let r = by_vector[1][m];
                if p {
                    row[0] += group_size;
                }
                if r {
                    row[1] += group_size;
                }
                if p || r {
                    row[2] += group_size;
                }
            }
        }
    }
}

/// Evaluate every (cid, attacker, mode, vector) combination in one pass.
///
/// Work is split across requester-AS groups; each group builds its routing
/// tree once, transiently, so memory stays bounded by origin and attacker
/// trees. Counts are plain integer sums, so the result is independent of
/// scheduling.
pub fn evaluate_dataset(
    trees: &TreeCache,
    cids: &[CidRecord],
    requesters: &RequesterSet,
    attackers: &[AsId],
    tie_policy: TiePolicy,
) -> Result<DatasetEval> {
    if attackers.is_empty() {
        return Err(Error::Config("attacker list is empty".into()));
    }
    let graph = trees.graph();
    let mut attacker_nodes = Vec::with_capacity(attackers.len());
    for a in attackers {
        attacker_nodes.push(graph.node_of(*a).ok_or(Error::UnknownAs(a.get()))?);
    }

    let mut origin_set: BTreeSet<AsId> = BTreeSet::new();
    for cid in cids {
        for v in [Vector::Providers, Vector::Resolvers] {
            for e in surface_endpoints(cid, v) {
                if graph.node_of(e.origin).is_some() {
                    origin_set.insert(e.origin);
                }
            }
        }
    }
    let origin_asns: Vec<AsId> = origin_set.into_iter().collect();
    let origin_index: HashMap<AsId, u32> = origin_asns
        .iter()
        .enumerate()
        .map(|(i, a)| (*a, i as u32))
        .collect();

    // Warm the shared cache so group workers only read it.
    let mut warm: Vec<AsId> = origin_asns.clone();
    warm.extend(attackers.iter().copied());
    warm.par_iter().try_for_each(|a| trees.tree(*a).map(|_| ()))?;
    let origin_trees: Vec<Arc<RoutingTree>> =
        origin_asns.iter().map(|a| trees.tree(*a)).collect::<Result<_>>()?;
    let attacker_trees: Vec<Arc<RoutingTree>> =
        attackers.iter().map(|a| trees.tree(*a)).collect::<Result<_>>()?;
    let origins: Vec<u32> = origin_asns
        .iter()
        .map(|a| graph.node_of(*a).expect("collected from the graph"))
        .collect();

    let surfaces: Vec<Option<[Surface; 2]>> = cids
        .iter()
        .map(|cid| {
            attack_feasible(cid).then(|| {
                [
                    Surface::build(&surface_endpoints(cid, Vector::Providers), &origin_index),
                    Surface::build(&surface_endpoints(cid, Vector::Resolvers), &origin_index),
                ]
            })
        })
        .collect();

    let mut group_sizes: HashMap<u32, u32> = HashMap::new();
    let mut excluded = 0u32;
    for r in &requesters.requesters {
        match graph.node_of(r.asn) {
            Some(node) => *group_sizes.entry(node).or_insert(0) += 1,
            None => excluded += 1,
        }
    }
    let mut groups: Vec<(u32, u32)> = group_sizes.into_iter().collect();
    groups.sort_unstable();

    let plan = EvalPlan {
        origins,
        origin_trees,
        attacker_nodes,
        attacker_trees,
        surfaces,
        groups,
        tie_policy,
    };

    let n_cells = cids.len() * attackers.len();
    let counts = plan
        .groups
        .par_iter()
        .fold(
            || (GroupScratch { table: Vec::new() }, vec![CellCounts::default(); n_cells]),
            |(mut scratch, mut counts), &(node, size)| {
                eval_group(&plan, trees, node, size, &mut scratch, &mut counts);
                (scratch, counts)
            },
        )
        .map(|(_, counts)| counts)
        .reduce(
            || vec![CellCounts::default(); n_cells],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b.iter()) {
                    x.add(y);
                }
                a
            },
        );

    Ok(DatasetEval {
        attackers: attackers.to_vec(),
        cids: cids.iter().map(|c| c.cid.clone()).collect(),
        feasible: cids.iter().map(attack_feasible).collect(),
        counts,
        requesters_evaluated: requesters.len() as u32 - excluded,
        requesters_excluded: excluded,
        tie_policy,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceRow {
    pub cid: String,
    pub vector: Vector,
    pub asns: u32,
    pub prefixes: u32,
    pub v4_addrs: u32,
    pub v6_addrs: u32,
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryHistogram {
    /// Distinct prefixes per RPKI category, indexed by category - 1.
    pub prefixes: [u64; 4],
}

/// Surface-size distributions per CID and vector, and the dataset-wide
/// per-category distinct-prefix histogram.
pub fn surface_stats(cids: &[CidRecord]) -> (Vec<SurfaceRow>, CategoryHistogram) {
    let mut rows = Vec::with_capacity(cids.len() * 3);
    let mut by_category: [BTreeSet<IpPrefix>; 4] = Default::default();
    for cid in cids {
        let providers = surface_endpoints(cid, Vector::Providers);
        let resolvers = surface_endpoints(cid, Vector::Resolvers);
        let full: Vec<&Endpoint> = providers.iter().chain(resolvers.iter()).copied().collect();
        for (vector, endpoints) in [
            (Vector::Providers, &providers),
            (Vector::Resolvers, &resolvers),
            (Vector::Full, &full),
        ] {
            let asns: BTreeSet<AsId> = endpoints.iter().map(|e| e.origin).collect();
            let prefixes: BTreeSet<IpPrefix> = endpoints.iter().map(|e| e.prefix).collect();
            let v4 = endpoints
                .iter()
                .filter(|e| e.ip.is_ipv4())
                .map(|e| e.ip)
                .collect::<BTreeSet<_>>()
                .len() as u32;
            let v6 = endpoints
                .iter()
                .filter(|e| e.ip.is_ipv6())
                .map(|e| e.ip)
                .collect::<BTreeSet<_>>()
                .len() as u32;
            rows.push(SurfaceRow {
                cid: cid.cid.clone(),
                vector,
                asns: asns.len() as u32,
                prefixes: prefixes.len() as u32,
                v4_addrs: v4,
                v6_addrs: v6,
            });
        }
        let mut seen: BTreeSet<IpPrefix> = BTreeSet::new();
        for e in &full {
            if seen.insert(e.prefix) {
                by_category[(e.category.as_u8() - 1) as usize].insert(e.prefix);
            }
        }
    }
    let mut hist = CategoryHistogram::default();
    for (i, set) in by_category.iter().enumerate() {
        hist.prefixes[i] = set.len() as u64;
    }
    (rows, hist)
}
