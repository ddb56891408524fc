//! Per-destination routing trees under simplified policy routing.
//!
//! Route selection follows the usual economic model: an AS prefers routes
//! learned from customers over routes learned from peers over routes learned
//! from providers, then shorter AS paths, and finally the neighbor with the
//! smallest AS number. Customers and peers only propagate customer-learned
//! routes (and the destination's own announcement); providers propagate
//! everything to their customers. The resulting best-route forest for one
//! destination is computed in three breadth-first phases:
//!
//!   1. customer routes: BFS from the destination along customer→provider
//!      edges (each AS reached learns the route from a customer);
//!   2. peer routes: one peer hop off any AS holding a customer route or off
//!      the destination itself;
//!   3. provider routes: BFS downward (provider→customer) from everything
//!      routed so far, in increasing length order.
//!
//! Within a phase a node is claimed on first touch; frontiers are scanned in
//! ascending AS-number order so the first touch is also the smallest
//! eligible parent. Node indices in `TopologyGraph` are assigned in
//! ascending AS-number order, which makes index order usable directly.

use std::sync::Arc;

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::topology::{AsId, TopologyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteClass {
    SelfRoute,
    Customer,
    Peer,
    Provider,
    Unreachable,
}

impl RouteClass {
    /// Preference rank; smaller is preferred.
    fn rank(self) -> u8 {
        match self {
            RouteClass::SelfRoute => 0,
            RouteClass::Customer => 1,
            RouteClass::Peer => 2,
            RouteClass::Provider => 3,
            RouteClass::Unreachable => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RouteClass::SelfRoute => "self",
            RouteClass::Customer => "customer",
            RouteClass::Peer => "peer",
            RouteClass::Provider => "provider",
            RouteClass::Unreachable => "unreachable",
        }
    }
}

pub const UNREACHABLE_LEN: u32 = u32::MAX;

/// (class, length) pair as used by every preference comparison. Smaller
/// `key()` is a better route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutePref {
    pub class: RouteClass,
    pub length: u32,
}

impl RoutePref {
    pub const UNREACHABLE: RoutePref = RoutePref {
        class: RouteClass::Unreachable,
        length: UNREACHABLE_LEN,
    };

    fn key(self) -> (u8, u32) {
        (self.class.rank(), self.length)
    }

    pub fn beats(self, other: RoutePref) -> bool {
        self.key() < other.key()
    }

    pub fn ties(self, other: RoutePref) -> bool {
        self.key() == other.key()
    }

    pub fn is_reachable(self) -> bool {
        self.class != RouteClass::Unreachable
    }

    /// Extra hops on the announcement (forged-origin prepend). Saturates on
    /// the unreachable sentinel.
    pub fn lengthened(self, extra: u32) -> RoutePref {
        if self.is_reachable() {
            RoutePref {
                class: self.class,
                length: self.length.saturating_add(extra),
            }
        } else {
            self
        }
    }
}

const NO_PARENT: u32 = u32::MAX;

pub struct RoutingTree {
    graph: Arc<TopologyGraph>,
    dest: AsId,
    class: Vec<RouteClass>,
    len: Vec<u32>,
    parent: Vec<u32>,
    // Euler-tour intervals over the parent forest: `via` lies on the path
    // src→dest iff src is inside via's subtree.
    tin: Vec<u32>,
    tout: Vec<u32>,
}

impl RoutingTree {
    pub fn dest(&self) -> AsId {
        self.dest
    }

    pub fn graph(&self) -> &Arc<TopologyGraph> {
        &self.graph
    }

    fn node(&self, asn: AsId) -> Result<u32> {
        self.graph
            .node_of(asn)
            .ok_or(Error::UnknownAs(asn.get()))
    }

    pub fn route_pref(&self, src: AsId) -> Result<RoutePref> {
        let n = self.node(src)? as usize;
        Ok(RoutePref {
            class: self.class[n],
            length: self.len[n],
        })
    }

    pub(crate) fn pref_by_node(&self, node: u32) -> RoutePref {
        RoutePref {
            class: self.class[node as usize],
            length: self.len[node as usize],
        }
    }

    /// Path [src, .., dest] along parent links, or None when unreachable.
    pub fn route_path(&self, src: AsId) -> Result<Option<Vec<AsId>>> {
        let mut n = self.node(src)?;
        if self.class[n as usize] == RouteClass::Unreachable {
            return Ok(None);
        }
        let mut path = Vec::with_capacity(self.len[n as usize] as usize + 1);
        path.push(self.graph.asn_of(n));
        while self.parent[n as usize] != NO_PARENT {
            n = self.parent[n as usize];
            path.push(self.graph.asn_of(n));
        }
        Ok(Some(path))
    }

    pub fn on_path(&self, src: AsId, via: AsId) -> Result<bool> {
        let s = self.node(src)? as usize;
        let v = self.node(via)? as usize;
        Ok(self.on_path_nodes(s as u32, v as u32))
    }

    pub(crate) fn on_path_nodes(&self, src: u32, via: u32) -> bool {
        let (s, v) = (src as usize, via as usize);
        if self.class[s] == RouteClass::Unreachable || self.class[v] == RouteClass::Unreachable {
            return false;
        }
        self.tin[v] <= self.tin[s] && self.tin[s] < self.tout[v]
    }

    pub fn entries(&self) -> impl Iterator<Item = (AsId, RouteClass, u32, Option<AsId>)> + '_ {
        (0..self.class.len()).map(move |i| {
            let parent = if self.parent[i] == NO_PARENT {
                None
            } else {
                Some(self.graph.asn_of(self.parent[i]))
            };
            (self.graph.asn_of(i as u32), self.class[i], self.len[i], parent)
        })
    }
}

pub fn build_routing_tree(graph: &Arc<TopologyGraph>, dest: AsId) -> Result<RoutingTree> {
    let d = graph.node_of(dest).ok_or(Error::UnknownAs(dest.get()))?;
    let n = graph.node_count();
    let mut class = vec![RouteClass::Unreachable; n];
    let mut len = vec![UNREACHABLE_LEN; n];
    let mut parent = vec![NO_PARENT; n];
    class[d as usize] = RouteClass::SelfRoute;
    len[d as usize] = 0;

    // Phase 1: customer routes climb from the destination through providers.
    let mut frontier = vec![d];
    let mut depth = 0u32;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &node in &frontier {
            for &p in graph.providers_of(node) {
                if class[p as usize] == RouteClass::Unreachable {
                    class[p as usize] = RouteClass::Customer;
                    len[p as usize] = depth + 1;
                    parent[p as usize] = node;
                    next.push(p);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
        depth += 1;
    }

    // Phase 2: one peer hop off customer-routed ASes (or the destination).
    // Sources sorted by (length, AS) so the first claim is the best parent.
    let mut sources: Vec<u32> = (0..n as u32)
        .filter(|&x| {
            matches!(
                class[x as usize],
                RouteClass::SelfRoute | RouteClass::Customer
            )
        })
        .collect();
    sources.sort_unstable_by_key(|&x| (len[x as usize], x));
    let mut peer_claims = Vec::new();
    for &src in &sources {
        for &x in graph.peers_of(src) {
            if class[x as usize] == RouteClass::Unreachable {
                class[x as usize] = RouteClass::Peer;
                len[x as usize] = len[src as usize] + 1;
                parent[x as usize] = src;
                peer_claims.push(x);
            }
        }
    }

    // Phase 3: provider routes flood downward from everything routed so far,
    // processed in increasing length order (bucketed BFS; initial lengths
    // are heterogeneous).
    let mut buckets: Vec<Vec<u32>> = Vec::new();
    for x in 0..n as u32 {
        if class[x as usize] != RouteClass::Unreachable {
            let l = len[x as usize] as usize;
            if buckets.len() <= l {
                buckets.resize(l + 1, Vec::new());
            }
            buckets[l].push(x);
        }
    }
    let mut level = 0;
    while level < buckets.len() {
        let mut bucket = std::mem::take(&mut buckets[level]);
        bucket.sort_unstable();
        for &p in &bucket {
            for &x in graph.customers_of(p) {
                if class[x as usize] == RouteClass::Unreachable {
                    class[x as usize] = RouteClass::Provider;
                    len[x as usize] = level as u32 + 1;
                    parent[x as usize] = p;
                    if buckets.len() <= level + 1 {
                        buckets.resize(level + 2, Vec::new());
                    }
                    buckets[level + 1].push(x);
                }
            }
        }
        level += 1;
    }

    let (tin, tout) = euler_tour(n, d, &class, &parent);
    Ok(RoutingTree {
        graph: Arc::clone(graph),
        dest,
        class,
        len,
        parent,
        tin,
        tout,
    })
}

fn euler_tour(
    n: usize,
    root: u32,
    class: &[RouteClass],
    parent: &[u32],
) -> (Vec<u32>, Vec<u32>) {
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    for x in 0..n as u32 {
        let p = parent[x as usize];
        if p != NO_PARENT && class[x as usize] != RouteClass::Unreachable {
            children[p as usize].push(x);
        }
    }
    let mut tin = vec![u32::MAX; n];
    let mut tout = vec![u32::MAX; n];
    let mut timer = 0u32;
    let mut stack: Vec<(u32, usize)> = vec![(root, 0)];
    tin[root as usize] = timer;
    timer += 1;
    while let Some(&mut (node, ref mut next_child)) = stack.last_mut() {
        if *next_child < children[node as usize].len() {
            let c = children[node as usize][*next_child];
            *next_child += 1;
            tin[c as usize] = timer;
            timer += 1;
            stack.push((c, 0));
        } else {
            tout[node as usize] = timer;
            stack.pop();
        }
    }
    (tin, tout)
}

/// Concurrent insert-or-get cache of routing trees, keyed by destination.
/// Trees are deterministic, so a racing double build is harmless.
pub struct TreeCache {
    graph: Arc<TopologyGraph>,
    trees: DashMap<AsId, Arc<RoutingTree>>,
}

impl TreeCache {
    pub fn new(graph: Arc<TopologyGraph>) -> TreeCache {
        TreeCache {
            graph,
            trees: DashMap::new(),
        }
    }

    pub fn graph(&self) -> &Arc<TopologyGraph> {
        &self.graph
    }

    pub fn tree(&self, dest: AsId) -> Result<Arc<RoutingTree>> {
        if let Some(t) = self.trees.get(&dest) {
            return Ok(Arc::clone(&t));
        }
        let built = Arc::new(build_routing_tree(&self.graph, dest)?);
        let entry = self.trees.entry(dest).or_insert(built);
        Ok(Arc::clone(&entry))
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Debug dump: `src,dest,class,length,path` with the path dash-separated.
pub fn write_tree_csv<W: std::io::Write>(tree: &RoutingTree, mut w: W) -> Result<()> {
    writeln!(w, "src,dest,class,length,path")?;
    for (asn, class, length, _) in tree.entries() {
        let path = match tree.route_path(asn)? {
            Some(p) => p
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join("-"),
            None => String::new(),
        };
        let len_field = if class == RouteClass::Unreachable {
            "inf".to_string()
        } else {
            length.to_string()
        };
        writeln!(w, "{},{},{},{},{}", asn, tree.dest(), class.name(), len_field, path)?;
    }
    Ok(())
}
