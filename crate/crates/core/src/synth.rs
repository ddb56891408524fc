//! Deterministic synthetic scenario generator for desk-scale experiments.
//!
//! Everything is produced as the text formats the ingesters read, then
//! parsed back through them, so a generated bundle is compatible with the
//! file pipeline by construction and byte-identical for a fixed seed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::path::Path;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::datasets::{
    ingest_cid_dataset, ingest_endpoint_list, ingest_requesters, parse_attacker_list, CidRecord,
    RequesterSet,
};
use crate::error::{Error, Result};
use crate::prefixdb::{parse_rib, parse_roas, Endpoint, PrefixIndex, RoaSet};
use crate::topology::{parse_as_rel, TopologyGraph};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub as_count: u32,
    /// Extra provider links per AS beyond the connecting chain.
    pub extra_p2c_per_as: f64,
    /// Peering links per AS.
    pub p2p_per_as: f64,
    pub prefixes_per_as: u32,
    /// Probability that a prefix lands in each RPKI category; sums to 1.
    pub category_fractions: [f64; 4],
    pub cid_count: u32,
    pub providers_per_cid: u32,
    pub resolvers_per_cid: u32,
    pub ipni_per_cid: u32,
    pub bitswap_per_cid: u32,
    pub monitor_count: u32,
    /// Probability that a CID gets a victim-only cache peer, making the
    /// attack on it infeasible.
    pub infeasible_fraction: f64,
    pub requester_count: u32,
    pub attacker_count: u32,
    /// Server nodes available for pinning experiments.
    pub pool_count: u32,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            as_count: 60,
            extra_p2c_per_as: 1.0,
            p2p_per_as: 0.5,
            prefixes_per_as: 2,
            category_fractions: [0.4, 0.2, 0.2, 0.2],
            cid_count: 20,
            providers_per_cid: 3,
            resolvers_per_cid: 4,
            ipni_per_cid: 1,
            bitswap_per_cid: 2,
            monitor_count: 4,
            infeasible_fraction: 0.0,
            requester_count: 40,
            attacker_count: 5,
            pool_count: 80,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.as_count == 0 {
            return Err(Error::Config("as_count must be positive".into()));
        }
        if self.cid_count == 0 {
            return Err(Error::Config("cid_count must be positive".into()));
        }
        if self.requester_count == 0 {
            return Err(Error::Config("requester_count must be positive".into()));
        }
        if self.prefixes_per_as == 0 {
            return Err(Error::Config("prefixes_per_as must be positive".into()));
        }
        if self.attacker_count == 0 || self.attacker_count > self.as_count {
            return Err(Error::Config(format!(
                "attacker_count must be in 1..={}",
                self.as_count
            )));
        }
        if self.extra_p2c_per_as < 0.0 || self.p2p_per_as < 0.0 {
            return Err(Error::Config("edge densities must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.infeasible_fraction) {
            return Err(Error::Config("infeasible_fraction must be in [0, 1]".into()));
        }
        if self.category_fractions.iter().any(|f| *f < 0.0) {
            return Err(Error::Config("category fractions must be non-negative".into()));
        }
        let sum: f64 = self.category_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "category fractions must sum to 1 (got {sum})"
            )));
        }
        let blocks = u64::from(self.as_count) * u64::from(self.prefixes_per_as);
        if blocks > MAX_BLOCKS {
            return Err(Error::Config(format!(
                "as_count x prefixes_per_as = {blocks} exceeds the {MAX_BLOCKS} available /20 blocks"
            )));
        }
        Ok(())
    }
}

// Prefix blocks are /20s carved from 11.0.0.0 up to (not including)
// 127.0.0.0, one block per (AS, slot).
const BLOCK_BASE: u32 = 11 << 24;
const BLOCK_BITS: u32 = 12;
const MAX_BLOCKS: u64 = ((127u64 - 11) << 24) >> BLOCK_BITS;

/// The generated files, exactly as written to disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub as_rel: String,
    pub rib: String,
    pub roas: String,
    pub cids: String,
    pub requesters: String,
    pub attackers: String,
    pub pool: String,
}

impl SynthFiles {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in [
            ("as-rel.txt", &self.as_rel),
            ("rib.tsv", &self.rib),
            ("roas.csv", &self.roas),
            ("cids.jsonl", &self.cids),
            ("requesters.txt", &self.requesters),
            ("attackers.txt", &self.attackers),
            ("pool.txt", &self.pool),
        ] {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

/// A generated scenario, both as files and re-ingested structures.
#[derive(Debug)]
pub struct SynthBundle {
    pub files: SynthFiles,
    pub graph: Arc<TopologyGraph>,
    pub index: PrefixIndex,
    pub roas: RoaSet,
    pub cids: Vec<CidRecord>,
    pub requesters: RequesterSet,
    pub attackers: Vec<crate::topology::AsId>,
    pub pool: Vec<Endpoint>,
}

struct PrefixSlot {
    /// Network base and announced length (20, or 24 for at-limit
    /// categories).
    base: u32,
    len: u8,
}

fn sample_category(rng: &mut ChaCha8Rng, fractions: &[f64; 4]) -> u8 {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, f) in fractions.iter().enumerate() {
        acc += f;
        if x < acc {
            return i as u8 + 1;
        }
    }
    4
}

fn host_in(rng: &mut ChaCha8Rng, slot: &PrefixSlot) -> Ipv4Addr {
    let span = 1u32 << (32 - slot.len);
    Ipv4Addr::from(slot.base + rng.gen_range(1..span - 1))
}

pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<SynthBundle> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.as_count;

    // Relationships. Every AS after the first buys transit from an
    // earlier one, which keeps the provider graph acyclic and gives low
    // AS numbers the big customer cones.
    let mut p2c: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut p2p: BTreeSet<(u32, u32)> = BTreeSet::new();
    for customer in 2..=n {
        let provider = rng.gen_range(1..customer);
        p2c.insert((provider, customer));
    }
    let extra = (config.extra_p2c_per_as * f64::from(n)).round() as u64;
    for _ in 0..extra {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        let (provider, customer) = (a.min(b), a.max(b));
        if provider != customer && !p2p.contains(&(provider, customer)) {
            p2c.insert((provider, customer));
        }
    }
    let peers = (config.p2p_per_as * f64::from(n)).round() as u64;
    for _ in 0..peers {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        let key = (a.min(b), a.max(b));
        if key.0 != key.1 && !p2c.contains(&key) {
            p2p.insert(key);
        }
    }
    let mut as_rel = String::new();
    for (p, c) in &p2c {
        writeln!(as_rel, "{p}|{c}|-1").unwrap();
    }
    for (a, b) in &p2p {
        writeln!(as_rel, "{a}|{b}|0").unwrap();
    }
    // Isolated ASes still have to appear in the file.
    if n == 1 {
        as_rel.push_str("1|1|0\n");
    }

    // Address plan: one /20 block per (AS, slot); categories 2 and 4
    // announce only the first /24 of their block.
    let mut slots: Vec<PrefixSlot> = Vec::with_capacity((n * config.prefixes_per_as) as usize);
    let mut rib = String::new();
    let mut roas = String::new();
    for asn in 1..=n {
        for s in 0..config.prefixes_per_as {
            let block = u64::from(asn - 1) * u64::from(config.prefixes_per_as) + u64::from(s);
            let base = BLOCK_BASE + ((block as u32) << BLOCK_BITS);
            let category = sample_category(&mut rng, &config.category_fractions);
            let len: u8 = match category {
                1 | 3 => 20,
                _ => 24,
            };
            writeln!(rib, "{}/{len}\t{asn}", Ipv4Addr::from(base)).unwrap();
            match category {
                3 => writeln!(roas, "{}/{len},24,{asn}", Ipv4Addr::from(base)).unwrap(),
                4 => writeln!(roas, "{}/{len},{len},{asn}", Ipv4Addr::from(base)).unwrap(),
                _ => {}
            }
            slots.push(PrefixSlot { base, len });
        }
    }

    let pick_ip = |rng: &mut ChaCha8Rng| {
        let slot = &slots[rng.gen_range(0..slots.len())];
        host_in(rng, slot)
    };

    // CID records. Victim views are subsets of the attacker's view unless
    // an infeasibility injection adds a peer the attacker never saw.
    let mut cids = String::new();
    for c in 0..config.cid_count {
        let ips = |rng: &mut ChaCha8Rng, count: u32| -> Vec<String> {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            while out.len() < count as usize {
                let ip = pick_ip(rng).to_string();
                if seen.insert(ip.clone()) {
                    out.push(ip);
                }
            }
            out
        };
        let providers = ips(&mut rng, config.providers_per_cid);
        let resolvers = ips(&mut rng, config.resolvers_per_cid);
        let ipni = ips(&mut rng, config.ipni_per_cid);
        let bitswap = ips(&mut rng, config.bitswap_per_cid);
        let mut victims: Vec<Vec<String>> = Vec::with_capacity(config.monitor_count as usize);
        for _ in 0..config.monitor_count {
            let view: Vec<String> = bitswap
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect();
            victims.push(view);
        }
        if !victims.is_empty() && rng.gen_bool(config.infeasible_fraction) {
            let attacker_view: BTreeSet<&String> = bitswap.iter().collect();
            loop {
                let ip = pick_ip(&mut rng).to_string();
                if !attacker_view.contains(&ip) {
                    victims[0].push(ip);
                    break;
                }
            }
        }
        let record = serde_json::json!({
            "cid": format!("synth-{c:05}"),
            "providers": providers,
            "resolvers": resolvers,
            "ipni": ipni,
            "bitswap_attacker": bitswap,
            "bitswap_victims": victims,
        });
        writeln!(cids, "{record}").unwrap();
    }

    let distinct_ips = |rng: &mut ChaCha8Rng, count: u32| -> String {
        let mut seen = BTreeSet::new();
        let mut out = String::new();
        let mut guard = 0u64;
        while seen.len() < count as usize {
            guard += 1;
            assert!(guard < 100 * u64::from(count) + 1000, "address space too small");
            let ip = pick_ip(rng);
            if seen.insert(ip) {
                writeln!(out, "{ip}").unwrap();
            }
        }
        out
    };
    let requesters = distinct_ips(&mut rng, config.requester_count);
    let pool = distinct_ips(&mut rng, config.pool_count);

    // Attackers: the best-connected ASes, the way transit heavyweights
    // would be picked from a real topology.
    let graph = Arc::new(parse_as_rel(as_rel.as_bytes(), "synthetic as-rel")?);
    let mut by_degree: Vec<(usize, u32)> = (1..=n)
        .map(|asn| {
            let id = crate::topology::AsId::new(asn).unwrap();
            (graph.degree(id).unwrap_or(0), asn)
        })
        .collect();
    by_degree.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut attackers = String::new();
    for (_, asn) in by_degree.iter().take(config.attacker_count as usize) {
        writeln!(attackers, "{asn}").unwrap();
    }

    let files = SynthFiles {
        as_rel,
        rib,
        roas,
        cids,
        requesters,
        attackers,
        pool,
    };

    let index = parse_rib(files.rib.as_bytes(), "synthetic rib")?;
    let roa_set = parse_roas(files.roas.as_bytes(), "synthetic roas")?;
    let (cid_records, report) =
        ingest_cid_dataset(files.cids.as_bytes(), "synthetic cids", &index, &roa_set)?;
    debug_assert_eq!(report.unmapped_ips, 0, "generator only emits covered IPs");
    let requester_set =
        ingest_requesters(files.requesters.as_bytes(), "synthetic requesters", &index, &roa_set)?;
    let (pool_set, pool_unmapped) =
        ingest_endpoint_list(files.pool.as_bytes(), "synthetic pool", &index, &roa_set)?;
    debug_assert_eq!(pool_unmapped, 0, "generator only emits covered IPs");
    let attacker_list = parse_attacker_list(files.attackers.as_bytes(), "synthetic attackers")?;

    Ok(SynthBundle {
        files,
        graph,
        index,
        roas: roa_set,
        cids: cid_records,
        requesters: requester_set,
        attackers: attacker_list,
        pool: pool_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefixdb::RpkiCategory;

    #[test]
    fn same_seed_same_bytes() {
        let cfg = SynthConfig::default();
        let a = generate_synthetic(&cfg, 7).unwrap();
        let b = generate_synthetic(&cfg, 7).unwrap();
        assert_eq!(a.files, b.files);
        let c = generate_synthetic(&cfg, 8).unwrap();
        assert_ne!(a.files.cids, c.files.cids);
    }

    #[test]
    fn all_category_one_when_fractions_say_so() {
        let cfg = SynthConfig {
            category_fractions: [1.0, 0.0, 0.0, 0.0],
            ..SynthConfig::default()
        };
        let bundle = generate_synthetic(&cfg, 3).unwrap();
        for cid in &bundle.cids {
            for e in cid
                .providers
                .iter()
                .chain(cid.bitswap_attacker.iter())
                .chain(cid.resolvers.iter().map(|r| &r.endpoint))
            {
                assert_eq!(e.category, RpkiCategory::NoRoaShort);
            }
        }
    }

    #[test]
    fn bundle_is_internally_consistent() {
        let cfg = SynthConfig::default();
        let bundle = generate_synthetic(&cfg, 11).unwrap();
        assert_eq!(bundle.cids.len(), cfg.cid_count as usize);
        assert_eq!(bundle.requesters.len(), cfg.requester_count as usize);
        assert_eq!(bundle.requesters.unmapped, 0);
        assert_eq!(bundle.attackers.len(), cfg.attacker_count as usize);
        assert_eq!(bundle.pool.len(), cfg.pool_count as usize);
        assert_eq!(bundle.graph.as_count(), cfg.as_count as usize);
        // Every requester and endpoint AS exists in the topology.
        for r in &bundle.requesters.requesters {
            assert!(bundle.graph.node_of(r.asn).is_some());
        }
        for cid in &bundle.cids {
            assert_eq!(cid.bitswap_victims.len(), cfg.monitor_count as usize);
            for e in &cid.providers {
                assert!(bundle.graph.node_of(e.origin).is_some());
            }
            assert!(crate::attack::attack_feasible(cid));
        }
    }

    #[test]
    fn infeasibility_injection_creates_failures() {
        let cfg = SynthConfig {
            infeasible_fraction: 1.0,
            ..SynthConfig::default()
        };
        let bundle = generate_synthetic(&cfg, 5).unwrap();
        for cid in &bundle.cids {
            assert!(!crate::attack::attack_feasible(cid));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let ok = SynthConfig::default();
        assert!(ok.validate().is_ok());
        let bad = SynthConfig { as_count: 0, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = SynthConfig {
            category_fractions: [0.5, 0.5, 0.5, 0.0],
            ..ok.clone()
        };
        assert!(bad.validate().is_err());
        let bad = SynthConfig { attacker_count: 999, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = SynthConfig {
            as_count: 4_000_000,
            prefixes_per_as: 2,
            ..ok
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_as_topology_generates() {
        let cfg = SynthConfig {
            as_count: 1,
            attacker_count: 1,
            extra_p2c_per_as: 0.0,
            p2p_per_as: 0.0,
            ..SynthConfig::default()
        };
        let bundle = generate_synthetic(&cfg, 1).unwrap();
        assert_eq!(bundle.graph.as_count(), 1);
    }

    #[test]
    fn files_round_trip_through_directory() {
        let cfg = SynthConfig {
            cid_count: 3,
            requester_count: 5,
            pool_count: 5,
            ..SynthConfig::default()
        };
        let bundle = generate_synthetic(&cfg, 21).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.files.write_to(dir.path()).unwrap();
        let rib = crate::prefixdb::load_rib(&dir.path().join("rib.tsv")).unwrap();
        assert_eq!(rib.len(), bundle.index.len());
        let (cids, _) = crate::datasets::load_cid_dataset(
            &dir.path().join("cids.jsonl"),
            &rib,
            &bundle.roas,
        )
        .unwrap();
        assert_eq!(cids, bundle.cids);
    }
}
