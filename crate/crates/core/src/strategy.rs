//! Attacker economics and defender countermeasures: cheapest hijack plans
//! under a prefix budget, random collaborative pinning, and per-CID
//! hardening verdicts.

use std::collections::{BTreeSet, HashMap};
use std::net::IpAddr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attack::{
    attack_feasible, endpoint_blocked_lenient, evaluate_dataset, passive_intercepts,
    surface_endpoints, AttackConfig, Mode, TiePolicy, Vector,
};
use crate::datasets::{CidRecord, RequesterSet};
use crate::error::{Error, Result};
use crate::prefixdb::{Endpoint, IpPrefix};
use crate::routing::TreeCache;
use crate::topology::AsId;

/// What "blocked" means while accumulating hijacked prefixes. Pure hijack
/// by default: the plan prices announcements, and passive interception is
/// free, so it is only mixed in when explicitly asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetContext {
    pub attacker: AsId,
    pub tie_policy: TiePolicy,
    pub vector: Vector,
    pub include_passive: bool,
}

impl BudgetContext {
    pub fn new(attacker: AsId) -> BudgetContext {
        BudgetContext {
            attacker,
            tie_policy: TiePolicy::default(),
            vector: Vector::Full,
            include_passive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetStep {
    pub prefix: IpPrefix,
    pub marginal_pairs: u64,
    pub cumulative_pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetPlan {
    pub attacker: AsId,
    /// (cid, requester) pairs blocked before any prefix is hijacked:
    /// self-hosted endpoints, plus passive coverage when enabled.
    pub baseline_pairs: u64,
    pub steps: Vec<BudgetStep>,
    /// Pairs blocked once every candidate prefix is hijacked. The last
    /// step's cumulative count reaches this exactly when nothing stops
    /// early.
    pub unconstrained_pairs: u64,
    pub candidate_prefixes: usize,
}

impl BudgetPlan {
    pub fn final_pairs(&self) -> u64 {
        self.steps
            .last()
            .map_or(self.baseline_pairs, |s| s.cumulative_pairs)
    }
}

/// How one endpoint behaves for one requester group once its prefix is
/// hijacked.
enum EndpointNeed {
    /// Blocked with no announcement at all.
    Satisfied,
    /// Blocked exactly when its prefix is in the hijacked set.
    Prefix(u32),
    /// Never blocked: preference competition lost, or a dataset gap.
    Dead,
}

struct Slot {
    pair: u32,
    /// Candidate ids still missing, in surface order; `remaining` tracks
    /// how many are unchosen.
    needs: Vec<u32>,
    remaining: u32,
}

struct BudgetState {
    candidates: Vec<IpPrefix>,
    slots: Vec<Slot>,
    /// Slot ids listening on each candidate.
    index: Vec<Vec<u32>>,
    /// Per pair: requester-group weight and blocked flag.
    pair_weight: Vec<u32>,
    pair_blocked: Vec<bool>,
    pair_cid: Vec<u32>,
    chosen: Vec<bool>,
    blocked_pairs: u64,
}

fn classify_endpoint(
    trees: &TreeCache,
    ctx: &BudgetContext,
    group_as: AsId,
    endpoint: &Endpoint,
    candidate_ids: &HashMap<IpPrefix, u32>,
) -> Result<EndpointNeed> {
    if endpoint.origin == ctx.attacker {
        return Ok(EndpointNeed::Satisfied);
    }
    if ctx.include_passive
        && trees.graph().node_of(endpoint.origin).is_some()
        && passive_intercepts(trees, ctx.attacker, group_as, endpoint.origin)?
    {
        return Ok(EndpointNeed::Satisfied);
    }
    let divertable = if endpoint.category.always_divertable() {
        true
    } else {
        // Competition verdict is prefix-independent; the announcement
        // itself is what the budget pays for.
        let cfg = AttackConfig {
            attacker: ctx.attacker,
            mode: Mode::Hijack,
            vector: ctx.vector,
            tie_policy: ctx.tie_policy,
        };
        endpoint_blocked_lenient(trees, &cfg, group_as, endpoint)?
    };
    if !divertable {
        return Ok(EndpointNeed::Dead);
    }
    // Every surface prefix was catalogued up front.
    Ok(EndpointNeed::Prefix(candidate_ids[&endpoint.prefix]))
}

fn build_state(
    trees: &TreeCache,
    ctx: &BudgetContext,
    cids: &[CidRecord],
    requesters: &RequesterSet,
) -> Result<BudgetState> {
    trees
        .graph()
        .node_of(ctx.attacker)
        .ok_or(Error::UnknownAs(ctx.attacker.get()))?;
    let groups: Vec<(AsId, u32)> = requesters
        .by_as()
        .into_iter()
        .filter(|(asn, _)| trees.graph().node_of(*asn).is_some())
        .map(|(asn, members)| (asn, members.len() as u32))
        .collect();

    // Candidate ids are handed out in dataset-first-appearance order so
    // every tie-break below follows the dataset.
    let mut candidate_ids: HashMap<IpPrefix, u32> = HashMap::new();
    let mut candidates: Vec<IpPrefix> = Vec::new();
    for cid in cids {
        if !attack_feasible(cid) {
            continue;
        }
        for vector in budget_vectors(ctx.vector) {
            for e in surface_endpoints(cid, *vector) {
                candidate_ids.entry(e.prefix).or_insert_with(|| {
                    candidates.push(e.prefix);
                    candidates.len() as u32 - 1
                });
            }
        }
    }

    let mut state = BudgetState {
        index: vec![Vec::new(); candidates.len()],
        chosen: vec![false; candidates.len()],
        candidates,
        slots: Vec::new(),
        pair_weight: Vec::new(),
        pair_blocked: Vec::new(),
        pair_cid: Vec::new(),
        blocked_pairs: 0,
    };

    for (c, cid) in cids.iter().enumerate() {
        if !attack_feasible(cid) {
            continue;
        }
        for &(group_as, weight) in &groups {
            let pair = state.pair_weight.len() as u32;
            state.pair_weight.push(weight);
            state.pair_blocked.push(false);
            state.pair_cid.push(c as u32);
            let mut blocked_now = false;
            for vector in budget_vectors(ctx.vector) {
                let endpoints = surface_endpoints(cid, *vector);
                if endpoints.is_empty() {
                    continue; // nothing served on this side, nothing to take
                }
                let mut needs: Vec<u32> = Vec::new();
                let mut seen: BTreeSet<u32> = BTreeSet::new();
                let mut dead = false;
                for &e in &endpoints {
                    match classify_endpoint(trees, ctx, group_as, e, &candidate_ids)? {
                        EndpointNeed::Satisfied => {}
                        EndpointNeed::Prefix(id) => {
                            if seen.insert(id) {
                                needs.push(id);
                            }
                        }
                        EndpointNeed::Dead => {
                            dead = true;
                            break;
                        }
                    }
                }
                if dead {
                    continue;
                }
                if needs.is_empty() {
                    blocked_now = true;
                    continue;
                }
                let slot_id = state.slots.len() as u32;
                for &id in &needs {
                    state.index[id as usize].push(slot_id);
                }
                let remaining = needs.len() as u32;
                state.slots.push(Slot { pair, needs, remaining });
            }
            if blocked_now {
                state.pair_blocked[pair as usize] = true;
                state.blocked_pairs += u64::from(weight);
            }
        }
    }
    Ok(state)
}

fn budget_vectors(vector: Vector) -> &'static [Vector] {
    match vector {
        Vector::Providers => &[Vector::Providers],
        Vector::Resolvers => &[Vector::Resolvers],
        Vector::Full => &[Vector::Providers, Vector::Resolvers],
    }
}

impl BudgetState {
    /// Pairs newly completed if `candidate` were hijacked next.
    fn marginal_gain(&self, candidate: u32, stamp: &mut [u32], epoch: u32) -> u64 {
        let mut gain = 0u64;
        for &slot_id in &self.index[candidate as usize] {
            let slot = &self.slots[slot_id as usize];
            if slot.remaining != 1 || self.pair_blocked[slot.pair as usize] {
                continue;
            }
            // remaining == 1 and this unchosen candidate is in the needs
            // list, so it is exactly the missing one.
            if stamp[slot.pair as usize] != epoch {
                stamp[slot.pair as usize] = epoch;
                gain += u64::from(self.pair_weight[slot.pair as usize]);
            }
        }
        gain
    }

    fn choose(&mut self, candidate: u32) -> u64 {
        debug_assert!(!self.chosen[candidate as usize]);
        self.chosen[candidate as usize] = true;
        let mut gain = 0u64;
        for i in 0..self.index[candidate as usize].len() {
            let slot_id = self.index[candidate as usize][i] as usize;
            let pair = self.slots[slot_id].pair as usize;
            self.slots[slot_id].remaining -= 1;
            if self.slots[slot_id].remaining == 0 && !self.pair_blocked[pair] {
                self.pair_blocked[pair] = true;
                gain += u64::from(self.pair_weight[pair]);
            }
        }
        self.blocked_pairs += gain;
        gain
    }

    /// Smallest number of extra prefixes that unlocks any new pair,
    /// scanning CIDs in dataset order, incumbent replaced only when
    /// strictly better. Returns the first unchosen prefix of the winning
    /// slot.
    fn cheapest_unlock(&self) -> Option<u32> {
        let mut best: Option<(u32, u32, u32)> = None; // (deficit, cid, slot)
        for (slot_id, slot) in self.slots.iter().enumerate() {
            if self.pair_blocked[slot.pair as usize] || slot.remaining == 0 {
                continue;
            }
            let cid = self.pair_cid[slot.pair as usize];
            let candidate = (slot.remaining, cid, slot_id as u32);
            match best {
                None => best = Some(candidate),
                Some(b) => {
                    if candidate.0 < b.0 {
                        best = Some(candidate);
                    }
                }
            }
        }
        let (_, _, slot_id) = best?;
        self.slots[slot_id as usize]
            .needs
            .iter()
            .copied()
            .find(|&id| !self.chosen[id as usize])
    }

    fn unconstrained_pairs(&self) -> u64 {
        let mut blockable = vec![false; self.pair_weight.len()];
        for (pair, blocked) in self.pair_blocked.iter().enumerate() {
            if *blocked {
                blockable[pair] = true;
            }
        }
        for slot in &self.slots {
            blockable[slot.pair as usize] = true;
        }
        blockable
            .iter()
            .zip(self.pair_weight.iter())
            .filter(|(b, _)| **b)
            .map(|(_, w)| u64::from(*w))
            .sum()
    }
}

/// Greedy hijack plan: at every step take the prefix unlocking the most
/// new (cid, requester) pairs; when nothing pays off immediately, invest
/// in the CID that needs the fewest further prefixes.
pub fn greedy_prefix_budget(
    trees: &TreeCache,
    ctx: &BudgetContext,
    cids: &[CidRecord],
    requesters: &RequesterSet,
    budget: usize,
) -> Result<BudgetPlan> {
    let mut state = build_state(trees, ctx, cids, requesters)?;
    let baseline = state.blocked_pairs;
    let unconstrained = state.unconstrained_pairs();
    let mut steps = Vec::new();
    let mut stamp = vec![u32::MAX; state.pair_weight.len()];
    let mut epoch = 0u32;
    while steps.len() < budget {
        let mut best: Option<(u64, u32)> = None;
        for id in 0..state.candidates.len() as u32 {
            if state.chosen[id as usize] {
                continue;
            }
            epoch = epoch.wrapping_add(1);
            let gain = state.marginal_gain(id, &mut stamp, epoch);
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, id));
            }
        }
        let pick = match best {
            Some((gain, id)) if gain > 0 => id,
            _ => match state.cheapest_unlock() {
                Some(id) => id,
                None => break, // no remaining prefix can ever unlock a pair
            },
        };
        let marginal = state.choose(pick);
        steps.push(BudgetStep {
            prefix: state.candidates[pick as usize],
            marginal_pairs: marginal,
            cumulative_pairs: state.blocked_pairs,
        });
    }
    Ok(BudgetPlan {
        attacker: ctx.attacker,
        baseline_pairs: baseline,
        steps,
        unconstrained_pairs: unconstrained,
        candidate_prefixes: state.candidates.len(),
    })
}

#[derive(Debug, Clone)]
pub struct PinningConfig {
    /// Ascending fractions of the pool to pin, each in [0, 1].
    pub fractions: Vec<f64>,
    pub trials: u32,
    pub seed: u64,
    pub tie_policy: TiePolicy,
    /// Blockage statistic to trace; the headline defense curve uses
    /// combined/full.
    pub mode: Mode,
    pub vector: Vector,
}

impl PinningConfig {
    pub fn new(fractions: Vec<f64>, trials: u32, seed: u64) -> PinningConfig {
        PinningConfig {
            fractions,
            trials,
            seed,
            tie_policy: TiePolicy::default(),
            mode: Mode::Combined,
            vector: Vector::Full,
        }
    }

    fn validate(&self, pool_len: usize) -> Result<()> {
        if pool_len == 0 {
            return Err(Error::Config("pinning pool is empty".into()));
        }
        if self.fractions.is_empty() {
            return Err(Error::Config("no fractions given".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        for w in self.fractions.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Config("fractions must be ascending".into()));
            }
        }
        if self
            .fractions
            .iter()
            .any(|f| !f.is_finite() || *f < 0.0 || *f > 1.0)
        {
            return Err(Error::Config("fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinningPoint {
    pub fraction: f64,
    pub nodes: u32,
    pub mean_blockage: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinningCurve {
    pub points: Vec<PinningPoint>,
    pub trials: u32,
    pub seed: u64,
    /// `per_trial[t][i]`: blockage of trial t at fraction i. Samples are
    /// coupled: a trial's pin set at one fraction contains its pin sets
    /// at all smaller fractions.
    pub per_trial: Vec<Vec<f64>>,
}

/// Clone every record with the pinned nodes appended as providers. The
/// verbatim `raw` lists are left alone: pins are simulated, not observed.
fn with_pinned(cids: &[CidRecord], pinned: &[&Endpoint]) -> Vec<CidRecord> {
    cids.iter()
        .map(|cid| {
            let mut out = cid.clone();
            let present: BTreeSet<IpAddr> = out.providers.iter().map(|e| e.ip).collect();
            for &e in pinned {
                if !present.contains(&e.ip) {
                    out.providers.push(*e);
                }
            }
            out.unattackable_surface =
                out.providers.is_empty() && out.bitswap_attacker.is_empty();
            out
        })
        .collect()
}

/// Replicate content onto randomly chosen pool nodes and trace how the
/// strongest attacker's blockage falls as the pinned share grows.
pub fn simulate_random_pinning(
    trees: &TreeCache,
    cids: &[CidRecord],
    requesters: &RequesterSet,
    attackers: &[AsId],
    pool: &[Endpoint],
    config: &PinningConfig,
) -> Result<PinningCurve> {
    config.validate(pool.len())?;
    let mut per_trial: Vec<Vec<f64>> = Vec::with_capacity(config.trials as usize);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(u64::from(trial) + 1);
        let mut perm: Vec<usize> = (0..pool.len()).collect();
        perm.shuffle(&mut rng);
        let mut values = Vec::with_capacity(config.fractions.len());
        for f in &config.fractions {
            let take = (f * pool.len() as f64).ceil() as usize;
            let pinned: Vec<&Endpoint> = perm[..take].iter().map(|&i| &pool[i]).collect();
            let modified = with_pinned(cids, &pinned);
            let eval =
                evaluate_dataset(trees, &modified, requesters, attackers, config.tie_policy)?;
            values.push(eval.mean_max_fraction(config.mode, config.vector));
        }
        per_trial.push(values);
    }
    let trials = f64::from(config.trials);
    let points = config
        .fractions
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let samples: Vec<f64> = per_trial.iter().map(|t| t[i]).collect();
            // The mean of identical samples is that sample; taking the
            // sum/n detour would smear rounding noise over the f=0 point,
            // which must equal the baseline bit for bit.
            let (mean, stddev) = if samples.iter().all(|x| *x == samples[0]) {
                (samples[0], 0.0)
            } else {
                let mean = samples.iter().sum::<f64>() / trials;
                let var =
                    samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / trials;
                (mean, var.sqrt())
            };
            PinningPoint {
                fraction: *f,
                nodes: (f * pool.len() as f64).ceil() as u32,
                mean_blockage: mean,
                stddev,
            }
        })
        .collect();
    Ok(PinningCurve {
        points,
        trials: config.trials,
        seed: config.seed,
        per_trial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectionVerdict {
    HijackHardened,
    NotHardened,
    NoProviders,
}

impl ProtectionVerdict {
    pub fn name(self) -> &'static str {
        match self {
            ProtectionVerdict::HijackHardened => "hijack-hardened",
            ProtectionVerdict::NotHardened => "not-hardened",
            ProtectionVerdict::NoProviders => "no-providers",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionRow {
    pub cid: String,
    pub verdict: ProtectionVerdict,
    pub provider_asns: u32,
    pub provider_prefixes: u32,
    /// Provider-side endpoints per RPKI category, indexed by category - 1.
    pub category_counts: [u32; 4],
    /// Worst-case hijack coverage of the provider side, ties to the
    /// attacker. The feasibility gate is ignored: a defender cannot rely
    /// on the attacker's monitoring being incomplete.
    pub max_hijack_fraction: f64,
    pub action: &'static str,
}

/// Per-CID hardening assessment of the provider side against the given
/// attacker set.
pub fn protection_report(
    trees: &TreeCache,
    cids: &[CidRecord],
    requesters: &RequesterSet,
    attackers: &[AsId],
) -> Result<Vec<ProtectionRow>> {
    if attackers.is_empty() {
        return Err(Error::Config("attacker list is empty".into()));
    }
    for a in attackers {
        trees.graph().node_of(*a).ok_or(Error::UnknownAs(a.get()))?;
    }
    let groups: Vec<(AsId, u32)> = requesters
        .by_as()
        .into_iter()
        .filter(|(asn, _)| trees.graph().node_of(*asn).is_some())
        .map(|(asn, members)| (asn, members.len() as u32))
        .collect();
    let evaluated: u32 = groups.iter().map(|(_, w)| w).sum();
    let mut rows = Vec::with_capacity(cids.len());
    for cid in cids {
        let surface = surface_endpoints(cid, Vector::Providers);
        let asns: BTreeSet<AsId> = surface.iter().map(|e| e.origin).collect();
        let prefixes: BTreeSet<IpPrefix> = surface.iter().map(|e| e.prefix).collect();
        let mut category_counts = [0u32; 4];
        for e in &surface {
            category_counts[(e.category.as_u8() - 1) as usize] += 1;
        }
        if surface.is_empty() {
            rows.push(ProtectionRow {
                cid: cid.cid.clone(),
                verdict: ProtectionVerdict::NoProviders,
                provider_asns: 0,
                provider_prefixes: 0,
                category_counts,
                max_hijack_fraction: 0.0,
                action: "no provider-side endpoints observed; nothing to harden",
            });
            continue;
        }
        let distinct: Vec<&Endpoint> = {
            let mut seen = BTreeSet::new();
            surface
                .iter()
                .filter(|e| seen.insert((e.origin, e.category.as_u8())))
                .copied()
                .collect()
        };
        let mut max_blocked = 0u32;
        for attacker in attackers {
            let cfg = AttackConfig {
                attacker: *attacker,
                mode: Mode::Hijack,
                vector: Vector::Providers,
                tie_policy: TiePolicy::AttackerWins,
            };
            let mut blocked = 0u32;
            for &(group_as, weight) in &groups {
                let mut all = true;
                for &e in &distinct {
                    if !endpoint_blocked_lenient(trees, &cfg, group_as, e)? {
                        all = false;
                        break;
                    }
                }
                if all {
                    blocked += weight;
                }
            }
            max_blocked = max_blocked.max(blocked);
        }
        let competing = category_counts[1] > 0 || category_counts[3] > 0;
        let resists = evaluated > 0 && max_blocked < evaluated;
        let (verdict, action) = if competing && resists {
            (
                ProtectionVerdict::HijackHardened,
                "a max-length or at-limit prefix shields part of the requesters; keep its ROA maxLength pinned to the announced length",
            )
        } else {
            (
                ProtectionVerdict::NotHardened,
                "add a provider inside an RPKI-protected prefix announced at its ROA maxLength",
            )
        };
        rows.push(ProtectionRow {
            cid: cid.cid.clone(),
            verdict,
            provider_asns: asns.len() as u32,
            provider_prefixes: prefixes.len() as u32,
            category_counts,
            max_hijack_fraction: if evaluated == 0 {
                0.0
            } else {
                f64::from(max_blocked) / f64::from(evaluated)
            },
            action,
        });
    }
    Ok(rows)
}
