//! Command-line front end. Every subcommand reads its inputs, runs one
//! pipeline from the library, and writes CSV outputs plus a manifest.json
//! recording input digests, parameters, and the seed, so any run can be
//! reproduced bit for bit. Worker count (`--threads`) never influences
//! output bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::attack::{evaluate_dataset, surface_stats, Mode, TiePolicy, Vector};
use crate::datasets::{
    load_attacker_list, load_cid_dataset, load_endpoint_list, load_requesters, parse_bitswap_log,
    score_cids, CidRecord, RequesterSet, DEFAULT_SCORE_CAPACITY,
};
use crate::manifest::Manifest;
use crate::prefixdb::{load_rib, load_roas, PrefixIndex, RoaSet};
use crate::report;
use crate::routing::TreeCache;
use crate::strategy::{
    greedy_prefix_budget, protection_report, simulate_random_pinning, BudgetContext,
    PinningConfig,
};
use crate::synth::{generate_synthetic, SynthConfig};
use crate::topology::{
    load_as_rel, load_ixp_pairs, merge_ixp_peerings, validate_topology, write_snapshot, AsId,
    TopologyGraph,
};

/// Relative input paths resolve against this directory when it is set;
/// output paths never do.
pub const INPUT_DIR_ENV: &str = "CENSIM_INPUT_DIR";

#[derive(Parser)]
#[command(
    name = "censim",
    version,
    about = "AS-level interception and prefix-hijack simulator for content-addressed networks"
)]
pub struct Cli {
    /// Cap worker parallelism (default: all cores). Outputs are identical
    /// for every value.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topology ingestion and validation.
    #[command(subcommand)]
    Topo(TopoCmd),
    /// Censorship evaluation and hijack planning.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Countermeasure simulation.
    #[command(subcommand)]
    Defend(DefendCmd),
    /// Hardening assessment.
    #[command(subcommand)]
    Protection(ProtectionCmd),
    /// Dataset generation and log analysis.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Prefix classification.
    #[command(subcommand)]
    Rpki(RpkiCmd),
}

#[derive(Subcommand)]
enum TopoCmd {
    /// Parse relationship (and optional IXP) data into a validated
    /// snapshot.
    Build {
        #[command(flatten)]
        topo: TopoInputs,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Evaluate blockage for every (CID, attacker) under all modes and
    /// vectors.
    Simulate {
        #[command(flatten)]
        inputs: WorldInputs,
        /// Label stamped into the dataset column of the CSVs.
        #[arg(long, value_name = "NAME")]
        label: Option<String>,
        #[arg(long, default_value = "legit-wins")]
        tie_policy: TiePolicy,
        #[command(flatten)]
        out: OutDir,
    },
    /// Greedy cheapest-prefix hijack plan for one attacker.
    Budget {
        #[command(flatten)]
        inputs: WorldInputs,
        /// Attacker AS; defaults to the first entry of the attacker list.
        #[arg(long, value_name = "ASN")]
        attacker: Option<u32>,
        /// Maximum prefixes to hijack; omit to exhaust all useful ones.
        #[arg(long, value_name = "N")]
        budget: Option<usize>,
        /// Count passive interception as blocking while planning.
        #[arg(long)]
        include_passive: bool,
        #[arg(long, default_value = "full")]
        vector: Vector,
        #[arg(long, default_value = "legit-wins")]
        tie_policy: TiePolicy,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Subcommand)]
enum DefendCmd {
    /// Random collaborative pinning sweep over pool fractions.
    Pinning {
        #[command(flatten)]
        inputs: WorldInputs,
        /// Server-node pool file, one IP per line.
        #[arg(long, value_name = "FILE")]
        pool: PathBuf,
        /// Ascending pool fractions to pin, e.g. 0,0.005,0.05.
        #[arg(long, value_delimiter = ',', required = true)]
        fractions: Vec<f64>,
        #[arg(long, value_name = "N")]
        trials: u32,
        #[arg(long, value_name = "SEED")]
        seed: u64,
        #[arg(long, default_value = "combined")]
        mode: Mode,
        #[arg(long, default_value = "full")]
        vector: Vector,
        #[arg(long, default_value = "legit-wins")]
        tie_policy: TiePolicy,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Subcommand)]
enum ProtectionCmd {
    /// Per-CID provider hardening verdicts against the attacker list.
    Report {
        #[command(flatten)]
        inputs: WorldInputs,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Generate a synthetic topology + dataset bundle.
    Synth {
        #[arg(long, value_name = "SEED")]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        as_count: u32,
        #[arg(long, default_value_t = 1.0)]
        extra_p2c_per_as: f64,
        #[arg(long, default_value_t = 0.5)]
        p2p_per_as: f64,
        #[arg(long, default_value_t = 2)]
        prefixes_per_as: u32,
        /// Probability of each RPKI category, comma separated, sums to 1.
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.2,0.2")]
        category_fractions: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        cid_count: u32,
        #[arg(long, default_value_t = 3)]
        providers_per_cid: u32,
        #[arg(long, default_value_t = 4)]
        resolvers_per_cid: u32,
        #[arg(long, default_value_t = 1)]
        ipni_per_cid: u32,
        #[arg(long, default_value_t = 2)]
        bitswap_per_cid: u32,
        #[arg(long, default_value_t = 4)]
        monitor_count: u32,
        #[arg(long, default_value_t = 0.0)]
        infeasible_fraction: f64,
        #[arg(long, default_value_t = 40)]
        requester_count: u32,
        #[arg(long, default_value_t = 5)]
        attacker_count: u32,
        #[arg(long, default_value_t = 80)]
        pool_count: u32,
        #[command(flatten)]
        out: OutDir,
    },
    /// Rank CIDs by peer-spread score from a wantlist log replay.
    Score {
        /// CSV log `timestamp,peer,cid`.
        #[arg(long, value_name = "FILE")]
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SCORE_CAPACITY)]
        capacity: usize,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Subcommand)]
enum RpkiCmd {
    /// Classify every announced prefix against the ROA set.
    Classify {
        #[arg(long, value_name = "FILE")]
        rib: PathBuf,
        #[arg(long, value_name = "FILE")]
        roas: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Args)]
struct TopoInputs {
    /// CAIDA serial-1 relationship file (`a|b|-1` p2c, `a|b|0` p2p).
    #[arg(long, value_name = "FILE")]
    as_rel: PathBuf,
    /// IXP co-location pairs CSV `asn_a,asn_b`, merged as extra peerings.
    #[arg(long, value_name = "FILE")]
    ixp: Option<PathBuf>,
}

#[derive(Args)]
struct WorldInputs {
    #[command(flatten)]
    topo: TopoInputs,
    /// Announced prefixes, `prefix<TAB>origin_asn` per line.
    #[arg(long, value_name = "FILE")]
    rib: PathBuf,
    /// ROA records CSV `prefix,maxLength,originAsn`.
    #[arg(long, value_name = "FILE")]
    roas: PathBuf,
    /// JSON-lines CID records.
    #[arg(long, value_name = "FILE")]
    cids: PathBuf,
    /// Requester IPs, one per line.
    #[arg(long, value_name = "FILE")]
    requesters: PathBuf,
    /// Attacker AS numbers, one per line.
    #[arg(long, value_name = "FILE")]
    attackers: PathBuf,
}

#[derive(Args)]
struct OutDir {
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn resolve_input(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(base) = std::env::var(INPUT_DIR_ENV) {
            return Path::new(&base).join(path);
        }
    }
    path.to_path_buf()
}

fn build_graph(topo: &TopoInputs, manifest: &mut Manifest) -> anyhow::Result<TopologyGraph> {
    let as_rel = resolve_input(&topo.as_rel);
    manifest
        .record_file("as-rel", &as_rel)
        .with_context(|| format!("reading {}", as_rel.display()))?;
    let graph = load_as_rel(&as_rel)?;
    match &topo.ixp {
        None => Ok(graph),
        Some(p) => {
            let ixp = resolve_input(p);
            manifest
                .record_file("ixp", &ixp)
                .with_context(|| format!("reading {}", ixp.display()))?;
            let pairs = load_ixp_pairs(&ixp)?;
            let (merged, mreport) = merge_ixp_peerings(&graph, &pairs);
            manifest.set_param(
                "ixp_merge",
                serde_json::to_value(mreport).expect("report serializes"),
            );
            Ok(merged)
        }
    }
}

struct World {
    cache: TreeCache,
    index: PrefixIndex,
    roas: RoaSet,
    cids: Vec<CidRecord>,
    requesters: RequesterSet,
    attackers: Vec<AsId>,
}

fn load_world(inputs: &WorldInputs, manifest: &mut Manifest) -> anyhow::Result<World> {
    let graph = build_graph(&inputs.topo, manifest)?;
    let rib = resolve_input(&inputs.rib);
    let roas_path = resolve_input(&inputs.roas);
    let cids_path = resolve_input(&inputs.cids);
    let req_path = resolve_input(&inputs.requesters);
    let att_path = resolve_input(&inputs.attackers);
    for (role, path) in [
        ("rib", &rib),
        ("roas", &roas_path),
        ("cids", &cids_path),
        ("requesters", &req_path),
        ("attackers", &att_path),
    ] {
        manifest
            .record_file(role, path)
            .with_context(|| format!("reading {}", path.display()))?;
    }
    let index = load_rib(&rib)?;
    let roas = load_roas(&roas_path)?;
    let (cids, ingest) = load_cid_dataset(&cids_path, &index, &roas)?;
    if ingest.unmapped_ips > 0 {
        eprintln!(
            "warning: {} endpoint IP(s) outside every announced prefix were dropped",
            ingest.unmapped_ips
        );
    }
    let requesters = load_requesters(&req_path, &index, &roas)?;
    if requesters.unmapped > 0 {
        eprintln!(
            "warning: {} requester IP(s) outside every announced prefix were dropped",
            requesters.unmapped
        );
    }
    let attackers = load_attacker_list(&att_path)?;
    if attackers.is_empty() {
        anyhow::bail!(crate::Error::Config(format!(
            "attacker list {} is empty",
            att_path.display()
        )));
    }
    Ok(World {
        cache: TreeCache::new(std::sync::Arc::new(graph)),
        index,
        roas,
        cids,
        requesters,
        attackers,
    })
}

fn ensure_out(out: &OutDir) -> anyhow::Result<&Path> {
    std::fs::create_dir_all(&out.out)
        .with_context(|| format!("creating {}", out.out.display()))?;
    Ok(&out.out)
}

fn write_file(dir: &Path, name: &str, body: &[u8]) -> anyhow::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_topo_build(topo: TopoInputs, out: OutDir) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("topo build");
    let graph = build_graph(&topo, &mut manifest)?;
    let report = validate_topology(&graph);
    let dir = ensure_out(&out)?;
    let mut snapshot = Vec::new();
    write_snapshot(&graph, &mut snapshot)?;
    write_file(dir, "snapshot.bin", &snapshot)?;
    let mut validation = serde_json::to_string_pretty(&report).expect("report serializes");
    validation.push('\n');
    write_file(dir, "validation.json", validation.as_bytes())?;
    manifest.write_to(dir)?;
    println!(
        "topology: {} ASes, {} p2c, {} p2p, {} isolated",
        report.as_count, report.p2c_edges, report.p2p_edges, report.isolated_ases
    );
    if !report.accepted {
        anyhow::bail!(crate::Error::Validation(format!(
            "{} self-loop line(s) in the relationship data; see validation.json",
            report.self_loops
        )));
    }
    Ok(())
}

fn cmd_attack_simulate(
    inputs: WorldInputs,
    label: Option<String>,
    tie_policy: TiePolicy,
    out: OutDir,
) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("attack simulate");
    manifest.set_param("tie_policy", tie_policy.name());
    let label = label.unwrap_or_else(|| {
        inputs
            .cids
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });
    manifest.set_param("label", label.as_str());
    let world = load_world(&inputs, &mut manifest)?;
    let eval = evaluate_dataset(
        &world.cache,
        &world.cids,
        &world.requesters,
        &world.attackers,
        tie_policy,
    )?;
    let dir = ensure_out(&out)?;
    let mut buf = Vec::new();
    report::write_results_csv(&mut buf, &label, &eval)?;
    write_file(dir, "results.csv", &buf)?;
    buf.clear();
    report::write_per_cid_csv(&mut buf, &label, &eval)?;
    write_file(dir, "per_cid.csv", &buf)?;
    buf.clear();
    report::write_per_attacker_csv(&mut buf, &label, &eval)?;
    write_file(dir, "per_attacker.csv", &buf)?;
    buf.clear();
    report::write_summary_csv(&mut buf, &label, &eval)?;
    write_file(dir, "summary.csv", &buf)?;
    let (surface_rows, histogram) = surface_stats(&world.cids);
    buf.clear();
    report::write_surfaces_csv(&mut buf, &surface_rows)?;
    write_file(dir, "surfaces.csv", &buf)?;
    buf.clear();
    report::write_category_histogram_csv(&mut buf, &histogram)?;
    write_file(dir, "rpki_histogram.csv", &buf)?;
    manifest.write_to(dir)?;
    println!(
        "evaluated {} cids x {} attackers over {} requesters ({} excluded); combined/full mean max blockage {:.4}",
        eval.cids.len(),
        eval.attackers.len(),
        eval.requesters_evaluated,
        eval.requesters_excluded,
        eval.mean_max_fraction(Mode::Combined, Vector::Full),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_attack_budget(
    inputs: WorldInputs,
    attacker: Option<u32>,
    budget: Option<usize>,
    include_passive: bool,
    vector: Vector,
    tie_policy: TiePolicy,
    out: OutDir,
) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("attack budget");
    let world = load_world(&inputs, &mut manifest)?;
    let attacker = match attacker {
        Some(n) => AsId::new(n)?,
        None => world.attackers[0],
    };
    let ctx = BudgetContext {
        attacker,
        tie_policy,
        vector,
        include_passive,
    };
    manifest.set_param("attacker", attacker.get());
    manifest.set_param("include_passive", include_passive);
    manifest.set_param("vector", vector.name());
    manifest.set_param("tie_policy", tie_policy.name());
    match budget {
        Some(b) => manifest.set_param("budget", b as u64),
        None => manifest.set_param("budget", "unlimited"),
    }
    let plan = greedy_prefix_budget(
        &world.cache,
        &ctx,
        &world.cids,
        &world.requesters,
        budget.unwrap_or(usize::MAX),
    )?;
    let groups = world
        .requesters
        .by_as()
        .into_iter()
        .filter(|(asn, _)| world.cache.graph().node_of(*asn).is_some())
        .map(|(_, members)| members.len() as u32)
        .sum::<u32>();
    let dir = ensure_out(&out)?;
    let mut buf = Vec::new();
    report::write_plan_csv(&mut buf, &plan, world.cids.len(), groups)?;
    write_file(dir, "plan.csv", &buf)?;
    manifest.write_to(dir)?;
    println!(
        "attacker {}: {} step(s), {} of {} candidate prefixes used, {} baseline + {} planned = {} of {} reachable pairs",
        attacker.get(),
        plan.steps.len(),
        plan.steps.len(),
        plan.candidate_prefixes,
        plan.baseline_pairs,
        plan.final_pairs() - plan.baseline_pairs,
        plan.final_pairs(),
        plan.unconstrained_pairs,
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_defend_pinning(
    inputs: WorldInputs,
    pool: PathBuf,
    fractions: Vec<f64>,
    trials: u32,
    seed: u64,
    mode: Mode,
    vector: Vector,
    tie_policy: TiePolicy,
    out: OutDir,
) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("defend pinning");
    let world = load_world(&inputs, &mut manifest)?;
    let pool_path = resolve_input(&pool);
    manifest
        .record_file("pool", &pool_path)
        .with_context(|| format!("reading {}", pool_path.display()))?;
    let (pool_nodes, unmapped) = load_endpoint_list(&pool_path, &world.index, &world.roas)?;
    if unmapped > 0 {
        eprintln!(
            "warning: {unmapped} pool IP(s) outside every announced prefix were dropped"
        );
    }
    manifest.set_param("fractions", fractions.clone());
    manifest.set_param("trials", trials);
    manifest.set_param("seed", seed);
    manifest.set_param("mode", mode.name());
    manifest.set_param("vector", vector.name());
    manifest.set_param("tie_policy", tie_policy.name());
    let config = PinningConfig {
        fractions,
        trials,
        seed,
        tie_policy,
        mode,
        vector,
    };
    let curve = simulate_random_pinning(
        &world.cache,
        &world.cids,
        &world.requesters,
        &world.attackers,
        &pool_nodes,
        &config,
    )?;
    let dir = ensure_out(&out)?;
    let mut buf = Vec::new();
    report::write_curve_csv(&mut buf, &curve)?;
    write_file(dir, "curve.csv", &buf)?;
    manifest.write_to(dir)?;
    let first = curve.points.first().expect("validated nonempty");
    let last = curve.points.last().expect("validated nonempty");
    println!(
        "pinning curve over {} point(s), {} trial(s): blockage {:.4} at f={} down to {:.4} at f={}",
        curve.points.len(),
        curve.trials,
        first.mean_blockage,
        first.fraction,
        last.mean_blockage,
        last.fraction,
    );
    Ok(())
}

fn cmd_protection_report(inputs: WorldInputs, out: OutDir) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("protection report");
    let world = load_world(&inputs, &mut manifest)?;
    let rows = protection_report(
        &world.cache,
        &world.cids,
        &world.requesters,
        &world.attackers,
    )?;
    let dir = ensure_out(&out)?;
    let mut buf = Vec::new();
    report::write_protection_csv(&mut buf, &rows)?;
    write_file(dir, "protection.csv", &buf)?;
    manifest.write_to(dir)?;
    let hardened = rows
        .iter()
        .filter(|r| r.verdict == crate::strategy::ProtectionVerdict::HijackHardened)
        .count();
    println!("{} of {} CID(s) hijack-hardened", hardened, rows.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_dataset_synth(
    seed: u64,
    config: SynthConfig,
    out: OutDir,
) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("dataset synth");
    manifest.set_param("seed", seed);
    manifest.set_param(
        "config",
        serde_json::json!({
            "as_count": config.as_count,
            "extra_p2c_per_as": config.extra_p2c_per_as,
            "p2p_per_as": config.p2p_per_as,
            "prefixes_per_as": config.prefixes_per_as,
            "category_fractions": config.category_fractions,
            "cid_count": config.cid_count,
            "providers_per_cid": config.providers_per_cid,
            "resolvers_per_cid": config.resolvers_per_cid,
            "ipni_per_cid": config.ipni_per_cid,
            "bitswap_per_cid": config.bitswap_per_cid,
            "monitor_count": config.monitor_count,
            "infeasible_fraction": config.infeasible_fraction,
            "requester_count": config.requester_count,
            "attacker_count": config.attacker_count,
            "pool_count": config.pool_count,
        }),
    );
    let bundle = generate_synthetic(&config, seed)?;
    let dir = ensure_out(&out)?;
    bundle.files.write_to(dir)?;
    manifest.write_to(dir)?;
    println!(
        "generated {} ASes, {} prefixes, {} cids, {} requesters, {} attackers, pool of {}",
        bundle.graph.as_count(),
        bundle.index.len(),
        bundle.cids.len(),
        bundle.requesters.requesters.len(),
        bundle.attackers.len(),
        bundle.pool.len(),
    );
    Ok(())
}

fn cmd_dataset_score(log: PathBuf, capacity: usize, out: OutDir) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("dataset score");
    let log_path = resolve_input(&log);
    manifest
        .record_file("log", &log_path)
        .with_context(|| format!("reading {}", log_path.display()))?;
    manifest.set_param("capacity", capacity as u64);
    if capacity == 0 {
        anyhow::bail!(crate::Error::Config("capacity must be positive".into()));
    }
    let f = std::fs::File::open(&log_path)
        .with_context(|| format!("reading {}", log_path.display()))?;
    let events = parse_bitswap_log(f, &log_path.display().to_string())?;
    let (scored, stats) = score_cids(&events, capacity);
    let dir = ensure_out(&out)?;
    let mut buf = Vec::new();
    report::write_scores_csv(&mut buf, &scored)?;
    write_file(dir, "scores.csv", &buf)?;
    manifest.write_to(dir)?;
    println!(
        "replayed {} event(s): window peaked at {} of {} CIDs, {} eviction(s), {} ranked",
        stats.events,
        stats.peak_size,
        capacity,
        stats.evictions,
        scored.len(),
    );
    Ok(())
}

fn cmd_rpki_classify(rib: PathBuf, roas: PathBuf, out: OutDir) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("rpki classify");
    let rib_path = resolve_input(&rib);
    let roas_path = resolve_input(&roas);
    manifest
        .record_file("rib", &rib_path)
        .with_context(|| format!("reading {}", rib_path.display()))?;
    manifest
        .record_file("roas", &roas_path)
        .with_context(|| format!("reading {}", roas_path.display()))?;
    let index = load_rib(&rib_path)?;
    let roa_set = load_roas(&roas_path)?;
    let dir = ensure_out(&out)?;
    let mut buf = Vec::new();
    report::write_classification_csv(&mut buf, &index, &roa_set)?;
    write_file(dir, "classification.csv", &buf)?;
    manifest.write_to(dir)?;
    println!("classified {} prefix(es)", index.len());
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!(crate::Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    match cli.command {
        Command::Topo(TopoCmd::Build { topo, out }) => cmd_topo_build(topo, out),
        Command::Attack(AttackCmd::Simulate {
            inputs,
            label,
            tie_policy,
            out,
        }) => cmd_attack_simulate(inputs, label, tie_policy, out),
        Command::Attack(AttackCmd::Budget {
            inputs,
            attacker,
            budget,
            include_passive,
            vector,
            tie_policy,
            out,
        }) => cmd_attack_budget(inputs, attacker, budget, include_passive, vector, tie_policy, out),
        Command::Defend(DefendCmd::Pinning {
            inputs,
            pool,
            fractions,
            trials,
            seed,
            mode,
            vector,
            tie_policy,
            out,
        }) => cmd_defend_pinning(
            inputs, pool, fractions, trials, seed, mode, vector, tie_policy, out,
        ),
        Command::Protection(ProtectionCmd::Report { inputs, out }) => {
            cmd_protection_report(inputs, out)
        }
        Command::Dataset(DatasetCmd::Synth {
            seed,
            as_count,
            extra_p2c_per_as,
            p2p_per_as,
            prefixes_per_as,
            category_fractions,
            cid_count,
            providers_per_cid,
            resolvers_per_cid,
            ipni_per_cid,
            bitswap_per_cid,
            monitor_count,
            infeasible_fraction,
            requester_count,
            attacker_count,
            pool_count,
            out,
        }) => {
            if category_fractions.len() != 4 {
                anyhow::bail!(crate::Error::Config(
                    "--category-fractions needs exactly 4 values".into()
                ));
            }
            let config = SynthConfig {
                as_count,
                extra_p2c_per_as,
                p2p_per_as,
                prefixes_per_as,
                category_fractions: [
                    category_fractions[0],
                    category_fractions[1],
                    category_fractions[2],
                    category_fractions[3],
                ],
                cid_count,
                providers_per_cid,
                resolvers_per_cid,
                ipni_per_cid,
                bitswap_per_cid,
                monitor_count,
                infeasible_fraction,
                requester_count,
                attacker_count,
                pool_count,
            };
            cmd_dataset_synth(seed, config, out)
        }
        Command::Dataset(DatasetCmd::Score { log, capacity, out }) => {
            cmd_dataset_score(log, capacity, out)
        }
        Command::Rpki(RpkiCmd::Classify { rib, roas, out }) => cmd_rpki_classify(rib, roas, out),
    }
}

/// Usage-shaped failures (bad config, missing input) exit 2, everything
/// else 1, success 0.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("censim: {e:#}");
            let usage = e.chain().any(|cause| {
                if let Some(err) = cause.downcast_ref::<crate::Error>() {
                    // Io is transparent, so the chain never yields the
                    // wrapped io::Error itself; look inside.
                    return match err {
                        crate::Error::Config(_) => true,
                        crate::Error::Io(io) => io.kind() == std::io::ErrorKind::NotFound,
                        _ => false,
                    };
                }
                matches!(
                    cause.downcast_ref::<std::io::Error>(),
                    Some(io) if io.kind() == std::io::ErrorKind::NotFound
                )
            });
            if usage {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
