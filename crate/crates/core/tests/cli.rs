//! End-to-end runs of the censim binary: golden outputs on the tier-1
//! demo fixture, classification of the cluster announcement snapshot,
//! input-directory resolution, and exit codes on bad input.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use censim::datasets::load_attacker_list;

const GOLDEN_CSVS: [&str; 6] = [
    "results.csv",
    "per_cid.csv",
    "per_attacker.csv",
    "summary.csv",
    "surfaces.csv",
    "rpki_histogram.csv",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_censim"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn golden(name: &str) -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden/t1_demo")
        .join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn demo_args(out: &Path) -> Vec<String> {
    let d = fixture("t1_demo");
    let f = |n: &str| d.join(n).to_string_lossy().into_owned();
    vec![
        "--as-rel".into(),
        f("as-rel.txt"),
        "--rib".into(),
        f("rib.tsv"),
        "--roas".into(),
        f("roas.csv"),
        "--cids".into(),
        f("cids.jsonl"),
        "--requesters".into(),
        f("requesters.txt"),
        "--attackers".into(),
        f("attackers.txt"),
        "--out".into(),
        out.to_string_lossy().into_owned(),
    ]
}

fn succeed(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

#[test]
fn simulate_reproduces_golden_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec![
        "attack".into(),
        "simulate".into(),
        "--label".into(),
        "t1-demo".into(),
    ];
    args.extend(demo_args(tmp.path()));
    succeed(bin().args(&args).output().unwrap());
    for name in GOLDEN_CSVS {
        let got = std::fs::read(tmp.path().join(name)).unwrap();
        assert_eq!(
            got,
            golden(name),
            "{name} diverged from the checked-in copy"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "attack simulate");
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 6);
    assert_eq!(manifest["parameters"]["label"], "t1-demo");
    for digest in manifest["inputs"].as_object().unwrap().values() {
        assert!(digest.as_str().unwrap().starts_with("sha256:"));
    }
}

#[test]
fn relative_inputs_resolve_against_env_dir() {
    let tmp = tempfile::tempdir().unwrap();
    succeed(
        bin()
            .args([
                "attack",
                "simulate",
                "--label",
                "t1-demo",
                "--as-rel",
                "as-rel.txt",
                "--rib",
                "rib.tsv",
                "--roas",
                "roas.csv",
                "--cids",
                "cids.jsonl",
                "--requesters",
                "requesters.txt",
                "--attackers",
                "attackers.txt",
                "--out",
            ])
            .arg(tmp.path())
            .env("CENSIM_INPUT_DIR", fixture("t1_demo"))
            .output()
            .unwrap(),
    );
    for name in GOLDEN_CSVS {
        let got = std::fs::read(tmp.path().join(name)).unwrap();
        assert_eq!(got, golden(name), "{name} diverged under {}", "CENSIM_INPUT_DIR");
    }
}

#[test]
fn cluster_prefixes_classify_by_length_alone() {
    let tmp = tempfile::tempdir().unwrap();
    succeed(
        bin()
            .args(["rpki", "classify", "--rib"])
            .arg(fixture("cluster/rib.tsv"))
            .arg("--roas")
            .arg(fixture("cluster/roas.csv"))
            .arg("--out")
            .arg(tmp.path())
            .output()
            .unwrap(),
    );
    let body = std::fs::read_to_string(tmp.path().join("classification.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("prefix,origin_asn,category"));
    let mut cats: BTreeMap<String, u8> = BTreeMap::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3, "{line}");
        assert_eq!(fields[1], "54825", "{line}");
        cats.insert(fields[0].to_string(), fields[2].parse().unwrap());
    }
    // No ROA covers anything here, so category is length alone: the /24
    // v4 announcement cannot be undercut by a more specific, everything
    // shorter (and the /44s, far from the /48 limit) can.
    let expect = [
        ("139.178.88.0/22", 1),
        ("147.75.63.0/24", 2),
        ("147.75.80.0/22", 1),
        ("147.75.86.0/23", 1),
        ("2604:1380:45e0::/44", 1),
        ("2604:1380:45f0::/44", 1),
        ("2604:1380:4600::/44", 1),
    ];
    assert_eq!(cats.len(), expect.len());
    for (prefix, cat) in expect {
        assert_eq!(cats[prefix], cat, "{prefix}");
    }
}

#[test]
fn attacker_list_collapses_duplicates() {
    let list = load_attacker_list(&fixture("top100_attackers.txt")).unwrap();
    assert_eq!(list.len(), 75);
    assert_eq!(list[0].get(), 3356);
    let unique: std::collections::BTreeSet<_> = list.iter().collect();
    assert_eq!(unique.len(), list.len());
}

#[test]
fn missing_input_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["attack".into(), "simulate".into()];
    args.extend(demo_args(tmp.path()));
    let pos = args.iter().position(|a| a == "--rib").unwrap();
    args[pos + 1] = tmp
        .path()
        .join("no-such-rib.tsv")
        .to_string_lossy()
        .into_owned();
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no-such-rib.tsv"), "{stderr}");
}

#[test]
fn empty_attacker_list_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("attackers.txt");
    std::fs::write(&empty, "# nobody\n").unwrap();
    let mut args: Vec<String> = vec!["attack".into(), "simulate".into()];
    args.extend(demo_args(tmp.path()));
    let pos = args.iter().position(|a| a == "--attackers").unwrap();
    args[pos + 1] = empty.to_string_lossy().into_owned();
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("empty"), "{stderr}");
}

#[test]
fn contradictory_relationship_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let rel = tmp.path().join("as-rel.txt");
    std::fs::write(&rel, "1|2|-1\n1|2|0\n").unwrap();
    let out = bin()
        .args(["topo", "build", "--as-rel"])
        .arg(&rel)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("contradictory"), "{stderr}");
}

#[test]
fn self_loop_fails_validation_but_writes_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let rel = tmp.path().join("as-rel.txt");
    std::fs::write(&rel, "7|7|0\n1|2|-1\n").unwrap();
    let outdir = tmp.path().join("out");
    let out = bin()
        .args(["topo", "build", "--as-rel"])
        .arg(&rel)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(outdir.join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["accepted"], false);
    assert_eq!(report["self_loops"], 1);
    assert!(outdir.join("snapshot.bin").exists());
}

#[test]
fn zero_budget_yields_empty_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec![
        "attack".into(),
        "budget".into(),
        "--budget".into(),
        "0".into(),
    ];
    args.extend(demo_args(tmp.path()));
    let out = succeed(bin().args(&args).output().unwrap());
    let plan = std::fs::read_to_string(tmp.path().join("plan.csv")).unwrap();
    assert_eq!(
        plan,
        "rank,prefix,marginal_pairs,cumulative_pairs,gain_mean_over_cids,gain_pooled_pairs\n"
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 step(s)"), "{stdout}");
}

#[test]
fn pinning_without_seed_is_a_usage_error() {
    let out = bin().args(["defend", "pinning"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--seed"), "{stderr}");
}
