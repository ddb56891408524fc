//! CSV emitters for every command's outputs. Plain RFC-4180 text, floats
//! in Rust's shortest-roundtrip form, rows in a deterministic order, so a
//! re-run with the same manifest reproduces files byte for byte.

use std::borrow::Cow;
use std::io::Write;

use crate::attack::{CategoryHistogram, DatasetEval, SurfaceRow, MODES, VECTORS};
use crate::datasets::ScoredCid;
use crate::error::Result;
use crate::prefixdb::{classify_prefix, PrefixIndex, RoaSet};
use crate::strategy::{BudgetPlan, PinningCurve, ProtectionRow};

/// Quote a field only when it needs it; CIDs are opaque strings.
fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(s)
    }
}

pub const RESULTS_HEADER: &str =
    "dataset,cid,attacker_asn,mode,vector,blocked_count,requester_count,feasible";

/// One row per (cid, attacker, mode, vector).
pub fn write_results_csv<W: Write>(mut w: W, dataset: &str, eval: &DatasetEval) -> Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for (c, cid) in eval.cids.iter().enumerate() {
        for (a, attacker) in eval.attackers.iter().enumerate() {
            for mode in MODES {
                for vector in VECTORS {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        csv_field(dataset),
                        csv_field(cid),
                        attacker.get(),
                        mode.name(),
                        vector.name(),
                        eval.count(c, a, mode, vector),
                        eval.requesters_evaluated,
                        eval.feasible[c],
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// Per-CID strongest attacker, the Fig.-4-style fractions.
pub fn write_per_cid_csv<W: Write>(mut w: W, dataset: &str, eval: &DatasetEval) -> Result<()> {
    writeln!(
        w,
        "dataset,cid,mode,vector,max_blocked_fraction,best_attacker_asn,feasible"
    )?;
    for (c, cid) in eval.cids.iter().enumerate() {
        for mode in MODES {
            for vector in VECTORS {
                let (best, count) = eval.best_attacker(c, mode, vector);
                let frac = if eval.requesters_evaluated == 0 {
                    0.0
                } else {
                    f64::from(count) / f64::from(eval.requesters_evaluated)
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    csv_field(dataset),
                    csv_field(cid),
                    mode.name(),
                    vector.name(),
                    frac,
                    eval.attackers[best].get(),
                    eval.feasible[c],
                )?;
            }
        }
    }
    Ok(())
}

/// Per-attacker pair counts and mean fractions, the Fig.-6-style ranking.
pub fn write_per_attacker_csv<W: Write>(
    mut w: W,
    dataset: &str,
    eval: &DatasetEval,
) -> Result<()> {
    writeln!(
        w,
        "dataset,attacker_asn,mode,vector,blocked_pairs,mean_blocked_fraction"
    )?;
    for (a, attacker) in eval.attackers.iter().enumerate() {
        for mode in MODES {
            for vector in VECTORS {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    csv_field(dataset),
                    attacker.get(),
                    mode.name(),
                    vector.name(),
                    eval.attacker_pairs(a, mode, vector),
                    eval.attacker_mean_fraction(a, mode, vector),
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut w: W, dataset: &str, eval: &DatasetEval) -> Result<()> {
    writeln!(
        w,
        "dataset,mode,vector,mean_max_fraction,fully_blockable_fraction,cids,feasible_cids,attackers,requesters_evaluated,requesters_excluded,tie_policy"
    )?;
    let feasible = eval.feasible.iter().filter(|f| **f).count();
    for mode in MODES {
        for vector in VECTORS {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(dataset),
                mode.name(),
                vector.name(),
                eval.mean_max_fraction(mode, vector),
                eval.fully_blockable_fraction(mode, vector),
                eval.cids.len(),
                feasible,
                eval.attackers.len(),
                eval.requesters_evaluated,
                eval.requesters_excluded,
                eval.tie_policy.name(),
            )?;
        }
    }
    Ok(())
}

/// Per-CID surface sizes, CDF-ready.
pub fn write_surfaces_csv<W: Write>(mut w: W, rows: &[SurfaceRow]) -> Result<()> {
    writeln!(
        w,
        "cid,vector,distinct_asns,distinct_prefixes,distinct_v4_addrs,distinct_v6_addrs"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            csv_field(&r.cid),
            r.vector.name(),
            r.asns,
            r.prefixes,
            r.v4_addrs,
            r.v6_addrs,
        )?;
    }
    Ok(())
}

pub fn write_category_histogram_csv<W: Write>(
    mut w: W,
    hist: &CategoryHistogram,
) -> Result<()> {
    writeln!(w, "category,distinct_prefixes")?;
    for (i, n) in hist.prefixes.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, n)?;
    }
    Ok(())
}

/// Budget plan. The two gain columns normalize the same cumulative count
/// two ways (mean over CIDs of per-CID blocked fraction, and pooled share
/// of all pairs); with every requester evaluated against every CID they
/// coincide, and both are emitted for plot parity either way.
pub fn write_plan_csv<W: Write>(
    mut w: W,
    plan: &BudgetPlan,
    cid_count: usize,
    requesters_evaluated: u32,
) -> Result<()> {
    writeln!(
        w,
        "rank,prefix,marginal_pairs,cumulative_pairs,gain_mean_over_cids,gain_pooled_pairs"
    )?;
    let total_pairs = cid_count as u64 * u64::from(requesters_evaluated);
    for (i, step) in plan.steps.iter().enumerate() {
        let pooled = if total_pairs == 0 {
            0.0
        } else {
            step.cumulative_pairs as f64 / total_pairs as f64
        };
        let mean_over_cids = if cid_count == 0 || requesters_evaluated == 0 {
            0.0
        } else {
            (step.cumulative_pairs as f64 / f64::from(requesters_evaluated)) / cid_count as f64
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            i + 1,
            step.prefix,
            step.marginal_pairs,
            step.cumulative_pairs,
            mean_over_cids,
            pooled,
        )?;
    }
    Ok(())
}

pub fn write_curve_csv<W: Write>(mut w: W, curve: &PinningCurve) -> Result<()> {
    writeln!(w, "fraction,nodes,mean_blockage,stddev,trials,seed")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.fraction, p.nodes, p.mean_blockage, p.stddev, curve.trials, curve.seed,
        )?;
    }
    Ok(())
}

pub fn write_protection_csv<W: Write>(mut w: W, rows: &[ProtectionRow]) -> Result<()> {
    writeln!(
        w,
        "cid,verdict,provider_asns,provider_prefixes,cat1_endpoints,cat2_endpoints,cat3_endpoints,cat4_endpoints,max_hijack_fraction,action"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.cid),
            r.verdict.name(),
            r.provider_asns,
            r.provider_prefixes,
            r.category_counts[0],
            r.category_counts[1],
            r.category_counts[2],
            r.category_counts[3],
            r.max_hijack_fraction,
            csv_field(r.action),
        )?;
    }
    Ok(())
}

pub fn write_scores_csv<W: Write>(mut w: W, scored: &[ScoredCid]) -> Result<()> {
    writeln!(w, "rank,cid,score,peer_count")?;
    for (i, s) in scored.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            i + 1,
            csv_field(&s.cid),
            s.score,
            s.peer_count,
        )?;
    }
    Ok(())
}

/// Category of every announced prefix, in prefix order.
pub fn write_classification_csv<W: Write>(
    mut w: W,
    index: &PrefixIndex,
    roas: &RoaSet,
) -> Result<()> {
    writeln!(w, "prefix,origin_asn,category")?;
    for (prefix, origin) in index.sorted_entries() {
        writeln!(
            w,
            "{},{},{}",
            prefix,
            origin.get(),
            classify_prefix(&prefix, roas).as_u8(),
        )?;
    }
    Ok(())
}
