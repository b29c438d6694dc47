//! Covering code size and the CSV reports.
//!
//! Every cluster costs one instruction, as does every operation no cluster
//! covers. Constants are free immediates.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterGraph, CoverError};
use crate::clustering::clone_and_combine;
use crate::extract::{max_miso, ArchConstraints, ConstraintError};
use crate::ir::{Ddg, NodeKind};
use crate::subsume::{Minimized, PairResult, SubsumeVerdict};
use crate::candidate::CandidateInstruction;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("inconsistent row: {0}")]
    Inconsistent(String),
}

/// Instruction count of `g` under the cover `cg`.
///
/// Fails when a value the cover needs (a block output or a cluster input)
/// is computed only inside some other cluster.
pub fn code_size(g: &Ddg, cg: &ClusterGraph<'_>) -> Result<usize, CoverError> {
    let uncovered = cg.uncovered();
    let produced: BTreeSet<_> = cg.roots().chain(uncovered.iter().copied()).collect();
    let needed = g
        .outputs()
        .iter()
        .chain(cg.clusters().flat_map(|c| c.inputs()))
        .chain(uncovered.iter().flat_map(|&u| g.node(u).operands()));
    for &id in needed {
        if g.node(id).kind() == NodeKind::Input || g.node(id).is_const() {
            continue;
        }
        if !produced.contains(&id) {
            return Err(CoverError::Unavailable(g.name(id).to_string()));
        }
    }
    Ok(cg.len() + uncovered.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub ddg: String,
    pub max_inputs: usize,
    /// One base instruction per operation.
    pub base_size: usize,
    pub maxmiso_size: usize,
    pub clustered_size: usize,
    /// `root: {members} <- (inputs)` for every cluster of the final cover.
    #[serde(skip)]
    pub clusters: Vec<String>,
}

impl CoverReport {
    pub fn reduction_pct(&self) -> f64 {
        if self.maxmiso_size == 0 {
            0.0
        } else {
            (self.maxmiso_size as f64 - self.clustered_size as f64) / self.maxmiso_size as f64 * 100.0
        }
    }

    pub fn reduction(&self) -> isize {
        self.maxmiso_size as isize - self.clustered_size as isize
    }
}

/// MaxMISO and clustered sizes of `g` at `max_inputs = k`.
pub fn cover_report(name: &str, g: &Ddg, k: usize) -> Result<CoverReport, ReportError> {
    let ac = ArchConstraints::new(k)?;
    let miso = max_miso(g, &ac);
    let clustered = clone_and_combine(&miso, &ac).graph;
    Ok(CoverReport {
        ddg: name.to_string(),
        max_inputs: k,
        base_size: g.op_count(),
        maxmiso_size: code_size(g, &miso)?,
        clustered_size: code_size(g, &clustered)?,
        clusters: clustered.clusters().map(|c| c.describe(g)).collect(),
    })
}

/// One report per `k` in `ks`, in order.
pub fn sweep(
    name: &str,
    g: &Ddg,
    ks: std::ops::RangeInclusive<usize>,
) -> Result<Vec<CoverReport>, ReportError> {
    let ks: Vec<usize> = ks.collect();
    ks.par_iter().map(|&k| cover_report(name, g, k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetReport {
    pub set: String,
    pub before: usize,
    pub after: usize,
    /// `(g, subsumed by, witness)`.
    pub removed: Vec<(String, String, String)>,
}

impl SetReport {
    pub fn from_minimized(set: &str, m: &Minimized) -> Self {
        SetReport {
            set: set.to_string(),
            before: m.before,
            after: m.kept.len(),
            removed: m
                .removed
                .iter()
                .map(|r| (r.g.clone(), r.by.clone(), r.witness.to_string()))
                .collect(),
        }
    }

    pub fn factor(&self) -> f64 {
        if self.after == 0 {
            1.0
        } else {
            self.before as f64 / self.after as f64
        }
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub const COVER_HEADER: [&str; 6] = [
    "ddg",
    "max_inputs",
    "base_size",
    "maxmiso_size",
    "clustered_size",
    "reduction_pct",
];
pub const SET_HEADER: [&str; 4] = ["set", "before", "after", "factor"];
pub const PAIR_HEADER: [&str; 6] = [
    "f_name",
    "g_name",
    "verdict",
    "witness",
    "iterations",
    "solver_time_ms",
];

pub fn cover_csv(reports: &[CoverReport]) -> String {
    let mut w = writer();
    w.write_record(COVER_HEADER).expect("in-memory write");
    for r in reports {
        w.write_record([
            r.ddg.clone(),
            r.max_inputs.to_string(),
            r.base_size.to_string(),
            r.maxmiso_size.to_string(),
            r.clustered_size.to_string(),
            format!("{:.2}", r.reduction_pct()),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn parse_cover_csv(text: &str) -> Result<Vec<CoverReport>, ReportError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let int = |k: usize| -> Result<usize, ReportError> {
            row.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ReportError::Inconsistent(format!("{row:?}")))
        };
        let r = CoverReport {
            ddg: row.get(0).unwrap_or_default().to_string(),
            max_inputs: int(1)?,
            base_size: int(2)?,
            maxmiso_size: int(3)?,
            clustered_size: int(4)?,
            clusters: Vec::new(),
        };
        if row.get(5) != Some(format!("{:.2}", r.reduction_pct()).as_str()) {
            return Err(ReportError::Inconsistent(format!("{row:?}")));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn set_csv(reports: &[SetReport]) -> String {
    let mut w = writer();
    w.write_record(SET_HEADER).expect("in-memory write");
    for r in reports {
        w.write_record([
            r.set.clone(),
            r.before.to_string(),
            r.after.to_string(),
            format!("{:.2}", r.factor()),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Set name, before and after counts. Removals are reported in the pair CSV.
pub fn parse_set_csv(text: &str) -> Result<Vec<SetReport>, ReportError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let bad = || ReportError::Inconsistent(format!("{row:?}"));
        let r = SetReport {
            set: row.get(0).unwrap_or_default().to_string(),
            before: row.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            after: row.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            removed: Vec::new(),
        };
        if row.get(3) != Some(format!("{:.2}", r.factor()).as_str()) {
            return Err(bad());
        }
        out.push(r);
    }
    Ok(out)
}

/// One row per checked pair. With `timing` off the time column is empty so
/// output is reproducible byte for byte.
pub fn pairs_csv(cands: &[CandidateInstruction], pairs: &[PairResult], timing: bool) -> String {
    let mut w = writer();
    w.write_record(PAIR_HEADER).expect("in-memory write");
    for p in pairs {
        let witness = match &p.outcome.verdict {
            SubsumeVerdict::Subsumes(wit) => wit.to_string(),
            SubsumeVerdict::Inconclusive(r) => r.to_string(),
            SubsumeVerdict::NotSubsumed => String::new(),
        };
        let ms = if timing {
            p.outcome.elapsed.as_millis().to_string()
        } else {
            String::new()
        };
        w.write_record([
            cands[p.f].name(),
            cands[p.g].name(),
            p.outcome.verdict.label(),
            &witness,
            &p.outcome.iterations.to_string(),
            &ms,
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Human-readable summary of both kinds of report.
pub fn summary(covers: &[CoverReport], sets: &[SetReport]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for r in covers {
        writeln!(
            s,
            "{} k={}: base {} maxmiso {} clustered {} ({:.2}% smaller)",
            r.ddg,
            r.max_inputs,
            r.base_size,
            r.maxmiso_size,
            r.clustered_size,
            r.reduction_pct()
        )
        .unwrap();
    }
    for r in sets {
        writeln!(s, "{}: {} -> {} candidates (x{:.2})", r.set, r.before, r.after, r.factor()).unwrap();
        for (g, by, w) in &r.removed {
            writeln!(s, "  {g} = {by}({})", w.replace(' ', ", ")).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Cluster;
    use crate::clustering::singleton_clusters;
    use crate::ir::parse_ddg;

    const D1: &str = "input x\ninput y\nk255 = const 255\nt1 = add x y\n\
        t2 = and t1 k255\nt3 = not t1\noutput t2\noutput t3\n";

    #[test]
    fn d1_sizes() {
        let g = parse_ddg(D1).unwrap();
        let ac = ArchConstraints::new(2).unwrap();
        let single = singleton_clusters(&g);
        assert_eq!(code_size(&g, &single).unwrap(), 3);
        let clustered = clone_and_combine(&single, &ac).graph;
        assert_eq!(code_size(&g, &clustered).unwrap(), 2);
        for k in 2..=6 {
            let r = cover_report("d1", &g, k).unwrap();
            assert_eq!((r.maxmiso_size, r.clustered_size), (3, 2), "k={k}");
        }
    }

    #[test]
    fn isolated_not() {
        let g = parse_ddg("input x\nn = not x\noutput n").unwrap();
        assert_eq!(code_size(&g, &singleton_clusters(&g)).unwrap(), 1);
        assert_eq!(code_size(&g, &ClusterGraph::new(&g)).unwrap(), 1);
    }

    #[test]
    fn hidden_output_rejected() {
        let g = parse_ddg("input x\na = not x\nb = not a\noutput a\noutput b").unwrap();
        let c = Cluster::new(&g, g.id("b").unwrap(), [g.id("a").unwrap(), g.id("b").unwrap()].into())
            .unwrap();
        let cg = ClusterGraph::from_clusters(&g, [c]).unwrap();
        assert!(code_size(&g, &cg).is_err());
    }

    #[test]
    fn chain_never_shrinks() {
        let g = parse_ddg("input x\nn1 = not x\nn2 = not n1\nn3 = not n2\noutput n3").unwrap();
        for r in sweep("chain", &g, 1..=6).unwrap() {
            assert_eq!(r.reduction_pct(), 0.0);
        }
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(cover_csv(&[]), COVER_HEADER.join(",") + "\n");
        let g = parse_ddg(D1).unwrap();
        let reports = sweep("d1", &g, 1..=6).unwrap();
        let text = cover_csv(&reports);
        assert_eq!(text.lines().count(), 7);
        assert!(text.contains("d1,2,3,3,2,33.33\n"), "{text}");
        assert!(!text.contains('\r'));
        let back = parse_cover_csv(&text).unwrap();
        let stripped: Vec<CoverReport> = reports
            .into_iter()
            .map(|r| CoverReport { clusters: Vec::new(), ..r })
            .collect();
        assert_eq!(back, stripped);

        let s = SetReport {
            set: "raycast".into(),
            before: 5,
            after: 2,
            removed: Vec::new(),
        };
        let text = set_csv(&[s.clone()]);
        assert_eq!(text, "set,before,after,factor\nraycast,5,2,2.50\n");
        assert_eq!(parse_set_csv(&text).unwrap(), vec![s]);
        assert!(parse_set_csv("set,before,after,factor\nx,5,2,3.00\n").is_err());
    }
}
