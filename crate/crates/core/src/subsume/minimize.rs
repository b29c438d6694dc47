use std::cmp::Reverse;
use std::collections::VecDeque;

use rayon::prelude::*;

use super::{subsume, Oracle, SubsumeConfig, SubsumeError, SubsumeOutcome, SubsumeVerdict, Witness};
use crate::candidate::CandidateInstruction;

/// Outcome of one ordered pair: does `cands[f]` subsume `cands[g]`?
#[derive(Debug, Clone)]
pub struct PairResult {
    pub f: usize,
    pub g: usize,
    pub outcome: SubsumeOutcome,
}

/// `g` is `by` applied to `witness`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub g: String,
    pub by: String,
    pub witness: Witness,
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub kept: Vec<CandidateInstruction>,
    pub removed: Vec<Removal>,
    /// Every pair that was checked, in scheduling order.
    pub pairs: Vec<PairResult>,
    pub before: usize,
}

impl Minimized {
    /// `before / after`; 1 for an empty input.
    pub fn factor(&self) -> f64 {
        if self.kept.is_empty() {
            1.0
        } else {
            self.before as f64 / self.kept.len() as f64
        }
    }

    pub fn inconclusive(&self) -> impl Iterator<Item = &PairResult> {
        self.pairs
            .iter()
            .filter(|p| matches!(p.outcome.verdict, SubsumeVerdict::Inconclusive(_)))
    }
}

/// Removes every candidate that is a special case of a kept one.
///
/// All ordered pairs with `arity(f) >= arity(g)` are checked, largest `f`
/// first. Candidates that subsume each other, directly or through a cycle,
/// form a class represented by the member with the most arguments, then
/// the fewest operations, then the smallest name. Representatives of
/// classes nothing else subsumes are kept; every other candidate is removed
/// with a witness over a kept one, composed along a chain of proven pairs
/// where needed. Inconclusive pairs count as not subsumed.
pub fn minimize_set(
    cands: &[CandidateInstruction],
    oracle: &dyn Oracle,
    cfg: &SubsumeConfig,
) -> Result<Minimized, SubsumeError> {
    let n = cands.len();
    let mut schedule: Vec<(usize, usize)> = (0..n)
        .flat_map(|f| (0..n).map(move |g| (f, g)))
        .filter(|&(f, g)| f != g && cands[f].arity() >= cands[g].arity())
        .collect();
    schedule.sort_by_key(|&(f, g)| (Reverse(cands[f].arity()), f, g));

    let pairs: Vec<PairResult> = schedule
        .par_iter()
        .map(|&(f, g)| {
            let outcome = subsume(&cands[f], &cands[g], oracle, cfg)?;
            log::info!(
                "{} over {}: {} after {} iterations",
                cands[f].name(),
                cands[g].name(),
                outcome.verdict.label(),
                outcome.iterations
            );
            Ok(PairResult { f, g, outcome })
        })
        .collect::<Result<_, SubsumeError>>()?;

    let mut edge: Vec<Vec<Option<&Witness>>> = vec![vec![None; n]; n];
    for p in &pairs {
        edge[p.f][p.g] = p.outcome.verdict.witness();
    }
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || edge[i][j].is_some()).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let rank = |i: usize| (Reverse(cands[i].arity()), cands[i].node_count(), cands[i].name());
    let rep = |i: usize| {
        (0..n)
            .filter(|&j| reach[i][j] && reach[j][i])
            .min_by(|&a, &b| rank(a).cmp(&rank(b)))
            .expect("i is in its own class")
    };
    let kept_idx: Vec<usize> = (0..n)
        .filter(|&i| rep(i) == i && (0..n).all(|k| !reach[k][i] || reach[i][k]))
        .collect();

    let mut removed = Vec::new();
    for g in 0..n {
        if kept_idx.contains(&g) {
            continue;
        }
        let by = *kept_idx
            .iter()
            .find(|&&k| reach[k][g])
            .expect("every candidate is reachable from a kept one");
        let witness = chain_witness(&edge, by, g);
        removed.push(Removal {
            g: cands[g].name().to_string(),
            by: cands[by].name().to_string(),
            witness,
        });
    }
    Ok(Minimized {
        kept: kept_idx.iter().map(|&i| cands[i].clone()).collect(),
        removed,
        pairs,
        before: n,
    })
}

/// Composes the witnesses along a shortest path of proven pairs.
fn chain_witness(edge: &[Vec<Option<&Witness>>], from: usize, to: usize) -> Witness {
    let n = edge.len();
    let mut prev = vec![usize::MAX; n];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for v in 0..n {
            if prev[v] == usize::MAX && edge[u][v].is_some() {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    let mut w = edge[path[0]][path[1]].unwrap().clone();
    for hop in path[1..].windows(2) {
        w = w.compose(edge[hop[0]][hop[1]].unwrap());
    }
    w
}
