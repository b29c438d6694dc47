//! Architectural constraints, MISO legality and greedy MaxMISO extraction.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::cluster::{Cluster, ClusterGraph};
use crate::ir::{is_convex, Ddg, GraphError, NodeId, OpKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("max_inputs must be at least 1")]
pub struct ConstraintError;

/// Limits a synthesized instruction must respect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchConstraints {
    max_inputs: usize,
    max_nodes: Option<usize>,
    forbidden: BTreeSet<OpKind>,
}

impl ArchConstraints {
    /// `max_inputs` register operands, no size limit, loads forbidden.
    pub fn new(max_inputs: usize) -> Result<Self, ConstraintError> {
        if max_inputs == 0 {
            return Err(ConstraintError);
        }
        Ok(ArchConstraints {
            max_inputs,
            max_nodes: None,
            forbidden: [OpKind::Load].into(),
        })
    }

    pub fn with_max_nodes(mut self, max_nodes: Option<usize>) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    pub fn with_forbidden(mut self, forbidden: impl IntoIterator<Item = OpKind>) -> Self {
        self.forbidden = forbidden.into_iter().collect();
        self
    }

    pub fn max_inputs(&self) -> usize {
        self.max_inputs
    }

    pub fn max_nodes(&self) -> Option<usize> {
        self.max_nodes
    }

    pub fn forbidden(&self) -> &BTreeSet<OpKind> {
        &self.forbidden
    }
}

impl Default for ArchConstraints {
    fn default() -> Self {
        ArchConstraints::new(6).expect("6 >= 1")
    }
}

/// External non-constant operands of `set`, deduplicated, in order of first
/// use when members are visited topologically.
pub fn cluster_inputs(g: &Ddg, set: &BTreeSet<NodeId>) -> Result<Vec<NodeId>, GraphError> {
    if set.is_empty() {
        return Err(GraphError::EmptySet);
    }
    let mut seen = BTreeSet::new();
    let mut inputs = Vec::new();
    for &m in set {
        g.check(m)?;
        for &o in g.node(m).operands() {
            if !set.contains(&o) && !g.node(o).is_const() && seen.insert(o) {
                inputs.push(o);
            }
        }
    }
    Ok(inputs)
}

/// How uses of non-root members are judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UseScope {
    /// Every use of a non-root member must be inside the set.
    Dfg,
    /// Non-root members may also feed other clusters, which hold their own
    /// copies; only the shape of the merged body matters.
    Recompute,
}

fn check_legal(
    g: &Ddg,
    set: &BTreeSet<NodeId>,
    ac: &ArchConstraints,
    scope: UseScope,
) -> Result<bool, GraphError> {
    if set.is_empty() {
        return Err(GraphError::EmptySet);
    }
    for &m in set {
        g.check(m)?;
    }
    let mut sinks = 0;
    for &m in set {
        let Some(op) = g.node(m).op() else {
            return Ok(false);
        };
        if ac.forbidden.contains(&op) {
            return Ok(false);
        }
        let users = g.users(m);
        let inside = users.iter().any(|u| set.contains(u));
        if !inside {
            sinks += 1;
            continue;
        }
        // Non-root member: its value leaves the instruction only through the
        // root. A declared output is an implicit use by the block exit.
        if g.is_output(m) {
            return Ok(false);
        }
        if scope == UseScope::Dfg && !users.iter().all(|u| set.contains(u)) {
            return Ok(false);
        }
    }
    if sinks != 1 {
        return Ok(false);
    }
    if ac.max_nodes.is_some_and(|n| set.len() > n) {
        return Ok(false);
    }
    if cluster_inputs(g, set)?.len() > ac.max_inputs {
        return Ok(false);
    }
    is_convex(g, set)
}

/// Legality of a MISO subgraph in the DDG: a single root, every use of every
/// other member inside the set, convex, and within `ac`.
pub fn is_legal_miso(g: &Ddg, set: &BTreeSet<NodeId>, ac: &ArchConstraints) -> Result<bool, GraphError> {
    check_legal(g, set, ac, UseScope::Dfg)
}

/// Legality of a cluster body once common operations may be recomputed in
/// several clusters: uses of non-root members outside the set are allowed.
pub fn is_legal_body(g: &Ddg, set: &BTreeSet<NodeId>, ac: &ArchConstraints) -> Result<bool, GraphError> {
    check_legal(g, set, ac, UseScope::Recompute)
}

/// Greedy MaxMISO partitioning.
///
/// Roots are taken in reverse topological order. Each new cluster absorbs,
/// one at a time and highest id first, any unassigned predecessor whose uses
/// all lie inside the cluster, as long as the grown set stays legal. A
/// rejected predecessor is skipped and growth continues with the others.
///
/// Every operation node ends up in exactly one cluster. A node that is not
/// legal even on its own (a `load`, or more operands than `max_inputs`) is
/// left as a singleton that stands for a base instruction.
pub fn max_miso<'g>(g: &'g Ddg, ac: &ArchConstraints) -> ClusterGraph<'g> {
    let mut assigned = vec![false; g.len()];
    let mut cg = ClusterGraph::new(g);
    let ops: Vec<NodeId> = g.op_ids().collect();
    for &root in ops.iter().rev() {
        if assigned[root.index()] {
            continue;
        }
        let mut members: BTreeSet<NodeId> = [root].into();
        'grow: loop {
            let candidates: BTreeSet<NodeId> = members
                .iter()
                .flat_map(|&m| g.node(m).operands().iter().copied())
                .filter(|&p| {
                    g.node(p).is_op()
                        && !members.contains(&p)
                        && !assigned[p.index()]
                        && !g.is_output(p)
                        && g.users(p).iter().all(|u| members.contains(u))
                })
                .collect();
            for &p in candidates.iter().rev() {
                let mut trial = members.clone();
                trial.insert(p);
                if is_legal_miso(g, &trial, ac).expect("ids come from g") {
                    members = trial;
                    continue 'grow;
                }
            }
            break;
        }
        for &m in &members {
            assigned[m.index()] = true;
        }
        cg.insert(Cluster::new(g, root, members).expect("members are operations of g"));
    }
    cg
}
