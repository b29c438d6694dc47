//! Common-operation clustering: clone a cluster into every one of its users
//! and recompute it there, repeating until nothing changes.
//!
//! A cluster `i` is merged away only when *all* of its users can absorb it
//! and its root is not a block output; otherwise it is kept as is. Each
//! changing pass removes at least one cluster, so the fixpoint is reached in
//! at most as many passes as there are clusters.

use std::collections::{BTreeMap, BTreeSet};

use crate::cluster::{Cluster, ClusterError, ClusterGraph};
use crate::extract::{is_legal_body, ArchConstraints};
use crate::ir::{Ddg, NodeId};

/// One cluster per operation node.
pub fn singleton_clusters(g: &Ddg) -> ClusterGraph<'_> {
    ClusterGraph::from_clusters(
        g,
        g.op_ids()
            .map(|id| Cluster::singleton(g, id).expect("operation node")),
    )
    .expect("roots are distinct")
}

fn lookup<'a>(cg: &'a ClusterGraph<'_>, root: NodeId) -> Result<&'a Cluster, ClusterError> {
    cg.get(root)
        .ok_or_else(|| ClusterError::NoSuchCluster(name(cg.ddg(), root)))
}

fn name(g: &Ddg, id: NodeId) -> String {
    g.get(id).map_or_else(|| id.to_string(), |n| n.name().to_string())
}

fn check_uses(g: &Ddg, user: &Cluster, producer: &Cluster) -> Result<(), ClusterError> {
    if user.inputs().contains(&producer.root()) {
        Ok(())
    } else {
        Err(ClusterError::NotAUser {
            user: name(g, user.root()),
            producer: name(g, producer.root()),
        })
    }
}

fn merge(g: &Ddg, user: &Cluster, producer: &Cluster) -> Cluster {
    let members: BTreeSet<NodeId> = user
        .members()
        .union(producer.members())
        .copied()
        .collect();
    Cluster::new(g, user.root(), members).expect("union of valid clusters")
}

fn mergeable(g: &Ddg, user: &Cluster, producer: &Cluster, ac: &ArchConstraints) -> bool {
    let members: BTreeSet<NodeId> = user
        .members()
        .union(producer.members())
        .copied()
        .collect();
    is_legal_body(g, &members, ac).expect("members belong to g")
}

/// Cluster `u` with `i`'s body recomputed inside it. `u` must use `i`.
pub fn combine_subgraphs(
    cg: &ClusterGraph<'_>,
    u: NodeId,
    i: NodeId,
) -> Result<Cluster, ClusterError> {
    let (user, producer) = (lookup(cg, u)?, lookup(cg, i)?);
    check_uses(cg.ddg(), user, producer)?;
    Ok(merge(cg.ddg(), user, producer))
}

/// Whether the merged body of `u` and `i` is a legal cluster. Other users of
/// `i` do not block the merge; they get copies of their own.
pub fn can_combine(
    cg: &ClusterGraph<'_>,
    u: NodeId,
    i: NodeId,
    ac: &ArchConstraints,
) -> Result<bool, ClusterError> {
    let (user, producer) = (lookup(cg, u)?, lookup(cg, i)?);
    check_uses(cg.ddg(), user, producer)?;
    Ok(mergeable(cg.ddg(), user, producer, ac))
}

/// One pass over the clusters in topological order.
///
/// A user that already absorbed an earlier producer in this pass is checked
/// and merged with its updated body, so several producers of the same
/// cluster can be folded in one pass.
pub fn combine_pass<'g>(cg: &ClusterGraph<'g>, ac: &ArchConstraints) -> ClusterGraph<'g> {
    let g = cg.ddg();
    let mut users: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for c in cg.clusters() {
        for &input in c.inputs() {
            if cg.get(input).is_some() {
                users.entry(input).or_default().push(c.root());
            }
        }
    }

    let mut next: BTreeMap<NodeId, Cluster> = BTreeMap::new();
    let mut marked: BTreeSet<NodeId> = BTreeSet::new();
    for producer in cg.clusters() {
        let i = producer.root();
        if marked.contains(&i) {
            continue;
        }
        let us = users.get(&i).map(Vec::as_slice).unwrap_or(&[]);
        let current = |u: &NodeId| next.get(u).unwrap_or_else(|| cg.get(*u).expect("user exists"));
        let all_merge = !us.is_empty()
            && !g.is_output(i)
            && us.iter().all(|u| mergeable(g, current(u), producer, ac));
        if all_merge {
            let merged: Vec<Cluster> = us.iter().map(|u| merge(g, current(u), producer)).collect();
            for c in merged {
                marked.insert(c.root());
                next.insert(c.root(), c);
            }
        } else {
            next.insert(i, producer.clone());
        }
    }
    ClusterGraph::from_clusters(g, next.into_values()).expect("roots are distinct")
}

/// Fixpoint of [`combine_pass`] together with the number of passes run,
/// including the final pass that changed nothing.
#[derive(Debug, Clone)]
pub struct Clustered<'g> {
    pub graph: ClusterGraph<'g>,
    pub passes: usize,
}

pub fn clone_and_combine<'g>(cg: &ClusterGraph<'g>, ac: &ArchConstraints) -> Clustered<'g> {
    let mut current = cg.clone();
    let mut passes = 0;
    loop {
        let next = combine_pass(&current, ac);
        passes += 1;
        if next.same_clusters(&current) {
            return Clustered {
                graph: current,
                passes,
            };
        }
        debug_assert!(next.len() < current.len(), "a changing pass must drop a cluster");
        current = next;
    }
}
