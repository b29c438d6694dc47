//! MISO clusters and mappings of a DDG onto clusters.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::extract::{self, cluster_inputs, ArchConstraints};
use crate::ir::{Ddg, EvalError, GraphError, Memory, NodeId, NodeKind, OpKind};

/// A single-output subgraph: member set, external inputs, root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    root: NodeId,
    members: BTreeSet<NodeId>,
    inputs: Vec<NodeId>,
}

impl Cluster {
    /// Builds a cluster, deriving its inputs. Every member must be an
    /// operation node and `root` must be a member.
    pub fn new(g: &Ddg, root: NodeId, members: BTreeSet<NodeId>) -> Result<Self, ClusterError> {
        if !members.contains(&root) {
            return Err(ClusterError::RootNotMember(g.name(root).to_string()));
        }
        for &m in &members {
            g.check(m)?;
            if !g.node(m).is_op() {
                return Err(ClusterError::NotAnOperation(g.name(m).to_string()));
            }
        }
        let inputs = cluster_inputs(g, &members)?;
        Ok(Cluster {
            root,
            members,
            inputs,
        })
    }

    pub fn singleton(g: &Ddg, id: NodeId) -> Result<Self, ClusterError> {
        Cluster::new(g, id, [id].into())
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    pub fn contains_kind(&self, g: &Ddg, kinds: &BTreeSet<OpKind>) -> bool {
        self.members
            .iter()
            .any(|&m| g.node(m).op().is_some_and(|op| kinds.contains(&op)))
    }

    /// `root: {members} <- (inputs)` using node names.
    pub fn describe(&self, g: &Ddg) -> String {
        let members: Vec<&str> = self.members.iter().map(|&m| g.name(m)).collect();
        let inputs: Vec<&str> = self.inputs.iter().map(|&m| g.name(m)).collect();
        format!(
            "{}: {{{}}} <- ({})",
            g.name(self.root),
            members.join(", "),
            inputs.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("root `{0}` is not a member of its cluster")]
    RootNotMember(String),
    #[error("`{0}` is not an operation node")]
    NotAnOperation(String),
    #[error("two clusters share root `{0}`")]
    DuplicateRoot(String),
    #[error("cluster `{user}` does not use cluster `{producer}`")]
    NotAUser { user: String, producer: String },
    #[error("no cluster rooted at `{0}`")]
    NoSuchCluster(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("value of `{0}` is not produced by the cover")]
    Unavailable(String),
}

/// A covering of a DDG by clusters, keyed by root. After common operations
/// are cloned a node may be a member of several clusters.
#[derive(Debug, Clone)]
pub struct ClusterGraph<'g> {
    ddg: &'g Ddg,
    clusters: BTreeMap<NodeId, Cluster>,
}

impl PartialEq for ClusterGraph<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.ddg, other.ddg) && self.same_clusters(other)
    }
}

impl<'g> ClusterGraph<'g> {
    pub fn new(ddg: &'g Ddg) -> Self {
        ClusterGraph {
            ddg,
            clusters: BTreeMap::new(),
        }
    }

    pub fn from_clusters(
        ddg: &'g Ddg,
        clusters: impl IntoIterator<Item = Cluster>,
    ) -> Result<Self, ClusterError> {
        let mut cg = ClusterGraph::new(ddg);
        for c in clusters {
            let root = c.root;
            if cg.clusters.insert(root, c).is_some() {
                return Err(ClusterError::DuplicateRoot(ddg.name(root).to_string()));
            }
        }
        Ok(cg)
    }

    pub fn ddg(&self) -> &'g Ddg {
        self.ddg
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Clusters in ascending root order, which is a topological order of the
    /// induced cluster graph.
    pub fn clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.values()
    }

    pub fn roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.clusters.keys().copied()
    }

    pub fn get(&self, root: NodeId) -> Option<&Cluster> {
        self.clusters.get(&root)
    }

    pub(crate) fn insert(&mut self, c: Cluster) {
        self.clusters.insert(c.root, c);
    }

    /// Roots of the clusters that take `root`'s value as an input.
    pub fn users(&self, root: NodeId) -> Vec<NodeId> {
        self.clusters
            .values()
            .filter(|c| c.inputs.contains(&root))
            .map(|c| c.root)
            .collect()
    }

    /// Same root set with the same member sets.
    pub fn same_clusters(&self, other: &ClusterGraph<'_>) -> bool {
        self.clusters.len() == other.clusters.len()
            && self
                .clusters
                .iter()
                .zip(&other.clusters)
                .all(|((ra, a), (rb, b))| ra == rb && a.members == b.members)
    }

    /// Union of member sets.
    pub fn covered(&self) -> BTreeSet<NodeId> {
        self.clusters
            .values()
            .flat_map(|c| c.members.iter().copied())
            .collect()
    }

    /// Operation nodes that belong to no cluster.
    pub fn uncovered(&self) -> Vec<NodeId> {
        let covered = self.covered();
        self.ddg
            .op_ids()
            .filter(|id| !covered.contains(id))
            .collect()
    }

    /// Checks that every multi-node cluster is a legal MISO body under `ac`.
    /// Singleton clusters stand for a single base instruction and are always
    /// implementable.
    pub fn illegal_clusters(&self, ac: &ArchConstraints) -> Vec<NodeId> {
        self.clusters
            .values()
            .filter(|c| {
                !c.is_singleton()
                    && !extract::is_legal_body(self.ddg, &c.members, ac).unwrap_or(false)
            })
            .map(|c| c.root)
            .collect()
    }

    /// Evaluates the DDG outputs through the cover: each cluster is computed
    /// as a unit from the values of its inputs, and uncovered operations are
    /// executed individually.
    pub fn eval_cover(
        &self,
        env: &BTreeMap<NodeId, u64>,
        mem: Option<&dyn Memory>,
    ) -> Result<Vec<u64>, CoverError> {
        let g = self.ddg;
        let mut avail: BTreeMap<NodeId, u64> = BTreeMap::new();
        for id in g.ids() {
            match g.node(id).kind() {
                NodeKind::Input => {
                    let v = env
                        .get(&id)
                        .ok_or_else(|| EvalError::UnboundInput(g.name(id).to_string()))?;
                    avail.insert(id, v & g.mask());
                }
                NodeKind::Const(v) => {
                    avail.insert(id, v);
                }
                NodeKind::Op(_) => {}
            }
        }
        let uncovered: BTreeSet<NodeId> = self.uncovered().into_iter().collect();
        let units: BTreeSet<NodeId> = self.clusters.keys().chain(&uncovered).copied().collect();
        for unit in units {
            let members: BTreeSet<NodeId> = match self.clusters.get(&unit) {
                Some(c) => c.members.clone(),
                None => [unit].into(),
            };
            let mut local: BTreeMap<NodeId, u64> = BTreeMap::new();
            for &m in &members {
                let node = g.node(m);
                let mut args = Vec::with_capacity(2);
                for o in node.operands() {
                    let v = local
                        .get(o)
                        .or_else(|| avail.get(o))
                        .ok_or_else(|| CoverError::Unavailable(g.name(*o).to_string()))?;
                    args.push(*v);
                }
                let v = match node.op().expect("members are operations") {
                    OpKind::Load => {
                        let mem = mem.ok_or_else(|| EvalError::NoMemory(node.name().to_string()))?;
                        mem.load(args[0]) & g.mask()
                    }
                    op => op.apply(g.width(), &args),
                };
                local.insert(m, v);
            }
            avail.insert(unit, local[&unit]);
        }
        g.outputs()
            .iter()
            .map(|o| {
                avail
                    .get(o)
                    .copied()
                    .ok_or_else(|| CoverError::Unavailable(g.name(*o).to_string()))
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        self.clusters
            .values()
            .map(|c| c.describe(self.ddg) + "\n")
            .collect()
    }
}
