//! Data-dependency graphs of a single basic block.
//!
//! A [`Ddg`] is immutable once built. Node identifiers are renumbered at
//! construction so that `NodeId` order *is* a topological order (ties broken
//! by the lexicographic order of node names). Every algorithm in the crate
//! relies on that: iterating ids ascending visits operands before users.

mod eval;
mod op;
pub(crate) mod parse;

pub use eval::{eval_ddg, eval_nodes, EvalError, HashedMemory, Memory};
pub use op::OpKind;
pub use parse::{parse_ddg, ParseError, ParseErrorKind};

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt;

use thiserror::Error;

/// Default datapath width (RV32I).
pub const DEFAULT_WIDTH: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input,
    Const(u64),
    Op(OpKind),
}

impl NodeKind {
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Input | NodeKind::Const(_) => 0,
            NodeKind::Op(op) => op.arity(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    name: String,
    kind: NodeKind,
    operands: Vec<NodeId>,
}

impl Node {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn operands(&self) -> &[NodeId] {
        &self.operands
    }

    pub fn op(&self) -> Option<OpKind> {
        match self.kind {
            NodeKind::Op(op) => Some(op),
            _ => None,
        }
    }

    pub fn is_op(&self) -> bool {
        matches!(self.kind, NodeKind::Op(_))
    }

    pub fn is_const(&self) -> bool {
        matches!(self.kind, NodeKind::Const(_))
    }

    pub fn is_input(&self) -> bool {
        matches!(self.kind, NodeKind::Input)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("width must be in 1..=64, got {0}")]
    InvalidWidth(u32),
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("node `{node}` references undefined operand `{operand}`")]
    UndefinedOperand { node: String, operand: String },
    #[error("node `{node}`: `{kind}` takes {expected} operand(s), got {found}")]
    ArityMismatch {
        node: String,
        kind: String,
        expected: usize,
        found: usize,
    },
    #[error("constant `{node}` = {value} does not fit in {width} bits")]
    ConstTooWide { node: String, value: u64, width: u32 },
    #[error("cyclic definition through `{0}`")]
    Cycle(String),
    #[error("output references unknown id `{0}`")]
    UnknownOutput(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node set is empty")]
    EmptySet,
}

/// Accumulates named node definitions and produces a validated [`Ddg`].
#[derive(Debug, Clone)]
pub struct DdgBuilder {
    width: u32,
    defs: Vec<(String, NodeKind, Vec<String>)>,
    outputs: Vec<String>,
}

impl DdgBuilder {
    pub fn new(width: u32) -> Self {
        DdgBuilder {
            width,
            defs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        self.defs.push((name.into(), NodeKind::Input, Vec::new()));
        self
    }

    pub fn constant(&mut self, name: impl Into<String>, value: u64) -> &mut Self {
        self.defs.push((name.into(), NodeKind::Const(value), Vec::new()));
        self
    }

    pub fn op<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        op: OpKind,
        operands: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        let operands = operands.into_iter().map(Into::into).collect();
        self.defs.push((name.into(), NodeKind::Op(op), operands));
        self
    }

    pub fn output(&mut self, name: impl Into<String>) -> &mut Self {
        self.outputs.push(name.into());
        self
    }

    pub fn build(&self) -> Result<Ddg, GraphError> {
        let width = self.width;
        if !(1..=64).contains(&width) {
            return Err(GraphError::InvalidWidth(width));
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, (name, kind, operands)) in self.defs.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(GraphError::DuplicateId(name.clone()));
            }
            if kind.arity() != operands.len() {
                return Err(GraphError::ArityMismatch {
                    node: name.clone(),
                    kind: kind_label(*kind),
                    expected: kind.arity(),
                    found: operands.len(),
                });
            }
            if let NodeKind::Const(value) = kind {
                if *value > mask(width) {
                    return Err(GraphError::ConstTooWide {
                        node: name.clone(),
                        value: *value,
                        width,
                    });
                }
            }
        }
        let mut preds: Vec<Vec<usize>> = Vec::with_capacity(self.defs.len());
        for (name, _, operands) in &self.defs {
            let mut ps = Vec::with_capacity(operands.len());
            for o in operands {
                match index.get(o.as_str()) {
                    Some(&j) => ps.push(j),
                    None => {
                        return Err(GraphError::UndefinedOperand {
                            node: name.clone(),
                            operand: o.clone(),
                        })
                    }
                }
            }
            preds.push(ps);
        }
        for o in &self.outputs {
            if !index.contains_key(o.as_str()) {
                return Err(GraphError::UnknownOutput(o.clone()));
            }
        }

        // Kahn's algorithm; the ready set is ordered by name.
        let n = self.defs.len();
        let mut pending: Vec<usize> = preds.iter().map(|p| distinct(p)).collect();
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, ps) in preds.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &p in ps {
                if seen.insert(p) {
                    succs[p].push(i);
                }
            }
        }
        let mut ready: BinaryHeap<Reverse<(&str, usize)>> = (0..n)
            .filter(|&i| pending[i] == 0)
            .map(|i| Reverse((self.defs[i].0.as_str(), i)))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse((_, i))) = ready.pop() {
            order.push(i);
            for &s in &succs[i] {
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready.push(Reverse((self.defs[s].0.as_str(), s)));
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n)
                .filter(|&i| pending[i] > 0)
                .min_by(|&a, &b| self.defs[a].0.cmp(&self.defs[b].0))
                .expect("some node left unordered");
            return Err(GraphError::Cycle(self.defs[stuck].0.clone()));
        }

        let mut renumber = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            renumber[i] = pos;
        }
        let nodes: Vec<Node> = order
            .iter()
            .map(|&i| {
                let (name, kind, _) = &self.defs[i];
                Node {
                    name: name.clone(),
                    kind: *kind,
                    operands: preds[i]
                        .iter()
                        .map(|&p| NodeId::from_index(renumber[p]))
                        .collect(),
                }
            })
            .collect();
        let inputs = self
            .defs
            .iter()
            .enumerate()
            .filter(|(_, d)| d.1 == NodeKind::Input)
            .map(|(i, _)| NodeId::from_index(renumber[i]))
            .collect();
        let outputs = self
            .outputs
            .iter()
            .map(|o| NodeId::from_index(renumber[index[o.as_str()]]))
            .collect();
        Ok(Ddg::from_parts(width, nodes, inputs, outputs))
    }
}

fn distinct(v: &[usize]) -> usize {
    v.iter().collect::<BTreeSet<_>>().len()
}

fn kind_label(kind: NodeKind) -> String {
    match kind {
        NodeKind::Input => "input".into(),
        NodeKind::Const(_) => "const".into(),
        NodeKind::Op(op) => op.mnemonic().into(),
    }
}

/// All-ones mask for a `width`-bit value.
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ddg {
    width: u32,
    nodes: Vec<Node>,
    by_name: HashMap<String, NodeId>,
    users: Vec<Vec<NodeId>>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
    is_output: Vec<bool>,
}

impl Ddg {
    fn from_parts(width: u32, nodes: Vec<Node>, inputs: Vec<NodeId>, outputs: Vec<NodeId>) -> Self {
        let mut users: Vec<Vec<NodeId>> = vec![Vec::new(); nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            for &o in &node.operands {
                let list = &mut users[o.index()];
                if list.last() != Some(&NodeId::from_index(i)) {
                    list.push(NodeId::from_index(i));
                }
            }
        }
        let mut is_output = vec![false; nodes.len()];
        for &o in &outputs {
            is_output[o.index()] = true;
        }
        let by_name = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), NodeId::from_index(i)))
            .collect();
        Ddg {
            width,
            nodes,
            by_name,
            users,
            inputs,
            outputs,
            is_output,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn mask(&self) -> u64 {
        mask(self.width)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn check(&self, id: NodeId) -> Result<(), GraphError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(id))
        }
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    /// Ids in ascending (topological) order.
    pub fn ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    /// Operation nodes, i.e. everything that is neither an input nor a constant.
    pub fn op_ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + '_ {
        self.ids().filter(|&i| self.node(i).is_op())
    }

    pub fn op_count(&self) -> usize {
        self.op_ids().count()
    }

    /// Input nodes in declaration order, which is also parameter order.
    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn is_output(&self, id: NodeId) -> bool {
        self.is_output[id.index()]
    }

    /// Nodes that list `id` among their operands, ascending.
    pub fn users(&self, id: NodeId) -> &[NodeId] {
        &self.users[id.index()]
    }

    /// A node consumed by two or more other nodes.
    pub fn is_common(&self, id: NodeId) -> bool {
        self.users(id).len() >= 2
    }

    /// Same graph at a different width; constants are truncated to fit.
    pub fn with_width(&self, width: u32) -> Result<Ddg, GraphError> {
        if !(1..=64).contains(&width) {
            return Err(GraphError::InvalidWidth(width));
        }
        let mut g = self.clone();
        g.width = width;
        for node in &mut g.nodes {
            if let NodeKind::Const(v) = &mut node.kind {
                *v &= mask(width);
            }
        }
        Ok(g)
    }

    /// Renders the graph in the textual IR format.
    pub fn to_ir(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "width {}", self.width).unwrap();
        for &i in &self.inputs {
            writeln!(out, "input {}", self.name(i)).unwrap();
        }
        for id in self.ids() {
            let node = self.node(id);
            match node.kind {
                NodeKind::Input => {}
                NodeKind::Const(v) => writeln!(out, "{} = const {}", node.name, v).unwrap(),
                NodeKind::Op(op) => {
                    write!(out, "{} = {}", node.name, op.mnemonic()).unwrap();
                    for &o in &node.operands {
                        write!(out, " {}", self.name(o)).unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        for &o in &self.outputs {
            writeln!(out, "output {}", self.name(o)).unwrap();
        }
        out
    }
}

/// Topological order of all nodes. Because ids are numbered topologically at
/// construction this is simply ascending id order.
pub fn toposort(g: &Ddg) -> Vec<NodeId> {
    g.ids().collect()
}

pub fn uses(g: &Ddg, id: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
    g.check(id)?;
    Ok(g.users(id).iter().copied().collect())
}

/// True iff no directed path leaves `set` and re-enters it.
pub fn is_convex(g: &Ddg, set: &BTreeSet<NodeId>) -> Result<bool, GraphError> {
    for &id in set {
        g.check(id)?;
    }
    // Walk forward from every edge that leaves the set, staying outside it.
    let mut seen = vec![false; g.len()];
    let mut stack: Vec<NodeId> = Vec::new();
    for &m in set {
        for &u in g.users(m) {
            if !set.contains(&u) && !seen[u.index()] {
                seen[u.index()] = true;
                stack.push(u);
            }
        }
    }
    while let Some(n) = stack.pop() {
        for &u in g.users(n) {
            if set.contains(&u) {
                return Ok(false);
            }
            if !seen[u.index()] {
                seen[u.index()] = true;
                stack.push(u);
            }
        }
    }
    Ok(true)
}

/// Maps input names to values, in declaration order.
pub fn bind_inputs(g: &Ddg, values: &[u64]) -> BTreeMap<NodeId, u64> {
    g.inputs()
        .iter()
        .zip(values)
        .map(|(&i, &v)| (i, v & g.mask()))
        .collect()
}
