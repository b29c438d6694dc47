//! Candidate instructions: single-result functions over ordered parameters.
//!
//! A candidate's body is an ordinary [`Ddg`] whose `input` declarations, in
//! order, are the parameters and whose single `output` is the result.
//! Candidate files hold one or more bodies, each introduced by a
//! `function <name>` line:
//!
//! ```text
//! function ci34
//! input a
//! input b
//! input c
//! k = const 255
//! s = add a b
//! m = and s k
//! r = add m c
//! output r
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::cluster::Cluster;
use crate::ir::parse::{is_ident, parse_lines, parse_uint};
use crate::ir::{Ddg, DdgBuilder, GraphError, NodeId, NodeKind, OpKind, ParseError, DEFAULT_WIDTH};
use crate::smt::literal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CandidateError {
    #[error("`{name}` takes {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{name}` contains forbidden operation `{kind}` at `{node}`")]
    Forbidden {
        name: String,
        node: String,
        kind: OpKind,
    },
    #[error("`{name}` must have exactly one output, found {found}")]
    Outputs { name: String, found: usize },
    #[error("invalid function name `{0}`")]
    Name(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Param(usize),
    Const(u64),
    Op(OpKind, [u32; 2]),
}

/// A named function of `arity` parameters computed by a loop-free body.
#[derive(Debug, Clone)]
pub struct CandidateInstruction {
    name: String,
    body: Ddg,
    steps: Vec<Step>,
    result: usize,
}

impl PartialEq for CandidateInstruction {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.body.to_ir() == other.body.to_ir()
    }
}

impl CandidateInstruction {
    /// Wraps `body`; it must have exactly one output and no `load`.
    pub fn new(name: impl Into<String>, body: Ddg) -> Result<Self, CandidateError> {
        let name = name.into();
        if !is_ident(&name) {
            return Err(CandidateError::Name(name));
        }
        if body.outputs().len() != 1 {
            return Err(CandidateError::Outputs {
                name,
                found: body.outputs().len(),
            });
        }
        let params: HashMap<NodeId, usize> =
            body.inputs().iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut steps = Vec::with_capacity(body.len());
        for id in body.ids() {
            let node = body.node(id);
            steps.push(match node.kind() {
                NodeKind::Input => Step::Param(params[&id]),
                NodeKind::Const(v) => Step::Const(v),
                NodeKind::Op(OpKind::Load) => {
                    return Err(CandidateError::Forbidden {
                        name,
                        node: node.name().to_string(),
                        kind: OpKind::Load,
                    })
                }
                NodeKind::Op(op) => {
                    let mut args = [0u32; 2];
                    for (a, o) in args.iter_mut().zip(node.operands()) {
                        *a = o.index() as u32;
                    }
                    Step::Op(op, args)
                }
            });
        }
        let result = body.outputs()[0].index();
        Ok(CandidateInstruction {
            name,
            body,
            steps,
            result,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(&self, name: impl Into<String>) -> Result<Self, CandidateError> {
        CandidateInstruction::new(name, self.body.clone())
    }

    pub fn body(&self) -> &Ddg {
        &self.body
    }

    pub fn arity(&self) -> usize {
        self.body.inputs().len()
    }

    pub fn width(&self) -> u32 {
        self.body.width()
    }

    /// Number of operation nodes in the body.
    pub fn node_count(&self) -> usize {
        self.body.op_count()
    }

    /// Same function at another width; constants are truncated.
    pub fn at_width(&self, width: u32) -> Result<Self, CandidateError> {
        CandidateInstruction::new(self.name.clone(), self.body.with_width(width)?)
    }

    pub fn eval(&self, args: &[u64]) -> Result<u64, CandidateError> {
        if args.len() != self.arity() {
            return Err(CandidateError::Arity {
                name: self.name.clone(),
                expected: self.arity(),
                found: args.len(),
            });
        }
        let mut scratch = Vec::new();
        Ok(self.eval_with(args, &mut scratch))
    }

    /// Evaluation reusing `scratch` between calls. `args` must have exactly
    /// `arity()` elements.
    pub fn eval_with(&self, args: &[u64], scratch: &mut Vec<u64>) -> u64 {
        debug_assert_eq!(args.len(), self.arity());
        let w = self.width();
        let m = self.body.mask();
        scratch.clear();
        for step in &self.steps {
            let v = match *step {
                Step::Param(k) => args[k] & m,
                Step::Const(v) => v,
                Step::Op(op, [a, b]) => {
                    let a = scratch[a as usize];
                    let b = scratch.get(b as usize).copied().unwrap_or(0);
                    op.apply(w, &[a, b][..op.arity()])
                }
            };
            scratch.push(v);
        }
        scratch[self.result]
    }

    /// `function <name>` followed by the body in IR syntax.
    pub fn to_text(&self) -> String {
        format!("function {}\n{}", self.name, self.body.to_ir())
    }
}

/// Executable semantics of `f`.
pub fn eval_fn(f: &CandidateInstruction, args: &[u64]) -> Result<u64, CandidateError> {
    f.eval(args)
}

/// The function computed by cluster `c` of `g`, with `c.inputs()` as its
/// parameters in order and constants embedded.
pub fn cluster_to_function(
    g: &Ddg,
    c: &Cluster,
    name: impl Into<String>,
) -> Result<CandidateInstruction, CandidateError> {
    let name = name.into();
    let mut b = DdgBuilder::new(g.width());
    for &i in c.inputs() {
        b.input(g.name(i));
    }
    let mut consts = std::collections::BTreeSet::new();
    for &m in c.members() {
        let node = g.node(m);
        if node.op() == Some(OpKind::Load) {
            return Err(CandidateError::Forbidden {
                name,
                node: node.name().to_string(),
                kind: OpKind::Load,
            });
        }
        for &o in node.operands() {
            if let NodeKind::Const(v) = g.node(o).kind() {
                if consts.insert(o) {
                    b.constant(g.name(o), v);
                }
            }
        }
        b.op(
            node.name(),
            node.op().expect("cluster members are operations"),
            node.operands().iter().map(|&o| g.name(o)),
        );
    }
    b.output(g.name(c.root()));
    CandidateInstruction::new(name, b.build()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Term {
    Param(usize),
    Const(u64),
    Op(OpKind, Vec<u32>),
}

/// Interns body subterms across functions, so equal canonical terms get
/// equal ids.
#[derive(Default)]
struct Interner {
    ids: HashMap<Term, u32>,
}

impl Interner {
    fn intern(&mut self, t: Term) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(t).or_insert(next)
    }

    fn key(&mut self, f: &CandidateInstruction) -> (u32, usize, u32) {
        let mut canon = Vec::with_capacity(f.steps.len());
        for step in &f.steps {
            let t = match *step {
                Step::Param(k) => Term::Param(k),
                Step::Const(v) => Term::Const(v),
                Step::Op(op, args) => {
                    let mut ops: Vec<u32> =
                        args[..op.arity()].iter().map(|&a| canon[a as usize]).collect();
                    if op.is_commutative() {
                        ops.sort_unstable();
                    }
                    Term::Op(op, ops)
                }
            };
            canon.push(self.intern(t));
        }
        (f.width(), f.arity(), canon[f.result])
    }
}

/// One representative per class of structurally identical functions, with
/// commutative operands put in canonical order. The representative takes
/// the smallest name in its class; classes appear in order of first
/// occurrence.
pub fn dedupe_structural(cands: &[CandidateInstruction]) -> Vec<CandidateInstruction> {
    let mut interner = Interner::default();
    let mut classes: Vec<(CandidateInstruction, String)> = Vec::new();
    let mut index: HashMap<(u32, usize, u32), usize> = HashMap::new();
    for f in cands {
        let key = interner.key(f);
        match index.get(&key) {
            Some(&k) => {
                if f.name() < classes[k].1.as_str() {
                    classes[k].1 = f.name().to_string();
                }
            }
            None => {
                index.insert(key, classes.len());
                classes.push((f.clone(), f.name().to_string()));
            }
        }
    }
    classes
        .into_iter()
        .map(|(f, name)| f.renamed(name).expect("name came from a candidate"))
        .collect()
}

fn smt_op(op: OpKind) -> &'static str {
    match op {
        OpKind::Add => "bvadd",
        OpKind::Sub => "bvsub",
        OpKind::Mul => "bvmul",
        OpKind::And => "bvand",
        OpKind::Or => "bvor",
        OpKind::Xor => "bvxor",
        OpKind::Not => "bvnot",
        OpKind::Shl => "bvshl",
        OpKind::Shrl => "bvlshr",
        OpKind::Shra => "bvashr",
        OpKind::Rotl | OpKind::Rotr | OpKind::Load => unreachable!("handled separately"),
    }
}

/// Solver term for `f` applied to `args`. Operation nodes used more than
/// once are bound with `let`.
pub fn emit_term(f: &CandidateInstruction, args: &[String]) -> Result<String, CandidateError> {
    if args.len() != f.arity() {
        return Err(CandidateError::Arity {
            name: f.name.clone(),
            expected: f.arity(),
            found: args.len(),
        });
    }
    let w = f.width();
    let mut occurrences = vec![0usize; f.steps.len()];
    for step in &f.steps {
        if let Step::Op(op, a) = step {
            for &o in &a[..op.arity()] {
                occurrences[o as usize] += 1;
            }
        }
    }
    let mut terms: Vec<String> = Vec::with_capacity(f.steps.len());
    let mut lets: Vec<(String, String)> = Vec::new();
    for (k, step) in f.steps.iter().enumerate() {
        let t = match *step {
            Step::Param(p) => args[p].clone(),
            Step::Const(v) => literal(v, w),
            Step::Op(op @ (OpKind::Rotl | OpKind::Rotr), [a, b]) => {
                let x = &terms[a as usize];
                let (name, fwd, back) = if op == OpKind::Rotl {
                    ("rotate_left", "bvshl", "bvlshr")
                } else {
                    ("rotate_right", "bvlshr", "bvshl")
                };
                match f.steps[b as usize] {
                    Step::Const(r) => format!("((_ {name} {}) {x})", r % w as u64),
                    _ => {
                        let r = format!("(bvurem {} {})", terms[b as usize], literal(w as u64, w));
                        format!(
                            "(bvor ({fwd} {x} {r}) ({back} {x} (bvsub {} {r})))",
                            literal(w as u64, w)
                        )
                    }
                }
            }
            Step::Op(op, [a, b]) => {
                if op.arity() == 1 {
                    format!("({} {})", smt_op(op), terms[a as usize])
                } else {
                    format!("({} {} {})", smt_op(op), terms[a as usize], terms[b as usize])
                }
            }
        };
        if matches!(step, Step::Op(..)) && occurrences[k] > 1 {
            let var = format!("t__{k}");
            lets.push((var.clone(), t));
            terms.push(var);
        } else {
            terms.push(t);
        }
    }
    let mut out = terms[f.result].clone();
    for (var, t) in lets.into_iter().rev() {
        out = format!("(let (({var} {t})) {out})");
    }
    Ok(out)
}

/// Reads a candidate file. A `width` line before the first function sets
/// the default width of every body; a body may override it.
pub fn parse_functions(text: &str, default_width: Option<u32>) -> Result<Vec<CandidateInstruction>, ParseError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    let mut width = default_width.unwrap_or(DEFAULT_WIDTH);
    let mut blocks: Vec<(usize, &str, Vec<(usize, &str)>)> = Vec::new();
    for &(lineno, raw) in &lines {
        let code = raw.split('#').next().unwrap_or("").trim();
        let words: Vec<&str> = code.split_whitespace().collect();
        match (words.as_slice(), blocks.last_mut()) {
            (["function", name], _) => blocks.push((lineno, name, Vec::new())),
            (["function", ..], _) => {
                return Err(ParseError::syntax(lineno, "expected `function <name>`"))
            }
            (_, Some((_, _, body))) => body.push((lineno, raw)),
            ([], None) => {}
            (["width", w], None) => {
                width = parse_uint(w)
                    .filter(|v| (1..=64).contains(v))
                    .ok_or_else(|| ParseError::syntax(lineno, format!("invalid width `{w}`")))?
                    as u32;
            }
            (_, None) => {
                return Err(ParseError::syntax(lineno, "statement outside of a function"));
            }
        }
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out = Vec::with_capacity(blocks.len());
    for (lineno, name, body) in blocks {
        if let Some(prev) = seen.insert(name, lineno) {
            return Err(ParseError::syntax(
                lineno,
                format!("function `{name}` already defined on line {prev}"),
            ));
        }
        let ddg = parse_lines(body, width)?;
        let f = CandidateInstruction::new(name, ddg)
            .map_err(|e| ParseError::syntax(lineno, e.to_string()))?;
        out.push(f);
    }
    Ok(out)
}

/// Inverse of [`parse_functions`].
pub fn functions_to_text(fs: &[CandidateInstruction]) -> String {
    let mut out = String::new();
    for (k, f) in fs.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&f.to_text());
    }
    out
}

/// Candidate name → position, for reports.
pub fn name_index(fs: &[CandidateInstruction]) -> BTreeMap<&str, usize> {
    fs.iter().enumerate().map(|(k, f)| (f.name(), k)).collect()
}

/// `f(p0, p1, ...)` with parameter names; handy in diagnostics.
pub fn signature(f: &CandidateInstruction) -> String {
    let mut s = format!("{}(", f.name);
    for (k, &i) in f.body.inputs().iter().enumerate() {
        if k > 0 {
            s.push_str(", ");
        }
        write!(s, "{}", f.body.name(i)).unwrap();
    }
    s.push(')');
    s
}
