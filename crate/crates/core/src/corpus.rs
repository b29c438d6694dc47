//! The bundled example graphs and candidate sets.

use rand::Rng;

use crate::candidate::{parse_functions, CandidateInstruction};
use crate::ir::{mask, parse_ddg, Ddg, DdgBuilder, OpKind};

macro_rules! corpus_file {
    ($path:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/", $path))
    };
}

/// `(name, text)` of every bundled DDG.
pub const DDGS: [(&str, &str); 7] = [
    ("d1", corpus_file!("d1.ddg")),
    ("ci19", corpus_file!("ci19.ddg")),
    ("chain", corpus_file!("chain.ddg")),
    ("diamond", corpus_file!("diamond.ddg")),
    ("chained_common", corpus_file!("chained_common.ddg")),
    ("magma_round", corpus_file!("magma_round.ddg")),
    ("aes_round", corpus_file!("aes_round.ddg")),
];

/// The five ray casting kernels over ring integers, in file order
/// `imadd, i2madd, i3madd, idot, immul`.
pub const RAYCAST: [(&str, &str); 5] = [
    ("imadd", corpus_file!("raycast/imadd.fn")),
    ("i2madd", corpus_file!("raycast/i2madd.fn")),
    ("i3madd", corpus_file!("raycast/i3madd.fn")),
    ("idot", corpus_file!("raycast/idot.fn")),
    ("immul", corpus_file!("raycast/immul.fn")),
];

pub const MAGMA_CI: &str = corpus_file!("magma_ci.fn");

pub fn ddg(name: &str) -> Option<Ddg> {
    DDGS.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_ddg(text).expect("bundled graphs parse"))
}

pub fn ddgs() -> Vec<(&'static str, Ddg)> {
    DDGS.iter()
        .map(|(n, text)| (*n, parse_ddg(text).expect("bundled graphs parse")))
        .collect()
}

pub fn raycast() -> Vec<CandidateInstruction> {
    RAYCAST
        .iter()
        .flat_map(|(_, text)| parse_functions(text, None).expect("bundled functions parse"))
        .collect()
}

pub fn magma_ci() -> Vec<CandidateInstruction> {
    parse_functions(MAGMA_CI, None).expect("bundled functions parse")
}

/// A random graph with `ops` operation nodes over one to four inputs and up
/// to two constants. Operands favour recent nodes so that chains and shared
/// values both occur. Operations nothing uses are outputs, and any other
/// operation is one with probability 1/5.
pub fn random_ddg<R: Rng>(rng: &mut R, ops: usize, width: u32) -> Ddg {
    let mut b = DdgBuilder::new(width);
    let mut names: Vec<String> = Vec::new();
    for i in 0..rng.gen_range(1..=4) {
        names.push(format!("x{i}"));
        b.input(format!("x{i}"));
    }
    for i in 0..rng.gen_range(0..=2) {
        let v = if rng.gen_bool(0.5) { rng.gen_range(0..8) } else { rng.gen::<u64>() & mask(width) };
        names.push(format!("k{i}"));
        b.constant(format!("k{i}"), v);
    }
    let first_op = names.len();
    let mut used = vec![false; first_op + ops];
    for i in 0..ops {
        let kind = OpKind::ALL[rng.gen_range(0..OpKind::ALL.len())];
        let operands: Vec<usize> = (0..kind.arity())
            .map(|_| {
                let n = names.len();
                if rng.gen_bool(0.6) {
                    rng.gen_range(n.saturating_sub(3)..n)
                } else {
                    rng.gen_range(0..n)
                }
            })
            .collect();
        for &o in &operands {
            used[o] = true;
        }
        let name = format!("t{i}");
        b.op(name.clone(), kind, operands.iter().map(|&o| names[o].clone()));
        names.push(name);
    }
    for (i, name) in names.iter().enumerate().skip(first_op) {
        if !used[i] || rng.gen_ratio(1, 5) {
            b.output(name.clone());
        }
    }
    b.build().expect("generated graphs are well formed")
}
