//! Deciding whether one candidate is a special case of another.
//!
//! `f` subsumes `g` when some choice of `f`'s arguments, each either an
//! argument of `g` or a constant, makes `f` compute `g` on every input.
//! Such a choice is found by counterexample-guided synthesis: propose a
//! witness consistent with the tests so far, try to refute it, and add the
//! refuting input as a new test.

mod minimize;
mod oracle;
mod witness;

pub use minimize::{minimize_set, Minimized, PairResult, Removal};
pub use oracle::{synth, verify, BruteOracle, Oracle, SmtOracle, SynthResult, VerifyResult};
pub use witness::{Slot, TestSet, Witness, WitnessError};

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::candidate::{CandidateError, CandidateInstruction};
use crate::smt::{SmtError, UnknownReason};

pub const DEFAULT_MAX_ITERS: usize = 64;
pub const DEFAULT_SPOT_CHECKS: usize = 100_000;

#[derive(Debug, Error)]
pub enum SubsumeError {
    #[error("`{f}` has width {fw} but `{g}` has width {gw}")]
    WidthMismatch { f: String, g: String, fw: u32, gw: u32 },
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Candidate(#[from] CandidateError),
    #[error("counterexample {x:?} does not refute witness `{witness}` for {f} over {g}")]
    NoProgress {
        f: String,
        g: String,
        witness: String,
        x: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InconclusiveReason {
    Solver(UnknownReason),
    IterationLimit(usize),
}

impl std::fmt::Display for InconclusiveReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InconclusiveReason::Solver(r) => write!(f, "{r}"),
            InconclusiveReason::IterationLimit(n) => write!(f, "no answer after {n} iterations"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsumeVerdict {
    Subsumes(Witness),
    NotSubsumed,
    Inconclusive(InconclusiveReason),
}

impl SubsumeVerdict {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            SubsumeVerdict::Subsumes(w) => Some(w),
            _ => None,
        }
    }

    /// `subsumes`, `not_subsumed` or `inconclusive`.
    pub fn label(&self) -> &'static str {
        match self {
            SubsumeVerdict::Subsumes(_) => "subsumes",
            SubsumeVerdict::NotSubsumed => "not_subsumed",
            SubsumeVerdict::Inconclusive(_) => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsumeConfig {
    pub max_iters: usize,
    /// Random inputs every verified witness is checked on. Exhaustive
    /// checking replaces sampling when the input space is smaller.
    pub spot_checks: usize,
    pub seed: u64,
}

impl Default for SubsumeConfig {
    fn default() -> Self {
        SubsumeConfig {
            max_iters: DEFAULT_MAX_ITERS,
            spot_checks: DEFAULT_SPOT_CHECKS,
            seed: 0x5eed,
        }
    }
}

/// A rejected witness and the input that refuted it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refutation {
    pub witness: Witness,
    pub x: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SubsumeOutcome {
    pub verdict: SubsumeVerdict,
    /// Synthesis queries issued.
    pub iterations: usize,
    pub tests: TestSet,
    pub trace: Vec<Refutation>,
    pub elapsed: Duration,
}

fn pair_seed(seed: u64, f: &str, g: &str) -> u64 {
    // FNV-1a over both names
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in f.bytes().chain([0]).chain(g.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// An input on which `w` fails, searched exhaustively when the input space
/// has at most `budget` points and by `budget` random samples otherwise.
pub fn spot_check(
    f: &CandidateInstruction,
    g: &CandidateInstruction,
    w: &Witness,
    budget: usize,
    seed: u64,
) -> Option<Vec<u64>> {
    let m = g.arity();
    let bits = m as u64 * g.width() as u64;
    let mask = g.body().mask();
    let (mut sf, mut sg, mut v) = (Vec::new(), Vec::new(), Vec::new());
    let mut fails = |x: &[u64]| {
        w.apply_into(x, &mut v);
        f.eval_with(&v, &mut sf) != g.eval_with(x, &mut sg)
    };
    if bits < 64 && (1u64 << bits) <= budget as u64 {
        let mut x = vec![0u64; m];
        for code in 0..1u64 << bits {
            let mut rest = code;
            for xi in x.iter_mut() {
                *xi = rest & mask;
                rest = rest.checked_shr(g.width()).unwrap_or(0);
            }
            if fails(&x) {
                return Some(x);
            }
        }
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0u64; m];
    for _ in 0..budget {
        for xi in x.iter_mut() {
            *xi = rng.gen::<u64>() & mask;
        }
        if fails(&x) {
            return Some(x);
        }
    }
    None
}

/// Runs the synthesis loop for `f` over `g`.
pub fn subsume(
    f: &CandidateInstruction,
    g: &CandidateInstruction,
    oracle: &dyn Oracle,
    cfg: &SubsumeConfig,
) -> Result<SubsumeOutcome, SubsumeError> {
    if f.width() != g.width() {
        return Err(SubsumeError::WidthMismatch {
            f: f.name().into(),
            g: g.name().into(),
            fw: f.width(),
            gw: g.width(),
        });
    }
    let start = Instant::now();
    let mut out = SubsumeOutcome {
        verdict: SubsumeVerdict::NotSubsumed,
        iterations: 0,
        tests: TestSet::new(),
        trace: Vec::new(),
        elapsed: Duration::ZERO,
    };
    if f.arity() < g.arity() {
        return Ok(out);
    }
    let mut seed = pair_seed(cfg.seed, f.name(), g.name());
    let verdict = loop {
        if out.iterations == cfg.max_iters {
            break SubsumeVerdict::Inconclusive(InconclusiveReason::IterationLimit(cfg.max_iters));
        }
        out.iterations += 1;
        let w = match oracle.synth(f, g, &out.tests)? {
            SynthResult::Witness(w) => w,
            SynthResult::NoWitness => break SubsumeVerdict::NotSubsumed,
            SynthResult::Inconclusive(r) => {
                break SubsumeVerdict::Inconclusive(InconclusiveReason::Solver(r))
            }
        };
        let (x, y) = match oracle.verify(f, g, &w)? {
            VerifyResult::Valid => match spot_check(f, g, &w, cfg.spot_checks, seed) {
                None => break SubsumeVerdict::Subsumes(w),
                Some(x) => {
                    log::warn!("{} over {}: verified witness `{w}` fails on {x:?}", f.name(), g.name());
                    seed = seed.wrapping_add(1);
                    let y = f.eval(&w.apply(&x))?;
                    (x, y)
                }
            },
            VerifyResult::Counterexample { x, y } => (x, y),
            VerifyResult::Inconclusive(r) => {
                break SubsumeVerdict::Inconclusive(InconclusiveReason::Solver(r))
            }
        };
        let refutes = f.eval(&w.apply(&x))? != g.eval(&x)?;
        if !refutes || out.tests.contains(&x) {
            return Err(SubsumeError::NoProgress {
                f: f.name().into(),
                g: g.name().into(),
                witness: w.to_string(),
                x,
            });
        }
        log::debug!("{} over {}: `{w}` refuted by {x:?}", f.name(), g.name());
        out.tests.insert(x.clone(), Some(y));
        out.trace.push(Refutation { witness: w, x });
    };
    out.verdict = verdict;
    out.elapsed = start.elapsed();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate::parse_functions;

    fn fns(text: &str, width: u32) -> Vec<CandidateInstruction> {
        parse_functions(text, None)
            .unwrap()
            .iter()
            .map(|f| f.at_width(width).unwrap())
            .collect()
    }

    const CI: &str = "function ci19\ninput a\ninput b\ninput c\ninput d\nk = const 255\n\
        t1 = add a b\nt2 = shrl t1 c\nt3 = and t2 k\nt4 = add t3 d\noutput t4\n\
        function ci34\ninput a\ninput b\ninput c\nk = const 255\n\
        t1 = add a b\nt3 = and t1 k\nt4 = add t3 c\noutput t4\n";

    #[test]
    fn arity_gate() {
        let fs = fns(CI, 8);
        let out = subsume(&fs[1], &fs[0], &BruteOracle, &SubsumeConfig::default()).unwrap();
        assert_eq!(out.verdict, SubsumeVerdict::NotSubsumed);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn width_mismatch() {
        let a = fns(CI, 8);
        let b = fns(CI, 4);
        assert!(subsume(&a[0], &b[1], &BruteOracle, &SubsumeConfig::default()).is_err());
    }

    #[test]
    fn ci19_over_ci34_by_enumeration() {
        let fs = fns(CI, 4);
        let out = subsume(&fs[0], &fs[1], &BruteOracle, &SubsumeConfig::default()).unwrap();
        let w = out.verdict.witness().expect("subsumes");
        assert!(spot_check(&fs[0], &fs[1], w, 1 << 12, 0).is_none());
        for r in &out.trace {
            let v = r.witness.apply(&r.x);
            assert_ne!(fs[0].eval(&v).unwrap(), fs[1].eval(&r.x).unwrap());
        }
    }

    #[test]
    fn and_never_gives_increment() {
        let fs = fns(
            "function f\ninput a\ninput b\nr = and a b\noutput r\n\
             function g\ninput x\nk = const 1\nr = add x k\noutput r\n",
            4,
        );
        let out = subsume(&fs[0], &fs[1], &BruteOracle, &SubsumeConfig::default()).unwrap();
        assert_eq!(out.verdict, SubsumeVerdict::NotSubsumed);
        assert!(out.iterations >= 2);
    }

    #[test]
    fn reflexive() {
        for f in fns(CI, 4) {
            let out = subsume(&f, &f, &BruteOracle, &SubsumeConfig::default()).unwrap();
            assert!(out.verdict.witness().is_some());
        }
    }

    #[test]
    fn iteration_limit() {
        let fs = fns(CI, 4);
        let cfg = SubsumeConfig {
            max_iters: 1,
            ..SubsumeConfig::default()
        };
        // A single query cannot refute the first proposal and conclude.
        let out = subsume(&fs[0], &fs[1], &BruteOracle, &cfg).unwrap();
        match out.verdict {
            SubsumeVerdict::Subsumes(_) => assert!(out.trace.is_empty()),
            v => assert_eq!(v, SubsumeVerdict::Inconclusive(InconclusiveReason::IterationLimit(1))),
        }
    }

    #[test]
    fn spot_check_finds_planted_failure() {
        let fs = fns(CI, 32);
        let wrong = Witness::parse("x1 x2 0x1 x3", 3).unwrap();
        assert!(spot_check(&fs[0], &fs[1], &wrong, 1000, 7).is_some());
        let right = Witness::parse("x1 x2 0x0 x3", 3).unwrap();
        assert!(spot_check(&fs[0], &fs[1], &right, 1000, 7).is_none());
    }
}
