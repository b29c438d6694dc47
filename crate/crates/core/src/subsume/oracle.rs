//! The two queries of the synthesis loop, answered by an external solver or
//! by exhaustive enumeration.

use super::{Slot, SubsumeError, TestSet, Witness};
use crate::candidate::{emit_term, CandidateInstruction};
use crate::smt::{self, brute_check, literal, SolverSession, SolverVerdict, UnknownReason};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthResult {
    Witness(Witness),
    /// No witness agrees with the tests, so none exists at all.
    NoWitness,
    Inconclusive(UnknownReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyResult {
    Valid,
    /// Inputs on which the witness fails, and what `f` computed there.
    Counterexample { x: Vec<u64>, y: u64 },
    Inconclusive(UnknownReason),
}

pub trait Oracle: Sync {
    fn name(&self) -> &'static str;

    /// A witness consistent with every test in `tests`.
    fn synth(
        &self,
        f: &CandidateInstruction,
        g: &CandidateInstruction,
        tests: &TestSet,
    ) -> Result<SynthResult, SubsumeError>;

    /// Whether `w` makes `f` equal to `g` on every input.
    fn verify(
        &self,
        f: &CandidateInstruction,
        g: &CandidateInstruction,
        w: &Witness,
    ) -> Result<VerifyResult, SubsumeError>;
}

/// Bits of a slot selector able to index `n` choices.
pub(crate) fn selector_bits(n: usize) -> u32 {
    (usize::BITS - (n.max(2) - 1).leading_zeros()).max(1)
}

fn decode(m: usize, sel: &[u64], consts: &[u64]) -> Witness {
    let slots = sel
        .iter()
        .map(|&p| {
            let p = p as usize;
            if p < m {
                Slot::Arg(p)
            } else {
                Slot::Const(consts[p - m])
            }
        })
        .collect();
    Witness::new(slots, m).expect("selector constraints enforce coverage")
}

/// Slot selectors `p0..` index the argument vector `(x1..xm, c1..c(n-m))`.
pub struct SmtOracle {
    pub session: SolverSession,
}

impl SmtOracle {
    pub fn new(session: SolverSession) -> Self {
        SmtOracle { session }
    }
}

/// Synthesis query: unknown selectors and constants, one block of
/// constraints per test, checked once.
pub fn synth(
    f: &CandidateInstruction,
    g: &CandidateInstruction,
    tests: &TestSet,
    sess: &SolverSession,
) -> Result<SynthResult, SubsumeError> {
    let (n, m, w) = (f.arity(), g.arity(), f.width());
    let sb = selector_bits(n);
    let mut decls = Vec::new();
    let mut asserts = Vec::new();
    let mut wanted = Vec::new();
    for i in 0..n {
        let p = format!("p{i}");
        decls.push((p.clone(), sb));
        if n < 1 << sb {
            asserts.push(format!("(bvult {p} {})", literal(n as u64, sb)));
        }
        wanted.push(p);
    }
    for k in 0..n - m {
        let c = format!("c{k}");
        decls.push((c.clone(), w));
        wanted.push(c);
    }
    for j in 0..m {
        let uses: Vec<String> = (0..n)
            .map(|i| format!("(= p{i} {})", literal(j as u64, sb)))
            .collect();
        asserts.push(or(&uses));
    }
    for (t, x) in tests.inputs().iter().enumerate() {
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let vi = format!("v{t}_{i}");
            decls.push((vi.clone(), w));
            let mut sel = if n > m { format!("c{}", n - m - 1) } else { literal(x[n - 1], w) };
            for k in (0..n - 1).rev() {
                let value = if k < m { literal(x[k], w) } else { format!("c{}", k - m) };
                sel = format!("(ite (= p{i} {}) {value} {sel})", literal(k as u64, sb));
            }
            asserts.push(format!("(= {vi} {sel})"));
            v.push(vi);
        }
        let want = g.eval(x)?;
        asserts.push(format!("(= {} {})", emit_term(f, &v)?, literal(want, w)));
    }
    match smt::check(sess, &decls, &asserts, &wanted)? {
        SolverVerdict::Sat(model) => {
            let sel: Vec<u64> = (0..n).map(|i| model[&format!("p{i}")]).collect();
            let consts: Vec<u64> = (0..n - m).map(|k| model[&format!("c{k}")]).collect();
            Ok(SynthResult::Witness(decode(m, &sel, &consts)))
        }
        SolverVerdict::Unsat => Ok(SynthResult::NoWitness),
        SolverVerdict::Unknown(r) => Ok(SynthResult::Inconclusive(r)),
    }
}

/// Verification query: is there an `x` with `f(v(x)) != g(x)`?
pub fn verify(
    f: &CandidateInstruction,
    g: &CandidateInstruction,
    wit: &Witness,
    sess: &SolverSession,
) -> Result<VerifyResult, SubsumeError> {
    let (m, w) = (g.arity(), f.width());
    let xs: Vec<String> = (0..m).map(|j| format!("x{j}")).collect();
    let decls: Vec<(String, u32)> = xs.iter().map(|x| (x.clone(), w)).collect();
    let v: Vec<String> = wit
        .slots()
        .iter()
        .map(|s| match *s {
            Slot::Arg(j) => xs[j].clone(),
            Slot::Const(c) => literal(c, w),
        })
        .collect();
    let assertion = format!("(not (= {} {}))", emit_term(f, &v)?, emit_term(g, &xs)?);
    match smt::check(sess, &decls, &[assertion], &xs)? {
        SolverVerdict::Sat(model) => {
            let x: Vec<u64> = xs.iter().map(|n| model[n]).collect();
            let y = f.eval(&wit.apply(&x))?;
            Ok(VerifyResult::Counterexample { x, y })
        }
        SolverVerdict::Unsat => Ok(VerifyResult::Valid),
        SolverVerdict::Unknown(r) => Ok(VerifyResult::Inconclusive(r)),
    }
}

fn or(terms: &[String]) -> String {
    match terms {
        [] => "false".into(),
        [t] => t.clone(),
        _ => format!("(or {})", terms.join(" ")),
    }
}

impl Oracle for SmtOracle {
    fn name(&self) -> &'static str {
        "smt"
    }

    fn synth(
        &self,
        f: &CandidateInstruction,
        g: &CandidateInstruction,
        tests: &TestSet,
    ) -> Result<SynthResult, SubsumeError> {
        synth(f, g, tests, &self.session)
    }

    fn verify(
        &self,
        f: &CandidateInstruction,
        g: &CandidateInstruction,
        w: &Witness,
    ) -> Result<VerifyResult, SubsumeError> {
        verify(f, g, w, &self.session)
    }
}

/// Answers both queries by enumeration, for tiny widths. Synthesis
/// enumerates selectors and constants, verification enumerates inputs; each
/// is limited to [`smt::MAX_BRUTE_BITS`] unknown bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct BruteOracle;

impl Oracle for BruteOracle {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn synth(
        &self,
        f: &CandidateInstruction,
        g: &CandidateInstruction,
        tests: &TestSet,
    ) -> Result<SynthResult, SubsumeError> {
        let (n, m, w) = (f.arity(), g.arity(), f.width());
        let sb = selector_bits(n);
        let mut decls: Vec<(String, u32)> = (0..n).map(|i| (format!("p{i}"), sb)).collect();
        decls.extend((0..n - m).map(|k| (format!("c{k}"), w)));
        let wanted: Vec<String> = decls.iter().map(|(d, _)| d.clone()).collect();
        let expected: Vec<u64> = tests
            .inputs()
            .iter()
            .map(|x| g.eval(x))
            .collect::<Result<_, _>>()?;

        let in_range = |u: &[u64]| u[..n].iter().all(|&p| (p as usize) < n);
        let covered = |u: &[u64]| (0..m as u64).all(|j| u[..n].contains(&j));
        let agrees = |u: &[u64]| {
            let mut v = Vec::with_capacity(n);
            let mut scratch = Vec::new();
            tests.inputs().iter().zip(&expected).all(|(x, &y)| {
                v.clear();
                v.extend(u[..n].iter().map(|&p| {
                    let p = p as usize;
                    if p < m {
                        x[p]
                    } else {
                        u[n + p - m]
                    }
                }));
                f.eval_with(&v, &mut scratch) == y
            })
        };
        match brute_check(&decls, &[&in_range, &covered, &agrees], &wanted)? {
            SolverVerdict::Sat(model) => {
                let sel: Vec<u64> = (0..n).map(|i| model[&format!("p{i}")]).collect();
                let consts: Vec<u64> = (0..n - m).map(|k| model[&format!("c{k}")]).collect();
                Ok(SynthResult::Witness(decode(m, &sel, &consts)))
            }
            SolverVerdict::Unsat => Ok(SynthResult::NoWitness),
            SolverVerdict::Unknown(r) => Ok(SynthResult::Inconclusive(r)),
        }
    }

    fn verify(
        &self,
        f: &CandidateInstruction,
        g: &CandidateInstruction,
        w: &Witness,
    ) -> Result<VerifyResult, SubsumeError> {
        let decls: Vec<(String, u32)> = (0..g.arity()).map(|j| (format!("x{j}"), g.width())).collect();
        let wanted: Vec<String> = decls.iter().map(|(d, _)| d.clone()).collect();
        let differs = |x: &[u64]| {
            let mut s = Vec::new();
            f.eval_with(&w.apply(x), &mut s) != g.eval_with(x, &mut s)
        };
        match brute_check(&decls, &[&differs], &wanted)? {
            SolverVerdict::Sat(model) => {
                let x: Vec<u64> = wanted.iter().map(|n| model[n]).collect();
                let y = f.eval(&w.apply(&x))?;
                Ok(VerifyResult::Counterexample { x, y })
            }
            SolverVerdict::Unsat => Ok(VerifyResult::Valid),
            SolverVerdict::Unknown(r) => Ok(VerifyResult::Inconclusive(r)),
        }
    }
}
