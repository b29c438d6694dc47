use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ir::parse::parse_uint;

/// One argument position of the subsuming function: either a parameter of
/// the subsumed function (zero-based) or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Arg(usize),
    Const(u64),
}

impl fmt::Display for Slot {
    /// `x<j>` with `j` one-based, or `0x<hex>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Arg(j) => write!(f, "x{}", j + 1),
            Slot::Const(c) => write!(f, "{c:#x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("{slots} slots cannot cover {args} arguments")]
    TooFewSlots { slots: usize, args: usize },
    #[error("argument x{0} is not used by any slot")]
    Uncovered(usize),
    #[error("slot refers to x{0}, beyond the {1} arguments")]
    OutOfRange(usize, usize),
    #[error("invalid slot `{0}`")]
    Syntax(String),
}

/// How to fill the `n` arguments of `f` from the `m` arguments of `g`
/// (and constants) so that `f` computes `g`. Every argument of `g` is used
/// at least once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    slots: Vec<Slot>,
    args: usize,
}

impl Witness {
    pub fn new(slots: Vec<Slot>, args: usize) -> Result<Self, WitnessError> {
        if slots.len() < args {
            return Err(WitnessError::TooFewSlots {
                slots: slots.len(),
                args,
            });
        }
        let mut used = vec![false; args];
        for s in &slots {
            if let Slot::Arg(j) = *s {
                if j >= args {
                    return Err(WitnessError::OutOfRange(j + 1, args));
                }
                used[j] = true;
            }
        }
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(WitnessError::Uncovered(j + 1));
        }
        Ok(Witness { slots, args })
    }

    /// `f(x1, ..., xm)`.
    pub fn identity(m: usize) -> Self {
        Witness {
            slots: (0..m).map(Slot::Arg).collect(),
            args: m,
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Arity of the subsumed function.
    pub fn args(&self) -> usize {
        self.args
    }

    /// Arguments for the subsuming function given those of the subsumed one.
    pub fn apply(&self, x: &[u64]) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.slots.len());
        self.apply_into(x, &mut v);
        v
    }

    pub fn apply_into(&self, x: &[u64], v: &mut Vec<u64>) {
        v.clear();
        v.extend(self.slots.iter().map(|s| match *s {
            Slot::Arg(j) => x[j],
            Slot::Const(c) => c,
        }));
    }

    /// Given `self` for `f ⊒ g` and `inner` for `g ⊒ h`, a witness for
    /// `f ⊒ h`.
    pub fn compose(&self, inner: &Witness) -> Witness {
        assert_eq!(self.args, inner.slots.len(), "witnesses do not chain");
        let slots = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Arg(j) => inner.slots[j],
                c => c,
            })
            .collect();
        Witness::new(slots, inner.args).expect("composition preserves coverage")
    }

    /// Parses the space-separated form produced by `Display`.
    pub fn parse(text: &str, args: usize) -> Result<Self, WitnessError> {
        let slots = text
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Slot>, _>>()?;
        Witness::new(slots, args)
    }
}

impl FromStr for Slot {
    type Err = WitnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WitnessError::Syntax(s.to_string());
        if let Some(j) = s.strip_prefix('x') {
            let j: usize = j.parse().map_err(|_| bad())?;
            if j == 0 {
                return Err(bad());
            }
            Ok(Slot::Arg(j - 1))
        } else if s.starts_with("0x") {
            parse_uint(s).map(Slot::Const).ok_or_else(bad)
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.slots.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Counterexample inputs gathered by the synthesis loop, without
/// duplicates. `outputs` holds the value the rejected witness produced,
/// for information only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestSet {
    inputs: Vec<Vec<u64>>,
    outputs: Vec<Option<u64>>,
    seen: HashSet<Vec<u64>>,
}

impl TestSet {
    pub fn new() -> Self {
        TestSet::default()
    }

    /// False if `x` was already present.
    pub fn insert(&mut self, x: Vec<u64>, y: Option<u64>) -> bool {
        if !self.seen.insert(x.clone()) {
            return false;
        }
        self.inputs.push(x);
        self.outputs.push(y);
        true
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        self.seen.contains(x)
    }

    pub fn inputs(&self) -> &[Vec<u64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Option<u64>] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        assert!(Witness::new(vec![Slot::Arg(0)], 2).is_err());
        assert_eq!(
            Witness::new(vec![Slot::Arg(0), Slot::Const(3)], 2),
            Err(WitnessError::Uncovered(2))
        );
        assert!(Witness::new(vec![Slot::Arg(2), Slot::Arg(0)], 2).is_err());
        let w = Witness::new(vec![Slot::Arg(1), Slot::Const(0), Slot::Arg(0)], 2).unwrap();
        assert_eq!(w.apply(&[7, 9]), [9, 0, 7]);
    }

    #[test]
    fn text_round_trip() {
        let w = Witness::new(
            vec![Slot::Arg(0), Slot::Arg(1), Slot::Const(0), Slot::Arg(2)],
            3,
        )
        .unwrap();
        assert_eq!(w.to_string(), "x1 x2 0x0 x3");
        assert_eq!(Witness::parse("x1 x2 0x0 x3", 3).unwrap(), w);
        assert_eq!(Witness::parse("0xff x1", 1).unwrap().slots()[0], Slot::Const(255));
        for bad in ["x0", "y1", "12", "x1 x"] {
            assert!(Witness::parse(bad, 1).is_err(), "{bad}");
        }
    }

    #[test]
    fn composition() {
        // f(a,b,c) ⊒ g(p,q) via f(q, 1, p); g(p,q) ⊒ h(z) via g(z, z)
        let fg = Witness::parse("x2 0x1 x1", 2).unwrap();
        let gh = Witness::parse("x1 x1", 1).unwrap();
        assert_eq!(fg.compose(&gh).to_string(), "x1 0x1 x1");
        let gh = Witness::parse("0x5 x1", 1).unwrap();
        assert_eq!(fg.compose(&gh).to_string(), "x1 0x1 0x5");
    }

    #[test]
    fn test_set_dedup() {
        let mut t = TestSet::new();
        assert!(t.insert(vec![1, 2], None));
        assert!(!t.insert(vec![1, 2], Some(3)));
        assert!(t.insert(vec![2, 1], Some(3)));
        assert_eq!(t.len(), 2);
        assert!(t.contains(&[2, 1]));
    }
}
