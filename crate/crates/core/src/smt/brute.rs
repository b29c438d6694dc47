use std::collections::BTreeMap;

use super::{SmtError, SolverVerdict};
use crate::ir::mask;

/// Largest number of unknown bits [`brute_check`] will enumerate.
pub const MAX_BRUTE_BITS: u32 = 20;

/// Exhaustive counterpart of [`super::check`]. Assertions are predicates
/// over the values of `decls`, in declaration order. The first satisfying
/// assignment in counting order (first declaration least significant) is
/// reported.
pub fn brute_check(
    decls: &[(String, u32)],
    predicates: &[&dyn Fn(&[u64]) -> bool],
    wanted: &[String],
) -> Result<SolverVerdict, SmtError> {
    let bits: u32 = decls.iter().map(|(_, w)| *w).sum();
    if bits > MAX_BRUTE_BITS {
        return Err(SmtError::TooLarge { bits });
    }
    let mut values = vec![0u64; decls.len()];
    for code in 0u64..(1u64 << bits) {
        let mut rest = code;
        for (v, (_, w)) in values.iter_mut().zip(decls) {
            *v = rest & mask(*w);
            rest >>= *w;
        }
        if predicates.iter().all(|p| p(&values)) {
            let mut model = BTreeMap::new();
            for name in wanted {
                let k = decls
                    .iter()
                    .position(|(n, _)| n == name)
                    .ok_or_else(|| SmtError::Protocol(format!("`{name}` is not declared")))?;
                model.insert(name.clone(), values[k]);
            }
            return Ok(SolverVerdict::Sat(model));
        }
    }
    Ok(SolverVerdict::Unsat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(name: &str, w: u32) -> (String, u32) {
        (name.to_string(), w)
    }

    #[test]
    fn forced_model() {
        let v = brute_check(&[d("x", 4)], &[&|v: &[u64]| v[0] == 10], &["x".into()]).unwrap();
        assert_eq!(v, SolverVerdict::Sat([("x".to_string(), 10)].into()));
    }

    #[test]
    fn no_constant_turns_and_into_increment() {
        // exists c. forall x. x & c == x + 1 at 4 bits
        let p = |v: &[u64]| (0..16).all(|x| x & v[0] == (x + 1) & 15);
        assert_eq!(brute_check(&[d("c", 4)], &[&p], &[]).unwrap(), SolverVerdict::Unsat);
    }

    #[test]
    fn additive_identity() {
        let p = |v: &[u64]| (0..16).all(|x| (x + v[0]) & 15 == x);
        let v = brute_check(&[d("c", 4)], &[&p], &["c".into()]).unwrap();
        assert_eq!(v, SolverVerdict::Sat([("c".to_string(), 0)].into()));
    }

    #[test]
    fn limits() {
        assert!(matches!(
            brute_check(&[d("x", 16), d("y", 8)], &[], &[]),
            Err(SmtError::TooLarge { bits: 24 })
        ));
        assert!(brute_check(&[d("x", 2)], &[], &["y".into()]).is_err());
        assert!(brute_check(&[], &[], &[]).unwrap().is_sat());
    }
}
