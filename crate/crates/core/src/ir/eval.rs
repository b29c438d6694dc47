use std::collections::BTreeMap;

use thiserror::Error;

use super::{Ddg, NodeId, NodeKind, OpKind};

/// Source of values for `load` nodes.
pub trait Memory {
    fn load(&self, addr: u64) -> u64;
}

impl<F: Fn(u64) -> u64> Memory for F {
    fn load(&self, addr: u64) -> u64 {
        self(addr)
    }
}

/// Deterministic pseudo-random memory contents, a pure function of
/// `(seed, address)`.
#[derive(Debug, Clone, Copy)]
pub struct HashedMemory {
    pub seed: u64,
}

impl Memory for HashedMemory {
    fn load(&self, addr: u64) -> u64 {
        // splitmix64 finalizer
        let mut z = addr.wrapping_add(self.seed).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("input `{0}` is not bound")]
    UnboundInput(String),
    #[error("load `{0}` evaluated without a memory")]
    NoMemory(String),
}

/// Values of every node, indexed by `NodeId::index()`.
pub fn eval_nodes(
    g: &Ddg,
    env: &BTreeMap<NodeId, u64>,
    mem: Option<&dyn Memory>,
) -> Result<Vec<u64>, EvalError> {
    let m = g.mask();
    let mut values = vec![0u64; g.len()];
    for id in g.ids() {
        let node = g.node(id);
        values[id.index()] = match node.kind() {
            NodeKind::Input => *env
                .get(&id)
                .ok_or_else(|| EvalError::UnboundInput(node.name().to_string()))?
                & m,
            NodeKind::Const(v) => v,
            NodeKind::Op(OpKind::Load) => {
                let mem = mem.ok_or_else(|| EvalError::NoMemory(node.name().to_string()))?;
                mem.load(values[node.operands()[0].index()]) & m
            }
            NodeKind::Op(op) => {
                let args: [u64; 2] = std::array::from_fn(|k| {
                    node.operands().get(k).map_or(0, |o| values[o.index()])
                });
                op.apply(g.width(), &args[..op.arity()])
            }
        };
    }
    Ok(values)
}

/// Output values, aligned with `g.outputs()`.
pub fn eval_ddg(
    g: &Ddg,
    env: &BTreeMap<NodeId, u64>,
    mem: Option<&dyn Memory>,
) -> Result<Vec<u64>, EvalError> {
    let values = eval_nodes(g, env, mem)?;
    Ok(g.outputs().iter().map(|o| values[o.index()]).collect())
}

#[cfg(test)]
mod tests {
    use super::super::{bind_inputs, parse_ddg};
    use super::*;

    const CI19: &str = "input a\ninput b\ninput c\ninput d\nk255 = const 255\n\
        t1 = add a b\nt2 = shrl t1 c\nt3 = and t2 k255\nt4 = add t3 d\noutput t4\n";
    const CI34: &str = "input a\ninput b\ninput c\nk255 = const 255\n\
        t1 = add a b\nt3 = and t1 k255\nt4 = add t3 c\noutput t4\n";

    #[test]
    fn ci19_by_hand() {
        let g = parse_ddg(CI19).unwrap();
        let out = eval_ddg(&g, &bind_inputs(&g, &[1, 2, 0, 5]), None).unwrap();
        assert_eq!(out, vec![8]);
    }

    #[test]
    fn ci19_with_zero_shift_is_ci34() {
        use rand::{Rng, SeedableRng};
        let ci19 = parse_ddg(CI19).unwrap();
        let ci34 = parse_ddg(CI34).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let (a, b, c): (u32, u32, u32) = rng.gen();
            let (a, b, c) = (a as u64, b as u64, c as u64);
            let lhs = eval_ddg(&ci19, &bind_inputs(&ci19, &[a, b, 0, c]), None).unwrap();
            let rhs = eval_ddg(&ci34, &bind_inputs(&ci34, &[a, b, c]), None).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn wraparound() {
        let g = parse_ddg("input x\ninput y\nn = add x y\noutput n").unwrap();
        let out = eval_ddg(&g, &bind_inputs(&g, &[u32::MAX as u64, 1]), None).unwrap();
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn errors() {
        let g = parse_ddg("input x\ninput y\nn = add x y\noutput n").unwrap();
        let env = bind_inputs(&g, &[1]);
        assert!(matches!(eval_ddg(&g, &env, None), Err(EvalError::UnboundInput(n)) if n == "y"));

        let g = parse_ddg("input p\nv = load p\noutput v").unwrap();
        let env = bind_inputs(&g, &[4]);
        assert!(matches!(eval_ddg(&g, &env, None), Err(EvalError::NoMemory(_))));
        let mem = |a: u64| a * 3;
        assert_eq!(eval_ddg(&g, &env, Some(&mem)).unwrap(), vec![12]);
    }

    #[test]
    fn deterministic() {
        let g = parse_ddg(CI19).unwrap();
        let env = bind_inputs(&g, &[7, 9, 3, 1]);
        let mem = HashedMemory { seed: 1 };
        assert_eq!(
            eval_ddg(&g, &env, Some(&mem)).unwrap(),
            eval_ddg(&g, &env, Some(&mem)).unwrap()
        );
    }

    #[test]
    fn exhaustive_add_width_4() {
        let g = parse_ddg("width 4\ninput x\ninput y\nn = add x y\noutput n").unwrap();
        for x in 0..16 {
            for y in 0..16 {
                let out = eval_ddg(&g, &bind_inputs(&g, &[x, y]), None).unwrap();
                assert_eq!(out[0], (x + y) % 16);
            }
        }
    }
}
