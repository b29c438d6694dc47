use std::fmt;
use std::str::FromStr;

use super::mask;

/// Operation vocabulary of DDG nodes.
///
/// Arithmetic wraps modulo `2^W`. Shifts by an amount `>= W` give zero
/// (`shl`, `shrl`) or the sign fill (`shra`); rotate amounts are reduced
/// modulo `W`. `load` reads memory and may not appear inside a cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Not,
    Shl,
    Shrl,
    Shra,
    Rotl,
    Rotr,
    Load,
}

impl OpKind {
    pub const ALL: [OpKind; 13] = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::And,
        OpKind::Or,
        OpKind::Xor,
        OpKind::Not,
        OpKind::Shl,
        OpKind::Shrl,
        OpKind::Shra,
        OpKind::Rotl,
        OpKind::Rotr,
        OpKind::Load,
    ];

    pub fn arity(self) -> usize {
        match self {
            OpKind::Not | OpKind::Load => 1,
            _ => 2,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::And => "and",
            OpKind::Or => "or",
            OpKind::Xor => "xor",
            OpKind::Not => "not",
            OpKind::Shl => "shl",
            OpKind::Shrl => "shrl",
            OpKind::Shra => "shra",
            OpKind::Rotl => "rotl",
            OpKind::Rotr => "rotr",
            OpKind::Load => "load",
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            OpKind::Add | OpKind::Mul | OpKind::And | OpKind::Or | OpKind::Xor
        )
    }

    /// Evaluates a pure operation. `args` must hold `arity()` values already
    /// reduced to `width` bits.
    ///
    /// # Panics
    /// On `Load`, which has no pure semantics.
    pub fn apply(self, width: u32, args: &[u64]) -> u64 {
        let m = mask(width);
        let a = args[0];
        let b = || args[1];
        let w = width as u64;
        let r = match self {
            OpKind::Add => a.wrapping_add(b()),
            OpKind::Sub => a.wrapping_sub(b()),
            OpKind::Mul => a.wrapping_mul(b()),
            OpKind::And => a & b(),
            OpKind::Or => a | b(),
            OpKind::Xor => a ^ b(),
            OpKind::Not => !a,
            OpKind::Shl => {
                if b() >= w {
                    0
                } else {
                    a << b()
                }
            }
            OpKind::Shrl => {
                if b() >= w {
                    0
                } else {
                    a >> b()
                }
            }
            OpKind::Shra => {
                let sign = (a >> (width - 1)) & 1 == 1;
                if b() >= w {
                    if sign {
                        m
                    } else {
                        0
                    }
                } else {
                    let shifted = a >> b();
                    if sign {
                        shifted | (m & !(m >> b()))
                    } else {
                        shifted
                    }
                }
            }
            OpKind::Rotl => {
                let s = b() % w;
                if s == 0 {
                    a
                } else {
                    (a << s) | (a >> (w - s))
                }
            }
            OpKind::Rotr => {
                let s = b() % w;
                if s == 0 {
                    a
                } else {
                    (a >> s) | (a << (w - s))
                }
            }
            OpKind::Load => panic!("load has no pure semantics"),
        };
        r & m
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .into_iter()
            .find(|op| op.mnemonic() == s)
            .ok_or_else(|| format!("unknown operation `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_wraps() {
        assert_eq!(OpKind::Add.apply(32, &[u32::MAX as u64, 1]), 0);
        assert_eq!(OpKind::Sub.apply(8, &[0, 1]), 0xff);
    }

    #[test]
    fn exhaustive_modular_add_at_width_4() {
        for x in 0..16u64 {
            for y in 0..16u64 {
                assert_eq!(OpKind::Add.apply(4, &[x, y]), (x + y) % 16);
                assert_eq!(OpKind::Mul.apply(4, &[x, y]), (x * y) % 16);
            }
        }
    }

    #[test]
    fn oversized_shifts() {
        assert_eq!(OpKind::Shl.apply(8, &[0xff, 8]), 0);
        assert_eq!(OpKind::Shrl.apply(8, &[0xff, 200]), 0);
        assert_eq!(OpKind::Shra.apply(8, &[0x80, 9]), 0xff);
        assert_eq!(OpKind::Shra.apply(8, &[0x40, 9]), 0);
        assert_eq!(OpKind::Shra.apply(8, &[0x80, 3]), 0xf0);
        assert_eq!(OpKind::Shra.apply(8, &[0x80, 0]), 0x80);
    }

    #[test]
    fn rotates_reduce_amount() {
        assert_eq!(OpKind::Rotl.apply(8, &[0x81, 1]), 0x03);
        assert_eq!(OpKind::Rotl.apply(8, &[0x81, 9]), 0x03);
        assert_eq!(OpKind::Rotr.apply(8, &[0x81, 1]), 0xc0);
        assert_eq!(OpKind::Rotl.apply(32, &[0x1234_5678, 32]), 0x1234_5678);
    }

    #[test]
    fn shra_matches_signed_shift_exhaustively() {
        for x in 0..=255u64 {
            for s in 0..8u64 {
                let expect = ((x as u8 as i8) >> s) as u8 as u64;
                assert_eq!(OpKind::Shra.apply(8, &[x, s]), expect, "{x} >> {s}");
            }
        }
    }

    #[test]
    fn mnemonics_round_trip() {
        for op in OpKind::ALL {
            assert_eq!(op.mnemonic().parse::<OpKind>().unwrap(), op);
        }
        assert!("fma".parse::<OpKind>().is_err());
    }
}
