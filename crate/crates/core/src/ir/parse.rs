//! Line-oriented textual IR.
//!
//! ```text
//! width 8            # optional, at most once
//! input x
//! k = const 0xff
//! n1 = and x k
//! output n1
//! ```

use std::collections::HashMap;

use thiserror::Error;

use super::{Ddg, DdgBuilder, GraphError, OpKind, DEFAULT_WIDTH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }
}

pub fn parse_ddg(text: &str) -> Result<Ddg, ParseError> {
    parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), DEFAULT_WIDTH)
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn parse_uint(s: &str) -> Option<u64> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else if s.chars().all(|c| c.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

/// Parses numbered lines. Used directly by the candidate-file reader, which
/// splits a file into several function bodies.
pub(crate) fn parse_lines<'a>(
    lines: impl IntoIterator<Item = (usize, &'a str)>,
    default_width: u32,
) -> Result<Ddg, ParseError> {
    let mut width: Option<(u32, usize)> = None;
    let mut defs: Vec<(usize, &str, Option<OpKind>, Option<u64>, Vec<&str>)> = Vec::new();
    let mut outputs: Vec<(usize, &str)> = Vec::new();
    let mut def_line: HashMap<&str, usize> = HashMap::new();

    for (lineno, raw) in lines {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let ident = |w: &'a str| -> Result<&'a str, ParseError> {
            if is_ident(w) {
                Ok(w)
            } else {
                Err(ParseError::syntax(lineno, format!("invalid identifier `{w}`")))
            }
        };
        match words.as_slice() {
            ["width", w] => {
                if let Some((_, first)) = width {
                    return Err(ParseError::syntax(
                        lineno,
                        format!("width already declared on line {first}"),
                    ));
                }
                let value = parse_uint(w)
                    .filter(|v| (1..=64).contains(v))
                    .ok_or_else(|| ParseError::syntax(lineno, format!("invalid width `{w}`")))?;
                width = Some((value as u32, lineno));
            }
            ["input", name] => {
                let name = ident(name)?;
                defs.push((lineno, name, None, None, Vec::new()));
            }
            ["output", name] => outputs.push((lineno, ident(name)?)),
            [name, "=", "const", value] => {
                let name = ident(name)?;
                let v = parse_uint(value).ok_or_else(|| {
                    ParseError::syntax(lineno, format!("invalid constant `{value}`"))
                })?;
                defs.push((lineno, name, None, Some(v), Vec::new()));
            }
            [name, "=", op, operands @ ..] => {
                let name = ident(name)?;
                let op: OpKind = op.parse().map_err(|e| ParseError::syntax(lineno, e))?;
                if operands.len() != op.arity() {
                    return Err(ParseError {
                        line: lineno,
                        kind: GraphError::ArityMismatch {
                            node: name.to_string(),
                            kind: op.mnemonic().to_string(),
                            expected: op.arity(),
                            found: operands.len(),
                        }
                        .into(),
                    });
                }
                let operands = operands.iter().map(|o| ident(o)).collect::<Result<_, _>>()?;
                defs.push((lineno, name, Some(op), None, operands));
            }
            _ => return Err(ParseError::syntax(lineno, format!("unrecognized statement `{line}`"))),
        }
        if let Some((l, name, ..)) = defs.last() {
            if *l == lineno {
                if let Some(prev) = def_line.insert(name, lineno) {
                    return Err(ParseError {
                        line: lineno,
                        kind: GraphError::DuplicateId(format!("{name} (first defined on line {prev})"))
                            .into(),
                    });
                }
            }
        }
    }

    for (lineno, name, _, _, operands) in &defs {
        for o in operands {
            if !def_line.contains_key(o) {
                return Err(ParseError {
                    line: *lineno,
                    kind: GraphError::UndefinedOperand {
                        node: name.to_string(),
                        operand: o.to_string(),
                    }
                    .into(),
                });
            }
        }
    }
    for (lineno, name) in &outputs {
        if !def_line.contains_key(name) {
            return Err(ParseError {
                line: *lineno,
                kind: GraphError::UnknownOutput(name.to_string()).into(),
            });
        }
    }

    let width_value = width.map(|(w, _)| w).unwrap_or(default_width);
    let mut b = DdgBuilder::new(width_value);
    for (_, name, op, value, operands) in &defs {
        match (op, value) {
            (Some(op), _) => b.op(*name, *op, operands.iter().copied()),
            (None, Some(v)) => b.constant(*name, *v),
            (None, None) => b.input(*name),
        };
    }
    for (_, name) in &outputs {
        b.output(*name);
    }
    b.build().map_err(|e| {
        let line = match &e {
            GraphError::Cycle(n) | GraphError::ConstTooWide { node: n, .. } => {
                def_line.get(n.as_str()).copied().unwrap_or(0)
            }
            GraphError::InvalidWidth(_) => width.map(|(_, l)| l).unwrap_or(0),
            _ => 0,
        };
        ParseError {
            line,
            kind: e.into(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_program() {
        let g = parse_ddg("width 8\ninput x\nn1 = not x\noutput n1").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.outputs().len(), 1);
        assert_eq!(g.width(), 8);
    }

    #[test]
    fn default_width_and_hex_constants() {
        let g = parse_ddg("input x # arg\nk = const 0xFF\nn = and x k\noutput n\n").unwrap();
        assert_eq!(g.width(), 32);
        assert_eq!(g.node(g.id("k").unwrap()).kind(), super::super::NodeKind::Const(255));
    }

    #[test]
    fn undefined_operand_reports_line() {
        let err = parse_ddg("input y\nn1 = add x y\noutput n1").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(
            err.kind,
            ParseErrorKind::Graph(GraphError::UndefinedOperand { .. })
        ));
    }

    #[test]
    fn duplicate_id() {
        let err = parse_ddg("input x\ninput x").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Graph(GraphError::DuplicateId(_))));
    }

    #[test]
    fn cycle_detected() {
        let err = parse_ddg("input x\na = add x b\nb = not a\noutput b").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Graph(GraphError::Cycle(_))));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn unknown_output() {
        let err = parse_ddg("input x\noutput y").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Graph(GraphError::UnknownOutput(_))));
    }

    #[test]
    fn syntax_errors() {
        for (src, line) in [
            ("width 8\nwidth 16", 2),
            ("width 0", 1),
            ("input 1x", 1),
            ("x = frob a b", 1),
            ("input a\nx = not a a", 2),
            ("k = const -1", 1),
            ("garbage", 1),
        ] {
            let err = parse_ddg(src).unwrap_err();
            assert_eq!(err.line, line, "{src:?}: {err}");
        }
    }

    #[test]
    fn constant_must_fit_width() {
        let err = parse_ddg("width 4\nk = const 16\noutput k").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Graph(GraphError::ConstTooWide { .. })));
    }
}
