//! Just enough s-expression reading for solver responses.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                tokens.push(c.to_string());
                chars.next();
            }
            '"' => {
                let mut s = String::from('"');
                chars.next();
                loop {
                    match chars.next() {
                        Some('"') if chars.peek() == Some(&'"') => {
                            s.push('"');
                            chars.next();
                        }
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated string literal".into()),
                    }
                }
                s.push('"');
                tokens.push(s);
            }
            '|' => {
                let mut s = String::new();
                chars.next();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated quoted symbol".into()),
                    }
                }
                tokens.push(s);
            }
            ';' => {
                while chars.next().is_some_and(|c| c != '\n') {}
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                tokens.push(s);
            }
        }
    }
    Ok(tokens)
}

/// Reads every top-level expression in `text`.
pub(crate) fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let list = stack.pop().filter(|_| !stack.is_empty());
                let list = list.ok_or("unbalanced `)`")?;
                stack.last_mut().expect("outer level").push(Sexp::List(list));
            }
            _ => stack.last_mut().expect("outer level").push(Sexp::Atom(t)),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("outer level"))
}

/// Value of a bitvector numeral: `#x..`, `#b..` or `(_ bvN W)`.
pub(crate) fn bv_value(e: &Sexp) -> Result<u64, String> {
    let too_big = || format!("numeral does not fit 64 bits: {e:?}");
    match e {
        Sexp::Atom(a) => {
            if let Some(h) = a.strip_prefix("#x") {
                if h.trim_start_matches('0').len() > 16 {
                    return Err(too_big());
                }
                u64::from_str_radix(h, 16).map_err(|_| format!("bad hex numeral `{a}`"))
            } else if let Some(b) = a.strip_prefix("#b") {
                if b.trim_start_matches('0').len() > 64 {
                    return Err(too_big());
                }
                u64::from_str_radix(b, 2).map_err(|_| format!("bad binary numeral `{a}`"))
            } else {
                Err(format!("not a bitvector numeral: `{a}`"))
            }
        }
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(u), Sexp::Atom(bv), Sexp::Atom(_w)] if u == "_" && bv.starts_with("bv") => {
                bv[2..].parse().map_err(|_| too_big())
            }
            _ => Err(format!("not a bitvector numeral: {e:?}")),
        },
    }
}

/// Bindings of a `get-value` answer `((name value) ...)`.
pub(crate) fn bindings(e: &Sexp) -> Result<BTreeMap<String, u64>, String> {
    let Sexp::List(pairs) = e else {
        return Err("get-value answer is not a list".into());
    };
    let mut out = BTreeMap::new();
    for p in pairs {
        match p {
            Sexp::List(kv) if kv.len() == 2 => {
                let Sexp::Atom(name) = &kv[0] else {
                    return Err("binding name is not a symbol".into());
                };
                out.insert(name.clone(), bv_value(&kv[1])?);
            }
            _ => return Err(format!("malformed binding {p:?}")),
        }
    }
    Ok(out)
}
