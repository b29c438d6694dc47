//! SMT-LIB2 (QF_BV) client for an external solver process, plus an
//! exhaustive stand-in for tiny queries.
//!
//! Every query runs in a fresh solver process; nothing is kept between
//! calls.

mod brute;
mod sexpr;

pub use brute::{brute_check, MAX_BRUTE_BITS};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

/// Environment variable naming the solver command line.
pub const SOLVER_ENV: &str = "ISEXT_SMT_CMD";
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("solver command `{cmd}` could not be started: {source}")]
    Missing {
        cmd: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse solver response: {0}")]
    Protocol(String),
    #[error("invalid solver session: {0}")]
    InvalidSession(String),
    #[error("{bits} unknown bits is too many to enumerate (limit {MAX_BRUTE_BITS})")]
    TooLarge { bits: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    SolverError(String),
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::Timeout => f.write_str("timeout"),
            UnknownReason::SolverError(m) => write!(f, "solver error: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverVerdict {
    /// Values of the requested unknowns.
    Sat(BTreeMap<String, u64>),
    Unsat,
    Unknown(UnknownReason),
}

impl SolverVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolverVerdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolverVerdict::Unsat)
    }
}

/// How to reach a solver: command line, per-query timeout and an optional
/// file that every script and response is appended to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverSession {
    cmd: Vec<String>,
    timeout: Duration,
    transcript: Option<PathBuf>,
}

impl SolverSession {
    pub fn new(cmd: Vec<String>, timeout_ms: u64) -> Result<Self, SmtError> {
        if cmd.is_empty() || cmd[0].is_empty() {
            return Err(SmtError::InvalidSession("empty solver command".into()));
        }
        if timeout_ms == 0 {
            return Err(SmtError::InvalidSession("timeout must be positive".into()));
        }
        Ok(SolverSession {
            cmd,
            timeout: Duration::from_millis(timeout_ms),
            transcript: None,
        })
    }

    /// Splits `cmdline` on whitespace.
    pub fn from_command_line(cmdline: &str, timeout_ms: u64) -> Result<Self, SmtError> {
        SolverSession::new(cmdline.split_whitespace().map(String::from).collect(), timeout_ms)
    }

    /// `ISEXT_SMT_CMD` if set, else `z3 -in` when a `z3` binary answers.
    pub fn discover(timeout_ms: u64) -> Option<Self> {
        if let Ok(cmd) = std::env::var(SOLVER_ENV) {
            return SolverSession::from_command_line(&cmd, timeout_ms).ok();
        }
        let z3 = Command::new("z3")
            .arg("-version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
        match z3 {
            Ok(s) if s.success() => SolverSession::from_command_line("z3 -in", timeout_ms).ok(),
            _ => None,
        }
    }

    pub fn with_transcript(mut self, path: impl Into<PathBuf>) -> Self {
        self.transcript = Some(path.into());
        self
    }

    pub fn command(&self) -> &[String] {
        &self.cmd
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn transcript(&self) -> Option<&Path> {
        self.transcript.as_deref()
    }
}

/// Bitvector literal of `width` bits: hexadecimal when the width is a
/// multiple of four, binary otherwise.
pub fn literal(value: u64, width: u32) -> String {
    let v = value & crate::ir::mask(width);
    if width % 4 == 0 {
        format!("#x{:0w$x}", v, w = (width / 4) as usize)
    } else {
        format!("#b{:0w$b}", v, w = width as usize)
    }
}

/// The script sent to the solver.
pub fn script(decls: &[(String, u32)], assertions: &[String], wanted: &[String]) -> String {
    let mut s = String::from("(set-option :produce-models true)\n(set-logic QF_BV)\n");
    for (name, w) in decls {
        writeln!(s, "(declare-const {name} (_ BitVec {w}))").unwrap();
    }
    for a in assertions {
        writeln!(s, "(assert {a})").unwrap();
    }
    s.push_str("(check-sat)\n");
    if !wanted.is_empty() {
        writeln!(s, "(get-value ({}))", wanted.join(" ")).unwrap();
    }
    s
}

/// Runs one query in a fresh solver process.
pub fn check(
    sess: &SolverSession,
    decls: &[(String, u32)],
    assertions: &[String],
    wanted: &[String],
) -> Result<SolverVerdict, SmtError> {
    let text = script(decls, assertions, wanted);
    let mut child = Command::new(&sess.cmd[0])
        .args(&sess.cmd[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SmtError::Missing {
            cmd: sess.cmd.join(" "),
            source,
        })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    // A solver that dies early closes its end; the verdict then comes from
    // whatever it printed.
    let input = text.clone();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });

    let deadline = Instant::now() + sess.timeout;
    let mut timed_out = false;
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            timed_out = true;
            break;
        }
        std::thread::sleep(Duration::from_millis(1));
    }
    let response = out_reader
        .join()
        .map_err(|_| SmtError::Protocol("reader thread panicked".into()))??;
    let errors = err_reader.join().unwrap_or_default();
    let _ = writer.join();

    if let Some(path) = &sess.transcript {
        let mut log = format!(";; ---- query\n{text};; ---- response\n{response}");
        if timed_out {
            log.push_str(";; timeout\n");
        }
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?
            .write_all(log.as_bytes())?;
    }
    if timed_out {
        return Ok(SolverVerdict::Unknown(UnknownReason::Timeout));
    }
    let verdict = parse_response(&response, wanted);
    log::trace!("solver answered {verdict:?}");
    match verdict {
        Err(SmtError::Protocol(m)) if response.trim().is_empty() => Ok(SolverVerdict::Unknown(
            UnknownReason::SolverError(format!("{m}; stderr: {}", errors.trim())),
        )),
        v => v,
    }
}

fn error_message(e: &sexpr::Sexp) -> Option<String> {
    match e {
        sexpr::Sexp::List(items) if items.first() == Some(&sexpr::Sexp::Atom("error".into())) => {
            Some(match items.get(1) {
                Some(sexpr::Sexp::Atom(m)) => m.trim_matches('"').to_string(),
                _ => "error".into(),
            })
        }
        _ => None,
    }
}

pub(crate) fn parse_response(response: &str, wanted: &[String]) -> Result<SolverVerdict, SmtError> {
    let items = sexpr::parse_all(response).map_err(SmtError::Protocol)?;
    let mut rest = items.iter();
    let status = loop {
        match rest.next() {
            None => return Err(SmtError::Protocol("no check-sat answer".into())),
            Some(sexpr::Sexp::Atom(a)) if a == "success" => continue,
            Some(sexpr::Sexp::Atom(a)) => break a.as_str(),
            Some(e) => {
                let msg = error_message(e).ok_or_else(|| SmtError::Protocol(format!("unexpected {e:?}")))?;
                return Ok(SolverVerdict::Unknown(UnknownReason::SolverError(msg)));
            }
        }
    };
    match status {
        "unsat" => Ok(SolverVerdict::Unsat),
        "unknown" => Ok(SolverVerdict::Unknown(UnknownReason::SolverError(
            "solver answered unknown".into(),
        ))),
        "sat" if wanted.is_empty() => Ok(SolverVerdict::Sat(BTreeMap::new())),
        "sat" => {
            let answer = rest
                .next()
                .ok_or_else(|| SmtError::Protocol("sat without get-value answer".into()))?;
            if let Some(msg) = error_message(answer) {
                return Ok(SolverVerdict::Unknown(UnknownReason::SolverError(msg)));
            }
            let model = sexpr::bindings(answer).map_err(SmtError::Protocol)?;
            if let Some(missing) = wanted.iter().find(|w| !model.contains_key(*w)) {
                return Err(SmtError::Protocol(format!("no value for `{missing}`")));
            }
            Ok(SolverVerdict::Sat(model))
        }
        other => Err(SmtError::Protocol(format!("unexpected answer `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn literals() {
        assert_eq!(literal(255, 8), "#xff");
        assert_eq!(literal(255, 32), "#x000000ff");
        assert_eq!(literal(5, 3), "#b101");
        assert_eq!(literal(0x1f, 4), "#xf");
    }

    #[test]
    fn script_shape() {
        let s = script(
            &[("x".into(), 8), ("y".into(), 8)],
            &names(&["(= x #x2a)"]),
            &names(&["x", "y"]),
        );
        assert_eq!(
            s,
            "(set-option :produce-models true)\n(set-logic QF_BV)\n\
             (declare-const x (_ BitVec 8))\n(declare-const y (_ BitVec 8))\n\
             (assert (= x #x2a))\n(check-sat)\n(get-value (x y))\n"
        );
        assert!(!script(&[], &[], &[]).contains("get-value"));
    }

    #[test]
    fn responses() {
        let w = names(&["x"]);
        assert_eq!(parse_response("unsat\n", &w).unwrap(), SolverVerdict::Unsat);
        let sat = parse_response("sat\n((x #x2a))\n", &w).unwrap();
        assert_eq!(sat, SolverVerdict::Sat([("x".to_string(), 42)].into()));
        assert_eq!(
            parse_response("sat\n((x (_ bv42 8)))", &w).unwrap(),
            SolverVerdict::Sat([("x".to_string(), 42)].into())
        );
        assert!(matches!(
            parse_response("(error \"bad term\")\nsat\n((x #x00))", &w).unwrap(),
            SolverVerdict::Unknown(UnknownReason::SolverError(_))
        ));
        assert!(matches!(
            parse_response("unknown\n", &w).unwrap(),
            SolverVerdict::Unknown(_)
        ));
        assert!(parse_response("sat\n((y #x00))", &w).is_err());
        assert!(parse_response("", &w).is_err());
        // get-value after unsat is an error the solver reports; ignore it
        assert_eq!(
            parse_response("unsat\n(error \"model is not available\")", &w).unwrap(),
            SolverVerdict::Unsat
        );
    }

    #[test]
    fn session_validation() {
        assert!(SolverSession::new(vec![], 10).is_err());
        assert!(SolverSession::from_command_line("z3 -in", 0).is_err());
        let s = SolverSession::from_command_line("z3  -in ", 5).unwrap();
        assert_eq!(s.command(), ["z3", "-in"]);
    }

    #[test]
    fn missing_solver() {
        let s = SolverSession::from_command_line("/nonexistent/solver-binary", 1000).unwrap();
        assert!(matches!(check(&s, &[], &[], &[]), Err(SmtError::Missing { .. })));
    }

    #[test]
    fn timeout_reported_as_unknown() {
        let s = SolverSession::from_command_line("sleep 5", 50).unwrap();
        let t = Instant::now();
        assert_eq!(
            check(&s, &[], &[], &[]).unwrap(),
            SolverVerdict::Unknown(UnknownReason::Timeout)
        );
        assert!(t.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn canned_solver_via_shell() {
        let s = SolverSession::new(
            names(&["sh", "-c", "cat > /dev/null; printf 'sat\\n((x #x2a))\\n'"]),
            5000,
        )
        .unwrap();
        let v = check(&s, &[("x".into(), 8)], &names(&["(= x #x2a)"]), &names(&["x"])).unwrap();
        assert_eq!(v, SolverVerdict::Sat([("x".to_string(), 42)].into()));
    }
}
