//! Command-line driver: extraction, clustering, candidate generation,
//! subsumption and reports, separately or as one pipeline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use isext_core::candidate::{functions_to_text, parse_functions, signature};
use isext_core::report::{self, cover_csv, pairs_csv, set_csv, CoverReport, SetReport};
use isext_core::smt::{self, SmtError, SolverSession, SOLVER_ENV};
use isext_core::subsume::{minimize_set, BruteOracle, Oracle, SmtOracle, SubsumeConfig, SubsumeError};
use isext_core::{
    clone_and_combine, cluster_to_function, dedupe_structural, max_miso, parse_ddg,
    ArchConstraints, CandidateInstruction, Ddg,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_SOLVER_CMD: &str = "z3 -in";

#[derive(Debug, Parser)]
#[command(name = "isext", version, about = "Custom instruction candidate extraction and filtering")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// MaxMISO clusters and covering sizes of each DDG.
    Extract(ExtractArgs),
    /// Same as `extract --cluster`.
    Cluster(ExtractArgs),
    /// Candidate instruction functions of each DDG, deduplicated.
    Functions(ExtractArgs),
    /// Remove candidates that are special cases of others.
    Subsume(SubsumeArgs),
    /// Extraction, clustering, candidates and subsumption with all reports
    /// and a manifest.
    Pipeline(PipelineArgs),
    /// Check CSV reports and print a summary.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Override the datapath width of every input.
    #[arg(long)]
    pub width: Option<u32>,
    /// Register operand limit, a single value or a range `lo:hi`.
    #[arg(long, value_name = "K|LO:HI")]
    pub max_inputs: Option<KRange>,
    /// TOML file with default settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for output files; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave solver times out of reports.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Clone common operations into their users' clusters.
    #[arg(long, overrides_with = "no_cluster")]
    pub cluster: bool,
    #[arg(long, overrides_with = "cluster")]
    pub no_cluster: bool,
    /// DDG files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Solver command line; overrides ISEXT_SMT_CMD.
    #[arg(long)]
    pub solver_cmd: Option<String>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,
}

#[derive(Debug, Clone, Args)]
pub struct SubsumeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Name of the candidate set in reports.
    #[arg(long)]
    pub name: Option<String>,
    /// Candidate function files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, overrides_with = "no_cluster")]
    pub cluster: bool,
    #[arg(long, overrides_with = "cluster")]
    pub no_cluster: bool,
    /// DDG files or directories of `.ddg` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// CSV files or directories holding `cover.csv` and `set.csv`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Smt,
    Brute,
}

/// Inclusive range of `max_inputs` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn single(k: usize) -> Self {
        KRange { lo: k, hi: k }
    }

    pub fn iter(&self) -> RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid max-inputs `{s}`"))
        };
        let r = match s.split_once(':') {
            Some((lo, hi)) => KRange {
                lo: num(lo)?,
                hi: num(hi)?,
            },
            None => KRange::single(num(s)?),
        };
        if r.lo == 0 || r.lo > r.hi {
            return Err(format!("max-inputs range `{s}` must satisfy 1 <= lo <= hi"));
        }
        Ok(r)
    }
}

impl TryFrom<String> for KRange {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<KRange> for String {
    fn from(r: KRange) -> String {
        if r.lo == r.hi {
            r.lo.to_string()
        } else {
            format!("{}:{}", r.lo, r.hi)
        }
    }
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub width: Option<u32>,
    pub max_inputs: Option<KRange>,
    pub cluster: Option<bool>,
    pub oracle: Option<OracleKind>,
    #[serde(default)]
    pub solver: SolverFileConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverFileConfig {
    pub cmd: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_iters: Option<usize>,
}

/// Effective settings of a run, after flags, environment, config file and
/// defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineConfig {
    pub width: Option<u32>,
    pub max_inputs: KRange,
    pub cluster: bool,
    pub solver_cmd: String,
    pub timeout_ms: u64,
    pub max_iters: usize,
    pub oracle: OracleKind,
    pub inputs: Vec<PathBuf>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub timing: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0:#}")]
    Input(#[from] anyhow::Error),
    #[error("{0}")]
    SolverUnavailable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::SolverUnavailable(_) => 2,
        }
    }
}

/// Successful runs report whether any subsumption pair stayed undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStatus {
    pub inconclusive: bool,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        if self.inconclusive {
            3
        } else {
            0
        }
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("{}", path.display()))
}

fn resolve(
    common: &CommonArgs,
    solver: Option<&SolverArgs>,
    cluster: Option<bool>,
    inputs: &[PathBuf],
) -> anyhow::Result<PipelineConfig> {
    let file = load_config(common.config.as_deref())?;
    let solver_cmd = solver
        .and_then(|s| s.solver_cmd.clone())
        .or_else(|| std::env::var(SOLVER_ENV).ok())
        .or(file.solver.cmd)
        .unwrap_or_else(|| DEFAULT_SOLVER_CMD.to_string());
    let cfg = PipelineConfig {
        width: common.width.or(file.width),
        max_inputs: common.max_inputs.or(file.max_inputs).unwrap_or(KRange::single(6)),
        cluster: cluster.or(file.cluster).unwrap_or(true),
        solver_cmd,
        timeout_ms: solver
            .and_then(|s| s.timeout_ms)
            .or(file.solver.timeout_ms)
            .unwrap_or(smt::DEFAULT_TIMEOUT_MS),
        max_iters: solver
            .and_then(|s| s.max_iters)
            .or(file.solver.max_iters)
            .unwrap_or(isext_core::subsume::DEFAULT_MAX_ITERS),
        oracle: solver.and_then(|s| s.oracle).or(file.oracle).unwrap_or(OracleKind::Smt),
        inputs: inputs.to_vec(),
        out: common.out.clone(),
        timing: !common.no_timing,
    };
    if let Some(w) = cfg.width {
        if !(1..=64).contains(&w) {
            bail!("width must be between 1 and 64, got {w}");
        }
    }
    if cfg.timeout_ms == 0 {
        bail!("timeout must be positive");
    }
    if cfg.max_iters == 0 {
        bail!("max-iters must be positive");
    }
    Ok(cfg)
}

fn cluster_flag(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// A DDG file with its report name.
pub struct Loaded {
    pub name: String,
    pub path: PathBuf,
    pub text: String,
    pub ddg: Ddg,
}

fn load_ddg(path: &Path, width: Option<u32>) -> anyhow::Result<Loaded> {
    let text = read(path)?;
    let ddg = parse_ddg(&text).map_err(|e| anyhow!("{}:{}: {}", path.display(), e.line, e.kind))?;
    let ddg = match width {
        Some(w) => ddg.with_width(w).with_context(|| format!("{}", path.display()))?,
        None => ddg,
    };
    Ok(Loaded {
        name: stem(path),
        path: path.to_path_buf(),
        text,
        ddg,
    })
}

fn load_functions(path: &Path, width: Option<u32>) -> anyhow::Result<(String, Vec<CandidateInstruction>)> {
    let text = read(path)?;
    let fs = parse_functions(&text, None).map_err(|e| anyhow!("{}:{}: {}", path.display(), e.line, e.kind))?;
    let fs = match width {
        Some(w) => fs
            .iter()
            .map(|f| f.at_width(w))
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}", path.display()))?,
        None => fs,
    };
    Ok((text, fs))
}

/// Collects output files, written into a directory or to standard output.
pub struct Outputs<'a> {
    dir: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    pub written: Vec<(String, String)>,
}

impl<'a> Outputs<'a> {
    fn new(dir: Option<PathBuf>, stdout: &'a mut dyn Write) -> anyhow::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
        }
        Ok(Outputs {
            dir,
            stdout,
            written: Vec::new(),
        })
    }

    fn emit(&mut self, name: &str, contents: String) -> anyhow::Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, &contents).with_context(|| format!("cannot write {}", path.display()))?;
            }
            None => {
                writeln!(self.stdout, "==> {name} <==")?;
                self.stdout.write_all(contents.as_bytes())?;
            }
        }
        self.written.push((name.to_string(), contents));
        Ok(())
    }

    fn note(&mut self, line: &str) -> anyhow::Result<()> {
        if self.dir.is_some() {
            writeln!(self.stdout, "{line}")?;
        }
        Ok(())
    }
}

/// Candidates of the final cover of every DDG at `k`, named `ci<n>` in
/// extraction order. Clusters of a single operation are base instructions
/// and yield no candidate.
pub fn extract_candidates(
    ddgs: &[Loaded],
    k: usize,
    cluster: bool,
    listing: &mut String,
) -> anyhow::Result<Vec<CandidateInstruction>> {
    let ac = ArchConstraints::new(k)?;
    let mut cands = Vec::new();
    for l in ddgs {
        let miso = max_miso(&l.ddg, &ac);
        let cg = if cluster { clone_and_combine(&miso, &ac).graph } else { miso };
        writeln!(
            listing,
            "# {} max_inputs={} {}",
            l.name,
            k,
            if cluster { "clustered" } else { "maxmiso" }
        )?;
        for c in cg.clusters() {
            let label = if c.is_singleton() || c.contains_kind(&l.ddg, ac.forbidden()) {
                "  ".to_string()
            } else {
                let name = format!("ci{}", cands.len() + 1);
                cands.push(cluster_to_function(&l.ddg, c, &name)?);
                format!("{name} ")
            };
            writeln!(listing, "{label}{}", c.describe(&l.ddg))?;
        }
    }
    Ok(cands)
}

fn describe_candidates(all: &[CandidateInstruction], unique: &[CandidateInstruction]) -> String {
    let mut s = format!("# {} candidates, {} distinct\n", all.len(), unique.len());
    for f in unique {
        writeln!(s, "{} [{} operations]", signature(f), f.node_count()).unwrap();
    }
    s
}

fn cmd_extract(args: &ExtractArgs, default_cluster: bool, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    let cluster = cluster_flag(args.cluster, args.no_cluster);
    let mut cfg = resolve(&args.common, None, cluster, &args.inputs)?;
    if cluster.is_none() {
        cfg.cluster = default_cluster;
    }
    let ddgs: Vec<Loaded> = cfg
        .inputs
        .iter()
        .map(|p| load_ddg(p, cfg.width))
        .collect::<anyhow::Result<_>>()?;
    let mut outputs = Outputs::new(cfg.out.clone(), out)?;
    let mut listing = String::new();
    let mut reports = Vec::new();
    for k in cfg.max_inputs.iter() {
        let all = extract_candidates(&ddgs, k, cfg.cluster, &mut listing)?;
        listing.push_str(&describe_candidates(&all, &dedupe_structural(&all)));
    }
    for l in &ddgs {
        reports.extend(report::sweep(&l.name, &l.ddg, cfg.max_inputs.iter()).map_err(anyhow::Error::from)?);
    }
    outputs.emit("clusters.txt", listing)?;
    outputs.emit("cover.csv", cover_csv(&reports))?;
    outputs.note(&report::summary(&reports, &[]))?;
    Ok(RunStatus::default())
}

fn cmd_functions(args: &ExtractArgs, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    let cfg = resolve(&args.common, None, cluster_flag(args.cluster, args.no_cluster), &args.inputs)?;
    let ddgs: Vec<Loaded> = cfg
        .inputs
        .iter()
        .map(|p| load_ddg(p, cfg.width))
        .collect::<anyhow::Result<_>>()?;
    let mut listing = String::new();
    let all = extract_candidates(&ddgs, cfg.max_inputs.hi, cfg.cluster, &mut listing)?;
    let unique = dedupe_structural(&all);
    let mut outputs = Outputs::new(cfg.out.clone(), out)?;
    outputs.emit("candidates.fn", functions_to_text(&unique))?;
    Ok(RunStatus::default())
}

fn session(cfg: &PipelineConfig) -> Result<SolverSession, CliError> {
    let sess = SolverSession::from_command_line(&cfg.solver_cmd, cfg.timeout_ms)
        .map_err(|e| CliError::SolverUnavailable(format!("{e}; set {SOLVER_ENV} or --solver-cmd")))?;
    // A trivial query up front turns a missing solver into a clear error.
    match smt::check(&sess, &[], &[], &[]) {
        Ok(v) if v.is_sat() => Ok(sess),
        Ok(v) => Err(CliError::SolverUnavailable(format!(
            "solver `{}` answered {v:?} to an empty query; set {SOLVER_ENV} or --solver-cmd",
            cfg.solver_cmd
        ))),
        Err(e) => Err(CliError::SolverUnavailable(format!(
            "{e}; set {SOLVER_ENV} or --solver-cmd to a QF_BV solver reading SMT-LIB2 on stdin"
        ))),
    }
}

fn oracle(cfg: &PipelineConfig) -> Result<Box<dyn Oracle>, CliError> {
    Ok(match cfg.oracle {
        OracleKind::Smt => Box::new(SmtOracle::new(session(cfg)?)),
        OracleKind::Brute => Box::new(BruteOracle),
    })
}

fn subsume_error(e: SubsumeError) -> CliError {
    match e {
        SubsumeError::Smt(e @ SmtError::Missing { .. }) => {
            CliError::SolverUnavailable(format!("{e}; set {SOLVER_ENV} or --solver-cmd"))
        }
        SubsumeError::Smt(e @ SmtError::TooLarge { .. }) => {
            CliError::Input(anyhow!("{e}; the brute oracle only handles tiny widths (try --width 4)"))
        }
        e => CliError::Input(e.into()),
    }
}

/// Dedupe, minimize and emit the set reports. Returns the status and the
/// set report.
fn run_subsumption(
    set: &str,
    cands: &[CandidateInstruction],
    cfg: &PipelineConfig,
    outputs: &mut Outputs<'_>,
) -> Result<(RunStatus, SetReport), CliError> {
    let unique = dedupe_structural(cands);
    if let Some(w) = unique.first().map(|f| f.width()) {
        if let Some(f) = unique.iter().find(|f| f.width() != w) {
            return Err(CliError::Input(anyhow!(
                "`{}` has width {} but `{}` has width {w}; use --width",
                f.name(),
                f.width(),
                unique[0].name()
            )));
        }
    }
    let oracle = oracle(cfg)?;
    let sub_cfg = SubsumeConfig {
        max_iters: cfg.max_iters,
        ..SubsumeConfig::default()
    };
    let m = minimize_set(&unique, oracle.as_ref(), &sub_cfg).map_err(subsume_error)?;
    let rep = SetReport::from_minimized(set, &m);
    let inconclusive: Vec<String> = m
        .inconclusive()
        .map(|p| format!("{} over {}", unique[p.f].name(), unique[p.g].name()))
        .collect();
    outputs.emit("set.csv", set_csv(std::slice::from_ref(&rep)))?;
    outputs.emit("pairs.csv", pairs_csv(&unique, &m.pairs, cfg.timing))?;
    outputs.emit("kept.fn", functions_to_text(&m.kept))?;
    let mut removed = String::from("g_name,by_name,witness\n");
    for r in &m.removed {
        writeln!(removed, "{},{},{}", r.g, r.by, r.witness).unwrap();
    }
    outputs.emit("removed.csv", removed)?;
    let mut summary = report::summary(&[], std::slice::from_ref(&rep));
    for p in &inconclusive {
        writeln!(summary, "inconclusive: {p}").unwrap();
    }
    outputs.emit("set_summary.txt", summary)?;
    Ok((
        RunStatus {
            inconclusive: !inconclusive.is_empty(),
        },
        rep,
    ))
}

fn cmd_subsume(args: &SubsumeArgs, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    let cfg = resolve(&args.common, Some(&args.solver), None, &args.inputs)?;
    let mut cands = Vec::new();
    for p in &cfg.inputs {
        cands.extend(load_functions(p, cfg.width)?.1);
    }
    let mut seen = BTreeMap::new();
    for f in &cands {
        if seen.insert(f.name().to_string(), ()).is_some() {
            return Err(CliError::Input(anyhow!("function `{}` is defined twice", f.name())));
        }
    }
    let set = args.name.clone().unwrap_or_else(|| default_set_name(&cfg.inputs));
    let mut outputs = Outputs::new(cfg.out.clone(), out)?;
    let (status, rep) = run_subsumption(&set, &cands, &cfg, &mut outputs)?;
    outputs.note(&report::summary(&[], &[rep]))?;
    Ok(status)
}

fn default_set_name(inputs: &[PathBuf]) -> String {
    match inputs {
        [one] => stem(one),
        many => many[0]
            .parent()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "candidates".into()),
    }
}

fn ddg_paths(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "ddg"))
                .collect();
            found.sort();
            paths.extend(found);
        } else {
            paths.push(p.clone());
        }
    }
    if paths.is_empty() {
        bail!("no DDG files found");
    }
    Ok(paths)
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a PipelineConfig,
    inputs: Vec<ManifestEntry>,
    outputs: Vec<ManifestEntry>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn cmd_pipeline(args: &PipelineArgs, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    let paths = ddg_paths(&args.inputs).context("pipeline")?;
    let mut cfg = resolve(
        &args.common,
        Some(&args.solver),
        cluster_flag(args.cluster, args.no_cluster),
        &paths,
    )?;
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from("isext-out"));
    }
    let stage = |name: &'static str| move |e: anyhow::Error| CliError::Input(e.context(format!("stage {name}")));

    let ddgs: Vec<Loaded> = paths
        .iter()
        .map(|p| load_ddg(p, cfg.width))
        .collect::<anyhow::Result<_>>()
        .map_err(stage("parse"))?;
    let mut outputs = Outputs::new(cfg.out.clone(), out)?;

    let mut reports: Vec<CoverReport> = Vec::new();
    for l in &ddgs {
        reports.extend(
            report::sweep(&l.name, &l.ddg, cfg.max_inputs.iter())
                .map_err(|e| stage("extract")(e.into()))?,
        );
    }
    outputs.emit("cover.csv", cover_csv(&reports))?;

    let mut listing = String::new();
    let all = extract_candidates(&ddgs, cfg.max_inputs.hi, cfg.cluster, &mut listing)
        .map_err(stage("cluster"))?;
    let unique = dedupe_structural(&all);
    listing.push_str(&describe_candidates(&all, &unique));
    outputs.emit("clusters.txt", listing)?;
    outputs.emit("candidates.fn", functions_to_text(&unique))?;

    let set = if ddgs.len() == 1 { ddgs[0].name.clone() } else { "pipeline".into() };
    let (status, set_report) = run_subsumption(&set, &all, &cfg, &mut outputs).map_err(|e| match e {
        CliError::Input(e) => CliError::Input(e.context("stage subsume")),
        e => e,
    })?;
    let summary = report::summary(&reports, std::slice::from_ref(&set_report));
    outputs.emit("summary.txt", summary.clone())?;

    let manifest = Manifest {
        tool: "isext",
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        inputs: ddgs
            .iter()
            .map(|l| ManifestEntry {
                path: l.path.display().to_string(),
                sha256: digest(l.text.as_bytes()),
            })
            .collect(),
        outputs: outputs
            .written
            .iter()
            .map(|(name, contents)| ManifestEntry {
                path: name.clone(),
                sha256: digest(contents.as_bytes()),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)? + "\n";
    outputs.emit("manifest.json", json)?;
    outputs.note(&summary)?;
    Ok(status)
}

fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    let mut files = Vec::new();
    for p in &args.inputs {
        if p.is_dir() {
            for name in ["cover.csv", "set.csv"] {
                if p.join(name).exists() {
                    files.push(p.join(name));
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Input(anyhow!("no reports found")));
    }
    let (mut covers, mut sets) = (Vec::new(), Vec::new());
    for f in &files {
        let text = read(f)?;
        let header = text.lines().next().unwrap_or_default();
        let ctx = || format!("{}", f.display());
        if header == report::COVER_HEADER.join(",") {
            covers.extend(report::parse_cover_csv(&text).with_context(ctx)?);
        } else if header == report::SET_HEADER.join(",") {
            sets.extend(report::parse_set_csv(&text).with_context(ctx)?);
        } else {
            return Err(CliError::Input(anyhow!("{}: not a cover or set report", f.display())));
        }
    }
    out.write_all(report::summary(&covers, &sets).as_bytes())
        .map_err(anyhow::Error::from)?;
    Ok(RunStatus::default())
}

/// Runs a parsed command line, writing to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    match &cli.cmd {
        Cmd::Extract(a) => cmd_extract(a, false, out),
        Cmd::Cluster(a) => cmd_extract(a, true, out),
        Cmd::Functions(a) => cmd_functions(a, out),
        Cmd::Subsume(a) => cmd_subsume(a, out),
        Cmd::Pipeline(a) => cmd_pipeline(a, out),
        Cmd::Report(a) => cmd_report(a, out),
    }
}
