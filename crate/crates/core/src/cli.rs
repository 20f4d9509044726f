//! Command-line front end: `bound`, `table` and `verify`.
//!
//! Every rendered artifact starts with the full run configuration and the
//! crate version. CSV output carries it as a `#` comment line, Markdown as
//! an HTML comment, JSON as a `run` field.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rug::Integer;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytic;
use crate::coherent::{build_config, build_full, VerifyMode};
use crate::error::{Error, Result};
use crate::fano;
use crate::irreps::{compare_table1, compute_irreps};
use crate::qcalc::{is_prime_power, QParams};
use crate::real::{default_precision, Real};
use crate::sdp_model::{build_sdp, export_sdpa, solve_bound, BoundMode, DimensionBoundTable};
use crate::solver::SolverSettings;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "subspace-sdp", version, about = "SDP upper bounds for subspace codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bound A_q(n, d) for one parameter set.
    Bound(BoundArgs),
    /// Bound a grid of (n, d) cells in the layout d rows by n columns.
    Table(TableArgs),
    /// Run verification suites; exits nonzero on any failure.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fast,
    Certified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Oracle,
    Axioms,
    Table1,
    Identities,
    Analytic,
    Fano,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Mantissa bits (default: $SUBSPACE_SDP_PRECISION or 256).
    #[arg(long)]
    pub precision: Option<u32>,
    /// Gap and feasibility tolerance of the interior point method.
    #[arg(long, default_value_t = 1e-25)]
    pub tolerance: f64,
    /// `literature` (shipped file), `none`, or a path to a bound file.
    #[arg(long, default_value = "literature")]
    pub bounds: String,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = Mode::Certified)]
    pub mode: Mode,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the rendered output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BoundArgs {
    #[arg(long)]
    pub q: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Fibers K (comma separated); default 0..n.
    #[arg(long, value_delimiter = ',')]
    pub fibers: Option<Vec<usize>>,
    /// Also write the lowered problem in SDPA sparse format.
    #[arg(long)]
    pub export_sdpa: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    #[arg(long)]
    pub q: u32,
    /// n range, e.g. `8..9` (inclusive) or `8`.
    #[arg(long)]
    pub n: String,
    /// d range, e.g. `3..6`.
    #[arg(long)]
    pub d: String,
    /// Append finished cells here and skip cells already present.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 13)]
    pub q_max: u32,
    #[arg(long, default_value_t = 101)]
    pub t_max: u32,
    #[command(flatten)]
    pub common: Common,
}

/// Validated settings shared by all commands; serialized into every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub version: String,
    pub q: Option<u32>,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    pub fibers: Option<Vec<usize>>,
    pub precision: u32,
    pub tolerance: f64,
    pub bounds: String,
    pub format: Format,
    pub mode: Mode,
    pub threads: Option<usize>,
}

impl RunConfig {
    fn from_common(command: &str, c: &Common) -> Result<RunConfig> {
        let precision = c.precision.unwrap_or_else(default_precision);
        let cfg = RunConfig {
            command: command.into(),
            version: VERSION.into(),
            q: None,
            n: Vec::new(),
            d: Vec::new(),
            fibers: None,
            precision,
            tolerance: c.tolerance,
            bounds: c.bounds.clone(),
            format: c.format,
            mode: c.mode,
            threads: c.threads,
        };
        cfg.settings().validate()?;
        if c.threads == Some(0) {
            return Err(Error::Config("--threads must be positive".into()));
        }
        Ok(cfg)
    }

    /// Defaults of the `bound` command in fast mode, for library callers.
    pub fn fast() -> RunConfig {
        RunConfig {
            command: "library".into(),
            version: VERSION.into(),
            q: None,
            n: Vec::new(),
            d: Vec::new(),
            fibers: None,
            precision: default_precision(),
            tolerance: 1e-25,
            bounds: "literature".into(),
            format: Format::Markdown,
            mode: Mode::Fast,
            threads: None,
        }
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings { precision: self.precision, gap_tol: self.tolerance, feas_tol: self.tolerance, ..Default::default() }
    }

    pub fn bound_table(&self) -> Result<DimensionBoundTable> {
        match self.bounds.as_str() {
            "literature" => Ok(DimensionBoundTable::literature()),
            "none" => Ok(DimensionBoundTable::new()),
            path => DimensionBoundTable::load(path),
        }
    }

    fn bound_mode(&self) -> BoundMode {
        match self.mode {
            Mode::Fast => BoundMode::Fast,
            Mode::Certified => BoundMode::Certified,
        }
    }

    fn header(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

fn check_q(q: u32) -> Result<()> {
    if !is_prime_power(q) {
        return Err(Error::Domain(format!("q = {q} is not a prime power")));
    }
    Ok(())
}

fn check_cell(n: usize, d: usize) -> Result<()> {
    if n < 2 || d == 0 || d > n {
        return Err(Error::Domain(format!("need n >= 2 and 1 <= d <= n, got n = {n}, d = {d}")));
    }
    Ok(())
}

/// Inclusive range `a..b`, `a..=b` or a single value.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad range {s:?}"));
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    match s.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            Ok((a..=b).collect())
        }
        None => Ok(vec![s.parse().map_err(|_| bad())?]),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub q: u32,
    pub n: usize,
    pub d: usize,
    pub bound: u64,
}

/// Printed SDP bounds (data/golden_tables.json), keyed by (q, n, d).
pub fn golden_table() -> BTreeMap<(u32, usize, usize), u64> {
    let recs: Vec<GoldenRecord> =
        serde_json::from_str(include_str!("../data/golden_tables.json")).expect("shipped golden file parses");
    recs.into_iter().map(|r| ((r.q, r.n, r.d), r.bound)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub q: u32,
    pub n: usize,
    pub d: usize,
    pub bound: Option<String>,
    /// Upper bound on the optimum, before flooring.
    pub value: Option<String>,
    pub primal: Option<String>,
    pub status: Option<String>,
    pub iterations: Option<usize>,
    pub printed: Option<u64>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn matches_printed(&self) -> Option<bool> {
        Some(self.bound.as_deref()? == self.printed?.to_string())
    }

    fn bound_int(&self) -> Option<Integer> {
        self.bound.as_deref()?.parse().ok()
    }
}

fn params(q: u32, n: usize, d: usize) -> String {
    format!("q={q} n={n} d={d}")
}

/// Pipeline for one cell: configuration, irreducible blocks, SDP, solve,
/// bound extraction.
pub fn compute_cell(cfg: &RunConfig, table: &DimensionBoundTable, q: u32, n: usize, d: usize) -> Result<CellResult> {
    compute_cell_with(cfg, table, q, n, d, None, None)
}

fn compute_cell_with(
    cfg: &RunConfig,
    table: &DimensionBoundTable,
    q: u32,
    n: usize,
    d: usize,
    fibers: Option<&[usize]>,
    export: Option<&PathBuf>,
) -> Result<CellResult> {
    let ps = params(q, n, d);
    check_q(q)?;
    check_cell(n, d)?;
    let fibers: Vec<usize> = fibers.map_or_else(|| (0..=n).collect(), |f| f.to_vec());
    let settings = cfg.settings();
    let qp = QParams::new(q).map_err(|e| e.at_stage("qcalc", &ps))?;
    let conf = build_config(n, qp, &fibers).map_err(|e| e.at_stage("build_config", &ps))?;
    let tab = compute_irreps(&conf, settings.precision).map_err(|e| e.at_stage("compute_irreps", &ps))?;
    let p = build_sdp(&conf, &tab, d, &conf.fibers, table).map_err(|e| e.at_stage("build_sdp", &ps))?;
    if let Some(path) = export {
        export_sdpa(&p, path).map_err(|e| e.at_stage("export_sdpa", &ps))?;
    }
    let (sol, res) = solve_bound(&p, &settings, cfg.bound_mode()).map_err(|e| e.at_stage("solve", &ps))?;
    let digits = 40;
    Ok(CellResult {
        q,
        n,
        d,
        bound: res.bound.as_ref().map(|b| b.to_string()),
        value: res.bound_value.as_ref().map(|v| v.to_decimal(digits)),
        primal: Some(res.primal_objective.to_decimal(digits)),
        status: Some(sol.status.to_string()),
        iterations: Some(sol.iterations),
        printed: golden_table().get(&(q, n, d)).copied(),
        error: None,
    })
}

fn failed_cell(q: u32, n: usize, d: usize, e: &Error) -> CellResult {
    CellResult {
        q,
        n,
        d,
        bound: None,
        value: None,
        primal: None,
        status: None,
        iterations: None,
        printed: golden_table().get(&(q, n, d)).copied(),
        error: Some(e.to_string()),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Rendered text plus whether every stage succeeded.
#[derive(Clone, Debug)]
pub struct Rendered {
    pub text: String,
    pub ok: bool,
}

pub fn cmd_bound(args: &BoundArgs) -> Result<Rendered> {
    let mut cfg = RunConfig::from_common("bound", &args.common)?;
    check_q(args.q)?;
    check_cell(args.n, args.d)?;
    if let Some(f) = &args.fibers {
        if f.is_empty() || f.iter().any(|&a| a > args.n) {
            return Err(Error::Config(format!("fibers must be a nonempty subset of 0..={}", args.n)));
        }
    }
    cfg.q = Some(args.q);
    cfg.n = vec![args.n];
    cfg.d = vec![args.d];
    cfg.fibers = args.fibers.clone();
    let table = cfg.bound_table()?;
    let cell = with_pool(cfg.threads, || {
        compute_cell_with(&cfg, &table, args.q, args.n, args.d, args.fibers.as_deref(), args.export_sdpa.as_ref())
    })??;
    let ok = cell.bound.is_some();
    Ok(Rendered { text: render_cells(&cfg, &[cell]), ok })
}

fn read_journal(path: &PathBuf) -> Result<Vec<CellResult>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn last line from an interrupted run is skipped
        if let Ok(c) = serde_json::from_str::<CellResult>(&line) {
            out.push(c);
        }
    }
    Ok(out)
}

pub fn cmd_table(args: &TableArgs) -> Result<Rendered> {
    let mut cfg = RunConfig::from_common("table", &args.common)?;
    check_q(args.q)?;
    cfg.q = Some(args.q);
    cfg.n = parse_range(&args.n)?;
    cfg.d = parse_range(&args.d)?;
    let table = cfg.bound_table()?;
    let q = args.q;
    let mut done: BTreeMap<(usize, usize), CellResult> = BTreeMap::new();
    if let Some(j) = &args.journal {
        for c in read_journal(j)? {
            if c.q == q && c.error.is_none() {
                done.insert((c.n, c.d), c);
            }
        }
    }
    let todo: Vec<(usize, usize)> = cfg
        .d
        .iter()
        .flat_map(|&d| cfg.n.iter().map(move |&n| (n, d)))
        .filter(|&(n, d)| d <= n && !done.contains_key(&(n, d)))
        .collect();
    let journal = match &args.journal {
        Some(p) => Some(Mutex::new(
            OpenOptions::new().create(true).append(true).open(p).map_err(|e| Error::io(p, e))?,
        )),
        None => None,
    };
    let fresh: Vec<CellResult> = with_pool(cfg.threads, || {
        todo.par_iter()
            .map(|&(n, d)| {
                let cell = compute_cell(&cfg, &table, q, n, d).unwrap_or_else(|e| failed_cell(q, n, d, &e));
                if let Some(j) = &journal {
                    if let Ok(line) = serde_json::to_string(&cell) {
                        let mut f = j.lock().unwrap_or_else(|p| p.into_inner());
                        let _ = writeln!(f, "{line}");
                    }
                }
                cell
            })
            .collect()
    })?;
    for c in fresh {
        done.insert((c.n, c.d), c);
    }
    let cells: Vec<CellResult> = cfg
        .d
        .iter()
        .flat_map(|&d| cfg.n.iter().map(move |&n| (n, d)))
        .filter_map(|k| done.remove(&k))
        .collect();
    let ok = cells.iter().all(|c| c.error.is_none());
    let text = match cfg.format {
        Format::Markdown => render_grid(&cfg, &cells),
        _ => render_cells(&cfg, &cells),
    };
    Ok(Rendered { text, ok })
}

fn render_cells(cfg: &RunConfig, cells: &[CellResult]) -> String {
    match cfg.format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "run": cfg,
            "cells": cells.iter().map(|c| json!({
                "q": c.q, "n": c.n, "d": c.d, "bound": c.bound, "value": c.value, "primal": c.primal,
                "status": c.status, "iterations": c.iterations, "printed": c.printed,
                "matches_printed": c.matches_printed(), "error": c.error,
            })).collect::<Vec<_>>(),
        }))
        .unwrap_or_default(),
        Format::Csv => {
            let mut s = format!("# run: {}\nq,n,d,bound,value,primal,status,printed,matches_printed,error\n", cfg.header());
            for c in cells {
                s += &format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    c.q,
                    c.n,
                    c.d,
                    c.bound.clone().unwrap_or_default(),
                    c.value.clone().unwrap_or_default(),
                    c.primal.clone().unwrap_or_default(),
                    c.status.clone().unwrap_or_default(),
                    c.printed.map(|p| p.to_string()).unwrap_or_default(),
                    c.matches_printed().map(|m| m.to_string()).unwrap_or_default(),
                    c.error.as_deref().unwrap_or("").replace(',', ";"),
                );
            }
            s
        }
        Format::Markdown => {
            let mut s = format!("<!-- run: {} -->\n", cfg.header());
            for c in cells {
                match (&c.bound, &c.error) {
                    (Some(b), _) => {
                        s += &format!("A_{}({}, {}) <= {}\n\n", c.q, c.n, c.d, b);
                        s += &format!("- value: {}\n", c.value.as_deref().unwrap_or("-"));
                        s += &format!("- primal: {}\n", c.primal.as_deref().unwrap_or("-"));
                        s += &format!("- status: {} after {} iterations, mode {:?}\n", c.status.as_deref().unwrap_or("-"), c.iterations.unwrap_or(0), cfg.mode);
                        if let Some(p) = c.printed {
                            let m = if c.matches_printed() == Some(true) { "matches" } else { "differs from" };
                            s += &format!("- {m} the printed value {p}\n");
                        }
                    }
                    (None, Some(e)) => s += &format!("A_{}({}, {}): error: {e}\n", c.q, c.n, c.d),
                    (None, None) => s += &format!("A_{}({}, {}): no bound (status {})\n", c.q, c.n, c.d, c.status.as_deref().unwrap_or("-")),
                }
            }
            s
        }
    }
}

fn render_grid(cfg: &RunConfig, cells: &[CellResult]) -> String {
    let mut s = format!("<!-- run: {} -->\n", cfg.header());
    if cfg.n.is_empty() || cfg.d.is_empty() {
        return s;
    }
    s += &format!("| d \\ n | {} |\n", cfg.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" | "));
    s += &format!("|---|{}\n", "---|".repeat(cfg.n.len()));
    for &d in &cfg.d {
        s += &format!("| {d} |");
        for &n in &cfg.n {
            let cell = cells.iter().find(|c| c.n == n && c.d == d);
            let txt = match cell {
                None => String::new(),
                Some(c) => match (c.bound_int(), c.printed, &c.error) {
                    (Some(b), Some(p), _) if b == p => format!("{b} ✓"),
                    (Some(b), Some(p), _) => format!("{b} (printed {p})"),
                    (Some(b), None, _) => b.to_string(),
                    (None, _, Some(_)) => "error".into(),
                    (None, _, None) => "-".into(),
                },
            };
            s += &format!(" {txt} |");
        }
        s += "\n";
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub passed: bool,
    pub detail: String,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Rendered> {
    let mut cfg = RunConfig::from_common("verify", &args.common)?;
    cfg.q = args.q;
    cfg.n = args.n.into_iter().collect();
    let suites: Vec<Suite> = match args.suite {
        Suite::All => vec![Suite::Oracle, Suite::Axioms, Suite::Table1, Suite::Identities, Suite::Analytic, Suite::Fano],
        s => vec![s],
    };
    let results = with_pool(cfg.threads, || suites.iter().map(|s| run_suite(*s, args, &cfg)).collect::<Vec<_>>())?;
    let ok = results.iter().all(|r| r.passed);
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&json!({ "run": cfg, "passed": ok, "suites": results })).unwrap_or_default(),
        Format::Csv => {
            let mut s = format!("# run: {}\nsuite,passed,detail\n", cfg.header());
            for r in &results {
                s += &format!("{},{},\"{}\"\n", r.suite, r.passed, r.detail.replace('"', "'").replace('\n', " "));
            }
            s
        }
        Format::Markdown => {
            let mut s = format!("<!-- run: {} -->\n", cfg.header());
            for r in &results {
                s += &format!("## {}: {}\n\n{}\n\n", r.suite, if r.passed { "pass" } else { "FAIL" }, r.detail);
            }
            s
        }
    };
    Ok(Rendered { text, ok })
}

fn suite_name(s: Suite) -> String {
    format!("{s:?}").to_lowercase()
}

fn run_suite(suite: Suite, args: &VerifyArgs, cfg: &RunConfig) -> SuiteResult {
    let out = match suite {
        Suite::Oracle => suite_axioms(args.q.unwrap_or(2), args.n.unwrap_or(4), VerifyMode::Oracle),
        Suite::Axioms => suite_axioms(args.q.unwrap_or(2), args.n.unwrap_or(7), VerifyMode::FormulaIdentities),
        Suite::Table1 => suite_table1(args.q, cfg.precision),
        Suite::Identities => suite_identities(args.q, args.n, cfg.precision),
        Suite::Analytic => {
            let r = analytic::analytic_suite(args.q_max, args.t_max);
            Ok((r.passed(), r.to_markdown()))
        }
        Suite::Fano => suite_fano(cfg),
        Suite::All => unreachable!("expanded by the caller"),
    };
    match out {
        Ok((passed, detail)) => SuiteResult { suite: suite_name(suite), passed, detail },
        Err(e) => SuiteResult { suite: suite_name(suite), passed: false, detail: e.to_string() },
    }
}

fn suite_axioms(q: u32, n: usize, mode: VerifyMode) -> Result<(bool, String)> {
    let conf = build_full(n, QParams::new(q)?)?;
    let rep = conf.verify_axioms(mode)?;
    let mut s = format!("q={q} n={n}: {} checks, {} failures", rep.checks, rep.failures.len());
    for f in rep.failures.iter().take(10) {
        s += &format!("\n- {f}");
    }
    Ok((rep.passed(), s))
}

fn suite_table1(q: Option<u32>, prec: u32) -> Result<(bool, String)> {
    let qs = q.map_or_else(|| vec![2, 3, 5], |q| vec![q]);
    let tol = Real::pow2(-100, prec);
    let mut ok = true;
    let mut s = String::new();
    for q in qs {
        let conf = build_config(7, QParams::new(q)?, &[1, 2, 3, 4, 5, 6])?;
        let tab = compute_irreps(&conf, prec)?;
        let rep = compare_table1(&tab, &conf, &tol)?;
        ok &= rep.passed();
        s += &format!(
            "q={q}: {} cells, max residual {}, {} failures\n",
            rep.cells,
            rep.max_residual.to_decimal(3),
            rep.failures.len()
        );
        for f in rep.failures.iter().take(5) {
            s += &format!("- {f}\n");
        }
    }
    Ok((ok, s))
}

fn suite_identities(q: Option<u32>, n: Option<usize>, prec: u32) -> Result<(bool, String)> {
    let cases: Vec<(usize, u32)> = match (n, q) {
        (Some(n), Some(q)) => vec![(n, q)],
        _ => vec![(7, 2), (7, 3), (8, 2), (9, 2)],
    };
    let tol = Real::pow2(-100, prec);
    let mut ok = true;
    let mut s = String::new();
    for (n, q) in cases {
        let conf = build_config(n, QParams::new(q)?, &(1..n).collect::<Vec<_>>())?;
        let tab = compute_irreps(&conf, prec)?;
        let rep = tab.verify_identities(&conf, &tol);
        ok &= rep.passed();
        s += &format!("n={n} q={q}: {} checks, max residual {}\n", rep.checks, rep.max_residual.to_decimal(3));
    }
    Ok((ok, s))
}

fn suite_fano(cfg: &RunConfig) -> Result<(bool, String)> {
    let rep = fano::table7(fano::FamilyMode::Exact, &cfg.settings())?;
    let t = &rep.totals;
    let census = t.fiber2 == 140 && t.fiber3 == 240;
    let fams = [&t.t222, &t.t223, &t.t232, &t.t233, &t.t332, &t.t333];
    let fam_ok = fams.iter().zip([7700, 11760, 11760, 21840, 21840, 35520]).all(|(a, b)| **a == b);
    let rows_ok = ["22222", "33331"].iter().all(|r| rep.row(r).is_some_and(|row| row.within_printed()));
    Ok((census && fam_ok && rows_ok, rep.to_markdown()))
}

/// Parse arguments, run, write output; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (res, out) = match &cli.command {
        Command::Bound(a) => (cmd_bound(a), a.common.out.clone()),
        Command::Table(a) => (cmd_table(a), a.common.out.clone()),
        Command::Verify(a) => (cmd_verify(a), a.common.out.clone()),
    };
    match res {
        Ok(r) => {
            let written = match out {
                Some(path) => std::fs::write(&path, &r.text).map_err(|e| Error::io(&path, e)),
                None => {
                    print!("{}", r.text);
                    if !r.text.ends_with('\n') {
                        println!();
                    }
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 1;
            }
            if r.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("8..9").unwrap(), vec![8, 9]);
        assert_eq!(parse_range("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_range("7").unwrap(), vec![7]);
        assert!(parse_range("").unwrap().is_empty());
        assert!(parse_range("x..2").is_err());
    }

    #[test]
    fn golden_has_main_cells() {
        let g = golden_table();
        assert_eq!(g[&(2, 7, 4)], 388);
        assert_eq!(g[&(5, 7, 4)], 410585);
        assert_eq!(g[&(3, 8, 5)], 7222);
    }

    #[test]
    fn flags_validated_before_work() {
        let cli = Cli::try_parse_from(["subspace-sdp", "bound", "--q", "6", "--n", "7", "--d", "4"]).unwrap();
        let Command::Bound(a) = cli.command else { panic!() };
        assert!(matches!(cmd_bound(&a), Err(Error::Domain(_))));
        let cli = Cli::try_parse_from(["subspace-sdp", "bound", "--q", "2", "--n", "7", "--d", "4", "--precision", "64"]).unwrap();
        let Command::Bound(a) = cli.command else { panic!() };
        assert!(matches!(cmd_bound(&a), Err(Error::Config(_))));
    }
}
