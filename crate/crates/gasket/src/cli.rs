//! Command-line front end: build, dist, lip, solve, pharm, lab, verify.
//!
//! Exit codes: 0 success, 1 verification failure, 2 solver non-convergence,
//! 3 input error. All data outputs are deterministic given the config and
//! seed; wall-clock timings go to a separate metadata file.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Subdomain;
use crate::field::VertexField;
use crate::graph::{PreFractalGraph, DEFAULT_MAX_LEVEL};
use crate::infinity::{self, solve_lazarus, InfinityProblem, IterateOptions, SolveMethod};
use crate::io;
use crate::lab;
use crate::lipschitz;
use crate::pharm::{self, PEnergyProblem};
use crate::sample;

#[derive(Debug, Parser, Serialize, Deserialize, PartialEq)]
#[command(
    name = "gasket",
    version,
    about = "Sierpinski pre-fractal graphs, the graph infinity Laplacian and p-harmonic solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Iterate,
    Lazarus,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Iterate => SolveMethod::Iterate,
            MethodArg::Lazarus => SolveMethod::Lazarus,
        }
    }
}

#[derive(Debug, Subcommand, Serialize, Deserialize, PartialEq)]
pub enum Command {
    /// Build V^n and export the graph as JSON.
    Build {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vertex distance between two addresses, optionally restricted to a
    /// subdomain; prints a JSON record to stdout.
    Dist {
        #[arg(long)]
        level: u32,
        /// Subdomain literal (JSON array of [a,b,c,k]); omit for the free
        /// vertex distance on the whole graph.
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Address a,b,c,k.
        #[arg(long)]
        from: String,
        /// Address a,b,c,k.
        #[arg(long)]
        to: String,
    },
    /// Lipschitz constants of a field over a subdomain; prints JSON.
    Lip {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        domain: PathBuf,
        /// Field file (.json map or .csv rows).
        #[arg(long)]
        field: PathBuf,
    },
    /// Solve the infinity Laplace problem and write the solution field.
    Solve {
        #[arg(long)]
        level: u32,
        /// Corner data g(q1),g(q2),g(q3); required unless --boundary-file is
        /// given for a subdomain solve.
        #[arg(long)]
        boundary: Option<String>,
        /// Subdomain literal; defaults to the full interior V^n \ V^0.
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Boundary data field file for subdomain solves.
        #[arg(long)]
        boundary_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Iterate)]
        method: MethodArg,
        /// Sup-change convergence threshold; default 1e-13*(1+range).
        #[arg(long)]
        tol: Option<f64>,
        /// Sweep budget for the iterative method; default targets 1e7
        /// vertex updates.
        #[arg(long)]
        max_iter: Option<u64>,
        /// Normalize corner data to (0,e,1) with e <= 1/2 internally
        /// (reflecting when needed) and invert the transform afterwards.
        #[arg(long, default_value_t = false)]
        normalize: bool,
        /// Output field file (.json or .csv); the solve report goes to
        /// <stem>.report.json and timing to <stem>.meta.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the p-energy, or sweep a list of exponents.
    Pharm {
        #[arg(long)]
        level: u32,
        /// Corner data g(q1),g(q2),g(q3).
        #[arg(long)]
        boundary: String,
        /// Single exponent (> 1).
        #[arg(long)]
        p: Option<f64>,
        /// Increasing comma list of exponents; writes CSV p,gap,energy,sweeps.
        #[arg(long)]
        sweep: Option<String>,
        /// Sup-change convergence threshold; default 1e-10*(1+range).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence experiments.
    Lab {
        #[command(subcommand)]
        command: LabCommand,
    },
    /// Run property verification suites and write a pass/fail report.
    Verify {
        #[arg(long)]
        level: u32,
        /// Corner data g(q1),g(q2),g(q3).
        #[arg(long)]
        boundary: String,
        /// Comma list of suites, or `all`. Known suites: max-principle,
        /// comparison, harnack, cc, am, sandwich, lip-slope, distance,
        /// linearity, amle, monotone-f, p-local.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Randomized cases per suite.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        /// Optional field file; the field suites (cc, harnack, am,
        /// lip-slope) then check this field instead of fresh solves.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand, Serialize, Deserialize, PartialEq)]
pub enum LabCommand {
    /// Solve across levels and tabulate sup differences against the finest.
    Sweep {
        /// Corner data g(q1),g(q2),g(q3).
        #[arg(long)]
        boundary: String,
        #[arg(long)]
        max_level: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Iterate)]
        method: MethodArg,
        /// Output directory for table.csv and per-level field files.
        #[arg(long)]
        out: PathBuf,
    },
    /// The level-1 vs level-2 discrepancy report for data (0, e, 1).
    Counterexample {
        #[arg(long)]
        e: f64,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point shared by the binary and the end-to-end tests.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            0
        }
        Err(e) => {
            eprint!("{e}");
            3
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    match execute(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            3
        }
    }
}

/// Level cap for graph construction, overridable via GASKET_MAX_LEVEL.
fn level_cap() -> u32 {
    std::env::var("GASKET_MAX_LEVEL")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_MAX_LEVEL)
}

fn build_graph(level: u32) -> Result<PreFractalGraph, String> {
    PreFractalGraph::build_with_max(level, level_cap()).map_err(|e| e.to_string())
}

fn parse_triple(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("boundary {text:?}: expected three comma-separated values"));
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| format!("boundary value {part:?} is not a number"))?;
        if !slot.is_finite() {
            return Err(format!("boundary value {part} is not finite"));
        }
    }
    Ok(vals)
}

fn read_to_string(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        }
    }
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_field(graph: &PreFractalGraph, path: &Path) -> Result<VertexField, String> {
    let text = read_to_string(path)?;
    let parsed = if path.extension().map_or(false, |e| e == "csv") {
        io::field_from_csv(graph, &text)
    } else {
        io::field_from_json(graph, &text)
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

fn write_field(graph: &PreFractalGraph, field: &VertexField, path: &Path) -> Result<(), String> {
    let text = if path.extension().map_or(false, |e| e == "csv") {
        io::field_to_csv(graph, field)
    } else {
        io::field_to_json(graph, field)
    };
    write_file(path, &text)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn read_subdomain<'g>(
    graph: &'g PreFractalGraph,
    path: &Path,
) -> Result<Subdomain<'g>, String> {
    let text = read_to_string(path)?;
    let interior =
        io::subdomain_from_json(graph, &text).map_err(|e| format!("{}: {e}", path.display()))?;
    Subdomain::new(graph, interior).map_err(|e| e.to_string())
}

fn execute(command: Command) -> Result<i32, String> {
    match command {
        Command::Build { level, out } => {
            let graph = build_graph(level)?;
            write_file(&out, &io::graph_to_json(&graph))?;
            Ok(0)
        }
        Command::Dist { level, domain, from, to } => {
            let graph = build_graph(level)?;
            let from_v: crate::vertex::Vertex = from.parse().map_err(|e| format!("{e}"))?;
            let to_v: crate::vertex::Vertex = to.parse().map_err(|e| format!("{e}"))?;
            let x = graph.require_index(&from_v).map_err(|e| e.to_string())?;
            let y = graph.require_index(&to_v).map_err(|e| e.to_string())?;
            let (restricted, value) = match domain {
                Some(path) => {
                    let dom = read_subdomain(&graph, &path)?;
                    (true, dom.distance(x, y).map_err(|e| e.to_string())?)
                }
                None => (false, crate::domain::vertex_distance(&graph, x, y)),
            };
            let record = serde_json::json!({
                "level": level,
                "from": from_v.to_string(),
                "to": to_v.to_string(),
                "restricted": restricted,
                "reachable": value.is_finite(),
                "hops": value.hops(),
                "length": value.length(level),
            });
            println!("{}", serde_json::to_string_pretty(&record).unwrap());
            Ok(0)
        }
        Command::Lip { level, domain, field } => {
            let graph = build_graph(level)?;
            let dom = read_subdomain(&graph, &domain)?;
            let u = read_field(&graph, &field)?;
            let interior = lipschitz::lip_interior(&dom, &u).map_err(|e| e.to_string())?;
            let boundary = lipschitz::lip_boundary(&dom, &u).map_err(|e| e.to_string())?;
            let slope = lipschitz::lip_equals_max_slope(&dom, &u).map_err(|e| e.to_string())?;
            let record = serde_json::json!({
                "level": level,
                "interior": interior,
                "boundary": boundary,
                "slope_equality": slope,
            });
            println!("{}", serde_json::to_string_pretty(&record).unwrap());
            Ok(0)
        }
        Command::Solve {
            level,
            boundary,
            domain,
            boundary_file,
            method,
            tol,
            max_iter,
            normalize,
            out,
        } => solve_command(
            level,
            boundary,
            domain,
            boundary_file,
            method,
            tol,
            max_iter,
            normalize,
            &out,
        ),
        Command::Pharm { level, boundary, p, sweep, tol, max_sweeps, out } => {
            pharm_command(level, &boundary, p, sweep, tol, max_sweeps, &out)
        }
        Command::Lab { command } => match command {
            LabCommand::Sweep { boundary, max_level, method, out } => {
                let triple = parse_triple(&boundary)?;
                let result = lab::level_sweep(triple, max_level, method.into())
                    .map_err(|e| e.to_string())?;
                fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
                let mut csv = String::from("n,k,sup_diff,F_n,iterations,residual\n");
                for row in &result.table.rows {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        row.n,
                        row.k,
                        io::format_f64(row.sup_diff),
                        io::format_f64(row.f_n),
                        row.iterations,
                        io::format_f64(row.residual)
                    ));
                }
                write_file(&out.join("table.csv"), &csv)?;
                for (i, field) in result.fields.iter().enumerate() {
                    let n = i as u32 + 1;
                    let graph = build_graph(n)?;
                    write_field(&graph, field, &out.join(format!("field_n{n}.json")))?;
                }
                Ok(if result.table.failures.is_empty() { 0 } else { 2 })
            }
            LabCommand::Counterexample { e, out } => {
                let report = lab::counterexample_report(e).map_err(|e| e.to_string())?;
                let text = format!("{}\n", serde_json::to_string_pretty(&report).unwrap());
                match out {
                    Some(path) => write_file(&path, &text)?,
                    None => print!("{text}"),
                }
                Ok(0)
            }
        },
        Command::Verify { level, boundary, suite, cases, seed, field, out } => {
            let graph = build_graph(level)?;
            let triple = parse_triple(&boundary)?;
            let names = parse_suites(&suite)?;
            let loaded = match field {
                Some(path) => Some(read_field(&graph, &path)?),
                None => None,
            };
            let report = verify_suite(&graph, triple, &names, cases, seed, loaded.as_ref())?;
            let text = format!("{}\n", serde_json::to_string_pretty(&report).unwrap());
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_command(
    level: u32,
    boundary: Option<String>,
    domain: Option<PathBuf>,
    boundary_file: Option<PathBuf>,
    method: MethodArg,
    tol: Option<f64>,
    max_iter: Option<u64>,
    normalize: bool,
    out: &Path,
) -> Result<i32, String> {
    let graph = build_graph(level)?;
    let dom = match &domain {
        Some(path) => read_subdomain(&graph, path)?,
        None => Subdomain::full(&graph),
    };

    // Boundary data: a corner triple when the derived boundary is V^0,
    // otherwise a field file on the derived boundary.
    let corners = {
        let mut c = graph.boundary().to_vec();
        c.sort_unstable();
        c
    };
    let boundary_is_corners = dom.boundary() == corners.as_slice();
    let (data, transform) = match (&boundary, &boundary_file) {
        (_, Some(path)) => {
            let field = read_field(&graph, path)?;
            field
                .require_defined_on(dom.boundary())
                .map_err(|e| format!("boundary file incomplete: {e}"))?;
            (field, None)
        }
        (Some(text), None) => {
            if !boundary_is_corners {
                return Err(
                    "the subdomain boundary is not V^0; provide --boundary-file".to_string()
                );
            }
            let triple = parse_triple(text)?;
            let (triple, transform) =
                if normalize { normalize_triple(triple) } else { (triple, None) };
            let [q1, q2, q3] = graph.boundary();
            let field = VertexField::from_pairs(
                &graph,
                [(q1, triple[0]), (q2, triple[1]), (q3, triple[2])],
            )
            .map_err(|e| e.to_string())?;
            (field, transform)
        }
        (None, None) => return Err("either --boundary or --boundary-file is required".into()),
    };

    let problem = InfinityProblem::new(dom.clone(), data).map_err(|e| e.to_string())?;
    let opts = IterateOptions { tol, max_sweeps: max_iter, ..Default::default() };
    let (mut field, mut report) =
        infinity::solve(&problem, method.into(), &opts).map_err(|e| e.to_string())?;

    if let Some(t) = transform {
        for &i in &dom.closure() {
            let w = field.get(i).map_err(|e| e.to_string())?;
            field.set(i, t.invert(w)).map_err(|e| e.to_string())?;
        }
        report.residual = infinity::residual(&dom, &field).map_err(|e| e.to_string())?;
    }

    write_field(&graph, &field, out)?;
    write_file(
        &sibling(out, ".report.json"),
        &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
    )?;
    write_file(
        &sibling(out, ".meta.json"),
        &format!(
            "{}\n",
            serde_json::json!({ "elapsed_secs": report.elapsed_secs })
        ),
    )?;
    Ok(if report.converged { 0 } else { 2 })
}

/// Affine normalization of corner data onto (0, e, 1) with e <= 1/2,
/// reflecting through 1 - v when the middle value lands above 1/2.
#[derive(Debug, Clone, Copy)]
struct Normalization {
    offset: f64,
    span: f64,
    reflected: bool,
}

impl Normalization {
    fn invert(&self, w: f64) -> f64 {
        let v = if self.reflected { 1.0 - w } else { w };
        self.offset + self.span * v
    }
}

fn normalize_triple(triple: [f64; 3]) -> ([f64; 3], Option<Normalization>) {
    let lo = triple.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = triple.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 {
        return (triple, None);
    }
    let scaled = triple.map(|g| (g - lo) / span);
    let middle: f64 = scaled.iter().cloned().sum::<f64>() - 1.0;
    let reflected = middle > 0.5;
    let out = if reflected { scaled.map(|v| 1.0 - v) } else { scaled };
    (out, Some(Normalization { offset: lo, span, reflected }))
}

fn pharm_command(
    level: u32,
    boundary: &str,
    p: Option<f64>,
    sweep: Option<String>,
    tol: Option<f64>,
    max_sweeps: Option<u64>,
    out: &Path,
) -> Result<i32, String> {
    let graph = build_graph(level)?;
    let triple = parse_triple(boundary)?;
    let [q1, q2, q3] = graph.boundary();
    let data = VertexField::from_pairs(
        &graph,
        [(q1, triple[0]), (q2, triple[1]), (q3, triple[2])],
    )
    .map_err(|e| e.to_string())?;

    if let Some(list) = sweep {
        let exponents: Vec<f64> = list
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad exponent {s:?}")))
            .collect::<Result<_, _>>()?;
        let rows =
            pharm::p_sweep_to_infinity(&graph, &data, &exponents, tol).map_err(|e| e.to_string())?;
        let mut csv = String::from("p,gap,energy,sweeps\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.p,
                io::format_f64(row.gap),
                io::format_f64(row.energy),
                row.sweeps
            ));
        }
        write_file(out, &csv)?;
        return Ok(if rows.iter().all(|r| r.converged) { 0 } else { 2 });
    }

    let p = p.ok_or("either --p or --sweep is required")?;
    let problem = PEnergyProblem::new(&graph, p, data).map_err(|e| e.to_string())?;
    let (field, report) =
        pharm::solve_p_harmonic(&problem, tol, max_sweeps, None).map_err(|e| e.to_string())?;
    write_field(&graph, &field, out)?;
    write_file(
        &sibling(out, ".report.json"),
        &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
    )?;
    Ok(if report.converged { 0 } else { 2 })
}

pub const ALL_SUITES: &[&str] = &[
    "max-principle",
    "comparison",
    "harnack",
    "cc",
    "am",
    "sandwich",
    "lip-slope",
    "distance",
    "linearity",
    "amle",
    "monotone-f",
    "p-local",
];

fn parse_suites(text: &str) -> Result<Vec<String>, String> {
    if text.trim() == "all" {
        return Ok(ALL_SUITES.iter().map(|s| s.to_string()).collect());
    }
    let mut names = Vec::new();
    for raw in text.split(',') {
        let name = raw.trim();
        if name.is_empty() {
            continue;
        }
        if !ALL_SUITES.contains(&name) {
            return Err(format!("unknown suite {name:?}; known: {}", ALL_SUITES.join(", ")));
        }
        names.push(name.to_string());
    }
    Ok(names)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    pub pass: bool,
    /// First counterexample, when any.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: u32,
    pub boundary: [f64; 3],
    pub seed: u64,
    pub cases: usize,
    pub suites: Vec<SuiteOutcome>,
    pub pass: bool,
}

/// Solver-coupled checks compare at this tolerance, consistent with the
/// cross-validation bound between the two solvers.
const SUITE_TOL: f64 = 1e-9;

/// Runs the named property suites over seeded randomized cases and collects
/// a pass/fail matrix. `fixed_field` substitutes for fresh solves in the
/// field suites (cc, harnack, am, lip-slope).
pub fn verify_suite(
    graph: &PreFractalGraph,
    boundary: [f64; 3],
    suites: &[String],
    cases: usize,
    seed: u64,
    fixed_field: Option<&VertexField>,
) -> Result<VerifyReport, String> {
    let mut outcomes = Vec::new();
    for (idx, name) in suites.iter().enumerate() {
        let rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64 * 0x9e3779b9));
        let outcome = run_suite(graph, boundary, name, cases, rng, fixed_field)
            .map_err(|e| format!("suite {name}: {e}"))?;
        outcomes.push(outcome);
    }
    let pass = outcomes.iter().all(|o| o.pass);
    Ok(VerifyReport {
        level: graph.level(),
        boundary,
        seed,
        cases,
        suites: outcomes,
        pass,
    })
}

struct CaseContext<'g> {
    sub: Subdomain<'g>,
    solution: VertexField,
}

/// Random connected subdomain with random boundary data, solved.
fn random_case<'g>(
    graph: &'g PreFractalGraph,
    rng: &mut ChaCha8Rng,
) -> Result<CaseContext<'g>, String> {
    let full = Subdomain::full(graph);
    let interior = sample::connected_interior(graph, rng, full.interior());
    let sub = Subdomain::new(graph, interior).map_err(|e| e.to_string())?;
    let mut data = VertexField::undefined(graph);
    for (i, v) in sample::boundary_values(rng, sub.boundary()) {
        data.set(i, v).map_err(|e| e.to_string())?;
    }
    let problem = InfinityProblem::new(sub.clone(), data).map_err(|e| e.to_string())?;
    let (solution, _) = solve_lazarus(&problem).map_err(|e| e.to_string())?;
    Ok(CaseContext { sub, solution })
}

fn run_suite(
    graph: &PreFractalGraph,
    boundary: [f64; 3],
    name: &str,
    cases: usize,
    mut rng: ChaCha8Rng,
    fixed_field: Option<&VertexField>,
) -> Result<SuiteOutcome, String> {
    let mut violations = 0usize;
    let mut witness: Option<String> = None;
    let mut note = |violated: bool, describe: &dyn Fn() -> String| {
        if violated {
            violations += 1;
            if witness.is_none() {
                witness = Some(describe());
            }
        }
    };
    let mut cases_run = cases;

    match name {
        "max-principle" => {
            for case in 0..cases {
                let ctx = random_case(graph, &mut rng)?;
                let (lo, hi) = boundary_range(&ctx);
                let bad = ctx.sub.closure().iter().any(|&x| {
                    let v = ctx.solution.get(x).unwrap();
                    v < lo - SUITE_TOL || v > hi + SUITE_TOL
                });
                note(bad, &|| format!("case {case}: solution escapes boundary range"));
            }
        }
        "comparison" => {
            for case in 0..cases {
                let g_lo: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
                let bump: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
                let g_hi = [g_lo[0] + bump[0], g_lo[1] + bump[1], g_lo[2] + bump[2]];
                let (u_lo, _) =
                    solve_lazarus(&InfinityProblem::full(graph, g_lo).map_err(|e| e.to_string())?)
                        .map_err(|e| e.to_string())?;
                let (u_hi, _) =
                    solve_lazarus(&InfinityProblem::full(graph, g_hi).map_err(|e| e.to_string())?)
                        .map_err(|e| e.to_string())?;
                let bad = Subdomain::full(graph).closure().iter().any(|&x| {
                    u_lo.get(x).unwrap() > u_hi.get(x).unwrap() + SUITE_TOL
                });
                note(bad, &|| format!("case {case}: solution operator not monotone"));
            }
        }
        "harnack" => match fixed_field {
            Some(field) => {
                cases_run = 1;
                let dom = Subdomain::full(graph);
                let report =
                    infinity::verify_harnack_alternative(graph, field, dom.interior(), SUITE_TOL)
                        .map_err(|e| e.to_string())?;
                note(!report.ok, &|| format!("violations at {:?}", report.violations));
            }
            None => {
                for case in 0..cases {
                    let ctx = random_case(graph, &mut rng)?;
                    let report = infinity::verify_harnack_alternative(
                        graph,
                        &ctx.solution,
                        ctx.sub.interior(),
                        SUITE_TOL,
                    )
                    .map_err(|e| e.to_string())?;
                    note(!report.ok, &|| {
                        format!("case {case}: sign alternative fails at {:?}", report.violations)
                    });
                }
            }
        },
        "cc" => match fixed_field {
            Some(field) => {
                cases_run = 1;
                let dom = Subdomain::full(graph);
                let report =
                    infinity::verify_cc(&dom, field, SUITE_TOL).map_err(|e| e.to_string())?;
                note(!report.ok, &|| {
                    format!(
                        "cone violations at vertices {:?}",
                        report.violations.iter().map(|v| v.vertex).collect::<Vec<_>>()
                    )
                });
            }
            None => {
                for case in 0..cases {
                    let ctx = random_case(graph, &mut rng)?;
                    let report = infinity::verify_cc(&ctx.sub, &ctx.solution, SUITE_TOL)
                        .map_err(|e| e.to_string())?;
                    note(!report.ok, &|| {
                        format!(
                            "case {case}: cone violation at vertex {}",
                            report.violations[0].vertex
                        )
                    });
                }
            }
        },
        "am" => match fixed_field {
            Some(field) => {
                cases_run = 1;
                let dom = Subdomain::full(graph);
                let bad = dom.interior().iter().find(|&&x| {
                    !infinity::verify_am_local(graph, field, x, SUITE_TOL).unwrap_or(false)
                });
                note(bad.is_some(), &|| format!("midrange fails at {:?}", bad));
            }
            None => {
                for case in 0..cases {
                    let ctx = random_case(graph, &mut rng)?;
                    let bad = ctx.sub.interior().iter().find(|&&x| {
                        !infinity::verify_am_local(graph, &ctx.solution, x, SUITE_TOL)
                            .unwrap_or(false)
                    });
                    note(bad.is_some(), &|| format!("case {case}: midrange fails at {bad:?}"));
                }
            }
        },
        "sandwich" => {
            for case in 0..cases {
                let ctx = random_case(graph, &mut rng)?;
                let mut data = VertexField::undefined(graph);
                for &y in ctx.sub.boundary() {
                    data.set(y, ctx.solution.get(y).unwrap()).map_err(|e| e.to_string())?;
                }
                let (lower, upper) =
                    lipschitz::mcshane_whitney(&ctx.sub, &data).map_err(|e| e.to_string())?;
                let bad = ctx.sub.interior().iter().any(|&x| {
                    let u = ctx.solution.get(x).unwrap();
                    u < lower.get(x).unwrap() - SUITE_TOL || u > upper.get(x).unwrap() + SUITE_TOL
                });
                note(bad, &|| format!("case {case}: solution leaves the McShane sandwich"));
            }
        }
        "lip-slope" => match fixed_field {
            Some(field) => {
                cases_run = 1;
                let dom = Subdomain::full(graph);
                let check =
                    lipschitz::lip_equals_max_slope(&dom, field).map_err(|e| e.to_string())?;
                note(!check.ok, &|| {
                    format!("Lip {} vs max slope {}", check.lip.value, check.max_slope)
                });
            }
            None => {
                // The identity holds for arbitrary fields, not only solutions.
                for case in 0..cases {
                    let full = Subdomain::full(graph);
                    let interior = sample::connected_interior(graph, &mut rng, full.interior());
                    let sub = Subdomain::new(graph, interior).map_err(|e| e.to_string())?;
                    let mut u = VertexField::undefined(graph);
                    for &x in &sub.closure() {
                        u.set(x, rng.gen::<f64>()).map_err(|e| e.to_string())?;
                    }
                    let check =
                        lipschitz::lip_equals_max_slope(&sub, &u).map_err(|e| e.to_string())?;
                    note(!check.ok, &|| {
                        format!(
                            "case {case}: Lip {} vs max slope {}",
                            check.lip.value, check.max_slope
                        )
                    });
                }
            }
        },
        "distance" => {
            for case in 0..cases {
                let full = Subdomain::full(graph);
                let interior = sample::connected_interior(graph, &mut rng, full.interior());
                let sub = Subdomain::new(graph, interior).map_err(|e| e.to_string())?;
                let apex = sub.boundary()[rng.gen_range(0..sub.boundary().len())];
                let dist = sub.restricted_sssp(apex);
                let mut d_field = VertexField::undefined(graph);
                let mut neg_d = VertexField::undefined(graph);
                for &i in &sub.closure() {
                    let d = dist[i].unwrap() as f64 * graph.mesh_size();
                    d_field.set(i, d).map_err(|e| e.to_string())?;
                    neg_d.set(i, -d).map_err(|e| e.to_string())?;
                }
                let bad = sub.interior().iter().any(|&x| {
                    let lap_d = infinity::infinity_laplacian(graph, &d_field, x).unwrap();
                    let lap_n = infinity::infinity_laplacian(graph, &neg_d, x).unwrap();
                    lap_d > SUITE_TOL || lap_n < -SUITE_TOL
                });
                note(bad, &|| format!("case {case}: distance cone not a supersolution"));
            }
        }
        "linearity" => {
            for case in 0..cases {
                let ctx = random_case(graph, &mut rng)?;
                let report = lipschitz::lip_boundary(&ctx.sub, &ctx.solution)
                    .map_err(|e| e.to_string())?;
                let Some(w) = report.witness else { continue };
                let (x, y) = w.pair;
                let geodesics = match ctx.sub.all_geodesics(x, y, 4096) {
                    Ok(paths) => paths,
                    Err(e) => {
                        note(true, &|| format!("case {case}: {e}"));
                        continue;
                    }
                };
                let ux = ctx.solution.get(x).unwrap();
                let uy = ctx.solution.get(y).unwrap();
                let bad = geodesics.iter().any(|path| {
                    let total = path.hops() as f64;
                    path.vertices().iter().enumerate().any(|(i, &p)| {
                        let expected = (i as f64 * uy + (total - i as f64) * ux) / total;
                        (ctx.solution.get(p).unwrap() - expected).abs() > SUITE_TOL
                    })
                });
                note(bad, &|| format!("case {case}: solution not linear on a maximal geodesic"));
            }
        }
        "amle" => {
            let problem = InfinityProblem::full(graph, boundary).map_err(|e| e.to_string())?;
            let (u, _) = solve_lazarus(&problem).map_err(|e| e.to_string())?;
            let dom = Subdomain::full(graph);
            let report = infinity::verify_amle_global(&dom, &u, cases, rng.gen(), SUITE_TOL)
                .map_err(|e| e.to_string())?;
            note(!report.ok, &|| format!("violations: {:?}", report.violations));
        }
        "monotone-f" => {
            for case in 0..cases {
                let mut u = VertexField::undefined(graph);
                for i in 0..graph.vertex_count() {
                    u.set(i, rng.gen::<f64>()).map_err(|e| e.to_string())?;
                }
                let (ok, table) = lab::monotone_functional_check(graph, &u, graph.level())
                    .map_err(|e| e.to_string())?;
                note(!ok, &|| format!("case {case}: slope functional not monotone: {table:?}"));
            }
        }
        "p-local" => {
            let exponents = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
            for case in 0..cases {
                let triple: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
                let p = exponents[case % exponents.len()];
                let problem = PEnergyProblem::from_corner_values(graph, p, triple)
                    .map_err(|e| e.to_string())?;
                let (u, _) =
                    pharm::solve_p_harmonic(&problem, None, None, None).map_err(|e| e.to_string())?;
                let dom = Subdomain::full(graph);
                let mut bad = false;
                for &x in dom.interior() {
                    let here = pharm::local_p_energy(graph, &u, x, p).unwrap();
                    let ux = u.get(x).unwrap();
                    for step in [-0.05, -0.01, 0.01, 0.05] {
                        let mut v = u.clone();
                        v.set(x, ux + step).unwrap();
                        if here > pharm::local_p_energy(graph, &v, x, p).unwrap() + 1e-7 {
                            bad = true;
                        }
                    }
                }
                note(bad, &|| format!("case {case}: p={p} star energy not locally minimal"));
            }
        }
        other => return Err(format!("unknown suite {other:?}")),
    }

    Ok(SuiteOutcome {
        name: name.to_string(),
        cases: cases_run,
        violations,
        pass: violations == 0,
        witness,
    })
}

fn boundary_range(ctx: &CaseContext) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in ctx.sub.boundary() {
        let v = ctx.solution.get(y).unwrap();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_serialization() {
        let cli = Cli::try_parse_from([
            "gasket", "solve", "--level", "2", "--boundary", "0,0.2,1", "--method", "lazarus",
            "--out", "u.json",
        ])
        .unwrap();
        let json = serde_json::to_string(&cli).unwrap();
        let back: Cli = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cli);

        let cli = Cli::try_parse_from([
            "gasket",
            "verify",
            "--level",
            "3",
            "--boundary",
            "0,0.3,1",
            "--suite",
            "cc,harnack",
            "--cases",
            "7",
            "--seed",
            "9",
        ])
        .unwrap();
        let json = serde_json::to_string(&cli).unwrap();
        let back: Cli = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cli);
    }

    #[test]
    fn triple_parsing() {
        assert_eq!(parse_triple("0,0.2,1").unwrap(), [0.0, 0.2, 1.0]);
        assert_eq!(parse_triple(" 1 , -2 , 3.5 ").unwrap(), [1.0, -2.0, 3.5]);
        assert!(parse_triple("1,2").is_err());
        assert!(parse_triple("a,b,c").is_err());
        assert!(parse_triple("1,2,inf").is_err());
    }

    #[test]
    fn normalization_reflects_large_middles() {
        let (out, t) = normalize_triple([0.0, 0.8, 1.0]);
        let t = t.unwrap();
        assert!(t.reflected);
        assert_eq!(out, [1.0, 0.19999999999999996, 0.0]);
        // Inversion maps the normalized solution back.
        assert!((t.invert(1.0) - 0.0).abs() < 1e-15);
        assert!((t.invert(0.0) - 1.0).abs() < 1e-15);

        let (out, t) = normalize_triple([2.0, 2.5, 4.0]);
        let t = t.unwrap();
        assert!(!t.reflected);
        assert_eq!(out, [0.0, 0.25, 1.0]);
        assert!((t.invert(0.25) - 2.5).abs() < 1e-15);

        let (_, t) = normalize_triple([1.0, 1.0, 1.0]);
        assert!(t.is_none());
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!(parse_suites("all").unwrap().len(), ALL_SUITES.len());
        assert_eq!(parse_suites("cc,harnack").unwrap(), vec!["cc", "harnack"]);
        assert!(parse_suites("").unwrap().is_empty());
        assert!(parse_suites("nope").is_err());
    }

    #[test]
    fn small_verify_run_passes() {
        let graph = PreFractalGraph::build(2).unwrap();
        let names: Vec<String> =
            ["max-principle", "cc", "lip-slope", "distance"].iter().map(|s| s.to_string()).collect();
        let report = verify_suite(&graph, [0.0, 0.2, 1.0], &names, 10, 7, None).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn corrupted_field_fails_cc_suite() {
        let graph = PreFractalGraph::build(2).unwrap();
        let problem = InfinityProblem::full(&graph, [0.0, 0.2, 1.0]).unwrap();
        let (mut u, _) = solve_lazarus(&problem).unwrap();
        let dom = Subdomain::full(&graph);
        let x = dom.interior()[3];
        u.set(x, u.get(x).unwrap() + 0.4).unwrap();
        let names = vec!["cc".to_string()];
        let report = verify_suite(&graph, [0.0, 0.2, 1.0], &names, 10, 7, Some(&u)).unwrap();
        assert!(!report.pass);
        assert!(report.suites[0].witness.is_some());
    }
}
