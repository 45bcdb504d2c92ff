//! The command-line front end: read a problem description from JSON, run
//! one of the hierarchies (or the sampling oracles) over a degree sweep,
//! and leave the results on disk as CSV tables and a versioned JSON report.
//!
//! Problem files are deliberately plain: variable count, bounding set,
//! constraint polynomials as text in the `x1..xn` grammar, and optional
//! extras (an objective density `p`, an integrand `f`, a path to weight
//! moments in CSV form). Everything a run produces is written under one
//! output directory so that a sweep is exactly reproducible: with a fixed
//! seed the CSV artifacts are byte-identical across re-runs, apart from the
//! wall-clock `seconds` column of `bounds.csv`, which reports real time.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{export_sdpa, SolveOptions, SolveStatus};
use crate::conic::export_mps;
use crate::lp::{solve_lp_level, LpError};
use crate::moments::{BoundingKind, BoundingSet, MomentError, MomentVector};
use crate::oracles::{mc_volume, quad_moments_on_k, McEstimate};
use crate::poly::{parse_poly, Basis, MultiPoly, PolyError};
use crate::sdp::{
    extract_certificate, solve_degree, BoundReport, DegreeSolution, Mode, ProblemSpec, SdpError,
};
use rayon::prelude::*;

/// Schema version stamped into every `report.json`.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("problem file is not valid JSON (line {line}, column {column}): {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("in constraint or polynomial field: {0}")]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Conic(#[from] crate::conic::ConicError),
    #[error("{0}")]
    Config(String),
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// What kind of run to perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunMode {
    /// Semidefinite upper bounds on `∫_K p dλ`.
    Upper,
    /// Lower bounds on `vol(K)` through the complement set.
    Lower,
    /// Linear-programming upper bounds on `vol(K)`.
    Lp,
    /// Upper bounds on `∫_K f·w dx` with the weight given by its moments.
    Integrate,
    /// No relaxation: run the Monte Carlo and quadrature oracles only.
    Oracle,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunMode::Upper => "upper",
            RunMode::Lower => "lower",
            RunMode::Lp => "lp",
            RunMode::Integrate => "integrate",
            RunMode::Oracle => "oracle",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Monomial,
    Chebyshev,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Basis {
        match b {
            BasisArg::Monomial => Basis::Monomial,
            BasisArg::Chebyshev => Basis::Chebyshev,
        }
    }
}

/// Everything one invocation needs; `clap` fills it from argv, tests build
/// it directly.
#[derive(Debug, Parser)]
#[command(
    name = "semivol",
    about = "Bounds on volumes and integrals over semi-algebraic sets via moment relaxations"
)]
pub struct RunConfig {
    /// Problem description (JSON).
    pub problem: PathBuf,

    /// What to run over the degree sweep.
    #[arg(long, value_enum)]
    pub mode: RunMode,

    /// Relaxation degrees, strictly increasing (even for SDP modes; any
    /// positive levels for the LP mode).
    #[arg(long, value_delimiter = ',')]
    pub degrees: Vec<u32>,

    /// Polynomial basis for moments and matrices.
    #[arg(long, value_enum, default_value = "monomial")]
    pub basis: BasisArg,

    /// Density to maximize: `one`, `g-product` (the product of all
    /// constraints), or `custom` (the problem file's `p`).
    #[arg(long, default_value = "one")]
    pub objective: String,

    /// Output directory for bounds.csv, moments.csv, certificate_grid.csv
    /// and report.json.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Seed for every randomized component (Monte Carlo oracle).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Monte Carlo sample count for the oracle mode.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,

    /// Relative duality-gap target for the conic solver.
    #[arg(long)]
    pub solver_tol: Option<f64>,

    /// Also write each SDP relaxation in SDPA sparse format (qd_t<d>.dat-s).
    #[arg(long, default_value_t = false)]
    pub export_sdpa: bool,

    /// Also write each LP relaxation in fixed MPS format (ld_<d>.mps).
    #[arg(long, default_value_t = false)]
    pub export_mps: bool,
}

#[derive(Debug, Deserialize)]
struct BoundingFile {
    kind: String,
    a: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    n: usize,
    bounding: BoundingFile,
    constraints: Vec<String>,
    /// Optional objective density for `--objective custom`.
    p: Option<String>,
    /// Optional integrand for the integrate mode.
    f: Option<String>,
    /// Optional path (relative to the problem file) to weight moments in
    /// the `alpha_1,…,alpha_n,value` CSV schema.
    weight_moments_csv: Option<String>,
}

/// A parsed problem file: the validated spec plus the optional pieces whose
/// use depends on the run mode.
#[derive(Debug, Clone)]
pub struct ParsedProblem {
    pub spec: ProblemSpec,
    pub p: Option<MultiPoly>,
    pub f: Option<MultiPoly>,
    pub weight_moments_csv: Option<String>,
}

/// Parse and validate a problem file.
///
/// The constraint strings go through the polynomial grammar (so errors come
/// back with line/column positions); the bounding set is checked for sane
/// dimensions and half-width.
pub fn parse_problem(text: &str) -> Result<ParsedProblem, CliError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let kind = match file.bounding.kind.as_str() {
        "box" => BoundingKind::Box,
        "ball" => BoundingKind::Ball,
        other => return Err(bad(format!("unknown bounding kind {other:?} (box | ball)"))),
    };
    let bounding = BoundingSet {
        kind,
        n: file.n,
        a: file.bounding.a,
    };
    let constraints = file
        .constraints
        .iter()
        .map(|s| parse_poly(s, file.n))
        .collect::<Result<Vec<_>, _>>()?;
    if constraints.is_empty() {
        return Err(bad("at least one constraint polynomial is required"));
    }
    let spec = ProblemSpec::new(bounding, constraints)?;
    let p = file.p.as_deref().map(|s| parse_poly(s, file.n)).transpose()?;
    let f = file.f.as_deref().map(|s| parse_poly(s, file.n)).transpose()?;
    Ok(ParsedProblem {
        spec,
        p,
        f,
        weight_moments_csv: file.weight_moments_csv,
    })
}

/// Serializable mirror of [`BoundReport`], minus the bulky moment vector.
#[derive(Debug, Serialize)]
struct BoundRow {
    degree: u32,
    primal: f64,
    dual: f64,
    gap: f64,
    status: String,
    seconds: f64,
}

impl BoundRow {
    fn from_report(r: &BoundReport) -> Self {
        BoundRow {
            degree: r.degree,
            primal: r.primal,
            dual: r.dual,
            gap: r.gap,
            status: r.status.to_string(),
            seconds: r.seconds,
        }
    }
}

#[derive(Debug, Serialize)]
struct OracleJson {
    volume: f64,
    std_error: f64,
    ci_low: f64,
    ci_high: f64,
    hits: u64,
    samples: u64,
    quad_volume: f64,
    quad_error_estimate: f64,
    quad_nodes: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    schema_version: u32,
    mode: String,
    problem: String,
    basis: String,
    objective: String,
    degrees: Vec<u32>,
    seed: u64,
    bounds: Vec<BoundRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleJson>,
    warnings: Vec<String>,
}

/// Execute one configured run and write its artifacts.
///
/// Returns the process exit code: 0 when every solve came back `Optimal`,
/// 2 when any hit its numerical limit, 1 when a solve failed outright (the
/// failure is still recorded in `report.json`).
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    let text = fs::read_to_string(&config.problem).map_err(|e| CliError::Io {
        path: config.problem.clone(),
        source: e,
    })?;
    let parsed = parse_problem(&text)?;
    validate_config(config, &parsed)?;
    let spec = configure_spec(config, &parsed)?;

    fs::create_dir_all(&config.out).map_err(|e| CliError::Io {
        path: config.out.clone(),
        source: e,
    })?;

    let mut report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        mode: config.mode.to_string(),
        problem: config.problem.display().to_string(),
        basis: Basis::from(config.basis).to_string(),
        objective: config.objective.clone(),
        degrees: config.degrees.clone(),
        seed: config.seed,
        bounds: Vec::new(),
        oracle: None,
        warnings: Vec::new(),
    };
    if let Some(w) = spec.containment_warning(20_000, config.seed) {
        report.warnings.push(w);
    }

    let exit = match config.mode {
        RunMode::Oracle => run_oracle(config, &spec, &mut report)?,
        RunMode::Lp => run_lp(config, &spec, &mut report)?,
        RunMode::Upper | RunMode::Lower | RunMode::Integrate => {
            run_sdp(config, &spec, &mut report)?
        }
    };

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_artifact(&config.out.join("report.json"), &(json + "\n"))?;
    Ok(exit)
}

/// Mode/flag/field compatibility, checked before any solve starts.
fn validate_config(config: &RunConfig, parsed: &ParsedProblem) -> Result<(), CliError> {
    match config.mode {
        RunMode::Oracle => {}
        _ => {
            if config.degrees.is_empty() {
                return Err(bad("--degrees is required for every mode except oracle"));
            }
        }
    }
    if !config.degrees.windows(2).all(|w| w[0] < w[1]) {
        return Err(bad("--degrees must be strictly increasing"));
    }
    match config.mode {
        RunMode::Upper | RunMode::Lower | RunMode::Integrate => {
            if let Some(&t) = config.degrees.iter().find(|&&t| t == 0 || t % 2 != 0) {
                return Err(bad(format!(
                    "degree {t}: semidefinite levels take even degrees ≥ 2"
                )));
            }
        }
        RunMode::Lp => {
            if config.degrees.contains(&0) {
                return Err(bad("LP levels start at 1"));
            }
            if config.basis != BasisArg::Monomial {
                return Err(bad("the LP hierarchy works in the monomial basis only"));
            }
        }
        RunMode::Oracle => {}
    }
    match config.objective.as_str() {
        "one" => {}
        "g-product" | "custom" => {
            if config.mode != RunMode::Upper {
                return Err(bad(format!(
                    "--objective {} only applies to --mode upper (volume bounds and the \
                     other modes fix their own density)",
                    config.objective
                )));
            }
            if config.objective == "custom" && parsed.p.is_none() {
                return Err(bad("--objective custom needs a `p` field in the problem file"));
            }
        }
        other => {
            return Err(bad(format!(
                "unknown objective {other:?} (one | g-product | custom)"
            )));
        }
    }
    if config.mode == RunMode::Integrate && parsed.f.is_none() {
        return Err(bad("--mode integrate needs an `f` field in the problem file"));
    }
    if config.mode == RunMode::Lower && parsed.spec.constraints.len() != 1 {
        return Err(bad(
            "--mode lower handles a single constraint (the complement of one sublevel set)",
        ));
    }
    if config.export_sdpa && !matches!(config.mode, RunMode::Upper | RunMode::Lower | RunMode::Integrate) {
        return Err(bad("--export-sdpa applies to the semidefinite modes"));
    }
    if config.export_mps && config.mode != RunMode::Lp {
        return Err(bad("--export-mps applies to --mode lp"));
    }
    Ok(())
}

/// Assemble the solver-facing spec from the parsed file and the flags.
fn configure_spec(config: &RunConfig, parsed: &ParsedProblem) -> Result<ProblemSpec, CliError> {
    let mut spec = parsed.spec.clone().with_basis(config.basis.into());
    match config.objective.as_str() {
        "g-product" => {
            let mut p = MultiPoly::one(spec.n, Basis::Monomial);
            for g in &parsed.spec.constraints {
                p = p.multiply(g)?;
            }
            spec = spec.with_objective(p.convert(config.basis.into()));
        }
        "custom" => {
            let p = parsed.p.clone().expect("validated");
            spec = spec.with_objective(p.convert(config.basis.into()));
        }
        _ => {}
    }
    match config.mode {
        RunMode::Lower => spec = spec.with_mode(Mode::ComplementLower),
        RunMode::Integrate => {
            let f = parsed.f.clone().expect("validated");
            spec = spec.with_mode(Mode::Integrate {
                integrand: f.convert(config.basis.into()),
            });
            let t_max = *config.degrees.last().expect("validated nonempty");
            let y2 = match &parsed.weight_moments_csv {
                Some(rel) => {
                    let path = config
                        .problem
                        .parent()
                        .unwrap_or_else(|| Path::new("."))
                        .join(rel);
                    let text = fs::read_to_string(&path).map_err(|e| CliError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    MomentVector::import_csv(text.as_bytes(), Basis::Monomial)?
                }
                // No weight file means w ≡ 1: plain Lebesgue moments on B.
                None => spec.reference_moments(t_max),
            };
            spec = spec.with_weight_moments(y2);
        }
        _ => {}
    }
    Ok(spec)
}

fn solver_options(config: &RunConfig) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if let Some(tol) = config.solver_tol {
        opts.tol_gap = tol;
    }
    opts
}

fn run_oracle(config: &RunConfig, spec: &ProblemSpec, report: &mut Report) -> Result<i32, CliError> {
    let est = mc_volume(spec, config.samples.max(1), config.seed);
    let degree = config.degrees.iter().copied().max().unwrap_or(4);
    let nodes = default_quad_nodes(spec.n);
    let quad = quad_moments_on_k(spec, degree, nodes);
    report.oracle = Some(OracleJson {
        volume: est.volume,
        std_error: est.std_error,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        hits: est.hits,
        samples: est.samples,
        quad_volume: quad.moments.values()[0],
        quad_error_estimate: quad.volume_change,
        quad_nodes: quad.nodes,
    });
    let mut csv = Vec::new();
    quad.moments.export_csv(&mut csv)?;
    write_artifact(
        &config.out.join("moments.csv"),
        std::str::from_utf8(&csv).expect("ascii"),
    )?;
    print_oracle(&est, &quad.moments.values()[0], quad.volume_change);
    Ok(0)
}

fn run_lp(config: &RunConfig, spec: &ProblemSpec, report: &mut Report) -> Result<i32, CliError> {
    let opts = solver_options(config);
    let solved: Vec<_> = config
        .degrees
        .par_iter()
        .map(|&d| solve_lp_level(spec, d, &opts))
        .collect::<Result<_, _>>()?;

    for (r, _) in &solved {
        print_bound(r);
        report.bounds.push(BoundRow::from_report(r));
    }
    write_bounds_csv(&config.out, solved.iter().map(|(r, _)| r))?;

    let (last, _) = solved.last().expect("validated nonempty");
    write_moments_csv(&config.out, spec, &last.moments)?;

    if config.export_mps {
        for (r, relax) in &solved {
            let text = export_mps(&relax.conic)?;
            write_artifact(&config.out.join(format!("ld_{}.mps", r.degree)), &text)?;
        }
    }
    Ok(exit_code(solved.iter().map(|(r, _)| r.status)))
}

fn run_sdp(config: &RunConfig, spec: &ProblemSpec, report: &mut Report) -> Result<i32, CliError> {
    let opts = solver_options(config);
    let solved: Vec<DegreeSolution> = config
        .degrees
        .par_iter()
        .map(|&t| solve_degree(spec, t, &opts))
        .collect::<Result<_, _>>()?;

    for s in &solved {
        print_bound(&s.report);
        report.bounds.push(BoundRow::from_report(&s.report));
    }
    write_bounds_csv(&config.out, solved.iter().map(|s| &s.report))?;

    let last = solved.last().expect("validated nonempty");
    write_moments_csv(&config.out, spec, &last.report.moments)?;

    match extract_certificate(&last.relaxation, &last.raw) {
        Ok(cert) => write_certificate_grid(&config.out, spec, &cert.h)?,
        Err(e) => report
            .warnings
            .push(format!("certificate not extracted at degree {}: {e}", last.report.degree)),
    }

    if config.export_sdpa {
        for s in &solved {
            let text = export_sdpa(&s.relaxation.conic);
            write_artifact(
                &config.out.join(format!("qd_t{}.dat-s", s.report.degree)),
                &text,
            )?;
        }
    }
    Ok(exit_code(solved.iter().map(|s| s.report.status)))
}

fn exit_code(statuses: impl Iterator<Item = SolveStatus>) -> i32 {
    let mut code = 0;
    for s in statuses {
        match s {
            SolveStatus::Optimal => {}
            SolveStatus::NumericalLimit => code = code.max(2),
            SolveStatus::Infeasible | SolveStatus::Unbounded => return 1,
        }
    }
    code
}

/// Per-axis node counts that keep the masked-quadrature oracle at or under
/// roughly 1e−3 volume error (1D boundary cells have nothing to average
/// against, so the line needs far more nodes than the plane).
fn default_quad_nodes(n: usize) -> usize {
    match n {
        1 => 2048,
        2 => 512,
        _ => 64,
    }
}

fn write_artifact(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_bounds_csv<'a>(
    out: &Path,
    reports: impl Iterator<Item = &'a BoundReport>,
) -> Result<(), CliError> {
    let mut text = String::from("degree,primal,dual,gap,status,seconds\n");
    for r in reports {
        text.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            r.degree, r.primal, r.dual, r.gap, r.status, r.seconds
        ));
    }
    write_artifact(&out.join("bounds.csv"), &text)
}

/// Recovered moments at the deepest level, side by side with the masked
/// quadrature oracle. Both columns are plain monomial moments whatever the
/// working basis, so the file is directly comparable across runs.
fn write_moments_csv(out: &Path, spec: &ProblemSpec, recovered: &MomentVector) -> Result<(), CliError> {
    let recovered = recovered.to_basis(Basis::Monomial);
    let oracle = quad_moments_on_k(spec, recovered.degree(), default_quad_nodes(spec.n));
    let oracle = oracle.moments.to_basis(Basis::Monomial);
    let mut text = String::new();
    for i in 1..=spec.n {
        text.push_str(&format!("alpha_{i},"));
    }
    text.push_str("recovered,oracle\n");
    for (alpha, v) in recovered.iter() {
        for e in &alpha.0 {
            text.push_str(&format!("{e},"));
        }
        let o = oracle.get(alpha).unwrap_or(f64::NAN);
        text.push_str(&format!("{v},{o}\n"));
    }
    write_artifact(&out.join("moments.csv"), &text)
}

/// Sample the certificate polynomial `h` on a regular grid over the
/// bounding box: 401 points in one dimension, 201 per axis in two. Higher
/// dimensions are skipped (the file would dwarf everything else).
fn write_certificate_grid(out: &Path, spec: &ProblemSpec, h: &MultiPoly) -> Result<(), CliError> {
    let a = spec.bounding.a;
    let mut text = String::new();
    match spec.n {
        1 => {
            text.push_str("x1,h\n");
            for i in 0..401 {
                let x = -a + 2.0 * a * i as f64 / 400.0;
                text.push_str(&format!("{},{}\n", x, h.eval(&[x])));
            }
        }
        2 => {
            text.push_str("x1,x2,h\n");
            for i in 0..201 {
                let x = -a + 2.0 * a * i as f64 / 200.0;
                for j in 0..201 {
                    let y = -a + 2.0 * a * j as f64 / 200.0;
                    text.push_str(&format!("{},{},{}\n", x, y, h.eval(&[x, y])));
                }
            }
        }
        _ => return Ok(()),
    }
    write_artifact(&out.join("certificate_grid.csv"), &text)
}

fn print_bound(r: &BoundReport) {
    println!(
        "degree {:>3}  bound {:>14.9}  gap {:>9.2e}  {}  ({:.3}s)",
        r.degree, r.primal, r.gap, r.status, r.seconds
    );
}

fn print_oracle(est: &McEstimate, quad_volume: &f64, quad_err: f64) {
    println!(
        "monte carlo: {:.6} ± {:.6} (99% CI [{:.6}, {:.6}], {} hits / {} samples)",
        est.volume, est.std_error, est.ci_low, est.ci_high, est.hits, est.samples
    );
    println!("quadrature:  {quad_volume:.6} (node-doubling shift {quad_err:.2e})");
}

/// What the binary does: parse argv, run, exit.
pub fn main_entry() -> i32 {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
