//! Batch entry point: `verify`, `sweep`, `levelsets` and `report`.
//!
//! Exit codes: 0 when every suite passes, 1 when a suite fails, 2 for
//! configuration errors, including violated theorem hypotheses of an
//! explicitly requested suite.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::ProblemConfig;
use crate::levelset::{ball_boundary, poincare, trace_level_sets, LevelCurve};
use crate::quadrature::{q_classical, q_moving, ClassicalKind, Integral, Region};
use crate::spaceform::{Curvature, SpaceForm};
use crate::surfaces::{CatenoidPlacement, Surface, SurfacePoint, SurfaceSpec};
use crate::vector::Vector;
use crate::verifier::{
    check_area_estimates, check_comparison_chain, check_divergence_identities, check_lemma_conditions,
    check_mean_curvature_pairing, check_metric_splitting, check_monotonicity, config_hash, SuiteKind,
    SuiteResult,
};
use config::{RunConfig, SuiteName, Suites};
use output::{num, opt, timestamp, write_json, Table};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "movmono", version, about = "Numerical checks of monotonicity formulae for minimal submanifolds in space forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the selected suites and write report.json, report.csv and checks.csv.
    Verify(Options),
    /// Evaluate feasibility and Q over a grid of (curvature, R, s_y).
    Sweep(Options),
    /// Trace the level sets {f = t} in the slice through the axis.
    Levelsets(Options),
    /// Summarize an existing report.json.
    Report(Options),
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Run configuration (flat key = value, or JSON).
    #[arg(long, env = "MOVMONO_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, env = "MOVMONO_OUT")]
    pub out: Option<PathBuf>,
    /// Seed of the sampling suites; overrides `seed` in the config.
    #[arg(long, env = "MOVMONO_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for quadrature and sweeps.
    #[arg(long, env = "MOVMONO_THREADS")]
    pub threads: Option<usize>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (opts, f): (&Options, fn(&Options) -> Result<bool>) = match &cli.command {
        Command::Verify(o) => (o, cmd_verify),
        Command::Sweep(o) => (o, cmd_sweep),
        Command::Levelsets(o) => (o, cmd_levelsets),
        Command::Report(o) => (o, cmd_report),
    };
    let result = match opts.threads {
        Some(0) => Err(Error::config(0, "threads", "must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(0, "threads", e.to_string()))
            .and_then(|pool| pool.install(|| f(opts))),
        None => f(opts),
    };
    match result {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::Hypothesis(_)
        | Error::Precondition(_)
        | Error::Infeasible(_)
        | Error::Chart(_)
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_FAIL,
    }
}

fn is_gate(e: &Error) -> bool {
    matches!(e, Error::Hypothesis(_) | Error::Precondition(_))
}

pub fn load(opts: &Options) -> Result<RunConfig> {
    let path = opts
        .config
        .as_ref()
        .ok_or_else(|| Error::config(0, "config", "--config PATH is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub suite: SuiteName,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
    pub skipped: Vec<Skipped>,
    /// Seconds since the Unix epoch; not part of the reproducible body.
    pub timestamp: u64,
}

/// Runs one suite of the configuration.
pub fn run_suite(
    name: SuiteName,
    cfg: &RunConfig,
    problem: &ProblemConfig,
    surface: &Surface,
) -> Result<SuiteResult> {
    let policy = &cfg.policy;
    let seed = cfg.seed;
    match name {
        SuiteName::Divergence => check_divergence_identities(surface, problem, cfg.samples, seed),
        SuiteName::Metric => check_metric_splitting(problem, cfg.samples, seed),
        SuiteName::Lemma => check_lemma_conditions(surface, problem, &cfg.lemma_grid()?, cfg.lemma_samples, seed),
        SuiteName::ClassicalA => {
            check_monotonicity(surface, problem, SuiteKind::ClassicalA, &cfg.classical_grid()?, &[], policy)
        }
        SuiteName::ClassicalI => {
            check_monotonicity(surface, problem, SuiteKind::ClassicalI, &cfg.classical_grid()?, &[], policy)
        }
        SuiteName::ClassicalBoundary => check_monotonicity(
            surface,
            problem,
            SuiteKind::ClassicalBoundary,
            &cfg.classical_grid()?,
            &[],
            policy,
        ),
        SuiteName::Moving => {
            check_monotonicity(surface, problem, SuiteKind::Moving, &cfg.moving_grid()?, &cfg.excess_at, policy)
        }
        SuiteName::Area => check_area_estimates(surface, problem, policy),
        SuiteName::Chain => check_comparison_chain(surface, problem, &cfg.classical_grid()?, policy),
        SuiteName::Control => check_mean_curvature_pairing(surface, problem, cfg.control_t),
    }
}

fn failed_suite(name: SuiteName, surface: &Surface, problem: &ProblemConfig, e: &Error) -> SuiteResult {
    SuiteResult {
        suite: format!("{name:?}"),
        surface: surface.meta.name.clone(),
        checks: vec![crate::verifier::CheckRecord {
            name: "completed".into(),
            value: 0.0,
            threshold: 1.0,
            relation: crate::verifier::Relation::Equals,
            passed: false,
            detail: e.to_string(),
        }],
        passed: false,
        provenance: crate::verifier::Provenance {
            config_hash: config_hash(problem, Some(surface)),
            seed: None,
            policy: None,
            t_grid: Vec::new(),
            samples: 0,
            rejected: 0,
        },
        reports: Vec::new(),
    }
}

/// Runs the configured suites and assembles the report, without writing.
pub fn verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let problem = cfg.problem()?;
    let surface = cfg.build_surface(&problem)?;
    let (names, explicit) = match &cfg.suites {
        Suites::Auto => (SuiteName::ALL.to_vec(), false),
        Suites::List(v) => (v.clone(), true),
    };
    let mut suites = Vec::new();
    let mut skipped = Vec::new();
    for name in names {
        match run_suite(name, cfg, &problem, &surface) {
            Ok(r) => suites.push(r),
            Err(e) if is_gate(&e) && !explicit => skipped.push(Skipped {
                suite: name,
                reason: e.to_string(),
            }),
            Err(e) if is_gate(&e) => return Err(e),
            Err(e) => suites.push(failed_suite(name, &surface, &problem, &e)),
        }
    }
    // The output location is not part of what was computed.
    let config = RunConfig { out: None, ..cfg.clone() };
    Ok(VerifyReport {
        tool: "movmono".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
        config_hash: config_hash(&problem, Some(&surface)),
        seed: cfg.seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
        skipped,
        timestamp: timestamp(),
    })
}

/// `suite, t, q, q_error, q_prime, drop, slack, violated`; the interval
/// columns describe `[t_prev, t]` and are empty on the first row.
pub fn monotonicity_table(report: &VerifyReport) -> Table {
    let mut t = Table::new(&["suite", "t", "q", "q_error", "q_prime", "drop", "slack", "violated"]);
    for s in &report.suites {
        for r in &s.reports {
            for i in 0..r.t_grid.len() {
                let iv = i.checked_sub(1).map(|j| r.intervals[j]);
                t.row(&[
                    r.suite.clone(),
                    num(r.t_grid[i]),
                    num(r.q[i]),
                    num(r.q_error[i]),
                    num(r.q_prime[i]),
                    opt(iv.map(|v| v.drop)),
                    opt(iv.map(|v| v.slack)),
                    iv.map(|v| v.violated.to_string()).unwrap_or_default(),
                ]);
            }
        }
    }
    t
}

pub fn excess_table(report: &VerifyReport) -> Table {
    let mut t = Table::new(&["t", "boundary", "interior", "sum", "fd_derivative", "error", "consistent"]);
    for s in &report.suites {
        for r in &s.reports {
            for e in &r.excess {
                t.row(&[
                    num(e.t),
                    num(e.boundary),
                    num(e.interior),
                    num(e.sum),
                    num(e.fd_derivative),
                    num(e.error),
                    e.consistent().to_string(),
                ]);
            }
        }
    }
    t
}

pub fn checks_table(report: &VerifyReport) -> Table {
    let mut t = Table::new(&["suite", "surface", "check", "value", "relation", "threshold", "passed"]);
    for s in &report.suites {
        for c in &s.checks {
            t.row(&[
                s.suite.clone(),
                s.surface.clone(),
                c.name.clone(),
                num(c.value),
                format!("{:?}", c.relation),
                num(c.threshold),
                c.passed.to_string(),
            ]);
        }
    }
    t
}

pub fn print_summary(report: &VerifyReport) {
    for s in &report.suites {
        println!("{} {} on {}", if s.passed { "PASS" } else { "FAIL" }, s.suite, s.surface);
        for c in s.failed_checks() {
            println!("    {}: {} ({:?} {}) {}", c.name, c.value, c.relation, c.threshold, c.detail);
        }
    }
    for s in &report.skipped {
        println!("SKIP {:?}: {}", s.suite, s.reason);
    }
}

pub fn cmd_verify(opts: &Options) -> Result<bool> {
    let cfg = load(opts)?;
    let report = verify(&cfg)?;
    let dir = out_dir(&cfg);
    write_json(&dir.join("report.json"), &report)?;
    monotonicity_table(&report).write(&dir.join("report.csv"))?;
    checks_table(&report).write(&dir.join("checks.csv"))?;
    excess_table(&report).write(&dir.join("excess.csv"))?;
    print_summary(&report);
    Ok(report.passed)
}

/// The configured surface moved so that its marked point is `gamma(s)`.
pub fn recentre(spec: &SurfaceSpec, s: f64) -> SurfaceSpec {
    let mut spec = spec.clone();
    match &mut spec {
        SurfaceSpec::GeodesicDisk { centre_s, .. }
        | SurfaceSpec::Helicoid { centre_s, .. }
        | SurfaceSpec::SphericalCap { centre_s, .. }
        | SurfaceSpec::PerturbedDisk { centre_s, .. }
        | SurfaceSpec::CrossingDisks { centre_s, .. }
        | SurfaceSpec::Catenoid {
            placement: CatenoidPlacement::Through { centre_s, .. },
            ..
        } => *centre_s = s,
        _ => {}
    }
    spec
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub curvature: i64,
    pub radius: f64,
    pub s_y: f64,
    pub feasible: bool,
    /// `k cs(R + s_y)^2 - 2` for curvature `+1`.
    pub sphere_slack: Option<f64>,
    pub q: Vec<Option<f64>>,
    /// `Q` at the last level minus `Q` at the first.
    pub monotone_margin: Option<f64>,
    /// `|Sigma cap B_R| / |B^k_{r(y)}| - 1`.
    pub area_margin: Option<f64>,
    /// For `s_y = 0`: `max |Q_{i,j}(t) - Q_classical(A^{-1}(t A(R)))|`.
    pub classical_gap: Option<f64>,
    pub reason: String,
}

fn sweep_row(cfg: &RunConfig, curvature: i64, radius: f64, s_y: f64) -> SweepRow {
    let mut row = SweepRow {
        curvature,
        radius,
        s_y,
        feasible: false,
        sphere_slack: (curvature == 1).then(|| cfg.k as f64 * (radius + s_y).cos().powi(2) - 2.0),
        q: vec![None; cfg.sweep.t.len()],
        monotone_margin: None,
        area_margin: None,
        classical_gap: None,
        reason: String::new(),
    };
    if let Err(e) = fill_sweep_row(cfg, &mut row) {
        row.reason = e.to_string();
    }
    row
}

fn fill_sweep_row(cfg: &RunConfig, row: &mut SweepRow) -> Result<()> {
    let kappa = Curvature::from_sign(row.curvature)?;
    let form = SpaceForm::new(kappa, cfg.n)?;
    let regime = crate::fibration::Regime::new(cfg.weight_i, cfg.weight_j)?;
    let problem = ProblemConfig::new(form, cfg.k, row.radius, row.s_y, regime)?;
    problem.check_regime()?;
    // the pointwise condition, independent of the closed-form sphere test
    problem.check_f_prime_condition()?;
    row.feasible = true;
    if cfg.sweep.t.is_empty() {
        return Ok(());
    }
    let surface = recentre(&cfg.surface, row.s_y).build(&problem)?;
    let policy = &cfg.policy;
    let mut qs = Vec::new();
    for (slot, &t) in row.q.iter_mut().zip(&cfg.sweep.t) {
        let q = q_moving(&surface, &problem, t, policy)?.q;
        *slot = Some(q);
        qs.push((t, q));
    }
    if let (Some(first), Some(last)) = (qs.first(), qs.last()) {
        row.monotone_margin = Some(last.1 - first.1);
    }
    if surface.check_contains(problem.prescribed(), 1e-8).is_ok() {
        let region = Region::Ball {
            centre: problem.origin,
            radius: problem.radius,
        };
        let one = |_: &SurfacePoint| Ok(Vector::from_slice(&[1.0]));
        let area: Integral = crate::quadrature::integrate(&surface, &region, 1, policy, &one)?;
        row.area_margin = Some(area.value[0] / problem.reference_area() - 1.0);
    }
    if row.s_y == 0.0 {
        let kind = if cfg.weight_i == 1 {
            ClassicalKind::Area
        } else {
            ClassicalKind::Tangential
        };
        let p = problem.profile();
        let mut gap = 0.0_f64;
        for &(t, q) in &qs {
            let radius = p.inverse(t * p.area_unchecked(problem.radius))?;
            let c = q_classical(&surface, &problem, radius.min(problem.radius), kind, policy)?.q;
            gap = gap.max((q - c).abs());
        }
        row.classical_gap = Some(gap);
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let radii = cfg
        .sweep
        .radius
        .resolve(Vec::new)
        .map_err(|e| Error::config(cfg.line("sweep.R"), "sweep.R", e.to_string()))?;
    let fractions = cfg
        .sweep
        .s_y_fraction
        .resolve(Vec::new)
        .map_err(|e| Error::config(cfg.line("sweep.s_y_fraction"), "sweep.s_y_fraction", e.to_string()))?;
    if fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
        return Err(Error::config(
            cfg.line("sweep.s_y_fraction"),
            "sweep.s_y_fraction",
            "fractions of R must lie in [0, 1)",
        ));
    }
    for &c in &cfg.sweep.curvature {
        Curvature::from_sign(c).map_err(|e| Error::config(cfg.line("sweep.curvature"), "sweep.curvature", e.to_string()))?;
    }
    let mut combos = Vec::new();
    for &c in &cfg.sweep.curvature {
        for &r in &radii {
            combos.extend(fractions.iter().map(|&f| (c, r, f * r)));
        }
    }
    Ok(combos
        .par_iter()
        .map(|&(c, r, s)| sweep_row(cfg, c, r, s))
        .collect())
}

pub fn sweep_table(cfg: &RunConfig, rows: &[SweepRow]) -> Table {
    let q_names: Vec<String> = cfg.sweep.t.iter().map(|t| format!("q[t={t}]")).collect();
    let mut header = vec!["curvature", "R", "s_y", "feasible", "sphere_slack"];
    header.extend(q_names.iter().map(String::as_str));
    header.extend(["monotone_margin", "area_margin", "classical_gap", "reason"]);
    let mut t = Table::new(&header);
    for r in rows {
        let mut cells = vec![
            r.curvature.to_string(),
            num(r.radius),
            num(r.s_y),
            r.feasible.to_string(),
            opt(r.sphere_slack),
        ];
        cells.extend(r.q.iter().map(|q| opt(*q)));
        cells.extend([opt(r.monotone_margin), opt(r.area_margin), opt(r.classical_gap), r.reason.clone()]);
        t.row(&cells);
    }
    t
}

pub fn cmd_sweep(opts: &Options) -> Result<bool> {
    let cfg = load(opts)?;
    let rows = sweep(&cfg)?;
    let dir = out_dir(&cfg);
    sweep_table(&cfg, &rows).write(&dir.join("sweep.csv"))?;
    #[derive(Serialize)]
    struct SweepReport<'a> {
        config: &'a RunConfig,
        rows: &'a [SweepRow],
        timestamp: u64,
    }
    write_json(
        &dir.join("sweep.json"),
        &SweepReport {
            config: &cfg,
            rows: &rows,
            timestamp: timestamp(),
        },
    )?;
    let feasible = rows.iter().filter(|r| r.feasible).count();
    println!("{} combinations, {feasible} feasible", rows.len());
    let negative = rows.iter().filter(|r| r.monotone_margin.is_some_and(|m| m < -1e-7)).count();
    if negative > 0 {
        println!("{negative} feasible rows with Q decreasing between the first and last level");
    }
    Ok(negative == 0 && rows.iter().all(|r| r.feasible || !r.reason.is_empty()))
}

/// `t, branch, coord1, coord2` rows for the traced curves, followed by
/// `dB_R` with `t = NaN` and `branch = -1`.
pub fn levelset_table(curves: &[LevelCurve], boundary: &[[f64; 2]], map: impl Fn([f64; 2]) -> [f64; 2]) -> Table {
    let mut t = Table::new(&["t", "branch", "coord1", "coord2"]);
    for c in curves {
        for (b, branch) in c.branches.iter().enumerate() {
            let mut pts = branch.points.clone();
            if branch.closed {
                if let Some(&first) = pts.first() {
                    pts.push(first);
                }
            }
            for p in pts {
                let q = map(p);
                t.row(&[num(c.t), b.to_string(), num(q[0]), num(q[1])]);
            }
        }
    }
    let mut pts = boundary.to_vec();
    if let Some(&first) = pts.first() {
        pts.push(first);
    }
    for p in pts {
        let q = map(p);
        t.row(&[num(f64::NAN), "-1".into(), num(q[0]), num(q[1])]);
    }
    t
}

pub fn cmd_levelsets(opts: &Options) -> Result<bool> {
    let cfg = load(opts)?;
    let problem = cfg.problem()?;
    let curves = trace_level_sets(&problem, &cfg.levelsets.t, &cfg.levelsets.grid())?;
    let boundary = ball_boundary(&problem, cfg.levelsets.boundary_samples.max(8));
    let dir = out_dir(&cfg);
    levelset_table(&curves, &boundary, |p| p).write(&dir.join("levelsets.csv"))?;
    if problem.kappa() == Curvature::Hyperbolic {
        levelset_table(&curves, &boundary, |p| poincare(p[0], p[1])).write(&dir.join("levelsets_poincare.csv"))?;
    }
    #[derive(Serialize)]
    struct Level {
        t: f64,
        branches: usize,
        closed: Vec<bool>,
        points: usize,
        note: Option<String>,
    }
    let levels: Vec<Level> = curves
        .iter()
        .map(|c| Level {
            t: c.t,
            branches: c.branches.len(),
            closed: c.branches.iter().map(|b| b.closed).collect(),
            points: c.branches.iter().map(|b| b.points.len()).sum(),
            note: c.note.clone(),
        })
        .collect();
    write_json(&dir.join("levelsets.json"), &levels)?;
    for c in &curves {
        match &c.note {
            Some(n) => println!("t = {}: {n}", c.t),
            None => println!("t = {}: {} branch(es)", c.t, c.branches.len()),
        }
    }
    Ok(true)
}

pub fn read_report(path: &Path) -> Result<VerifyReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_report(opts: &Options) -> Result<bool> {
    let dir = match (&opts.out, &opts.config) {
        (Some(d), _) => d.clone(),
        (None, Some(_)) => out_dir(&load(opts)?),
        (None, None) => PathBuf::from("out"),
    };
    let report = read_report(&dir.join("report.json"))?;
    if opts.config.is_some() {
        let cfg = load(opts)?;
        let problem = cfg.problem()?;
        let surface = cfg.build_surface(&problem)?;
        if config_hash(&problem, Some(&surface)) != report.config_hash {
            println!("note: report was produced from a different configuration");
        }
    }
    println!(
        "report {} (config {}, seed {}): {}",
        dir.join("report.json").display(),
        &report.config_hash[..12.min(report.config_hash.len())],
        report.seed,
        if report.passed { "PASS" } else { "FAIL" }
    );
    print_summary(&report);
    Ok(report.passed)
}
