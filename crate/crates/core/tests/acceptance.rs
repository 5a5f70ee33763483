//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::f64::consts::FRAC_PI_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use movmono::cli::config::RunConfig;
use movmono::cli::output::report_body;
use movmono::levelset::{hausdorff_to_circle, hausdorff_to_disc_intersection, trace_level_sets, SliceGrid};
use movmono::quadrature::{
    default_classical_grid, default_moving_grid, excess_decomposition, integrate, q_classical, q_moving,
    Classification, ClassicalKind, IntegrationPolicy, Region,
};
use movmono::surfaces::{CatenoidPlacement, CliffordPatch, Surface, SurfacePoint, SurfaceSpec};
use movmono::verifier::{
    check_area_estimates, check_comparison_chain, check_divergence_identities, check_lemma_conditions,
    check_metric_splitting, check_monotonicity, gate_suite, SuiteKind, SuiteResult,
};
use movmono::{Curvature, Error, ProblemConfig, Regime, SpaceForm, Vector};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn problem(sign: i64, n: usize, k: usize, radius: f64, s_y: f64, regime: Regime) -> ProblemConfig {
    let form = SpaceForm::new(Curvature::from_sign(sign).unwrap(), n).unwrap();
    ProblemConfig::new(form, k, radius, s_y, regime).unwrap()
}

fn build(config: &ProblemConfig, spec: &SurfaceSpec) -> Result<Surface, String> {
    spec.build(config).map_err(|e| format!("{spec:?}: {e}"))
}

fn disk(centre_s: f64, tilt: f64) -> SurfaceSpec {
    SurfaceSpec::GeodesicDisk { centre_s, tilt }
}

fn catenoid(centre_s: f64, tilt: f64) -> SurfaceSpec {
    SurfaceSpec::Catenoid {
        neck: 1.5,
        placement: CatenoidPlacement::Through { centre_s, tilt },
    }
}

fn failures(result: &SuiteResult) -> String {
    result
        .failed_checks()
        .map(|c| format!("{} = {:e} ({})", c.name, c.value, c.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

fn worst(result: &SuiteResult, prefix: &str) -> f64 {
    result
        .checks
        .iter()
        .filter(|c| c.name.starts_with(prefix) && c.value.is_finite())
        .map(|c| c.value.abs())
        .fold(0.0, f64::max)
}

/// Sign, ambient dimension, `k`, `R`, `s_y` of the curvature cases used
/// throughout; the sphere case is admissible for the moving theorem.
const SETTINGS: [(i64, usize, usize, f64, f64); 3] = [(-1, 3, 2, 1.0, 0.5), (0, 3, 2, 1.0, 0.4), (1, 4, 3, 0.3, 0.15)];

/// Minimal catalog surfaces through `y` for each curvature setting.
fn moving_catalog(sign: i64, n: usize, s_y: f64) -> Vec<SurfaceSpec> {
    let mut out = vec![
        disk(s_y, 0.0),
        disk(s_y, 0.5),
        disk(0.0, 0.4),
        SurfaceSpec::CrossingDisks { centre_s: s_y, angle: 0.9 },
    ];
    if sign == 0 && n == 3 {
        out.push(catenoid(s_y, 0.3));
        out.push(SurfaceSpec::Helicoid { pitch: 0.7, centre_s: s_y, tilt: 0.2 });
    }
    out
}

fn c1_divergence() -> Outcome {
    let mut cases = Vec::new();
    for (sign, n, k, radius, s_y) in SETTINGS {
        let cfg = problem(sign, n, k, radius, s_y, Regime::admissible(Curvature::from_sign(sign).unwrap())[0]);
        let mut specs = moving_catalog(sign, n, s_y);
        specs.push(SurfaceSpec::PerturbedDisk { amplitude: 0.3, centre_s: s_y });
        if sign == 0 {
            specs.push(SurfaceSpec::SphericalCap { radius: 0.8, centre_s: s_y });
        }
        for spec in specs {
            cases.push((cfg.clone(), spec));
        }
    }
    let s3 = problem(1, 3, 2, 0.8, 0.3, Regime::new(0, 1).unwrap());
    cases.push((s3.clone(), SurfaceSpec::CliffordTorus { patch: CliffordPatch::AroundOrigin }));
    cases.push((s3, disk(0.1, 0.5)));
    let (mut residual, mut slowest) = (0.0_f64, Duration::ZERO);
    for (i, (cfg, spec)) in cases.iter().enumerate() {
        let surface = build(cfg, spec)?;
        let start = Instant::now();
        let result = check_divergence_identities(&surface, cfg, 1000, 1000 + i as u64).map_err(|e| format!("{spec:?}: {e}"))?;
        let elapsed = start.elapsed();
        ensure!(result.passed, "{:?} {spec:?}: {}", cfg.kappa(), failures(&result));
        ensure!(result.provenance.samples >= 1000, "{spec:?}: only {} points", result.provenance.samples);
        ensure!(elapsed < Duration::from_secs(60), "{spec:?}: {elapsed:?}");
        residual = result.checks.iter().map(|c| c.value).fold(residual, f64::max);
        slowest = slowest.max(elapsed);
    }
    Ok(format!(
        "{} combinations x 3 fields x 1000 points, max relative residual {residual:.1e}, slowest {slowest:.2?}",
        cases.len()
    ))
}

fn c2_splitting() -> Outcome {
    let mut residual = 0.0_f64;
    for (sign, n) in [(-1, 3), (0, 3), (1, 3), (-1, 5), (1, 4)] {
        let cfg = problem(sign, n, 2, 1.0, 0.4, Regime::new(0, 1).unwrap());
        let result = check_metric_splitting(&cfg, 1000, 77).map_err(|e| e.to_string())?;
        ensure!(result.passed, "kappa {sign}, n {n}: {}", failures(&result));
        residual = result.checks.iter().map(|c| c.value).fold(residual, f64::max);
    }
    Ok(format!("5 curvature/dimension cases x 1000 points, max residual {residual:.1e}"))
}

fn classical_suites(sign: i64) -> Vec<SuiteKind> {
    if sign == 1 {
        vec![SuiteKind::ClassicalI, SuiteKind::ClassicalBoundary]
    } else {
        vec![SuiteKind::ClassicalA, SuiteKind::ClassicalI, SuiteKind::ClassicalBoundary]
    }
}

fn c3_classical() -> Outcome {
    let start = Instant::now();
    let policy = IntegrationPolicy::default();
    let mut unit_dev = 0.0_f64;
    let mut runs = 0;
    let mut chain_margin = f64::INFINITY;
    let regime = Regime::new(0, 1).unwrap();
    let cases: Vec<(ProblemConfig, SurfaceSpec)> = vec![
        (problem(-1, 3, 2, 1.0, 0.0, regime), disk(0.0, 0.0)),
        (problem(-1, 3, 2, 1.0, 0.0, regime), disk(0.0, 0.6)),
        (problem(-1, 3, 2, 1.0, 0.0, regime), disk(0.2, 0.5)),
        (problem(-1, 4, 3, 1.0, 0.0, regime), disk(0.3, 0.4)),
        (problem(0, 3, 2, 1.0, 0.0, regime), disk(0.0, 0.0)),
        (problem(0, 3, 2, 1.0, 0.0, regime), disk(0.2, 0.5)),
        (problem(0, 3, 2, 1.0, 0.0, regime), catenoid(0.0, 0.3)),
        (problem(0, 3, 2, 1.0, 0.0, regime), SurfaceSpec::Helicoid { pitch: 0.7, centre_s: 0.0, tilt: 0.2 }),
        (problem(1, 3, 2, 0.8, 0.0, regime), disk(0.0, 0.0)),
        (problem(1, 3, 2, 0.8, 0.0, regime), disk(0.2, 0.5)),
        (problem(1, 3, 2, 0.8, 0.0, regime), SurfaceSpec::CliffordTorus { patch: CliffordPatch::AroundOrigin }),
    ];
    for (cfg, spec) in &cases {
        let surface = build(cfg, spec)?;
        let grid = default_classical_grid(cfg.radius);
        ensure!(grid.len() == 24, "grid has {} points", grid.len());
        let through_o_disk = matches!(spec, SurfaceSpec::GeodesicDisk { centre_s, .. } if *centre_s == 0.0);
        let sign = cfg.kappa().sign_i64();
        for which in classical_suites(sign) {
            let result = check_monotonicity(&surface, cfg, which, &grid, &[], &policy).map_err(|e| e.to_string())?;
            ensure!(result.passed, "{:?} {spec:?} {}: {}", cfg.kappa(), which.name(), failures(&result));
            let report = &result.reports[0];
            if through_o_disk {
                let dev = report.q.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
                ensure!(dev < 1e-6, "{spec:?} {}: |Q - 1| = {dev:e}", which.name());
                ensure!(report.classification == Classification::Constant, "{spec:?}: {:?}", report.classification);
                unit_dev = unit_dev.max(dev);
            }
            runs += 1;
        }
        let chain = check_comparison_chain(&surface, cfg, &grid, &policy).map_err(|e| e.to_string())?;
        ensure!(chain.passed, "{:?} {spec:?} chain: {}", cfg.kappa(), failures(&chain));
        chain_margin = chain
            .checks
            .iter()
            .filter(|c| c.name.starts_with("min"))
            .map(|c| c.value)
            .fold(chain_margin, f64::min);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "runtime {elapsed:?}");
    Ok(format!(
        "{runs} suites on 24-point grids, disks through o |Q - 1| <= {unit_dev:.1e}, chain margin >= {chain_margin:.1e}, {elapsed:.2?}"
    ))
}

fn c4_lemma() -> Outcome {
    let ts = [0.01, 0.1, 0.5, 1.0];
    let (mut runs, mut cancellation, mut flat_ds, mut margin) = (0, 0.0_f64, 0.0_f64, f64::INFINITY);
    for (sign, n, k, radius, s_y) in SETTINGS {
        let kappa = Curvature::from_sign(sign).unwrap();
        for regime in Regime::admissible(kappa) {
            let cfg = problem(sign, n, k, radius, s_y, regime);
            for (i, spec) in moving_catalog(sign, n, s_y).iter().enumerate() {
                let surface = build(&cfg, spec)?;
                let result = check_lemma_conditions(&surface, &cfg, &ts, 200, 40 + i as u64).map_err(|e| format!("{spec:?}: {e}"))?;
                ensure!(result.passed, "{kappa:?} {regime:?} {spec:?}: {}", failures(&result));
                cancellation = cancellation.max(worst(&result, "middle_term_cancellation"));
                flat_ds = flat_ds.max(worst(&result, "flat_ds_ftilde"));
                margin = result
                    .checks
                    .iter()
                    .filter(|c| c.name.starts_with("divergence_condition") || c.name.starts_with("boundary_remainder"))
                    .map(|c| c.value)
                    .fold(margin, f64::min);
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} (curvature, regime, surface) runs; min margin {margin:.1e}, middle terms {cancellation:.1e}, flat j=0 |d_s F~| {flat_ds:.1e}"
    ))
}

fn c5_moving() -> Outcome {
    let policy = IntegrationPolicy::default();
    let grid = default_moving_grid();
    let mut runs = 0;
    let mut constant_runs = 0;
    let mut mismatches = Vec::new();
    for (sign, n, k, radius, s_y) in SETTINGS.into_iter().chain([(0, 4, 3, 1.0, 0.4)]) {
        let kappa = Curvature::from_sign(sign).unwrap();
        for regime in Regime::admissible(kappa) {
            let cfg = problem(sign, n, k, radius, s_y, regime);
            for spec in moving_catalog(sign, n, s_y) {
                let surface = build(&cfg, &spec)?;
                let result = check_monotonicity(&surface, &cfg, SuiteKind::Moving, &grid, &[], &policy)
                    .map_err(|e| format!("{spec:?}: {e}"))?;
                let report = &result.reports[0];
                ensure!(report.monotone() && report.converged, "{kappa:?} {regime:?} {spec:?}: {}", failures(&result));
                let orthogonal_through_y = matches!(spec, SurfaceSpec::GeodesicDisk { centre_s, tilt } if centre_s == s_y && tilt == 0.0);
                let constant = report.classification == Classification::Constant;
                if constant != orthogonal_through_y || !result.passed {
                    mismatches.push(format!(
                        "kappa {sign} k={k} ({},{}) {spec:?}: {:?}, spread {:.1e}",
                        regime.i,
                        regime.j,
                        report.classification,
                        report.max_deviation
                    ));
                }
                constant_runs += usize::from(constant);
                runs += 1;
            }
        }
    }
    // Centred case against the classical quantities at A^{-1}(t A(R)).
    let mut gap = 0.0_f64;
    for (sign, n, k, radius, _) in SETTINGS {
        let kappa = Curvature::from_sign(sign).unwrap();
        for regime in Regime::admissible(kappa) {
            let cfg = problem(sign, n, k, radius, 0.0, regime);
            let surface = build(&cfg, &disk(0.1 * radius, 0.5))?;
            let kind = if regime.i == 1 { ClassicalKind::Area } else { ClassicalKind::Tangential };
            let p = cfg.profile();
            for &t in grid.iter().step_by(4) {
                let rho = p.inverse(t * p.area_unchecked(radius)).map_err(|e| e.to_string())?;
                let m = q_moving(&surface, &cfg, t, &policy).map_err(|e| e.to_string())?.q;
                let c = q_classical(&surface, &cfg, rho, kind, &policy).map_err(|e| e.to_string())?.q;
                gap = gap.max((m - c).abs());
            }
        }
    }
    ensure!(gap < 1e-8, "centred gap {gap:e}");
    // Flat, (i, j) = (1, 0): E_t is the ball about (1 - t) s_y on the axis of
    // radius sqrt(t (R^2 - (1 - t) s_y^2)) (k = 2), and the weight is 1.
    let (radius, s_y) = (1.0, 0.4);
    let cfg = problem(0, 3, 2, radius, s_y, Regime::new(1, 0).unwrap());
    let surface = build(&cfg, &catenoid(s_y, 0.3))?;
    let one = |_: &SurfacePoint| Ok(Vector::from_slice(&[1.0]));
    let mut ball_gap = 0.0_f64;
    for &t in &grid {
        let region = Region::Ball {
            centre: cfg.axis_point((1.0 - t) * s_y),
            radius: (t * (radius * radius - (1.0 - t) * s_y * s_y)).sqrt(),
        };
        let area = integrate(&surface, &region, 1, &policy, &one).map_err(|e| e.to_string())?.value[0];
        let expected = area / (t * std::f64::consts::PI * (radius * radius - s_y * s_y));
        let q = q_moving(&surface, &cfg, t, &policy).map_err(|e| e.to_string())?.q;
        ball_gap = ball_gap.max((q - expected).abs());
    }
    ensure!(ball_gap < 1e-8, "moving-ball area ratio gap {ball_gap:e}");
    ensure!(
        mismatches.is_empty(),
        "{runs} suites monotone; centred gap {gap:.1e}; flat (1,0) moving-ball gap {ball_gap:.1e}; \
         constant classification outside orthogonal disks through y in {} runs: {}",
        mismatches.len(),
        mismatches.join("; ")
    );
    Ok(format!(
        "{runs} suites monotone ({constant_runs} constant, all orthogonal disks through y); centred gap {gap:.1e}; flat (1,0) moving-ball gap {ball_gap:.1e}"
    ))
}

fn c6_excess() -> Outcome {
    let policy = IntegrationPolicy::default();
    let cases = [
        (problem(0, 3, 2, 1.0, 0.4, Regime::new(1, 1).unwrap()), catenoid(0.4, 0.3)),
        (problem(0, 3, 2, 1.0, 0.4, Regime::new(0, 0).unwrap()), SurfaceSpec::Helicoid { pitch: 0.7, centre_s: 0.4, tilt: 0.2 }),
        (problem(-1, 3, 2, 1.0, 0.5, Regime::new(0, 1).unwrap()), disk(0.5, 0.5)),
        (problem(-1, 3, 2, 1.0, 0.5, Regime::new(1, 1).unwrap()), disk(0.0, 0.4)),
        (problem(1, 4, 3, 0.3, 0.15, Regime::new(0, 1).unwrap()), disk(0.15, 0.5)),
    ];
    let mut worst_ratio = 0.0_f64;
    for (cfg, spec) in &cases {
        let surface = build(cfg, spec)?;
        for t in [0.1, 0.3, 0.6] {
            let e = excess_decomposition(&surface, cfg, t, &policy).map_err(|e| e.to_string())?;
            ensure!(e.consistent(), "{spec:?} t={t}: sum {} vs difference {}", e.sum, e.fd_derivative);
            let allowed = 1e-4_f64.max(0.05 * e.fd_derivative.abs());
            worst_ratio = worst_ratio.max((e.sum - e.fd_derivative).abs() / allowed);
        }
    }
    Ok(format!("{} surfaces x 3 levels, worst |sum - Q'| at {:.1e} of the allowance", cases.len(), worst_ratio))
}

fn c7_area() -> Outcome {
    let policy = IntegrationPolicy::default();
    let mut cases: Vec<(ProblemConfig, SurfaceSpec)> = Vec::new();
    for (sign, n, k, radius, s_y) in SETTINGS {
        let cfg = problem(sign, n, k, radius, s_y, Regime::admissible(Curvature::from_sign(sign).unwrap())[0]);
        for spec in moving_catalog(sign, n, s_y) {
            cases.push((cfg.clone(), spec));
        }
    }
    let s3 = problem(1, 3, 2, 0.8, 0.3, Regime::new(0, 1).unwrap());
    cases.push((s3.clone(), SurfaceSpec::CliffordTorus { patch: CliffordPatch::AroundOrigin }));
    let (mut margin, mut equality, mut theta_single, mut theta_double) = (f64::INFINITY, 0.0_f64, 0.0_f64, 0.0_f64);
    for (cfg, spec) in &cases {
        let surface = build(cfg, spec)?;
        let result = check_area_estimates(&surface, cfg, &policy).map_err(|e| format!("{spec:?}: {e}"))?;
        ensure!(result.passed, "{:?} {spec:?}: {}", cfg.kappa(), failures(&result));
        for c in result.checks.iter().filter(|c| c.name.ends_with("_margin") && c.value.is_finite()) {
            margin = margin.min(c.value);
            if matches!(spec, SurfaceSpec::GeodesicDisk { tilt, .. } if *tilt == 0.0) && c.name == "moving_margin" {
                equality = equality.max(c.value.abs());
            }
        }
        let theta = worst(&result, "density");
        if surface.meta.sheets == 2 {
            theta_double = theta_double.max(theta);
        } else {
            theta_single = theta_single.max(theta);
        }
    }
    ensure!(theta_double > 0.0, "no double-disk case");
    Ok(format!(
        "{} surfaces, min margin {margin:.1e}, orthogonal-disk |m| {equality:.1e}, |Theta - 1| {theta_single:.1e}, |Theta - 2| {theta_double:.1e}",
        cases.len()
    ))
}

fn c8_gating() -> Outcome {
    let mut refused = 0;
    for (radius, s_y) in [(0.1, 0.0), (0.3, 0.1), (0.8, 0.5), (1.2, 0.9)] {
        for regime in Regime::all() {
            let cfg = problem(1, 3, 2, radius, s_y, regime);
            let surface = build(&cfg, &disk(s_y, 0.0))?;
            match gate_suite(&surface, &cfg, SuiteKind::Moving) {
                Err(Error::Hypothesis(msg)) if regime != Regime::new(0, 1).unwrap() || msg.contains("k cs(u)^2 >= 2") => {
                    refused += 1
                }
                other => return Err(format!("R={radius} s_y={s_y} {regime:?}: {other:?}")),
            }
        }
    }
    let mut cells = 0;
    for k in [3usize, 4, 5] {
        let text = format!(
            "curvature = 1\nn = {}\nk = {k}\nR = 0.3\nweight_i = 0\nweight_j = 1\nsurface = geodesic_disk\nsurface.centre_s = 0\nsurface.tilt = 0\nsweep.curvature = 1\nsweep.R = linear 0.05 0.6 12\nsweep.s_y_fraction = linear 0 0.95 40\nsweep.t =\n",
            k + 1
        );
        let cfg = RunConfig::from_flat(&text).map_err(|e| e.to_string())?;
        let rows = movmono::cli::sweep(&cfg).map_err(|e| e.to_string())?;
        let critical = (2.0 / k as f64).sqrt().acos();
        let mut radii: Vec<f64> = rows.iter().map(|r| r.radius).collect();
        radii.dedup();
        for radius in radii {
            let line: Vec<_> = rows.iter().filter(|r| r.radius == radius).collect();
            let cell = line[1].s_y - line[0].s_y;
            let analytic = critical - radius;
            // Last feasible and first infeasible s_y on this line.
            let last_ok = line.iter().filter(|r| r.feasible).map(|r| r.s_y).fold(f64::NEG_INFINITY, f64::max);
            let first_bad = line.iter().filter(|r| !r.feasible).map(|r| r.s_y).fold(f64::INFINITY, f64::min);
            ensure!(
                line.iter().all(|r| r.feasible == (r.s_y <= first_bad - 0.5 * cell)),
                "k={k} R={radius}: feasible set is not an interval"
            );
            if last_ok.is_finite() && first_bad.is_finite() {
                ensure!(
                    analytic >= last_ok - cell && analytic <= first_bad + cell,
                    "k={k} R={radius}: boundary in [{last_ok}, {first_bad}], analytic {analytic}"
                );
            } else if last_ok.is_finite() {
                ensure!(analytic >= last_ok - cell, "k={k} R={radius}: all feasible, analytic {analytic}");
            } else {
                ensure!(analytic <= first_bad + cell, "k={k} R={radius}: none feasible, analytic {analytic}");
            }
            cells += 1;
        }
    }
    Ok(format!(
        "{refused} k=2 sphere configurations refused; sweep boundary within one cell of cos(R+s_y)^2 = 2/k on {cells} radius lines (k = 3, 4, 5)"
    ))
}

fn c9_levelsets() -> Outcome {
    let grid = SliceGrid::default();
    let (mut full, mut small, mut exact) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (sign, radius, s_y) in [(-1, 1.0, 0.0), (-1, 1.0, 0.5), (-1, 1.5, 1.2), (0, 1.0, 0.0), (0, 1.0, 0.6), (0, 2.0, 1.5)] {
        let kappa = Curvature::from_sign(sign).unwrap();
        let cfg = problem(sign, 3, 2, radius, s_y, Regime::admissible(kappa)[0]);
        let curves = trace_level_sets(&cfg, &[1.0, 1e-4, 1e-5, 1e-3], &grid).map_err(|e| e.to_string())?;
        let d = hausdorff_to_circle(kappa, &curves[0].branches, 0.0, radius, 2000);
        ensure!(d < 1e-6, "kappa {sign} R={radius} s_y={s_y}: t=1 distance {d:e}");
        full = full.max(d);
        // E_t approaches the geodesic ball about y at rate O(t).
        let p = cfg.profile();
        let mut last = f64::INFINITY;
        for curve in &curves[1..3] {
            let r = p.inverse(curve.t * p.area_unchecked(cfg.underline_r())).map_err(|e| e.to_string())?;
            let d = hausdorff_to_circle(kappa, &curve.branches, s_y, r, 2000);
            ensure!(d < 1e-3, "kappa {sign} R={radius} s_y={s_y} t={}: distance {d:e} to radius {r}", curve.t);
            ensure!(d < 1e-7 || d < 0.2 * last, "kappa {sign} R={radius} s_y={s_y}: no O(t) decay ({last:e} then {d:e})");
            small = small.max(d);
            last = d;
        }
        // In flat space E_t is the ball about (1 - t) s_y of radius
        // sqrt(t (R^2 - (1 - t) s_y^2)) for k = 2, at every t.
        if sign == 0 {
            for curve in curves.iter().skip(1) {
                let t = curve.t;
                let r = (t * (radius * radius - (1.0 - t) * s_y * s_y)).sqrt();
                let d = hausdorff_to_circle(kappa, &curve.branches, (1.0 - t) * s_y, r, 2000);
                ensure!(d < 1e-6, "flat R={radius} s_y={s_y} t={t}: distance {d:e} to the moving ball");
                exact = exact.max(d);
            }
        }
    }
    let mut lens = 0.0_f64;
    for (radius, s_y) in [(1.2, 0.6), (1.4, 1.0), (1.0, 0.9)] {
        let cfg = problem(1, 3, 2, radius, s_y, Regime::new(0, 1).unwrap());
        ensure!(cfg.check_moving_hypotheses().is_err(), "R={radius} s_y={s_y} is admissible");
        let discs = [(0.0, radius), (s_y, FRAC_PI_2)];
        let curves = trace_level_sets(&cfg, &[1.0], &grid).map_err(|e| e.to_string())?;
        let d = hausdorff_to_disc_intersection(Curvature::Spherical, &curves[0].branches, &discs, 2000);
        ensure!(d < 1e-3, "sphere R={radius} s_y={s_y}: distance {d:e}");
        // The error sits at the two corners where the circles meet and
        // shrinks with the cell size.
        let fine = SliceGrid { cells: 480, ..grid.clone() };
        let curves = trace_level_sets(&cfg, &[1.0], &fine).map_err(|e| e.to_string())?;
        let d = hausdorff_to_disc_intersection(Curvature::Spherical, &curves[0].branches, &discs, 2000);
        ensure!(d < 1e-6, "sphere R={radius} s_y={s_y}, 480 cells: distance {d:e}");
        lens = lens.max(d);
    }
    Ok(format!(
        "t=1 vs boundary of B_R {full:.1e}; t in {{1e-4, 1e-5}} vs circles about y {small:.1e}; flat vs exact moving balls {exact:.1e}; sphere vs B_R cap B_pi/2(y) at 480 cells {lens:.1e}"
    ))
}

fn c10_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut compared = 0;
    for name in ["catenoid.conf", "all_suites.conf"] {
        let mut seen: Option<Vec<String>> = None;
        for threads in ["1", "4", "8"] {
            let out = dir.path().join(format!("{name}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_movmono"))
                .args(["verify", "--threads", threads, "--config"])
                .arg(configs.join(name))
                .arg("--out")
                .arg(&out)
                .env_remove("MOVMONO_THREADS")
                .output()
                .map_err(|e| e.to_string())?;
            ensure!(status.status.code() == Some(0), "{name} with {threads} threads exited {:?}", status.status.code());
            let read = |f: &str| std::fs::read_to_string(out.join(f)).map_err(|e| format!("{f}: {e}"));
            let json = read("report.json")?;
            let bodies = vec![
                read("report.csv")?,
                read("excess.csv")?,
                read("checks.csv")?,
                report_body(&json).map_err(|e| e.to_string())?,
            ];
            match &seen {
                None => seen = Some(bodies),
                Some(first) => {
                    ensure!(first == &bodies, "{name}: output with {threads} threads differs");
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("{compared} runs byte-identical to the single-thread run (CSV bodies and report without timestamp)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("divergence identities", c1_divergence),
        ("metric splitting", c2_splitting),
        ("classical monotonicity", c3_classical),
        ("lemma conditions", c4_lemma),
        ("moving-centre monotonicity", c5_moving),
        ("excess self-consistency", c6_excess),
        ("area estimates", c7_area),
        ("hypothesis gating", c8_gating),
        ("level sets", c9_levelsets),
        ("reproducibility", c10_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({elapsed:.1?}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({elapsed:.1?}): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
