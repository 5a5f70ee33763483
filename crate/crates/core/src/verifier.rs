//! Property suites binding the geometry, the weights and the quadrature
//! into pass/fail checks.
//!
//! Sampling suites draw from a `ChaCha8Rng` seeded with the recorded seed
//! and run serially, so their results depend only on (config, surface,
//! seed). Quadrature suites depend only on (config, surface, grid, policy).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fibration::ProblemConfig;
use crate::quadrature::{
    density_at, excess_decomposition, inside_intervals, integrate, q_boundary, q_classical,
    q_moving, ClassicalKind, IntegrationPolicy, MonotonicityReport, QValue, Region,
};
use crate::spaceform::{Curvature, Point};
use crate::surfaces::{covariant_derivative, mean_curvature, surface_divergence, tangential_split};
use crate::surfaces::{Chart, Surface, SurfacePoint};
use crate::vector::Vector;

pub const DIVERGENCE_TOL: f64 = 1e-5;
pub const SPLITTING_TOL: f64 = 1e-8;
pub const MARGIN_TOL: f64 = 1e-7;
pub const CANCELLATION_TOL: f64 = 1e-9;
pub const FTILDE_FLAT_TOL: f64 = 1e-10;
pub const AREA_TOL: f64 = 1e-6;
pub const CHAIN_TOL: f64 = 2e-5;
/// Values of `t` at which the divergence of `W_t` is checked.
pub const DIVERGENCE_TS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 1.0];
/// Half-width of the bands `|f - t| < BAND` sampled for the boundary condition.
pub const BAND: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value < threshold`
    Below,
    /// `value >= threshold`
    AtLeast,
    /// `value <= threshold`
    AtMost,
    /// `value > threshold`
    Above,
    /// `value == threshold` for booleans encoded as 0/1.
    Equals,
}

impl Relation {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Below => value < threshold,
            Relation::AtLeast => value >= threshold,
            Relation::AtMost => value <= threshold,
            Relation::Above => value > threshold,
            Relation::Equals => value == threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the JSON serialization of the configuration and surface.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub policy: Option<IntegrationPolicy>,
    pub t_grid: Vec<f64>,
    pub samples: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub surface: String,
    pub checks: Vec<CheckRecord>,
    /// Conjunction of the per-check flags.
    pub passed: bool,
    pub provenance: Provenance,
    pub reports: Vec<MonotonicityReport>,
}

impl SuiteResult {
    pub fn new(suite: &str, surface: Option<&Surface>, config: &ProblemConfig) -> Self {
        SuiteResult {
            suite: suite.to_string(),
            surface: surface.map_or_else(|| "none".to_string(), |s| s.meta.name.clone()),
            checks: Vec::new(),
            passed: true,
            provenance: Provenance {
                config_hash: config_hash(config, surface),
                seed: None,
                policy: None,
                t_grid: Vec::new(),
                samples: 0,
                rejected: 0,
            },
            reports: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, value: f64, relation: Relation, threshold: f64, detail: impl Into<String>) {
        let passed = relation.holds(value, threshold);
        self.passed &= passed;
        self.checks.push(CheckRecord {
            name: name.to_string(),
            value,
            threshold,
            relation,
            passed,
            detail: detail.into(),
        });
    }

    fn flag(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.check(name, f64::from(u8::from(ok)), Relation::Equals, 1.0, detail);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn config_hash(config: &ProblemConfig, surface: Option<&Surface>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).unwrap_or_default());
    if let Some(s) = surface {
        h.update(serde_json::to_vec(s).unwrap_or_default());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn require_minimal(surface: &Surface) -> Result<()> {
    if !surface.meta.exact_minimal {
        return Err(Error::Hypothesis(format!(
            "surface `{}` is not minimal; the monotonicity theorems do not apply",
            surface.meta.name
        )));
    }
    Ok(())
}

fn random_param<R: Rng>(chart: &Chart, rng: &mut R) -> Vec<f64> {
    chart
        .lo
        .iter()
        .zip(&chart.hi)
        .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
        .collect()
}

fn random_chart<'a, R: Rng>(surface: &'a Surface, rng: &mut R) -> &'a Chart {
    &surface.charts[rng.gen_range(0..surface.charts.len())]
}

fn relative(num: f64, closed: f64) -> f64 {
    relative_to(num, closed, 1.0)
}

/// Residual relative to `max(|closed|, scale)`, where `scale` is the size of
/// the individual derivative terms when they cancel.
fn relative_to(num: f64, closed: f64, scale: f64) -> f64 {
    (num - closed).abs() / closed.abs().max(scale).max(1.0)
}

/// Closed forms of `div_S W_0`, `div_S W_1` and `div_S W_t` against
/// finite-difference covariant derivatives, on planes tangent to the
/// surface at random points of `B_R`. Residuals are relative to
/// `max(1, |closed form|)`, and for `W_0` also to `|W_0|/r`. Points within `1e-2 R` of `o` or `y`,
/// on the exceptional set of the axis coordinates or outside `B_R` are
/// redrawn and counted as rejected.
pub fn check_divergence_identities(
    surface: &Surface,
    config: &ProblemConfig,
    n_samples: usize,
    seed: u64,
) -> Result<SuiteResult> {
    let mut out = SuiteResult::new("divergence_identities", Some(surface), config);
    out.provenance.seed = Some(seed);
    out.provenance.t_grid = DIVERGENCE_TS.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let form = &config.form;
    let p = config.profile();
    let kappa = config.kappa();
    let near = 1e-2 * config.radius;
    let mut worst = [0.0_f64; 2 + DIVERGENCE_TS.len()];
    let mut worst_at = vec![String::new(); worst.len()];
    let (mut accepted, mut rejected) = (0, 0);
    while accepted < n_samples {
        if rejected > 100 * n_samples.max(10) {
            return Err(Error::Precondition(format!(
                "surface `{}` has too few admissible sample points ({accepted} of {n_samples})",
                surface.meta.name
            )));
        }
        let chart = random_chart(surface, &mut rng);
        let param = random_param(chart, &mut rng);
        let sp = match chart.surface_point(&param) {
            Ok(sp) => sp,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let x = sp.x;
        let r = config.r(&x);
        if r > config.radius || r < near || config.r_y(&x) < near || config.axis_frame(&x).is_err() {
            rejected += 1;
            continue;
        }
        let frame = sp.frame();
        let residuals = (|| -> Result<Vec<f64>> {
            let grad_r = form.grad_distance(&config.origin, &x)?.vec;
            let split = tangential_split(form, frame, &grad_r);
            let mut res = Vec::with_capacity(worst.len());
            let closed0 = config.k as f64 * kappa.ct(r) / p.area_prime(r) * split.normal_sq;
            let num0 = surface_divergence(form, &x, frame, &|q: &Point| Ok(config.field_w0(q)?.vec))?;
            // W_0 blows up like 1/A'(r) at o; its derivatives are of size |W_0|/r.
            let scale0 = form.norm(&config.field_w0(&x)?.vec) / r;
            res.push(relative_to(num0, closed0, scale0));
            let closed1 = split.tangential_sq + p.a_func(r) * split.normal_sq;
            let num1 = surface_divergence(form, &x, frame, &|q: &Point| Ok(config.field_w1(q)?.vec))?;
            res.push(relative(num1, closed1));
            for &t in &DIVERGENCE_TS {
                let closed = config.weight_terms(t, &x, frame)?.div_wt();
                let num = surface_divergence(form, &x, frame, &|q: &Point| Ok(config.field_wt(t, q)?.vec))?;
                res.push(relative(num, closed));
            }
            Ok(res)
        })();
        let residuals = match residuals {
            Ok(r) => r,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        for (i, v) in residuals.into_iter().enumerate() {
            if !(v <= worst[i]) {
                worst[i] = v;
                worst_at[i] = format!("r = {r:.6}, r_y = {:.6}", config.r_y(&x));
            }
        }
        accepted += 1;
    }
    out.provenance.samples = accepted;
    out.provenance.rejected = rejected;
    out.check("div_w0", worst[0], Relation::Below, DIVERGENCE_TOL, format!("max relative residual at {}", worst_at[0]));
    out.check("div_w1", worst[1], Relation::Below, DIVERGENCE_TOL, format!("max relative residual at {}", worst_at[1]));
    for (i, t) in DIVERGENCE_TS.iter().enumerate() {
        out.check(
            &format!("div_wt[t={t}]"),
            worst[2 + i],
            Relation::Below,
            DIVERGENCE_TOL,
            format!("max relative residual at {}", worst_at[2 + i]),
        );
    }
    Ok(out)
}

/// Pythagorean relation between `r`, `s` and `rho`, `|grad s| = 1/cs(rho)`
/// (analytically and against a difference quotient of `s`), and the Killing
/// property `<nabla_X d/ds, X> = 0`, at random points of `B_R`.
pub fn check_metric_splitting(config: &ProblemConfig, n_samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut out = SuiteResult::new("metric_splitting", None, config);
    out.provenance.seed = Some(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let form = &config.form;
    let kappa = config.kappa();
    let mut worst = [0.0_f64; 4];
    let (mut accepted, mut rejected) = (0, 0);
    while accepted < n_samples {
        if rejected > 100 * n_samples.max(10) {
            return Err(Error::Precondition("too many rejected sample points".into()));
        }
        let x = form.random_point_in_ball(&config.origin, config.radius, &mut rng);
        let Ok(axis) = config.axis_frame(&x) else {
            rejected += 1;
            continue;
        };
        let r = config.r(&x);
        let pyth = match kappa {
            Curvature::Flat => (axis.s * axis.s + axis.rho * axis.rho - r * r).abs(),
            _ => (kappa.cs(axis.s) * kappa.cs(axis.rho) - kappa.cs(r)).abs(),
        };
        let cs_rho = kappa.cs(axis.rho);
        let grad_norm = (form.norm(&axis.grad_s) * cs_rho - 1.0).abs();
        let dir = form.random_unit_tangent(&x, &mut rng);
        let s_at = |h: f64| config.axis_frame(&form.exp_raw(&x, &dir.scale(h))).map(|a| a.s);
        let quotient = |h: f64| -> Result<f64> { Ok((s_at(h)? - s_at(-h)?) / (2.0 * h)) };
        let fd = (|| -> Result<f64> {
            let (c, f) = (quotient(1e-4)?, quotient(5e-5)?);
            Ok((4.0 * f - c) / 3.0)
        })();
        let killing = covariant_derivative(form, &x, &dir, &|q: &Point| Ok(config.axis_frame(q)?.killing));
        let (Ok(fd), Ok(killing)) = (fd, killing) else {
            rejected += 1;
            continue;
        };
        let grad_fd = (fd - form.inner(&axis.grad_s, &dir)).abs();
        let killing = form.inner(&killing, &dir).abs();
        for (w, v) in worst.iter_mut().zip([pyth, grad_norm, grad_fd, killing]) {
            *w = w.max(v);
        }
        accepted += 1;
    }
    out.provenance.samples = accepted;
    out.provenance.rejected = rejected;
    let names = ["pythagoras", "grad_s_norm", "grad_s_difference", "killing"];
    let details = [
        "max |cs(s) cs(rho) - cs(r)| (flat: |s^2 + rho^2 - r^2|)",
        "max ||grad s| cs(rho) - 1|",
        "max |ds(X) - <grad s, X>| against a difference quotient",
        "max |<nabla_X d/ds, X>| for random unit X",
    ];
    for i in 0..4 {
        out.check(names[i], worst[i], Relation::Below, SPLITTING_TOL, details[i]);
    }
    Ok(out)
}

/// Sample points of `Sigma cap E_t` from random innermost parameter lines:
/// the endpoints on `{f = t}` and a uniform interior point.
struct LineSamples {
    level: Vec<(Chart, Vec<f64>)>,
    interior: Vec<(Chart, Vec<f64>)>,
}

fn sample_sublevel<R: Rng>(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    wanted: usize,
    rng: &mut R,
) -> (LineSamples, usize) {
    let region = Region::Sublevel { config, t };
    let form = &config.form;
    let mut out = LineSamples {
        level: Vec::new(),
        interior: Vec::new(),
    };
    let mut empty = 0;
    let attempts = 50 * wanted.max(4);
    for _ in 0..attempts {
        if out.level.len() >= wanted && out.interior.len() >= wanted {
            break;
        }
        let chart = random_chart(surface, rng);
        let mut param = random_param(chart, rng);
        let last = chart.k - 1;
        let (lo, hi) = (chart.lo[last], chart.hi[last]);
        let at = |v: f64, param: &[f64]| {
            let mut q = param.to_vec();
            q[last] = v;
            q
        };
        let g = |v: f64| region.membership(form, &chart.map(&at(v, &param)));
        let intervals = inside_intervals(&g, lo, hi, 96);
        if intervals.is_empty() {
            empty += 1;
            continue;
        }
        if out.level.len() < wanted {
            for &(a, b) in &intervals {
                for end in [a, b] {
                    let q = at(end, &param);
                    let x = chart.map(&q);
                    let on_level = config
                        .f_value_unchecked(&x)
                        .is_ok_and(|f| (f - t).abs() < 1e-12 * t.max(1.0));
                    if on_level {
                        out.level.push((chart.clone(), q));
                    }
                }
            }
        }
        if out.interior.len() < wanted {
            let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
            let mut pick = total * rng.gen::<f64>();
            for &(a, b) in &intervals {
                if pick <= b - a {
                    param[last] = a + pick;
                    break;
                }
                pick -= b - a;
            }
            out.interior.push((chart.clone(), param));
        }
    }
    (out, empty)
}

/// Gradient of `log f` at `x`: `(A'/A)(r_y) grad r_y - (A'(u)u'/A(u)) grad s`.
fn grad_log_f(config: &ProblemConfig, x: &Point) -> Result<Vector> {
    let p = config.profile();
    let ry = config.r_y(x);
    let g = config.form.grad_distance(config.prescribed(), x)?.vec;
    let mut v = g.scale(p.area_prime(ry) / p.area_unchecked(ry));
    if config.s_y != 0.0 {
        let axis = config.axis_frame(x)?;
        let u = config.u(axis.s)?;
        let slope = p.area_prime(u) * config.u_prime(axis.s)? / p.area_unchecked(u);
        v = v.axpy(-slope, &axis.grad_s);
    }
    Ok(v)
}

/// The two conditions of the abstract weighted monotonicity lemma for the
/// configured regime, sampled at each `t` of the grid:
///
/// * on `{f = t}`: `w - <W_t, grad^T f / f>` computed directly, and its
///   difference from the displayed remainder (the middle terms, which must
///   cancel);
/// * on the bands `|f - t| < BAND`: the remainder itself;
/// * on `{f <= t}`: `div W_t - (w - t d_t w)` with `d_t w` by a centred
///   difference.
pub fn check_lemma_conditions(
    surface: &Surface,
    config: &ProblemConfig,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<SuiteResult> {
    config.check_moving_hypotheses()?;
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Precondition("lemma conditions need t in (0, 1]".into()));
    }
    let mut out = SuiteResult::new("lemma_conditions", Some(surface), config);
    out.provenance.seed = Some(seed);
    out.provenance.t_grid = t_grid.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let form = &config.form;
    let regime = config.regime;
    let mut level_min = f64::INFINITY;
    let mut cancel_max = 0.0_f64;
    let mut band_min = f64::INFINITY;
    let mut div_min = f64::INFINITY;
    let mut dt_mismatch = 0.0_f64;
    let mut ds_max = 0.0_f64;
    let (mut n_level, mut n_band, mut n_interior, mut rejected) = (0, 0, 0, 0);
    let mut empty_levels = Vec::new();
    for &t in t_grid {
        let (samples, empty) = sample_sublevel(surface, config, t, n_samples, &mut rng);
        rejected += empty;
        if samples.level.is_empty() && samples.interior.is_empty() {
            empty_levels.push(t);
        }
        for (chart, q) in samples.level.iter().take(n_samples) {
            let Ok(sp) = chart.surface_point(q) else {
                rejected += 1;
                continue;
            };
            let eval = (|| -> Result<(f64, f64)> {
                let terms = config.weight_terms(t, &sp.x, sp.frame())?;
                let wt = config.field_wt(t, &sp.x)?.vec;
                let glf = grad_log_f(config, &sp.x)?;
                let pairing: f64 = sp
                    .frame()
                    .iter()
                    .map(|e| form.inner(&wt, e) * form.inner(&glf, e))
                    .sum();
                let full = terms.w(regime) - pairing;
                Ok((full, (full - terms.boundary_remainder(regime)).abs()))
            })();
            match eval {
                Ok((full, cancel)) => {
                    level_min = level_min.min(full);
                    cancel_max = cancel_max.max(cancel);
                    n_level += 1;
                }
                Err(_) => rejected += 1,
            }
            // a band point near this level point
            let last = chart.k - 1;
            let span = chart.hi[last] - chart.lo[last];
            for _ in 0..8 {
                let mut b = q.clone();
                b[last] = (b[last] + 1e-3 * span * (2.0 * rng.gen::<f64>() - 1.0))
                    .clamp(chart.lo[last], chart.hi[last]);
                let Ok(bp) = chart.surface_point(&b) else { continue };
                let in_band = config.f_value_unchecked(&bp.x).is_ok_and(|f| (f - t).abs() < BAND);
                if !in_band || config.r(&bp.x) > config.radius {
                    continue;
                }
                if let Ok(terms) = config.weight_terms(t, &bp.x, bp.frame()) {
                    band_min = band_min.min(terms.boundary_remainder(regime));
                    n_band += 1;
                    break;
                }
            }
        }
        for (chart, q) in samples.interior.iter().take(n_samples) {
            let eval = (|| -> Result<(f64, f64, f64)> {
                let sp = chart.surface_point(q)?;
                let frame = sp.frame();
                let terms = config.weight_terms(t, &sp.x, frame)?;
                let h = 1e-6 * t;
                let wp = config.weight_terms(t + h, &sp.x, frame)?.w(regime);
                let wm = config.weight_terms(t - h, &sp.x, frame)?.w(regime);
                let dw = (wp - wm) / (2.0 * h);
                let margin = terms.div_wt() - (terms.w(regime) - t * dw);
                Ok((margin, (dw - terms.dw_dt(regime)).abs(), terms.ftilde.d_s.abs()))
            })();
            match eval {
                Ok((margin, mismatch, ds)) => {
                    div_min = div_min.min(margin);
                    dt_mismatch = dt_mismatch.max(mismatch);
                    ds_max = ds_max.max(ds);
                    n_interior += 1;
                }
                Err(_) => rejected += 1,
            }
        }
    }
    out.provenance.samples = n_level + n_band + n_interior;
    out.provenance.rejected = rejected;
    let note = |n: usize| {
        if empty_levels.is_empty() {
            format!("{n} samples")
        } else {
            format!("{n} samples; Sigma misses E_t for t in {empty_levels:?}")
        }
    };
    out.check("sample_count", out.provenance.samples as f64, Relation::Above, 0.0, "points drawn on the surface");
    if n_level > 0 {
        out.check("boundary_condition_on_level", level_min, Relation::AtLeast, -MARGIN_TOL, note(n_level));
        out.check(
            "middle_term_cancellation",
            cancel_max,
            Relation::Below,
            CANCELLATION_TOL,
            "max |w - <W_t, grad^T f/f> - remainder| on {f = t}",
        );
    }
    if n_band > 0 {
        out.check("boundary_remainder_on_band", band_min, Relation::AtLeast, -MARGIN_TOL, note(n_band));
    }
    if n_interior > 0 {
        out.check("divergence_condition", div_min, Relation::AtLeast, -MARGIN_TOL, note(n_interior));
        out.check(
            "t_derivative_difference",
            dt_mismatch,
            Relation::Below,
            1e-6,
            "centred difference of w in t against the closed form",
        );
        if config.kappa() == Curvature::Flat && regime.j == 0 {
            out.check("flat_ds_ftilde", ds_max, Relation::Below, FTILDE_FLAT_TOL, "max |d_s F~_t| on {f <= t}");
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    ClassicalA,
    ClassicalI,
    ClassicalBoundary,
    Moving,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::ClassicalA => "classical_a",
            SuiteKind::ClassicalI => "classical_i",
            SuiteKind::ClassicalBoundary => "classical_boundary",
            SuiteKind::Moving => "moving",
        }
    }

    pub fn all() -> [SuiteKind; 4] {
        [
            SuiteKind::ClassicalA,
            SuiteKind::ClassicalI,
            SuiteKind::ClassicalBoundary,
            SuiteKind::Moving,
        ]
    }
}

/// Whether `Q` must be constant: a totally geodesic surface through the
/// centre, orthogonal to the axis unless the centre is the origin.
pub fn equality_case(surface: &Surface, config: &ProblemConfig, which: SuiteKind) -> bool {
    let meta = &surface.meta;
    if !(meta.totally_geodesic && meta.exact_minimal) {
        return false;
    }
    match which {
        SuiteKind::Moving => {
            surface.check_contains(config.prescribed(), 1e-8).is_ok()
                && (config.s_y == 0.0 || meta.orthogonal_to_axis)
        }
        _ => surface.check_contains(&config.origin, 1e-8).is_ok(),
    }
}

/// Refuses the suite when the theorem behind it does not cover the
/// configuration.
pub fn gate_suite(surface: &Surface, config: &ProblemConfig, which: SuiteKind) -> Result<()> {
    require_minimal(surface)?;
    match which {
        SuiteKind::ClassicalA if config.kappa() == Curvature::Spherical => Err(Error::Hypothesis(
            "monotonicity of Q_A requires curvature <= 0; use Q_I or Q_d on the sphere".into(),
        )),
        SuiteKind::Moving => config.check_moving_hypotheses(),
        _ => Ok(()),
    }
}

pub fn suite_value(
    surface: &Surface,
    config: &ProblemConfig,
    which: SuiteKind,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<QValue> {
    match which {
        SuiteKind::ClassicalA => q_classical(surface, config, t, ClassicalKind::Area, policy),
        SuiteKind::ClassicalI => q_classical(surface, config, t, ClassicalKind::Tangential, policy),
        SuiteKind::ClassicalBoundary => q_boundary(surface, config, t, policy),
        SuiteKind::Moving => q_moving(surface, config, t, policy),
    }
}

/// `Q` on the grid, classified and cross-checked against the equality case.
/// For the moving suite the excess identity is evaluated at `excess_at`.
pub fn run_monotonicity_suite(
    surface: &Surface,
    config: &ProblemConfig,
    which: SuiteKind,
    t_grid: &[f64],
    excess_at: &[f64],
    policy: &IntegrationPolicy,
) -> Result<MonotonicityReport> {
    gate_suite(surface, config, which)?;
    let values = t_grid
        .iter()
        .map(|&t| suite_value(surface, config, which, t, policy))
        .collect::<Result<Vec<_>>>()?;
    let mut report = MonotonicityReport::from_values(which.name(), &values)?;
    if which == SuiteKind::Moving {
        report.excess = excess_at
            .iter()
            .map(|&t| excess_decomposition(surface, config, t, policy))
            .collect::<Result<Vec<_>>>()?;
    }
    report.set_rigidity(equality_case(surface, config, which));
    Ok(report)
}

/// [`run_monotonicity_suite`] wrapped as a [`SuiteResult`].
pub fn check_monotonicity(
    surface: &Surface,
    config: &ProblemConfig,
    which: SuiteKind,
    t_grid: &[f64],
    excess_at: &[f64],
    policy: &IntegrationPolicy,
) -> Result<SuiteResult> {
    let report = run_monotonicity_suite(surface, config, which, t_grid, excess_at, policy)?;
    let mut out = SuiteResult::new(which.name(), Some(surface), config);
    out.provenance.policy = Some(policy.clone());
    out.provenance.t_grid = t_grid.to_vec();
    let worst = report
        .intervals
        .iter()
        .map(|v| v.drop - v.slack)
        .fold(f64::NEG_INFINITY, f64::max);
    out.check(
        "violations",
        report.violations() as f64,
        Relation::Equals,
        0.0,
        format!("largest drop minus slack {worst:e}"),
    );
    out.flag("converged", report.converged, "every adaptive rule met its tolerance");
    out.flag(
        "rigidity",
        report.anomaly.is_none(),
        report.anomaly.clone().unwrap_or_else(|| {
            format!(
                "classification {:?}, equality case expected: {}",
                report.classification, report.rigidity_expected
            )
        }),
    );
    for e in &report.excess {
        out.check(
            &format!("excess[t={:.6}]", e.t),
            (e.sum - e.fd_derivative).abs(),
            Relation::AtMost,
            1e-4_f64.max(0.05 * e.fd_derivative.abs()),
            format!("decomposition {:.10e} against difference quotient {:.10e}", e.sum, e.fd_derivative),
        );
    }
    out.reports.push(report);
    Ok(out)
}

fn area_in_ball(surface: &Surface, config: &ProblemConfig, policy: &IntegrationPolicy) -> Result<(f64, f64, bool)> {
    let region = Region::Ball {
        centre: config.origin,
        radius: config.radius,
    };
    let one = |_: &SurfacePoint| Ok(Vector::from_slice(&[1.0]));
    let int = integrate(surface, &region, 1, policy, &one)?;
    Ok((int.value[0], int.error[0], int.converged))
}

/// Area lower bounds through `o` and through `y`, with equality exactly in
/// the rigidity case, and the density at the marked point.
pub fn check_area_estimates(
    surface: &Surface,
    config: &ProblemConfig,
    policy: &IntegrationPolicy,
) -> Result<SuiteResult> {
    require_minimal(surface)?;
    let through_o = surface.check_contains(&config.origin, 1e-8);
    let through_y = surface.check_contains(config.prescribed(), 1e-8);
    if let (Err(_), Err(e)) = (&through_o, &through_y) {
        return Err(Error::Precondition(format!("neither o nor y lies on the surface: {e}")));
    }
    let mut out = SuiteResult::new("area_estimates", Some(surface), config);
    out.provenance.policy = Some(policy.clone());
    let (area, error, converged) = area_in_ball(surface, config, policy)?;
    out.flag("converged", converged, format!("|Sigma cap B_R| = {area:.12e} +- {error:e}"));
    let p = config.profile();
    if through_o.is_ok() {
        let ball = p.area_unchecked(config.radius) * p.sphere_volume();
        let m = area / ball - 1.0;
        out.check("classical_margin", m, Relation::AtLeast, -AREA_TOL, "|Sigma|/|B^k_R| - 1");
        let expected = equality_case(surface, config, SuiteKind::ClassicalA);
        out.flag(
            "classical_equality",
            (m.abs() < AREA_TOL) == expected,
            format!("margin {m:e}, equality case expected: {expected}"),
        );
    }
    if through_y.is_ok() {
        let hyp = config.with_regime(first_admissible(config)).check_moving_hypotheses();
        match hyp {
            Ok(()) => {
                let m = area / config.reference_area() - 1.0;
                out.check("moving_margin", m, Relation::AtLeast, -AREA_TOL, "|Sigma|/|B^k_r(y)| - 1");
                let expected = equality_case(surface, config, SuiteKind::Moving);
                out.flag(
                    "moving_equality",
                    (m.abs() < AREA_TOL) == expected,
                    format!("margin {m:e}, equality case expected: {expected}"),
                );
            }
            Err(e) => {
                out.checks.push(CheckRecord {
                    name: "moving_margin".into(),
                    value: f64::NAN,
                    threshold: -AREA_TOL,
                    relation: Relation::AtLeast,
                    passed: true,
                    detail: format!("not applicable: {e}"),
                });
            }
        }
    }
    let point = if through_y.is_ok() { *config.prescribed() } else { config.origin };
    let density = density_at(surface, config, &point, policy)?;
    let sheets = surface.meta.sheets as f64;
    out.check(
        "density",
        (density.value - sheets).abs(),
        Relation::Below,
        1e-3 * sheets,
        format!(
            "Theta = {:.9} (linear fit {:.9}), expected {sheets}{}",
            density.value,
            density.linear_value,
            if density.flagged { "; extrapolation flagged" } else { "" }
        ),
    );
    Ok(out)
}

fn first_admissible(config: &ProblemConfig) -> crate::fibration::Regime {
    if config.regime.is_admissible(config.kappa()) {
        config.regime
    } else {
        crate::fibration::Regime::admissible(config.kappa())[0]
    }
}

/// The ordering of `Q_A`, `Q_I`, `Q_d` for the curvature sign at every grid
/// level, and `Q_d = Q_A` in flat space.
pub fn check_comparison_chain(
    surface: &Surface,
    config: &ProblemConfig,
    t_grid: &[f64],
    policy: &IntegrationPolicy,
) -> Result<SuiteResult> {
    require_minimal(surface)?;
    let mut out = SuiteResult::new("comparison_chain", Some(surface), config);
    out.provenance.policy = Some(policy.clone());
    out.provenance.t_grid = t_grid.to_vec();
    let mut worst = [f64::INFINITY; 2];
    let mut flat_gap = 0.0_f64;
    for &t in t_grid {
        let a = q_classical(surface, config, t, ClassicalKind::Area, policy)?.q;
        let i = q_classical(surface, config, t, ClassicalKind::Tangential, policy)?.q;
        let d = q_boundary(surface, config, t, policy)?.q;
        let (first, second) = match config.kappa() {
            Curvature::Hyperbolic => (d - a, a - i),
            Curvature::Flat => (a - i, d - i),
            Curvature::Spherical => (a - d, d - i),
        };
        worst[0] = worst[0].min(first);
        worst[1] = worst[1].min(second);
        if config.kappa() == Curvature::Flat {
            flat_gap = flat_gap.max((d - a).abs());
        }
    }
    let labels = match config.kappa() {
        Curvature::Hyperbolic => ["Q_d - Q_A", "Q_A - Q_I"],
        Curvature::Flat => ["Q_A - Q_I", "Q_d - Q_I"],
        Curvature::Spherical => ["Q_A - Q_d", "Q_d - Q_I"],
    };
    for (w, label) in worst.iter().zip(labels) {
        out.check(&format!("min {label}"), *w, Relation::AtLeast, -CHAIN_TOL, "over the grid");
    }
    if config.kappa() == Curvature::Flat {
        out.check("max |Q_d - Q_A|", flat_gap, Relation::Below, CHAIN_TOL, "flat space: equal");
    }
    Ok(out)
}

/// Negative control: `int_{Sigma cap E_t} <W_t, H>` and `max |H|` on a
/// midpoint grid in parameter space. The divergence step behind the
/// monotonicity formulae needs the pairing to vanish; for non-minimal
/// surfaces the check passes when it does not.
pub fn check_mean_curvature_pairing(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
) -> Result<SuiteResult> {
    let mut out = SuiteResult::new("mean_curvature_pairing", Some(surface), config);
    out.provenance.t_grid = vec![t];
    let region = Region::Sublevel { config, t };
    let form = &config.form;
    let k = surface.k();
    let m: usize = if k == 2 { 96 } else { 24 };
    let mut pairing = 0.0;
    let mut h_max = 0.0_f64;
    let mut cells = 0;
    for chart in &surface.charts {
        let widths: Vec<f64> = chart.lo.iter().zip(&chart.hi).map(|(a, b)| (b - a) / m as f64).collect();
        let cell: f64 = widths.iter().product();
        for idx in 0..m.pow(k as u32) {
            let mut rest = idx;
            let q: Vec<f64> = (0..k)
                .map(|d| {
                    let i = rest % m;
                    rest /= m;
                    chart.lo[d] + (i as f64 + 0.5) * widths[d]
                })
                .collect();
            let Ok(sp) = chart.surface_point(&q) else { continue };
            if region.membership(form, &sp.x) > 0.0 {
                continue;
            }
            let (Ok(h), Ok(w)) = (mean_curvature(chart, &q), config.field_wt(t, &sp.x)) else {
                continue;
            };
            pairing += form.inner(&w.vec, &h) * sp.area_element * cell;
            h_max = h_max.max(form.norm(&h));
            cells += 1;
        }
    }
    out.provenance.samples = cells;
    if surface.meta.exact_minimal {
        out.check("max |H|", h_max, Relation::Below, 1e-5, "minimal surface");
    } else {
        out.check(
            "|int <W_t, H>|",
            pairing.abs(),
            Relation::Above,
            1e-6,
            format!("pairing {pairing:.6e}, max |H| {h_max:.6e}: divergence step inapplicable"),
        );
    }
    Ok(out)
}
