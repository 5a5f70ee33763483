//! Integration over `Sigma cap E` for a region `E` given by a membership
//! function, and the monotone quantities built on it.
//!
//! Integrals are iterated: the last chart parameter (the radial one for
//! polar charts) is the innermost line, on which the region is located by
//! bracketing sign changes of the membership function and refining the
//! roots; the resulting intervals and all outer parameters are integrated
//! with adaptive Gauss-Kronrod rules that carry error estimates upwards.

pub mod gk;
mod quantities;
mod report;
pub mod sum;

pub use quantities::{
    classical_integrals, density_at, excess_decomposition, moving_integrals, q_boundary,
    q_classical, q_moving, ClassicalKind, Density, Excess, QValue,
};
pub use report::{
    classify, default_classical_grid, default_moving_grid, geometric_grid, Classification,
    MonotonicityReport, Violation,
};

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::ProblemConfig;
use crate::spaceform::{Point, SpaceForm};
use crate::surfaces::{Chart, Surface, SurfacePoint};
use crate::vector::Vector;
use gk::Sample;

/// Fraction of the radial range of a polar chart treated as the pole.
const POLE_CUT: f64 = 1e-6;
/// Extra membership samples at `4^-j` of a polar line, for `j` in this range.
const POLE_SAMPLES: (i32, i32) = (4, 20);

/// Knobs of the adaptive integrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationPolicy {
    /// Membership samples along each innermost parameter line.
    pub base_grid: usize,
    /// Initial panels per outer parameter.
    pub outer_panels: usize,
    /// Maximal bisection depth of any panel.
    pub max_refine_depth: usize,
    /// Radius of the ball about the centre in which radial terms take their
    /// limiting values, relative to `r_(y)` (or to `R` for classical runs).
    pub epsilon_ball: f64,
    pub target_rel_tol: f64,
    /// Absolute error floor, for components that vanish identically.
    pub abs_tol: f64,
    /// Evaluate the outermost parameter's nodes on the rayon pool.
    pub parallel: bool,
}

impl Default for IntegrationPolicy {
    fn default() -> Self {
        IntegrationPolicy {
            base_grid: 48,
            outer_panels: 2,
            max_refine_depth: 40,
            epsilon_ball: 1e-4,
            target_rel_tol: 1e-10,
            abs_tol: 1e-14,
            parallel: true,
        }
    }
}

impl IntegrationPolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(0, field, msg));
        if self.base_grid < 2 {
            return bad("base_grid", "must be at least 2");
        }
        if self.outer_panels < 1 {
            return bad("outer_panels", "must be at least 1");
        }
        if !(self.epsilon_ball > 0.0 && self.epsilon_ball < 0.5) {
            return bad("epsilon_ball", "must lie in (0, 0.5)");
        }
        if !(self.target_rel_tol > 0.0 && self.target_rel_tol < 1.0) {
            return bad("target_rel_tol", "must lie in (0, 1)");
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return bad("abs_tol", "must be finite and non-negative");
        }
        Ok(())
    }

    /// Tolerances for the integrals nested inside a parameter range of
    /// length `len`.
    fn inner(&self, rel: f64, abs: f64, len: f64) -> (f64, f64) {
        (0.1 * rel, 0.1 * abs / len.max(1e-300))
    }
}

/// A set `E` in the model, given by a membership function that is negative
/// inside.
#[derive(Clone, Debug)]
pub enum Region<'a> {
    Whole,
    Ball { centre: Point, radius: f64 },
    /// `E_t cap B_R` for the configuration's `f`.
    Sublevel { config: &'a ProblemConfig, t: f64 },
}

impl Region<'_> {
    pub fn membership(&self, form: &SpaceForm, x: &Point) -> f64 {
        match self {
            Region::Whole => -1.0,
            Region::Ball { centre, radius } => form.distance(centre, x) - radius,
            Region::Sublevel { config, t } => {
                let ball = config.r(x) - config.radius;
                match config.f_value_unchecked(x) {
                    Ok(f) if f.is_finite() => (f - t).max(ball),
                    _ => 1.0,
                }
            }
        }
    }
}

/// Integral with its error estimate and the integral of the absolute value.
#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: Vector,
    pub error: Vector,
    pub abs: Vector,
    /// Every adaptive rule met its tolerance.
    pub converged: bool,
    pub evaluations: usize,
}

impl Integral {
    fn zeros(n: usize) -> Self {
        Integral {
            value: Vector::zeros(n),
            error: Vector::zeros(n),
            abs: Vector::zeros(n),
            converged: true,
            evaluations: 0,
        }
    }
}

struct Counters {
    converged: AtomicBool,
    evaluations: AtomicUsize,
}

/// `int_{Sigma cap E} density dA` for a density with `n` components,
/// summed over the charts of the surface.
pub fn integrate<D>(
    surface: &Surface,
    region: &Region,
    n: usize,
    policy: &IntegrationPolicy,
    density: &D,
) -> Result<Integral>
where
    D: Fn(&SurfacePoint) -> Result<Vector> + Sync,
{
    let mut total = Integral::zeros(n);
    for chart in &surface.charts {
        let part = integrate_chart(chart, region, n, policy, density)?;
        total.value += part.value;
        total.error += part.error;
        total.abs += part.abs;
        total.converged &= part.converged;
        total.evaluations += part.evaluations;
    }
    Ok(total)
}

pub fn integrate_chart<D>(
    chart: &Chart,
    region: &Region,
    n: usize,
    policy: &IntegrationPolicy,
    density: &D,
) -> Result<Integral>
where
    D: Fn(&SurfacePoint) -> Result<Vector> + Sync,
{
    if n == 0 || n > crate::vector::MAX_AMBIENT {
        return Err(Error::Precondition(format!("density must have 1..=8 components, got {n}")));
    }
    let counters = Counters {
        converged: AtomicBool::new(true),
        evaluations: AtomicUsize::new(0),
    };
    let ctx = Ctx {
        chart,
        region,
        n,
        policy,
        density,
        counters: &counters,
    };
    let mut p = vec![0.0; chart.k];
    let sample = ctx.level(0, &mut p, policy.target_rel_tol, policy.abs_tol)?;
    Ok(Integral {
        value: sample.value,
        error: sample.err,
        abs: sample.abs,
        converged: counters.converged.load(Ordering::Relaxed),
        evaluations: counters.evaluations.load(Ordering::Relaxed),
    })
}

struct Ctx<'a, D> {
    chart: &'a Chart,
    region: &'a Region<'a>,
    n: usize,
    policy: &'a IntegrationPolicy,
    density: &'a D,
    counters: &'a Counters,
}

impl<D> Ctx<'_, D>
where
    D: Fn(&SurfacePoint) -> Result<Vector> + Sync,
{
    fn level(&self, d: usize, p: &mut [f64], rel: f64, abs: f64) -> Result<Sample> {
        let chart = self.chart;
        let (a, b) = (chart.lo[d], chart.hi[d]);
        if d + 1 == chart.k {
            return self.line(p, rel, abs);
        }
        let (rel_in, abs_in) = self.policy.inner(rel, abs, b - a);
        let fixed = p.to_vec();
        let f = |x: f64| -> Result<Sample> {
            let mut q = fixed.clone();
            q[d] = x;
            self.level(d + 1, &mut q, rel_in, abs_in)
        };
        let out = gk::integrate(
            &f,
            a,
            b,
            self.n,
            self.policy.outer_panels,
            rel,
            abs,
            self.policy.max_refine_depth,
            self.policy.parallel && d == 0,
        )?;
        self.record(&out);
        Ok(out.total)
    }

    fn record(&self, out: &gk::Adaptive) {
        if !out.converged {
            self.counters.converged.store(false, Ordering::Relaxed);
        }
        self.counters
            .evaluations
            .fetch_add(out.evaluations, Ordering::Relaxed);
    }

    /// Innermost parameter line with the other parameters fixed in `p`.
    fn line(&self, p: &mut [f64], rel: f64, abs: f64) -> Result<Sample> {
        let chart = self.chart;
        let d = chart.k - 1;
        let (a, b) = (chart.lo[d], chart.hi[d]);
        let fixed = p.to_vec();
        let g = |x: f64| {
            let mut q = fixed.clone();
            q[d] = x;
            self.region.membership(&chart.form, &chart.map(&q))
        };
        let mut xs = equispaced(a, b, self.policy.base_grid);
        if chart.is_polar() {
            // Regions whose boundary passes through the pole meet most lines
            // in intervals much shorter than the sampling step.
            let step = xs[1];
            let near: Vec<f64> = (POLE_SAMPLES.0..=POLE_SAMPLES.1)
                .rev()
                .map(|j| a + (b - a) * 4f64.powi(-j))
                .filter(|&x| x > a && x < step)
                .collect();
            xs.splice(1..1, near);
        }
        let intervals = inside_intervals_at(&g, &xs);
        // At the pole of a polar chart the frame is undefined, but the area
        // element vanishes like r^(k-1); nodes driven there contribute nothing.
        let pole = if chart.is_polar() { POLE_CUT * (b - a) } else { 0.0 };
        let f = |x: f64| -> Result<Sample> {
            let mut q = fixed.clone();
            q[d] = x;
            let sp = match chart.surface_point(&q) {
                Ok(sp) => sp,
                Err(Error::Chart(_)) if x < pole => return Ok(Sample::zeros(self.n)),
                Err(e) => return Err(e),
            };
            let v = (self.density)(&sp)?;
            if !v.is_finite() {
                return Err(Error::Singular(format!("non-finite density at parameter {q:?}")));
            }
            Ok(Sample::plain(v.scale(sp.area_element)))
        };
        let mut acc = Sample::zeros(self.n);
        for (lo, hi) in intervals {
            let out = gk::integrate(
                &f,
                lo,
                hi,
                self.n,
                1,
                rel,
                abs * (hi - lo) / (b - a),
                self.policy.max_refine_depth,
                false,
            )?;
            self.record(&out);
            acc = acc.add(&out.total);
        }
        Ok(acc)
    }
}

/// Maximal subintervals of `[a, b]` on which `g <= 0`, located by sampling
/// `g` at `samples + 1` equispaced points and refining each sign change.
pub fn inside_intervals<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, samples: usize) -> Vec<(f64, f64)> {
    inside_intervals_at(g, &equispaced(a, b, samples))
}

fn equispaced(a: f64, b: f64, samples: usize) -> Vec<f64> {
    let m = samples.max(1);
    (0..=m)
        .map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 })
        .collect()
}

/// As [`inside_intervals`] with the increasing sample points `xs` given.
pub fn inside_intervals_at<G: Fn(f64) -> f64>(g: &G, xs: &[f64]) -> Vec<(f64, f64)> {
    let (a, b) = (xs[0], xs[xs.len() - 1]);
    let m = xs.len() - 1;
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let tol = 1e-14 * (b - a).abs().max(1e-300);
    let mut out = Vec::new();
    let mut start = (gs[0] <= 0.0).then_some(a);
    for i in 0..m {
        let (in0, in1) = (gs[i] <= 0.0, gs[i + 1] <= 0.0);
        if in0 == in1 {
            continue;
        }
        let root = illinois(g, xs[i], xs[i + 1], gs[i], gs[i + 1], tol);
        if in0 {
            if let Some(s) = start.take() {
                if root > s {
                    out.push((s, root));
                }
            }
        } else {
            start = Some(root);
        }
    }
    if let Some(s) = start {
        if b > s {
            out.push((s, b));
        }
    }
    out
}

/// Root of `g` in `[x0, x1]` with `g(x0) = g0`, `g(x1) = g1` of opposite
/// inside/outside status, by the Illinois variant of regula falsi
/// (`g <= 0` counts as inside).
fn illinois<G: Fn(f64) -> f64>(g: &G, mut x0: f64, mut x1: f64, mut g0: f64, mut g1: f64, tol: f64) -> f64 {
    let outside = |v: f64| v > 0.0;
    let mut side = 0i8;
    let mut bisect = false;
    for _ in 0..300 {
        if (x1 - x0).abs() <= tol {
            break;
        }
        let denom = g1 - g0;
        let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        let mut x = x1 - g1 * (x1 - x0) / denom;
        if bisect || !(x > lo && x < hi) {
            x = 0.5 * (x0 + x1);
        }
        let gx = g(x);
        // the sentinel +1 for undefined f carries no slope information
        bisect = gx == 1.0 || !gx.is_finite();
        if outside(gx) == outside(g1) {
            x1 = x;
            g1 = gx;
            if side == -1 {
                g0 *= 0.5;
            }
            side = -1;
        } else {
            x0 = x;
            g0 = gx;
            if side == 1 {
                g1 *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (x0 + x1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intervals_of_a_union() {
        let g = |x: f64| (x - 0.2).abs().min((x - 0.7).abs()) - 0.1;
        let iv = inside_intervals(&g, 0.0, 1.0, 48);
        assert_eq!(iv.len(), 2);
        let expect = [(0.1, 0.3), (0.6, 0.8)];
        for (got, want) in iv.iter().zip(&expect) {
            assert!((got.0 - want.0).abs() < 1e-13 && (got.1 - want.1).abs() < 1e-13, "{got:?}");
        }
    }

    #[test]
    fn intervals_touching_endpoints() {
        let g = |x: f64| x - 0.37;
        let iv = inside_intervals(&g, 0.0, 1.0, 48);
        assert_eq!(iv.len(), 1);
        assert_eq!(iv[0].0, 0.0);
        assert!((iv[0].1 - 0.37).abs() < 1e-14);
        let all = inside_intervals(&|_x: f64| -1.0, 0.0, 2.0, 4);
        assert_eq!(all, vec![(0.0, 2.0)]);
        assert!(inside_intervals(&|_x: f64| 1.0, 0.0, 2.0, 4).is_empty());
    }

    #[test]
    fn undefined_membership_does_not_stall_the_root_finder() {
        let g = |x: f64| if x > 0.5 { 1.0 } else { x - 0.5 };
        let iv = inside_intervals(&g, 0.0, 1.0, 7);
        assert!((iv[0].1 - 0.5).abs() < 1e-13);
    }

    #[test]
    fn policy_validation() {
        assert!(IntegrationPolicy::default().validate().is_ok());
        let p = IntegrationPolicy {
            epsilon_ball: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
