use serde::{Deserialize, Serialize};

use super::{integrate, Integral, IntegrationPolicy, Region};
use crate::error::{Error, Result};
use crate::fibration::ProblemConfig;
use crate::spaceform::Point;
use crate::surfaces::{Surface, SurfacePoint};
use crate::vector::Vector;

/// Relative step of the coarea difference quotients.
const COAREA_STEP: f64 = 1e-4;
/// Relative step of the difference quotient of `Q` in the excess check.
const Q_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalKind {
    /// `|Sigma cap B_t| / |B^k_t|`.
    Area,
    /// `(1/|B^k_t|) int_{Sigma cap B_t} |grad^T r|^2`.
    Tangential,
}

/// A normalized quantity at one `t`, with its propagated error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QValue {
    pub t: f64,
    pub q: f64,
    pub error: f64,
    pub converged: bool,
    /// Set when a difference quotient behaves as near a critical level.
    #[serde(default)]
    pub flagged: bool,
}

fn tangential_sq(form: &crate::spaceform::SpaceForm, grad: &Vector, frame: &[Vector]) -> f64 {
    frame
        .iter()
        .map(|e| {
            let c = form.inner(grad, e);
            c * c
        })
        .sum()
}

/// `[|Sigma cap B_t(o)|, int_{Sigma cap B_t(o)} |grad^T r|^2]`.
pub fn classical_integrals(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<Integral> {
    let form = &config.form;
    let eps = policy.epsilon_ball * config.radius;
    let region = Region::Ball {
        centre: config.origin,
        radius: t,
    };
    let density = |sp: &SurfacePoint| -> Result<Vector> {
        let r = config.r(&sp.x);
        let tan = if r < eps {
            1.0
        } else {
            let g = form.grad_distance(&config.origin, &sp.x)?.vec;
            tangential_sq(form, &g, sp.frame())
        };
        Ok(Vector::from_slice(&[1.0, tan]))
    };
    integrate(surface, &region, 2, policy, &density)
}

fn check_classical_t(config: &ProblemConfig, t: f64) -> Result<()> {
    if !(t > 0.0 && t <= config.radius) {
        return Err(Error::Precondition(format!(
            "classical radius t = {t} must lie in (0, R], R = {}",
            config.radius
        )));
    }
    Ok(())
}

/// `Q_A(t)` or `Q_I(t)` about the origin.
pub fn q_classical(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    kind: ClassicalKind,
    policy: &IntegrationPolicy,
) -> Result<QValue> {
    check_classical_t(config, t)?;
    let int = classical_integrals(surface, config, t, policy)?;
    let c = match kind {
        ClassicalKind::Area => 0,
        ClassicalKind::Tangential => 1,
    };
    let p = config.profile();
    let norm = p.area_unchecked(t) * p.sphere_volume();
    Ok(QValue {
        t,
        q: int.value[c] / norm,
        error: int.error[c] / norm,
        converged: int.converged,
        flagged: false,
    })
}

/// `Q_d(t) = (1/|dB^k_t|) d/dt int_{Sigma cap B_t} |grad^T r|^2`, by a
/// Richardson-extrapolated pair of centred differences with steps `1e-4 R`
/// and twice that. Disagreement between the two quotients beyond `1e-6`
/// relative flags levels where the derivative is not resolved, which
/// happens near critical values of `r` on the surface.
pub fn q_boundary(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<QValue> {
    check_classical_t(config, t)?;
    let delta = COAREA_STEP * config.radius;
    if t <= 2.0 * delta {
        return Err(Error::Precondition(format!("t = {t} too small for the coarea stencil")));
    }
    let at = |s: f64| classical_integrals(surface, config, s, policy);
    let (m2, m1, p1, p2) = (at(t - 2.0 * delta)?, at(t - delta)?, at(t + delta)?, at(t + 2.0 * delta)?);
    let p = config.profile();
    let norm = p.area_prime(t) * p.sphere_volume();
    let d1 = (p1.value[1] - m1.value[1]) / (2.0 * delta);
    let d2 = (p2.value[1] - m2.value[1]) / (4.0 * delta);
    let error = (p1.error[1] + m1.error[1]) / delta + (p2.error[1] + m2.error[1]) / (4.0 * delta);
    let unresolved = (d1 - d2).abs() > 1e-6 * d1.abs() + 10.0 * error;
    Ok(QValue {
        t,
        q: (4.0 * d1 - d2) / 3.0 / norm,
        error: error / norm,
        converged: m2.converged && m1.converged && p1.converged && p2.converged,
        flagged: unresolved,
    })
}

/// Per-point terms of the moving-centre quantities:
/// `[w_t, boundary remainder, interior excess integrand, 1]`.
fn moving_density<'a>(
    config: &'a ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> impl Fn(&SurfacePoint) -> Result<Vector> + Sync + 'a {
    let eps = policy.epsilon_ball * config.underline_r();
    let regime = config.regime;
    move |sp: &SurfacePoint| {
        let w = config.weight_terms_guarded(t, &sp.x, sp.frame(), eps)?;
        Ok(Vector::from_slice(&[
            w.w(regime),
            w.boundary_remainder(regime),
            w.excess_interior(regime),
            1.0,
        ]))
    }
}

/// Integrals over `Sigma cap E_t` of `[w_t, remainder, interior, 1]`,
/// with the weight parameter `t_weight` and the region parameter `t_region`.
fn moving_integrals_split(
    surface: &Surface,
    config: &ProblemConfig,
    t_weight: f64,
    t_region: f64,
    policy: &IntegrationPolicy,
) -> Result<Integral> {
    let region = Region::Sublevel {
        config,
        t: t_region,
    };
    integrate(surface, &region, 4, policy, &moving_density(config, t_weight, policy))
}

/// Integrals over `Sigma cap E_t` of `[w_{t,i,j}, boundary remainder,
/// interior excess integrand, 1]`.
pub fn moving_integrals(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<Integral> {
    moving_integrals_split(surface, config, t, t, policy)
}

fn check_moving_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Precondition(format!("t = {t} must lie in (0, 1]")));
    }
    Ok(())
}

fn moving_norm(config: &ProblemConfig) -> f64 {
    config.reference_area()
}

/// `Q_{i,j}(t) = (1/(A(r_(y)) |S^{k-1}|)) (1/t) int_{Sigma cap E_t} w_{t,i,j}`.
/// Refuses configurations outside the theorem's hypotheses.
pub fn q_moving(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<QValue> {
    check_moving_t(t)?;
    config.check_moving_hypotheses()?;
    q_moving_raw(surface, config, t, policy)
}

fn q_moving_raw(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<QValue> {
    let int = moving_integrals(surface, config, t, policy)?;
    let norm = moving_norm(config) * t;
    Ok(QValue {
        t,
        q: int.value[0] / norm,
        error: int.error[0] / norm,
        converged: int.converged,
        flagged: false,
    })
}

/// The two terms of the excess identity for `Q_{i,j}'(t)` and a centred
/// difference of `Q_{i,j}` to compare their sum against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excess {
    pub t: f64,
    /// `(1/t) int_{Sigma cap dE_t} remainder / |grad^T f|`, normalized.
    pub boundary: f64,
    /// `(1/t^2) int_{Sigma cap E_t} interior integrand`, normalized.
    pub interior: f64,
    pub sum: f64,
    pub fd_derivative: f64,
    /// Error estimate of `sum` propagated from the quadrature.
    pub error: f64,
    pub converged: bool,
}

impl Excess {
    /// Agreement with the difference quotient at `max(1e-4, 5%)`.
    pub fn consistent(&self) -> bool {
        (self.sum - self.fd_derivative).abs() <= 1e-4_f64.max(0.05 * self.fd_derivative.abs())
    }
}

/// Boundary and interior excess terms at `t`. The boundary integral is
/// `(1/t) d/dtau int_{E_tau} remainder_t` at `tau = t` by the coarea formula,
/// realized as a Richardson-extrapolated centred difference with steps
/// `1e-4 t` and twice that.
pub fn excess_decomposition(
    surface: &Surface,
    config: &ProblemConfig,
    t: f64,
    policy: &IntegrationPolicy,
) -> Result<Excess> {
    check_moving_t(t)?;
    config.check_moving_hypotheses()?;
    let norm = moving_norm(config);
    let delta = COAREA_STEP * t;
    let here = moving_integrals(surface, config, t, policy)?;
    let shifted = |tau: f64| moving_integrals_split(surface, config, t, tau, policy);
    let (m2, m1, p1, p2) = (
        shifted(t - 2.0 * delta)?,
        shifted(t - delta)?,
        shifted(t + delta)?,
        shifted(t + 2.0 * delta)?,
    );
    let d1 = (p1.value[1] - m1.value[1]) / (2.0 * delta);
    let d2 = (p2.value[1] - m2.value[1]) / (4.0 * delta);
    let boundary = (4.0 * d1 - d2) / 3.0 / (t * norm);
    let interior = here.value[2] / (t * t * norm);
    let h = Q_STEP * t;
    let qp = q_moving_raw(surface, config, t + h, policy)?;
    let qm = q_moving_raw(surface, config, t - h, policy)?;
    let fd = (qp.q - qm.q) / (2.0 * h);
    let error = ((p1.error[1] + m1.error[1]) / delta + (p2.error[1] + m2.error[1]) / (4.0 * delta))
        / (t * norm)
        + here.error[2] / (t * t * norm);
    Ok(Excess {
        t,
        boundary,
        interior,
        sum: boundary + interior,
        fd_derivative: fd,
        error,
        converged: [&here, &m2, &m1, &p1, &p2].iter().all(|i| i.converged) && qp.converged && qm.converged,
    })
}

/// Density estimate by extrapolation of normalized areas to scale zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub value: f64,
    /// `(t, ratio)` pairs used by the fit.
    pub samples: Vec<(f64, f64)>,
    /// Value of the fit without the quadratic term.
    pub linear_value: f64,
    /// The two fits disagree by more than `1e-3`.
    pub flagged: bool,
}

/// `Theta(Sigma, p)` from area ratios at `t0, t0/2, t0/4` (`t0 = 1e-2`),
/// extrapolated with the basis `1, x, x^2` in the length scale
/// `x = t^{1/k}`. At `p = y` the ratio is `|Sigma cap E_t| / |Sigma_0 cap
/// E_t|`; elsewhere it is the ball ratio `|Sigma cap B_x(p)| / |B^k_x|` with
/// `x = t^{1/k} R`.
pub fn density_at(
    surface: &Surface,
    config: &ProblemConfig,
    point: &Point,
    policy: &IntegrationPolicy,
) -> Result<Density> {
    const T0: f64 = 1e-2;
    surface.check_contains(point, 1e-8)?;
    let k = surface.k() as f64;
    let at_y = config.r_y(point) < 1e-12;
    let ts = [T0, T0 / 2.0, T0 / 4.0];
    let mut samples = Vec::with_capacity(3);
    for &t in &ts {
        let ratio = if at_y {
            let region = Region::Sublevel { config, t };
            let one = |_: &SurfacePoint| Ok(Vector::from_slice(&[1.0]));
            let int = integrate(surface, &region, 1, policy, &one)?;
            int.value[0] / (t * moving_norm(config))
        } else {
            let radius = t.powf(1.0 / k) * config.radius;
            let region = Region::Ball {
                centre: *point,
                radius,
            };
            let one = |_: &SurfacePoint| Ok(Vector::from_slice(&[1.0]));
            let int = integrate(surface, &region, 1, policy, &one)?;
            let p = config.profile();
            int.value[0] / (p.area_unchecked(radius) * p.sphere_volume())
        };
        samples.push((t, ratio));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.powf(1.0 / k)).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    // quadratic through three points, evaluated at 0 (Lagrange form)
    let value = ys[0] * xs[1] * xs[2] / ((xs[0] - xs[1]) * (xs[0] - xs[2]))
        + ys[1] * xs[0] * xs[2] / ((xs[1] - xs[0]) * (xs[1] - xs[2]))
        + ys[2] * xs[0] * xs[1] / ((xs[2] - xs[0]) * (xs[2] - xs[1]));
    let linear_value = (ys[2] * xs[1] - ys[1] * xs[2]) / (xs[1] - xs[2]);
    Ok(Density {
        value,
        samples,
        linear_value,
        flagged: (value - linear_value).abs() > 1e-3 || !value.is_finite(),
    })
}
