//! Moving-centre machinery along the axis geodesic through the origin `o` and
//! the prescribed point `y`.
//!
//! The axis coordinate `s` and the distance `rho` to the axis split the
//! metric as `d rho^2 + cs(rho)^2 ds^2 + sn(rho)^2 g_{S^{n-2}}`; the field
//! `d/ds = cs(rho)^2 grad s` is the Killing field generating translations
//! along the axis. On top of these sit the profile `u(s)`, the function
//! `f = A(r_y) / A(u(s))` whose sublevel sets `E_t` interpolate between small
//! balls around `y` and the ball `B_R`, the weights `w_{t,i,j}` and the
//! vector fields `W_0`, `W_1`, `W_t`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::AreaProfile;
use crate::spaceform::{Curvature, Point, SpaceForm, TangentVector};
use crate::vector::Vector;

/// Slack beyond `B_R` within which points are still accepted.
pub const BALL_SLACK: f64 = 1e-9;

/// Weight flags `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Regime {
    pub i: u8,
    pub j: u8,
}

impl Regime {
    pub fn new(i: u8, j: u8) -> Result<Self> {
        if i > 1 || j > 1 {
            return Err(Error::Precondition(format!(
                "weight flags must be 0 or 1, got ({i}, {j})"
            )));
        }
        Ok(Regime { i, j })
    }

    pub fn all() -> [Regime; 4] {
        [
            Regime { i: 0, j: 0 },
            Regime { i: 0, j: 1 },
            Regime { i: 1, j: 0 },
            Regime { i: 1, j: 1 },
        ]
    }

    /// Regimes in which the weighted moving-centre monotonicity holds for `kappa`.
    pub fn admissible(kappa: Curvature) -> Vec<Regime> {
        Regime::all()
            .into_iter()
            .filter(|r| r.is_admissible(kappa))
            .collect()
    }

    pub fn is_admissible(&self, kappa: Curvature) -> bool {
        match kappa {
            Curvature::Flat => true,
            Curvature::Hyperbolic => self.j == 1,
            Curvature::Spherical => self.i == 0 && self.j == 1,
        }
    }

    pub fn index(&self) -> usize {
        (2 * self.i + self.j) as usize
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub form: SpaceForm,
    pub k: usize,
    pub radius: f64,
    pub s_y: f64,
    pub origin: Point,
    pub axis_dir: TangentVector,
    pub regime: Regime,
    profile: AreaProfile,
    prescribed: Point,
    r_under: f64,
}

/// Axis-adapted data at a point: `s`, `rho`, the foot `z_x` on the axis and
/// gradients.
#[derive(Clone, Copy, Debug)]
pub struct AxisFrame {
    pub s: f64,
    pub rho: f64,
    pub foot: Point,
    pub grad_s: Vector,
    /// `d/ds = cs(rho)^2 grad s`.
    pub killing: Vector,
    /// Undefined on the axis itself.
    pub grad_rho: Option<Vector>,
}

/// `F~_t(s)` and its partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FTilde {
    pub value: f64,
    pub d_s: f64,
    pub d_t: f64,
    /// `F~_t F'/F`, computed without dividing by `F`.
    pub times_log_slope: f64,
}

/// The pieces of `w_{t,i,j}`, `div W_t` and the excess integrands at one
/// point and tangent `k`-plane.
#[derive(Clone, Copy, Debug)]
pub struct WeightTerms {
    /// `|grad^T r_y|^2`.
    pub tangential: f64,
    /// `|grad^perp r_y|^2`.
    pub normal: f64,
    /// `cs(rho)^2 |grad^T s|^2`.
    pub axial: f64,
    /// `A'(u) u' / A(u)` at `s(x)`.
    pub u_slope: f64,
    /// `a(r_y)`.
    pub a_ry: f64,
    pub ftilde: FTilde,
}

impl WeightTerms {
    pub fn w(&self, regime: Regime) -> f64 {
        let (i, j) = (regime.i as f64, regime.j as f64);
        self.tangential + i * self.normal - j * self.ftilde.value * self.u_slope * self.axial
    }

    /// `d/dt w_{t,i,j}`.
    pub fn dw_dt(&self, regime: Regime) -> f64 {
        -(regime.j as f64) * self.ftilde.d_t * self.u_slope * self.axial
    }

    /// `div_S W_t` from the closed form.
    pub fn div_wt(&self) -> f64 {
        self.tangential + self.a_ry * self.normal + self.ftilde.d_s * self.axial
    }

    /// Margin of the divergence condition `div W_t - (w - t d_t w)`.
    pub fn divergence_margin(&self, regime: Regime, t: f64) -> f64 {
        self.div_wt() - (self.w(regime) - t * self.dw_dt(regime))
    }

    /// Axial part of the divergence margin, divided by `axial`:
    /// `d_s F~ + j (F~ - t d_t F~) A'(u)u'/A(u)`.
    pub fn axial_margin_coefficient(&self, regime: Regime, t: f64) -> f64 {
        let f = &self.ftilde;
        f.d_s + regime.j as f64 * (f.value - t * f.d_t) * self.u_slope
    }

    /// Remainder of the boundary condition on `{f = t}` after the middle
    /// terms cancel: `i |grad^perp r_y|^2 + (1-j) F~ A'(u)u'/A(u) axial`.
    pub fn boundary_remainder(&self, regime: Regime) -> f64 {
        regime.i as f64 * self.normal
            + (1.0 - regime.j as f64) * self.ftilde.value * self.u_slope * self.axial
    }

    /// Integrand of the interior excess term.
    pub fn excess_interior(&self, regime: Regime) -> f64 {
        let (i, j) = (regime.i as f64, regime.j as f64);
        (self.a_ry - i) * self.normal
            + j * self.ftilde.times_log_slope * self.axial
            + (1.0 - j) * self.ftilde.d_s * self.axial
    }
}

impl ProblemConfig {
    /// Configuration with the model origin and the first coordinate axis.
    pub fn new(form: SpaceForm, k: usize, radius: f64, s_y: f64, regime: Regime) -> Result<Self> {
        let origin = form.origin();
        let axis = form.origin_direction(1);
        Self::with_frame(form, k, radius, s_y, origin, axis, regime)
    }

    pub fn with_frame(
        form: SpaceForm,
        k: usize,
        radius: f64,
        s_y: f64,
        origin: Point,
        axis_dir: TangentVector,
        regime: Regime,
    ) -> Result<Self> {
        if k < 2 || k > form.n {
            return Err(Error::Precondition(format!(
                "submanifold dimension k = {k} must satisfy 2 <= k <= n = {}",
                form.n
            )));
        }
        if !(radius > 0.0 && radius < form.diam() / 2.0) {
            return Err(Error::Precondition(format!(
                "ball radius R = {radius} must lie in (0, diam/2)"
            )));
        }
        if !(s_y >= 0.0 && s_y < radius) {
            return Err(Error::Precondition(format!(
                "prescribed point coordinate s_y = {s_y} must lie in [0, R)"
            )));
        }
        let origin = form.point(*origin.coords())?;
        let axis_dir = form.tangent(origin, axis_dir.vec)?;
        if (form.norm(&axis_dir.vec) - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition("axis direction must be a unit vector".into()));
        }
        let profile = AreaProfile::new(form.kappa, k)?;
        let prescribed = form.geodesic(&origin, &axis_dir, s_y);
        let r_under = underline_r_raw(form.kappa, radius, s_y)?;
        Ok(ProblemConfig {
            form,
            k,
            radius,
            s_y,
            origin,
            axis_dir,
            regime,
            profile,
            prescribed,
            r_under,
        })
    }

    /// Same geometry with `s_y = 0`, or any other prescribed coordinate.
    pub fn with_s_y(&self, s_y: f64) -> Result<Self> {
        Self::with_frame(
            self.form,
            self.k,
            self.radius,
            s_y,
            self.origin,
            self.axis_dir,
            self.regime,
        )
    }

    pub fn with_regime(&self, regime: Regime) -> Self {
        let mut c = self.clone();
        c.regime = regime;
        c
    }

    #[inline]
    pub fn kappa(&self) -> Curvature {
        self.form.kappa
    }

    pub fn profile(&self) -> &AreaProfile {
        &self.profile
    }

    /// The prescribed point `y = gamma(s_y)`.
    pub fn prescribed(&self) -> &Point {
        &self.prescribed
    }

    /// `r_(y)`, the radius of `Sigma_0 cap B_R`.
    pub fn underline_r(&self) -> f64 {
        self.r_under
    }

    /// The axis geodesic `gamma(s)`.
    pub fn axis_point(&self, s: f64) -> Point {
        self.form.geodesic(&self.origin, &self.axis_dir, s)
    }

    /// Unit velocity of the axis at `gamma(s)`.
    pub fn axis_tangent(&self, s: f64) -> Vector {
        self.form.geodesic_velocity(&self.origin, &self.axis_dir.vec, s)
    }

    /// Orthonormal vectors orthogonal to the plane of the axis. They are
    /// tangent at every axis point and parallel along it.
    pub fn normal_frame(&self) -> Vec<Vector> {
        let form = &self.form;
        let dim = form.ambient_dim();
        let mut fixed = vec![self.axis_dir.vec];
        if self.kappa() != Curvature::Flat {
            fixed.push(*self.origin.coords());
        }
        let mut out: Vec<Vector> = Vec::new();
        for i in 0..dim {
            let mut v = Vector::basis(dim, i);
            for _ in 0..2 {
                for f in &fixed {
                    let ff = form.inner(f, f);
                    v = v.axpy(-form.inner(&v, f) / ff, f);
                }
                for b in &out {
                    v = v.axpy(-form.inner(&v, b), b);
                }
            }
            let nv = form.inner(&v, &v);
            if nv > 1e-6 {
                out.push(v.scale(1.0 / nv.sqrt()));
            }
            if out.len() == form.n - 1 {
                break;
            }
        }
        out
    }

    /// Whether the origin and axis are the model origin and first axis.
    pub fn has_standard_frame(&self) -> bool {
        let o = self.form.origin();
        let e = self.form.origin_direction(1);
        (*self.origin.coords() - *o.coords()).max_abs() < 1e-14
            && (self.axis_dir.vec - e.vec).max_abs() < 1e-14
    }

    /// `|Sigma_0 cap E_1| = A(r_(y)) |S^{k-1}|`.
    pub fn reference_area(&self) -> f64 {
        self.profile.area_unchecked(self.r_under) * self.profile.sphere_volume()
    }

    pub fn r(&self, x: &Point) -> f64 {
        self.form.distance(&self.origin, x)
    }

    pub fn r_y(&self, x: &Point) -> f64 {
        self.form.distance(&self.prescribed, x)
    }

    /// Whether `x` lies in `B_{R + slack}`.
    pub fn in_working_ball(&self, x: &Point) -> bool {
        self.r(x) <= self.radius + BALL_SLACK
    }

    pub fn axis_frame(&self, x: &Point) -> Result<AxisFrame> {
        let form = &self.form;
        let o = self.origin.coords();
        let e = &self.axis_dir.vec;
        let xc = x.coords();
        match self.kappa() {
            Curvature::Flat => {
                let w = *xc - *o;
                let s = w.dot(e);
                let perp = w.axpy(-s, e);
                let rho = perp.norm();
                let foot = Point::from_vector_unchecked(o.axpy(s, e));
                let grad_rho = (rho > 1e-14 * (1.0 + w.norm())).then(|| perp.scale(1.0 / rho));
                Ok(AxisFrame {
                    s,
                    rho,
                    foot,
                    grad_s: *e,
                    killing: *e,
                    grad_rho,
                })
            }
            Curvature::Spherical => {
                let a = xc.dot(o);
                let b = xc.dot(e);
                let p = o.scale(a).axpy(b, e);
                let perp = *xc - p;
                let pn = (a * a + b * b).sqrt();
                let perp_n = perp.norm();
                if pn < 1e-12 || (a <= 0.0 && b.abs() < 1e-14) {
                    return Err(Error::Singular(
                        "point lies in the exceptional set of the axis coordinates".into(),
                    ));
                }
                let rho = perp_n.atan2(pn);
                let s = b.atan2(a);
                let foot = Point::from_vector_unchecked(p.scale(1.0 / pn));
                let killing = e.scale(a).axpy(-b, o);
                let grad_s = killing.scale(1.0 / (pn * pn));
                let grad_rho = (perp_n > 1e-14).then(|| {
                    perp.scale(rho.cos() / perp_n)
                        .axpy(-rho.sin(), foot.coords())
                });
                Ok(AxisFrame {
                    s,
                    rho,
                    foot,
                    grad_s,
                    killing,
                    grad_rho,
                })
            }
            Curvature::Hyperbolic => {
                let a = -form.inner(xc, o);
                let b = form.inner(xc, e);
                let p = o.scale(a).axpy(b, e);
                let perp = *xc - p;
                let perp_n = form.norm(&perp);
                let c = (1.0 + perp_n * perp_n).sqrt();
                let rho = perp_n.asinh();
                let s = (b / c).asinh();
                let foot = Point::from_vector_unchecked(p.scale(1.0 / c));
                let killing = o.scale(b).axpy(a, e);
                let grad_s = killing.scale(1.0 / (c * c));
                let grad_rho = (perp_n > 1e-14).then(|| {
                    perp.scale(c / perp_n)
                        .axpy(perp_n, foot.coords())
                });
                Ok(AxisFrame {
                    s,
                    rho,
                    foot,
                    grad_s,
                    killing,
                    grad_rho,
                })
            }
        }
    }

    /// `u(s)`.
    pub fn u(&self, s: f64) -> Result<f64> {
        u_raw(self.kappa(), self.radius, self.s_y, s)
    }

    /// `u'(s) = -cs(R) sn(s_y) / (cs(s)^2 sn(u))`.
    pub fn u_prime(&self, s: f64) -> Result<f64> {
        let u = self.u(s)?;
        self.u_prime_at(s, u)
    }

    fn u_prime_at(&self, s: f64, u: f64) -> Result<f64> {
        let kappa = self.kappa();
        let snu = kappa.sn(u);
        if snu <= 0.0 {
            return Err(Error::Singular(format!("u'(s) undefined where u = {u}")));
        }
        let cs_s = kappa.cs(s);
        Ok(-kappa.cs(self.radius) * kappa.sn(self.s_y) / (cs_s * cs_s * snu))
    }

    /// `F(s) = A'(u) u' cs(s - s_y)^2`.
    pub fn f_profile(&self, s: f64) -> Result<f64> {
        let u = self.u(s)?;
        let up = self.u_prime_at(s, u)?;
        let c = self.kappa().cs(s - self.s_y);
        Ok(self.profile.area_prime(u) * up * c * c)
    }

    /// `F'(s)` in closed form.
    pub fn f_profile_prime(&self, s: f64) -> Result<f64> {
        let u = self.u(s)?;
        let up = self.u_prime_at(s, u)?;
        let kappa = self.kappa();
        let c = kappa.cs(s - self.s_y);
        let f = self.profile.area_prime(u) * up * c * c;
        let log_slope = (self.k as f64 - 2.0) * kappa.ct(u) * up
            - 2.0 * kappa.sign() * kappa.tn(s - self.s_y)
            + 2.0 * kappa.sign() * kappa.tn(s);
        Ok(f * log_slope)
    }

    /// `k cs(u(s))^2 >= 2`, the pointwise condition equivalent to `F'(s) >= 0`
    /// (given `cs(u) >= 0`).
    pub fn f_prime_condition(&self, s: f64) -> Result<bool> {
        let c = self.kappa().cs(self.u(s)?);
        Ok(c >= 0.0 && self.k as f64 * c * c >= 2.0)
    }

    /// `F~_t(s) = t^2 A(u) F(s) / (A'(v)^2 cs(v)^2)`, `v = A^{-1}(t A(u))`.
    pub fn f_tilde(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.f_tilde_partials(t, s)?.value)
    }

    /// `F~_t(s)` together with `d_s F~`, `d_t F~` and `F~ F'/F`.
    pub fn f_tilde_partials(&self, t: f64, s: f64) -> Result<FTilde> {
        let u = self.u(s)?;
        let up = self.u_prime_at(s, u)?;
        self.f_tilde_at(t, s, u, up)
    }

    fn f_tilde_at(&self, t: f64, s: f64, u: f64, up: f64) -> Result<FTilde> {
        if t <= 0.0 || self.s_y == 0.0 {
            return Ok(FTilde {
                value: 0.0,
                d_s: 0.0,
                d_t: 0.0,
                times_log_slope: 0.0,
            });
        }
        let kappa = self.kappa();
        let p = &self.profile;
        let area_u = p.area_unchecked(u);
        let ap_u = p.area_prime(u);
        let v = self.inverse_extended(t * area_u)?;
        let ap_v = p.area_prime(v);
        let cs_v = kappa.cs(v);
        let g = t * t * area_u / (ap_v * ap_v * cs_v * cs_v);
        let c = kappa.cs(s - self.s_y);
        let f = ap_u * up * c * c;
        let f_log = (self.k as f64 - 2.0) * kappa.ct(u) * up
            - 2.0 * kappa.sign() * kappa.tn(s - self.s_y)
            + 2.0 * kappa.sign() * kappa.tn(s);
        let fp = f * f_log;
        // d log(A''/A'... ) pieces of the chain rule through v = A^{-1}(t A(u))
        let v_log = -2.0 * p.area_second(v) / ap_v + 2.0 * kappa.sign() * kappa.tn(v);
        let dv_ds = t * ap_u * up / ap_v;
        let dv_dt = area_u / ap_v;
        let g_s = g * (ap_u * up / area_u + v_log * dv_ds);
        let g_t = g * (2.0 / t + v_log * dv_dt);
        Ok(FTilde {
            value: g * f,
            d_s: g_s * f + g * fp,
            d_t: g_t * f,
            times_log_slope: g * fp,
        })
    }

    /// `A^{-1}` extended for the sphere to `[0, A(pi)]`, needed by finite
    /// difference stencils that step past `t = 1`.
    fn inverse_extended(&self, value: f64) -> Result<f64> {
        let p = &self.profile;
        match self.kappa() {
            Curvature::Spherical => {
                let top = p.area_unchecked(PI / 2.0);
                if value <= top {
                    p.inverse(value)
                } else {
                    // mirror: A(pi - r) = 2 A(pi/2) - A(r)
                    let total = p.area_unchecked(PI);
                    if value > total {
                        return Err(Error::domain("A^-1", value, format!("[0, {total}]")));
                    }
                    Ok(PI - p.inverse(total - value)?)
                }
            }
            _ => p.inverse(value),
        }
    }

    /// `f(x) = A(r_y) / A(u(s(x)))`. Rejects points outside `B_{R + 1e-9}`.
    pub fn f_value(&self, x: &Point) -> Result<f64> {
        if !self.in_working_ball(x) {
            return Err(Error::Precondition(format!(
                "point at distance {} outside B_R, R = {}",
                self.r(x),
                self.radius
            )));
        }
        self.f_value_unchecked(x)
    }

    /// `f` on its maximal domain, without the ball guard.
    pub fn f_value_unchecked(&self, x: &Point) -> Result<f64> {
        let frame = self.axis_frame(x)?;
        let u = self.u(frame.s)?;
        let p = &self.profile;
        Ok(p.area_unchecked(self.r_y(x)) / p.area_unchecked(u))
    }

    /// `f` as a function of slice coordinates `(s, rho)`, using the
    /// Pythagorean relation about `y`.
    pub fn f_on_slice(&self, s: f64, rho: f64) -> Result<f64> {
        let r_y = slice_distance(self.kappa(), s - self.s_y, rho);
        let u = self.u(s)?;
        let p = &self.profile;
        Ok(p.area_unchecked(r_y) / p.area_unchecked(u))
    }

    /// Membership in `E_t = {f <= t}`.
    pub fn in_sublevel(&self, t: f64, x: &Point) -> Result<bool> {
        Ok(self.f_value(x)? <= t)
    }

    /// Radius of a ball about `y` containing `E_t cap B_R`.
    pub fn sublevel_radius_bound(&self, t: f64) -> f64 {
        let p = &self.profile;
        let u_max = self.u(-self.radius).unwrap_or(self.radius + self.s_y);
        let value = t * p.area_unchecked(u_max);
        self.inverse_extended(value)
            .unwrap_or(self.form.diam().min(f64::MAX))
            .min(self.radius + self.s_y)
    }

    /// All quantities entering `w_{t,i,j}` at `x` for the tangent plane
    /// spanned by the orthonormal `frame`.
    pub fn weight_terms(&self, t: f64, x: &Point, frame: &[Vector]) -> Result<WeightTerms> {
        self.weight_terms_guarded(t, x, frame, 0.0)
    }

    /// As [`weight_terms`](Self::weight_terms), but within distance `eps` of
    /// `y` the radial terms take their limits `|grad^T r_y|^2 = 1`,
    /// `|grad^perp r_y|^2 = 0`, `a = 1`, which hold for any `k`-plane
    /// through `y` tangent to a surface containing it.
    pub fn weight_terms_guarded(&self, t: f64, x: &Point, frame: &[Vector], eps: f64) -> Result<WeightTerms> {
        let form = &self.form;
        let r_y = self.r_y(x);
        let (tangential, normal, a_ry) = if r_y < eps {
            (1.0, 0.0, 1.0)
        } else {
            let grad_ry = form.grad_distance(&self.prescribed, x)?.vec;
            let mut tangential = 0.0;
            let mut tan_vec = Vector::zeros(grad_ry.len());
            for e in frame {
                let c = form.inner(&grad_ry, e);
                tangential += c * c;
                tan_vec = tan_vec.axpy(c, e);
            }
            let perp = grad_ry - tan_vec;
            (tangential, form.inner(&perp, &perp).max(0.0), self.profile.a_func(r_y))
        };
        if self.s_y == 0.0 {
            return Ok(WeightTerms {
                tangential,
                normal,
                axial: 0.0,
                u_slope: 0.0,
                a_ry,
                ftilde: FTilde {
                    value: 0.0,
                    d_s: 0.0,
                    d_t: 0.0,
                    times_log_slope: 0.0,
                },
            });
        }
        let axis = self.axis_frame(x)?;
        let mut axial = 0.0;
        for e in frame {
            let ck = form.inner(&axis.killing, e);
            axial += ck * ck;
        }
        let cs_rho = self.kappa().cs(axis.rho);
        axial /= cs_rho * cs_rho;
        let u = self.u(axis.s)?;
        let up = self.u_prime_at(axis.s, u)?;
        let p = &self.profile;
        Ok(WeightTerms {
            tangential,
            normal,
            axial,
            u_slope: p.area_prime(u) * up / p.area_unchecked(u),
            a_ry,
            ftilde: self.f_tilde_at(t, axis.s, u, up)?,
        })
    }

    /// `w_{t,i,j}` for the configured regime.
    pub fn weight(&self, t: f64, x: &Point, frame: &[Vector]) -> Result<f64> {
        Ok(self.weight_terms(t, x, frame)?.w(self.regime))
    }

    /// `W_0 = grad r / A'(r)`, centred at the origin.
    pub fn field_w0(&self, x: &Point) -> Result<TangentVector> {
        let g = self.form.grad_distance(&self.origin, x)?;
        let r = self.r(x);
        Ok(TangentVector {
            base: *x,
            vec: g.vec.scale(1.0 / self.profile.area_prime(r)),
        })
    }

    /// `W_1 = A(r) grad r / A'(r)`, centred at the origin.
    pub fn field_w1(&self, x: &Point) -> Result<TangentVector> {
        let g = self.form.grad_distance(&self.origin, x)?;
        let r = self.r(x);
        let p = &self.profile;
        Ok(TangentVector {
            base: *x,
            vec: g.vec.scale(p.area_unchecked(r) / p.area_prime(r)),
        })
    }

    /// `W_t = A(r_y) grad r_y / A'(r_y) + F~_t(s) d/ds`.
    pub fn field_wt(&self, t: f64, x: &Point) -> Result<TangentVector> {
        let g = self.form.grad_distance(&self.prescribed, x)?;
        let ry = self.r_y(x);
        let p = &self.profile;
        let axis = self.axis_frame(x)?;
        let ft = self.f_tilde(t, axis.s)?;
        Ok(TangentVector {
            base: *x,
            vec: g
                .vec
                .scale(p.area_unchecked(ry) / p.area_prime(ry))
                .axpy(ft, &axis.killing),
        })
    }

    /// Regime admissibility for the moving-centre monotonicity.
    pub fn check_regime(&self) -> Result<()> {
        if self.regime.is_admissible(self.kappa()) {
            return Ok(());
        }
        let allowed = match self.kappa() {
            Curvature::Flat => "any (i, j)",
            Curvature::Hyperbolic => "j = 1",
            Curvature::Spherical => "(i, j) = (0, 1)",
        };
        Err(Error::Hypothesis(format!(
            "weight regime (i, j) = ({}, {}) is not admissible for curvature {}: requires {allowed}",
            self.regime.i,
            self.regime.j,
            self.kappa().sign_i64()
        )))
    }

    /// `F'(s) >= 0` for `|s| <= R`, checked as `k cs(u(s))^2 >= 2` on a grid
    /// including both endpoints.
    pub fn check_f_prime_condition(&self) -> Result<()> {
        const SAMPLES: usize = 2001;
        for i in 0..SAMPLES {
            let s = -self.radius + 2.0 * self.radius * i as f64 / (SAMPLES - 1) as f64;
            if !self.f_prime_condition(s)? {
                let c = self.kappa().cs(self.u(s)?);
                return Err(Error::Hypothesis(format!(
                    "k cs(u)^2 >= 2 fails at s = {s:.6} (k cs(u)^2 = {:.6}, k = {}); \
                     F' >= 0 requires it for |s| <= R",
                    self.k as f64 * c * c,
                    self.k
                )));
            }
        }
        Ok(())
    }

    /// All hypotheses of the weighted moving-centre monotonicity.
    pub fn check_moving_hypotheses(&self) -> Result<()> {
        self.check_regime()?;
        if self.kappa() == Curvature::Spherical {
            let c = (self.radius + self.s_y).cos();
            if !(c >= 0.0 && c * c >= 2.0 / self.k as f64) {
                // report through the pointwise condition, which names the failing s
                self.check_f_prime_condition()?;
                return Err(Error::Hypothesis(format!(
                    "cos(R + d(o,y))^2 >= 2/k fails: cos({})^2 = {:.6} < {:.6}",
                    self.radius + self.s_y,
                    c * c,
                    2.0 / self.k as f64
                )));
            }
        }
        self.check_f_prime_condition()
    }
}

/// `r_(y)`: `cs^{-1}(cs(R)/cs(s_y))`, or `sqrt(R^2 - s_y^2)` in flat space.
pub fn underline_r_raw(kappa: Curvature, radius: f64, s_y: f64) -> Result<f64> {
    if s_y == 0.0 {
        return Ok(radius);
    }
    match kappa {
        Curvature::Flat => {
            let q = radius * radius - s_y * s_y;
            if q < 0.0 {
                return Err(Error::Infeasible(format!("R^2 - s_y^2 = {q} < 0")));
            }
            Ok(q.sqrt())
        }
        _ => {
            let ratio = kappa.cs(radius) / kappa.cs(s_y);
            kappa.cs_inv(ratio).ok_or_else(|| {
                Error::Infeasible(format!("cs(R)/cs(s_y) = {ratio} outside the range of cs"))
            })
        }
    }
}

pub(crate) fn u_raw(kappa: Curvature, radius: f64, s_y: f64, s: f64) -> Result<f64> {
    match kappa {
        Curvature::Flat => {
            let q = radius * radius + s_y * s_y - 2.0 * s * s_y;
            if q < 0.0 {
                return Err(Error::Infeasible(format!("u(s) undefined at s = {s}")));
            }
            Ok(q.sqrt())
        }
        _ => {
            let cs_s = kappa.cs(s);
            if cs_s <= 0.0 {
                return Err(Error::Infeasible(format!("u(s) undefined at s = {s}")));
            }
            let arg = kappa.cs(s - s_y) * kappa.cs(radius) / cs_s;
            kappa
                .cs_inv(arg)
                .ok_or_else(|| Error::Infeasible(format!("u(s) undefined at s = {s}: cs argument {arg}")))
        }
    }
}

/// Distance from the axis point at coordinate `0` to the slice point `(s, rho)`.
pub fn slice_distance(kappa: Curvature, s: f64, rho: f64) -> f64 {
    match kappa {
        Curvature::Flat => s.hypot(rho),
        Curvature::Spherical => {
            // cos r = cos s cos rho, via the haversine form
            let hs = (0.5 * s).sin();
            let hr = (0.5 * rho).sin();
            let h = hs * hs + hr * hr - 2.0 * hs * hs * hr * hr;
            2.0 * h.clamp(0.0, 1.0).sqrt().asin()
        }
        Curvature::Hyperbolic => {
            // cosh r - 1 = cosh s cosh rho - 1
            let hs = (0.5 * s).sinh();
            let hr = (0.5 * rho).sinh();
            let h = hs * hs + hr * hr + 2.0 * hs * hs * hr * hr;
            2.0 * h.max(0.0).sqrt().asinh()
        }
    }
}
