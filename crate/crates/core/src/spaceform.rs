//! Ambient geometry of the three simply connected space forms.
//!
//! Points live in embedding models: the unit sphere in `R^{n+1}`, the upper
//! sheet of the unit hyperboloid in Minkowski space `R^{1,n}` (coordinate 0 is
//! timelike), and flat `R^n`. Distances, gradients of distance functions and
//! geodesics are all closed form.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{Vector, MAX_AMBIENT};

/// Tolerance for the model constraints of freshly validated points.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance for tangency of validated tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Curvature {
    Hyperbolic,
    Flat,
    Spherical,
}

impl Curvature {
    pub fn from_sign(kappa: i64) -> Result<Self> {
        match kappa {
            -1 => Ok(Curvature::Hyperbolic),
            0 => Ok(Curvature::Flat),
            1 => Ok(Curvature::Spherical),
            other => Err(Error::domain(
                "curvature",
                other as f64,
                "{-1, 0, +1}",
            )),
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Curvature::Hyperbolic => -1.0,
            Curvature::Flat => 0.0,
            Curvature::Spherical => 1.0,
        }
    }

    pub fn sign_i64(self) -> i64 {
        self.sign() as i64
    }

    // The unchecked warping functions below accept any real argument; the
    // domain-checked versions live on `SpaceForm`.

    #[inline]
    pub fn sn(self, r: f64) -> f64 {
        match self {
            Curvature::Hyperbolic => r.sinh(),
            Curvature::Flat => r,
            Curvature::Spherical => r.sin(),
        }
    }

    #[inline]
    pub fn cs(self, r: f64) -> f64 {
        match self {
            Curvature::Hyperbolic => r.cosh(),
            Curvature::Flat => 1.0,
            Curvature::Spherical => r.cos(),
        }
    }

    #[inline]
    pub fn tn(self, r: f64) -> f64 {
        match self {
            Curvature::Hyperbolic => r.tanh(),
            Curvature::Flat => r,
            Curvature::Spherical => r.tan(),
        }
    }

    #[inline]
    pub fn ct(self, r: f64) -> f64 {
        1.0 / self.tn(r)
    }

    /// Inverse of `cs` on `[0, diam)`: `acos` or a cancellation-free `acosh`.
    /// Returns `None` when the argument is outside the range of `cs`.
    pub fn cs_inv(self, value: f64) -> Option<f64> {
        match self {
            Curvature::Hyperbolic => {
                if value < 1.0 {
                    // allow rounding just below 1
                    if value > 1.0 - 1e-14 {
                        return Some(0.0);
                    }
                    return None;
                }
                Some(acosh_stable(value - 1.0))
            }
            Curvature::Spherical => {
                if value.abs() > 1.0 {
                    if value.abs() < 1.0 + 1e-14 {
                        return Some(if value > 0.0 { 0.0 } else { PI });
                    }
                    return None;
                }
                Some(value.acos())
            }
            Curvature::Flat => None,
        }
    }
}

/// `acosh(1 + u)` written as `ln(1 + u + sqrt(2u + u^2))`, accurate for small `u`.
#[inline]
pub fn acosh_stable(u: f64) -> f64 {
    (u + (u * (2.0 + u)).sqrt()).ln_1p()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub kappa: Curvature,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(Vector);

impl Point {
    pub fn coords(&self) -> &Vector {
        &self.0
    }

    /// Wraps coordinates without validation. Callers are responsible for
    /// the model constraint.
    pub fn from_vector_unchecked(v: Vector) -> Self {
        Point(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub vec: Vector,
}

impl SpaceForm {
    pub fn new(kappa: Curvature, n: usize) -> Result<Self> {
        let form = SpaceForm { kappa, n };
        if n < 2 {
            return Err(Error::domain("dimension", n as f64, "n >= 2"));
        }
        if form.ambient_dim() > MAX_AMBIENT {
            return Err(Error::domain(
                "dimension",
                n as f64,
                format!("ambient coordinate count <= {MAX_AMBIENT}"),
            ));
        }
        Ok(form)
    }

    pub fn hyperbolic(n: usize) -> Result<Self> {
        Self::new(Curvature::Hyperbolic, n)
    }

    pub fn flat(n: usize) -> Result<Self> {
        Self::new(Curvature::Flat, n)
    }

    pub fn spherical(n: usize) -> Result<Self> {
        Self::new(Curvature::Spherical, n)
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kappa {
            Curvature::Flat => self.n,
            _ => self.n + 1,
        }
    }

    pub fn diam(&self) -> f64 {
        match self.kappa {
            Curvature::Spherical => PI,
            _ => f64::INFINITY,
        }
    }

    fn check_radius(&self, function: &'static str, r: f64) -> Result<()> {
        if !(r >= 0.0 && r < self.diam()) {
            let domain = match self.kappa {
                Curvature::Spherical => "[0, pi)",
                _ => "[0, inf)",
            };
            return Err(Error::domain(function, r, domain));
        }
        Ok(())
    }

    pub fn sn(&self, r: f64) -> Result<f64> {
        self.check_radius("sn", r)?;
        Ok(self.kappa.sn(r))
    }

    pub fn cs(&self, r: f64) -> Result<f64> {
        self.check_radius("cs", r)?;
        Ok(self.kappa.cs(r))
    }

    pub fn tn(&self, r: f64) -> Result<f64> {
        self.check_radius("tn", r)?;
        if self.kappa == Curvature::Spherical && (r - PI / 2.0).abs() < 1e-15 {
            return Err(Error::domain("tn", r, "r != pi/2"));
        }
        Ok(self.kappa.tn(r))
    }

    pub fn ct(&self, r: f64) -> Result<f64> {
        self.check_radius("ct", r)?;
        if r <= 0.0 {
            return Err(Error::domain("ct", r, "r > 0"));
        }
        Ok(self.kappa.ct(r))
    }

    /// Ambient bilinear form: Euclidean, or Minkowski with signature (-,+,...,+).
    #[inline]
    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        match self.kappa {
            Curvature::Hyperbolic => a.dot(b) - 2.0 * a[0] * b[0],
            _ => a.dot(b),
        }
    }

    /// Riemannian norm of a tangent vector.
    #[inline]
    pub fn norm(&self, v: &Vector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// The model's distinguished origin: `e_0` for the curved models, `0` for flat space.
    pub fn origin(&self) -> Point {
        match self.kappa {
            Curvature::Flat => Point(Vector::zeros(self.n)),
            _ => Point(Vector::basis(self.n + 1, 0)),
        }
    }

    /// The `i`-th unit coordinate direction (1-based for the curved models) at the origin.
    pub fn origin_direction(&self, i: usize) -> TangentVector {
        let idx = match self.kappa {
            Curvature::Flat => i - 1,
            _ => i,
        };
        TangentVector {
            base: self.origin(),
            vec: Vector::basis(self.ambient_dim(), idx),
        }
    }

    /// Validates raw coordinates as a point of the model.
    pub fn point(&self, coords: Vector) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::Constraint(format!(
                "expected {} coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        if !coords.is_finite() {
            return Err(Error::Constraint("non-finite coordinates".into()));
        }
        match self.kappa {
            Curvature::Spherical => {
                let defect = (coords.dot(&coords) - 1.0).abs();
                if defect > POINT_TOL {
                    return Err(Error::Constraint(format!("|x|^2 - 1 = {defect:e}")));
                }
            }
            Curvature::Hyperbolic => {
                let defect = (self.inner(&coords, &coords) + 1.0).abs();
                if defect > POINT_TOL * coords.dot(&coords).max(1.0) || coords[0] <= 0.0 {
                    return Err(Error::Constraint(format!(
                        "<x,x> + 1 = {defect:e}, x_0 = {}",
                        coords[0]
                    )));
                }
            }
            Curvature::Flat => {}
        }
        Ok(Point(coords))
    }

    /// Pulls coordinates back onto the model (normalisation / timelike solve).
    pub fn normalize(&self, coords: Vector) -> Point {
        match self.kappa {
            Curvature::Spherical => Point(coords.scale(1.0 / coords.norm())),
            Curvature::Hyperbolic => {
                let mut c = coords;
                let spatial: f64 = c.as_slice()[1..].iter().map(|x| x * x).sum();
                c[0] = (1.0 + spatial).sqrt();
                Point(c)
            }
            Curvature::Flat => Point(coords),
        }
    }

    /// Constraint defect of a point: `| |x|^2 - 1 |`, `| <x,x> + 1 |` or 0.
    pub fn constraint_defect(&self, x: &Point) -> f64 {
        match self.kappa {
            Curvature::Spherical => (x.0.dot(&x.0) - 1.0).abs(),
            Curvature::Hyperbolic => (self.inner(&x.0, &x.0) + 1.0).abs(),
            Curvature::Flat => 0.0,
        }
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    #[inline]
    pub fn project_tangent(&self, x: &Point, v: &Vector) -> Vector {
        match self.kappa {
            Curvature::Spherical => v.axpy(-v.dot(&x.0), &x.0),
            Curvature::Hyperbolic => v.axpy(self.inner(v, &x.0), &x.0),
            Curvature::Flat => *v,
        }
    }

    /// Validates `vec` as tangent at `base`.
    pub fn tangent(&self, base: Point, vec: Vector) -> Result<TangentVector> {
        if vec.len() != self.ambient_dim() {
            return Err(Error::Constraint("tangent vector has wrong length".into()));
        }
        let normal = match self.kappa {
            Curvature::Flat => 0.0,
            _ => self.inner(&vec, &base.0).abs(),
        };
        if normal > TANGENT_TOL * vec.norm().max(1.0) {
            return Err(Error::Constraint(format!(
                "vector not tangent: <v,x> = {normal:e}"
            )));
        }
        Ok(TangentVector { base, vec })
    }

    /// Orthonormal basis of `T_x M`, obtained by Gram-Schmidt on projected
    /// coordinate vectors.
    pub fn tangent_basis(&self, x: &Point) -> Vec<Vector> {
        let dim = self.ambient_dim();
        let mut basis: Vec<Vector> = Vec::with_capacity(self.n);
        for i in 0..dim {
            let mut v = self.project_tangent(x, &Vector::basis(dim, i));
            for _ in 0..2 {
                for b in &basis {
                    v = v.axpy(-self.inner(&v, b), b);
                }
            }
            let nv = self.norm(&v);
            if nv > 1e-6 {
                basis.push(v.scale(1.0 / nv));
            }
            if basis.len() == self.n {
                break;
            }
        }
        basis
    }

    /// Geodesic distance.
    pub fn distance(&self, x: &Point, z: &Point) -> f64 {
        let d = x.0 - z.0;
        match self.kappa {
            Curvature::Flat => d.norm(),
            Curvature::Spherical => {
                let chord = d.norm();
                if chord <= std::f64::consts::SQRT_2 {
                    2.0 * (0.5 * chord).min(1.0).asin()
                } else {
                    let anti = (x.0 + z.0).norm();
                    PI - 2.0 * (0.5 * anti).min(1.0).asin()
                }
            }
            Curvature::Hyperbolic => {
                let q = self.inner(&d, &d).max(0.0);
                2.0 * (0.5 * q.sqrt()).asinh()
            }
        }
    }

    /// Unit gradient at `x` of the distance from `z`.
    pub fn grad_distance(&self, z: &Point, x: &Point) -> Result<TangentVector> {
        let d = self.distance(x, z);
        if d <= 1e-300 {
            return Err(Error::Singular("gradient of r_z at its centre".into()));
        }
        if self.kappa == Curvature::Spherical && PI - d < 1e-12 {
            return Err(Error::Singular("gradient of r_z at the antipode".into()));
        }
        let v = self.project_tangent(x, &(x.0 - z.0));
        let nv = self.norm(&v);
        if nv <= 0.0 || !nv.is_finite() {
            return Err(Error::Singular("degenerate radial direction".into()));
        }
        Ok(TangentVector {
            base: *x,
            vec: v.scale(1.0 / nv),
        })
    }

    /// Exponential map at `v.base`.
    pub fn exp_map(&self, v: &TangentVector) -> Point {
        self.exp_raw(&v.base, &v.vec)
    }

    /// `exp_x(v)` for an ambient tangent vector `v` at `x`.
    pub fn exp_raw(&self, x: &Point, v: &Vector) -> Point {
        let len = self.norm(v);
        if len == 0.0 {
            return *x;
        }
        match self.kappa {
            Curvature::Flat => Point(x.0 + *v),
            Curvature::Spherical => {
                let c = x.0.scale(len.cos()).axpy(len.sin() / len, v);
                self.normalize(c)
            }
            Curvature::Hyperbolic => {
                let c = x.0.scale(len.cosh()).axpy(len.sinh() / len, v);
                self.normalize(c)
            }
        }
    }

    /// Differential of `w -> exp_x(w)` at `w`, applied to `delta`.
    pub fn exp_differential(&self, x: &Point, w: &Vector, delta: &Vector) -> Vector {
        let len = self.norm(w);
        if len < 1e-300 {
            return *delta;
        }
        let what = w.scale(1.0 / len);
        let dlen = self.inner(&what, delta);
        let dhat = delta.axpy(-dlen, &what).scale(1.0 / len);
        let (sn, cs) = (self.kappa.sn(len), self.kappa.cs(len));
        x.0.scale(-self.kappa.sign() * sn * dlen)
            .axpy(cs * dlen, &what)
            .axpy(sn, &dhat)
    }

    /// Geodesic through `x` with initial velocity `v`, evaluated at time `t`.
    pub fn geodesic(&self, x: &Point, v: &TangentVector, t: f64) -> Point {
        self.exp_raw(x, &v.vec.scale(t))
    }

    /// Velocity at time `t` of the geodesic `t -> exp_x(t v)`.
    pub fn geodesic_velocity(&self, x: &Point, v: &Vector, t: f64) -> Vector {
        let len = self.norm(v);
        if len == 0.0 {
            return *v;
        }
        let u = v.scale(1.0 / len);
        let a = len * t;
        let dir = match self.kappa {
            Curvature::Flat => u,
            Curvature::Spherical => x.0.scale(-a.sin()).axpy(a.cos(), &u),
            Curvature::Hyperbolic => x.0.scale(a.sinh()).axpy(a.cosh(), &u),
        };
        dir.scale(len)
    }

    /// A uniformly distributed unit tangent vector at `x`.
    pub fn random_unit_tangent<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Vector {
        let basis = self.tangent_basis(x);
        loop {
            let mut v = Vector::zeros(self.ambient_dim());
            for b in &basis {
                v = v.axpy(standard_normal(rng), b);
            }
            let nv = self.norm(&v);
            if nv > 1e-8 {
                return v.scale(1.0 / nv);
            }
        }
    }

    /// A random point of the closed geodesic ball `B_radius(centre)`, with
    /// distance uniform in `[0, radius]`.
    pub fn random_point_in_ball<R: Rng + ?Sized>(
        &self,
        centre: &Point,
        radius: f64,
        rng: &mut R,
    ) -> Point {
        let dir = self.random_unit_tangent(centre, rng);
        let r = radius * rng.gen::<f64>();
        self.exp_raw(centre, &dir.scale(r))
    }
}

/// Box-Muller normal deviate.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > 1e-300 {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL: [Curvature; 3] = [Curvature::Hyperbolic, Curvature::Flat, Curvature::Spherical];

    #[test]
    fn warping_examples() {
        let flat = SpaceForm::flat(3).unwrap();
        assert_eq!(flat.sn(1.0).unwrap(), 1.0);
        assert_eq!(flat.cs(1.0).unwrap(), 1.0);
        let sph = SpaceForm::spherical(3).unwrap();
        assert!((sph.sn(PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(sph.cs(PI / 2.0).unwrap().abs() < 1e-15);
        let hyp = SpaceForm::hyperbolic(3).unwrap();
        // sinh(1) via the exponential definition
        let e = 1.0_f64.exp();
        let oracle = (e - 1.0 / e) / 2.0;
        assert!((hyp.sn(1.0).unwrap() - oracle).abs() < 1e-15);
        assert!((hyp.sn(1.0).unwrap() - 1.1752012).abs() < 1e-7);
    }

    #[test]
    fn warping_domain_errors() {
        let sph = SpaceForm::spherical(3).unwrap();
        assert!(matches!(sph.sn(4.0), Err(Error::Domain { .. })));
        assert!(matches!(sph.tn(PI / 2.0), Err(Error::Domain { .. })));
        assert!(matches!(sph.ct(0.0), Err(Error::Domain { .. })));
        let hyp = SpaceForm::hyperbolic(3).unwrap();
        assert!(matches!(hyp.cs(-0.1), Err(Error::Domain { .. })));
        assert!(SpaceForm::new(Curvature::Flat, 1).is_err());
        assert!(Curvature::from_sign(2).is_err());
    }

    #[test]
    fn pythagorean_identity_on_grid() {
        for kappa in ALL {
            let top = if kappa == Curvature::Spherical { PI } else { 5.0 };
            for i in 0..1000 {
                let r = top * i as f64 / 1000.0;
                let (s, c) = (kappa.sn(r), kappa.cs(r));
                let lhs = c * c + kappa.sign() * s * s;
                assert!((lhs - 1.0).abs() < 1e-12 * (1.0 + s * s), "{kappa:?} r={r}");
            }
        }
    }

    #[test]
    fn stable_acosh_near_one() {
        for &u in &[1e-20, 1e-12, 1e-6, 0.3, 4.0] {
            let exact = (1.0_f64 + u).acosh();
            let stable = acosh_stable(u);
            if u > 1e-6 {
                assert!((stable - exact).abs() < 1e-12 * exact);
            }
            // acosh(1+u) ~ sqrt(2u)
            if u < 1e-10 {
                assert!((stable / (2.0 * u).sqrt() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let flat = SpaceForm::flat(2).unwrap();
        let a = flat.point(Vector::from_slice(&[0.0, 0.0])).unwrap();
        let b = flat.point(Vector::from_slice(&[3.0, 4.0])).unwrap();
        assert_eq!(flat.distance(&a, &b), 5.0);
        assert_eq!(flat.distance(&b, &b), 0.0);

        let sph = SpaceForm::spherical(2).unwrap();
        let n = sph.origin();
        let s = sph.point(Vector::from_slice(&[-1.0, 0.0, 0.0])).unwrap();
        assert!((sph.distance(&n, &s) - PI).abs() < 1e-15);
        assert_eq!(sph.distance(&n, &n), 0.0);

        let hyp = SpaceForm::hyperbolic(2).unwrap();
        let o = hyp.origin();
        let x = hyp.geodesic(&o, &hyp.origin_direction(1), 2.5);
        assert!((hyp.distance(&o, &x) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn gradient_examples_and_errors() {
        let flat = SpaceForm::flat(2).unwrap();
        let z = flat.origin();
        let x = flat.point(Vector::from_slice(&[2.0, 0.0])).unwrap();
        let g = flat.grad_distance(&z, &x).unwrap();
        assert_eq!(g.vec.as_slice(), &[1.0, 0.0]);
        assert!(matches!(flat.grad_distance(&z, &z), Err(Error::Singular(_))));

        let sph = SpaceForm::spherical(2).unwrap();
        let n = sph.origin();
        let s = sph.point(Vector::from_slice(&[-1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(sph.grad_distance(&n, &s), Err(Error::Singular(_))));
    }

    #[test]
    fn spherical_gradient_matches_finite_differences() {
        let sph = SpaceForm::spherical(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let z = sph.random_point_in_ball(&sph.origin(), 1.4, &mut rng);
            let x = sph.random_point_in_ball(&sph.origin(), 1.4, &mut rng);
            if sph.distance(&x, &z) < 1e-3 {
                continue;
            }
            let g = sph.grad_distance(&z, &x).unwrap();
            assert!((sph.norm(&g.vec) - 1.0).abs() < 1e-10);
            let h = 1e-5;
            let plus = sph.exp_raw(&x, &g.vec.scale(h));
            let minus = sph.exp_raw(&x, &g.vec.scale(-h));
            let fd = (sph.distance(&plus, &z) - sph.distance(&minus, &z)) / (2.0 * h);
            assert!((fd - 1.0).abs() < 1e-6, "fd = {fd}");
        }
    }

    #[test]
    fn exp_map_examples() {
        for kappa in ALL {
            let form = SpaceForm::new(kappa, 3).unwrap();
            let o = form.origin();
            let v = form.origin_direction(2);
            assert_eq!(form.geodesic(&o, &v, 0.0), o);
            let zero = TangentVector {
                base: o,
                vec: Vector::zeros(form.ambient_dim()),
            };
            assert_eq!(form.exp_map(&zero), o);
        }
        let sph = SpaceForm::spherical(3).unwrap();
        let o = sph.origin();
        let anti = sph.geodesic(&o, &sph.origin_direction(1), PI);
        assert!((anti.coords()[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_points_validate() {
        let hyp = SpaceForm::hyperbolic(2).unwrap();
        assert!(hyp.point(Vector::from_slice(&[1.0, 0.0, 0.0])).is_ok());
        assert!(hyp.point(Vector::from_slice(&[-1.0, 0.0, 0.0])).is_err());
        assert!(hyp.point(Vector::from_slice(&[2.0, 0.0, 0.0])).is_err());
        let t = hyp.tangent(hyp.origin(), Vector::from_slice(&[0.1, 1.0, 0.0]));
        assert!(t.is_err());
    }
}
