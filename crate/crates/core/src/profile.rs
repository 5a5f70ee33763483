//! The radial area profile `A(r) = \int_0^r sn(t)^{k-1} dt` of totally
//! geodesic `k`-disks, its derivatives and inverse, and the comparison
//! function `a(r) = k A(r) ct(r) / A'(r)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaceform::Curvature;

const SERIES_TERMS: usize = 20;
/// Below this radius `A` is evaluated from its power series; above it from
/// the reduction formula for `\int sn^m`.
const SERIES_MAX: f64 = 1.0;

/// `|S^{m}|`, the volume of the unit `m`-sphere.
pub fn unit_sphere_volume(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * unit_sphere_volume(m - 2),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaProfile {
    pub kappa: Curvature,
    pub k: usize,
    /// Coefficients of `(sn(t)/t)^{k-1}` in powers of `t^2`.
    #[serde(skip, default = "zero_series")]
    series: [f64; SERIES_TERMS],
}

fn zero_series() -> [f64; SERIES_TERMS] {
    [0.0; SERIES_TERMS]
}

impl AreaProfile {
    pub fn new(kappa: Curvature, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::domain("A", k as f64, "k >= 1"));
        }
        let mut base = [0.0; SERIES_TERMS];
        let mut fact = 1.0;
        for (j, c) in base.iter_mut().enumerate() {
            if j > 0 {
                fact *= (2 * j) as f64 * (2 * j + 1) as f64;
            }
            *c = match kappa {
                Curvature::Spherical if j % 2 == 1 => -1.0 / fact,
                Curvature::Flat if j > 0 => 0.0,
                _ => 1.0 / fact,
            };
        }
        let mut series = [0.0; SERIES_TERMS];
        series[0] = 1.0;
        for _ in 0..k - 1 {
            let mut next = [0.0; SERIES_TERMS];
            for i in 0..SERIES_TERMS {
                for j in 0..SERIES_TERMS - i {
                    next[i + j] += series[i] * base[j];
                }
            }
            series = next;
        }
        Ok(AreaProfile { kappa, k, series })
    }

    /// `|S^{k-1}|`.
    pub fn sphere_volume(&self) -> f64 {
        unit_sphere_volume(self.k - 1)
    }

    /// Upper end of the checked domain, `diam(M)/2`.
    pub fn max_radius(&self) -> f64 {
        match self.kappa {
            Curvature::Spherical => FRAC_PI_2,
            _ => f64::INFINITY,
        }
    }

    fn check(&self, function: &'static str, r: f64) -> Result<()> {
        if !(r >= 0.0 && r <= self.max_radius()) {
            let domain = match self.kappa {
                Curvature::Spherical => "[0, pi/2]",
                _ => "[0, inf)",
            };
            return Err(Error::domain(function, r, domain));
        }
        Ok(())
    }

    /// `A(r)` on `[0, diam/2]`.
    pub fn area(&self, r: f64) -> Result<f64> {
        self.check("A", r)?;
        Ok(self.area_unchecked(r))
    }

    /// `A(r)` for any `r >= 0` (for the sphere, meaningful up to `pi`).
    pub fn area_unchecked(&self, r: f64) -> f64 {
        let m = self.k - 1;
        if self.kappa == Curvature::Flat {
            return r.powi(self.k as i32) / self.k as f64;
        }
        if r <= 0.0 {
            return 0.0;
        }
        if r < SERIES_MAX {
            let r2 = r * r;
            let mut acc = 0.0;
            for j in (0..SERIES_TERMS).rev() {
                acc = acc * r2 + self.series[j] / (m + 1 + 2 * j) as f64;
            }
            return acc * r.powi(m as i32 + 1);
        }
        // reduction: I_m = -/+ sn^{m-1} cs / m + (m-1)/m I_{m-2}
        let (s, c) = (self.kappa.sn(r), self.kappa.cs(r));
        let half = self.kappa.sn(0.5 * r);
        let mut acc = if m % 2 == 0 { r } else { 2.0 * half * half };
        let mut j = if m % 2 == 0 { 2 } else { 3 };
        while j <= m {
            let jf = j as f64;
            let boundary = s.powi(j as i32 - 1) * c / jf;
            acc = match self.kappa {
                Curvature::Spherical => -boundary + (jf - 1.0) / jf * acc,
                _ => boundary - (jf - 1.0) / jf * acc,
            };
            j += 2;
        }
        acc
    }

    /// `A'(r) = sn(r)^{k-1}`.
    #[inline]
    pub fn area_prime(&self, r: f64) -> f64 {
        self.kappa.sn(r).powi(self.k as i32 - 1)
    }

    /// `A''(r) = (k-1) sn(r)^{k-2} cs(r)`.
    #[inline]
    pub fn area_second(&self, r: f64) -> f64 {
        if self.k == 1 {
            return 0.0;
        }
        (self.k - 1) as f64 * self.kappa.sn(r).powi(self.k as i32 - 2) * self.kappa.cs(r)
    }

    /// `A^{-1}(value)` on `[0, A(diam/2)]`.
    pub fn inverse(&self, value: f64) -> Result<f64> {
        let top = self.max_radius();
        let top_value = if top.is_finite() {
            self.area_unchecked(top)
        } else {
            f64::INFINITY
        };
        if !(value >= 0.0 && value <= top_value) {
            return Err(Error::domain(
                "A^-1",
                value,
                format!("[0, {top_value}]"),
            ));
        }
        Ok(self.inverse_unchecked(value, top))
    }

    /// Safeguarded Newton iteration: each step is a Newton step when it stays
    /// inside the current bracket and a bisection step otherwise.
    fn inverse_unchecked(&self, value: f64, top: f64) -> f64 {
        if value == 0.0 {
            return 0.0;
        }
        let kf = self.k as f64;
        if self.kappa == Curvature::Flat {
            return (kf * value).powf(1.0 / kf);
        }
        let mut lo = 0.0;
        let mut hi = if top.is_finite() {
            top
        } else {
            let mut h = 1.0;
            while self.area_unchecked(h) < value {
                h *= 2.0;
            }
            h
        };
        let mut x = (kf * value).powf(1.0 / kf).clamp(lo, hi);
        if x <= lo || x >= hi {
            x = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let fx = self.area_unchecked(x) - value;
            if fx == 0.0 {
                return x;
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.area_prime(x);
            let newton = x - fx / d;
            let next = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-16 * x.max(1e-300) || hi - lo <= 1e-300 {
                return next;
            }
            x = next;
        }
        x
    }

    /// `a(r) = k A(r) ct(r) / A'(r)`, with `a(0) = 1`.
    pub fn a_func(&self, r: f64) -> f64 {
        if r < 1e-8 {
            return 1.0;
        }
        let sn = self.kappa.sn(r);
        self.k as f64 * self.area_unchecked(r) * self.kappa.cs(r) / sn.powi(self.k as i32)
    }

    /// `A''(r) / A'(r) = (k-1) ct(r)`.
    pub fn log_derivative(&self, r: f64) -> f64 {
        (self.k as f64 - 1.0) * self.kappa.ct(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, used as an independent oracle for `A`.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    fn oracle(kappa: Curvature, k: usize, r: f64) -> f64 {
        let scale = r.powi(k as i32) / k as f64;
        simpson(&|t: f64| kappa.sn(t).powi(k as i32 - 1), 0.0, r, 1e-15 * scale)
    }

    #[test]
    fn area_examples() {
        let flat = AreaProfile::new(Curvature::Flat, 2).unwrap();
        assert_eq!(flat.area(1.0).unwrap(), 0.5);
        let sph = AreaProfile::new(Curvature::Spherical, 2).unwrap();
        assert!((sph.area(PI / 3.0).unwrap() - 0.5).abs() < 1e-15);
        let hyp = AreaProfile::new(Curvature::Hyperbolic, 3).unwrap();
        let expected = oracle(Curvature::Hyperbolic, 3, 1.0);
        // closed form (sinh(2)/4 - 1/2) as a second cross-check
        assert!((expected - (2.0_f64.sinh() / 4.0 - 0.5)).abs() < 1e-12);
        assert!((hyp.area(1.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.4067).abs() < 1e-3);
    }

    #[test]
    fn area_matches_quadrature_oracle() {
        for kappa in [Curvature::Hyperbolic, Curvature::Spherical, Curvature::Flat] {
            for k in 2..=6 {
                let p = AreaProfile::new(kappa, k).unwrap();
                for &r in &[1e-3, 0.1, 0.5, 0.99, 1.0, 1.01, 1.3, FRAC_PI_2] {
                    let exact = oracle(kappa, k, r);
                    let got = p.area_unchecked(r);
                    assert!(
                        (got - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-300,
                        "{kappa:?} k={k} r={r}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn area_domain() {
        let sph = AreaProfile::new(Curvature::Spherical, 3).unwrap();
        assert!(sph.area(2.0).is_err());
        assert!(sph.area(-0.1).is_err());
        assert!(sph.inverse(10.0).is_err());
        assert!(sph.inverse(-1.0).is_err());
        // the unchecked profile extends to the whole sphere
        assert!((sph.area_unchecked(PI) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_identities() {
        for kappa in [Curvature::Hyperbolic, Curvature::Spherical, Curvature::Flat] {
            for k in 2..=5 {
                let p = AreaProfile::new(kappa, k).unwrap();
                for i in 1..100 {
                    let r = 1.5 * i as f64 / 100.0;
                    let h = 1e-5;
                    let fd = (p.area_unchecked(r + h) - p.area_unchecked(r - h)) / (2.0 * h);
                    assert!((fd - p.area_prime(r)).abs() < 1e-9 * p.area_prime(r).max(1.0));
                    let ratio = p.area_second(r) / p.area_prime(r);
                    assert!((ratio - p.log_derivative(r)).abs() < 1e-10 * ratio.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn small_radius_asymptotics() {
        let r = 1e-3;
        for kappa in [Curvature::Hyperbolic, Curvature::Spherical, Curvature::Flat] {
            for k in 2..=5 {
                let p = AreaProfile::new(kappa, k).unwrap();
                let kf = k as f64;
                assert!((p.area_unchecked(r) / (r.powi(k as i32) / kf) - 1.0).abs() < 1e-5);
                assert!((p.area_prime(r) / r.powi(k as i32 - 1) - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let flat = AreaProfile::new(Curvature::Flat, 2).unwrap();
        assert_eq!(flat.inverse(0.0).unwrap(), 0.0);
        assert!((flat.inverse(0.5).unwrap() - 1.0).abs() < 1e-15);
        let sph = AreaProfile::new(Curvature::Spherical, 3).unwrap();
        let v = sph.area(0.7).unwrap();
        assert!((sph.inverse(v).unwrap() - 0.7).abs() < 1e-10);
        let hyp = AreaProfile::new(Curvature::Hyperbolic, 4).unwrap();
        for &r in &[1e-4, 0.3, 2.0, 6.0] {
            let v = hyp.area(r).unwrap();
            assert!((hyp.inverse(v).unwrap() - r).abs() < 1e-12 * r.max(1.0));
        }
    }

    #[test]
    fn comparison_function() {
        let flat = AreaProfile::new(Curvature::Flat, 3).unwrap();
        assert!((flat.a_func(0.7) - 1.0).abs() < 1e-15);
        let hyp2 = AreaProfile::new(Curvature::Hyperbolic, 2).unwrap();
        let c = 1.0_f64.cosh();
        // k A ct / A' with A = cosh r - 1 evaluated independently
        let expected = 2.0 * (c - 1.0) * (c / 1.0_f64.sinh()) / 1.0_f64.sinh();
        assert!((expected - 2.0 * c / (c + 1.0)).abs() < 1e-14);
        assert!((hyp2.a_func(1.0) - expected).abs() < 1e-13);
        assert!((hyp2.a_func(1.0) - 1.2136).abs() < 1e-4);
        for kappa in [Curvature::Hyperbolic, Curvature::Spherical] {
            for k in 2..=5 {
                let p = AreaProfile::new(kappa, k).unwrap();
                assert_eq!(p.a_func(0.0), 1.0);
                assert!((p.a_func(1e-6) - 1.0).abs() < 1e-10);
                for i in 1..=50 {
                    let r = 1.5 * i as f64 / 50.0;
                    let a = p.a_func(r);
                    match kappa {
                        Curvature::Hyperbolic => assert!(a >= 1.0),
                        _ => assert!((0.0..=1.0).contains(&a), "a({r}) = {a}"),
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(1) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
