//! Parametrized test submanifolds.
//!
//! A [`Chart`] maps a parameter box in `R^k` into the model. Charts built
//! around a marked point use polar parameters `(angles.., r)` with the
//! radial parameter last, so that sublevel regions which are star-shaped
//! about the marked point have smooth angular profiles.

mod analysis;
mod catalog;

pub use analysis::{
    covariant_derivative, mean_curvature, surface_divergence, tangential_split, Split,
};
pub use catalog::{CatenoidPlacement, CliffordPatch, SurfaceSpec};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaceform::{Curvature, Point, SpaceForm};
use crate::vector::{Vector, MAX_AMBIENT};

/// Largest supported submanifold dimension.
pub const MAX_K: usize = MAX_AMBIENT - 1;

/// Gram determinants below this are treated as degenerate.
pub const GRAM_TOL: f64 = 1e-12;

/// A point of a chart together with its tangent data.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub x: Point,
    pub k: usize,
    /// Columns `dX/dp_a`.
    pub jacobian: [Vector; MAX_K],
    /// Orthonormal frame of the tangent plane (model metric).
    pub frame: [Vector; MAX_K],
    /// `sqrt(det(J^T g J))`.
    pub area_element: f64,
}

impl SurfacePoint {
    pub fn frame(&self) -> &[Vector] {
        &self.frame[..self.k]
    }

    pub fn jacobian(&self) -> &[Vector] {
        &self.jacobian[..self.k]
    }
}

/// Standard two-dimensional minimal patches in their textbook position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Patch {
    /// `(c cosh(v/c) cos th, c cosh(v/c) sin th, v)`, parameters `(th, v)`.
    Catenoid { neck: f64 },
    /// `(u cos th, u sin th, a th)`, parameters `(th, u)`.
    Helicoid { pitch: f64 },
    /// `(cos th, sin th, cos ph, sin ph) / sqrt 2`, parameters `(th, ph)`.
    Clifford,
    /// Round 2-sphere of radius `a` through the origin with inner normal `e_0`:
    /// `a (1 - cos psi, sin psi cos ph, sin psi sin ph)`, parameters `(ph, psi)`.
    Sphere { radius: f64 },
}

impl Patch {
    fn dim(&self) -> usize {
        match self {
            Patch::Clifford => 4,
            _ => 3,
        }
    }

    fn eval(&self, u: [f64; 2]) -> (Vector, [Vector; 2]) {
        let (a, b) = (u[0], u[1]);
        match *self {
            Patch::Catenoid { neck: c } => {
                let (ch, sh) = ((b / c).cosh(), (b / c).sinh());
                let (s, co) = a.sin_cos();
                (
                    Vector::from_slice(&[c * ch * co, c * ch * s, b]),
                    [
                        Vector::from_slice(&[-c * ch * s, c * ch * co, 0.0]),
                        Vector::from_slice(&[sh * co, sh * s, 1.0]),
                    ],
                )
            }
            Patch::Helicoid { pitch } => {
                let (s, co) = a.sin_cos();
                (
                    Vector::from_slice(&[b * co, b * s, pitch * a]),
                    [
                        Vector::from_slice(&[-b * s, b * co, pitch]),
                        Vector::from_slice(&[co, s, 0.0]),
                    ],
                )
            }
            Patch::Clifford => {
                let h = FRAC_1_SQRT_2;
                let (s1, c1) = a.sin_cos();
                let (s2, c2) = b.sin_cos();
                (
                    Vector::from_slice(&[h * c1, h * s1, h * c2, h * s2]),
                    [
                        Vector::from_slice(&[-h * s1, h * c1, 0.0, 0.0]),
                        Vector::from_slice(&[0.0, 0.0, -h * s2, h * c2]),
                    ],
                )
            }
            Patch::Sphere { radius: r } => {
                let (sp, cp) = a.sin_cos();
                let (ss, cs) = b.sin_cos();
                (
                    Vector::from_slice(&[r * (1.0 - cs), r * ss * cp, r * ss * sp]),
                    [
                        Vector::from_slice(&[0.0, -r * ss * sp, r * ss * cp]),
                        Vector::from_slice(&[r * ss, r * cs * cp, r * cs * sp]),
                    ],
                )
            }
        }
    }
}

/// Reparametrization of a two-dimensional patch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PatchParams {
    /// Parameters are the patch parameters.
    Direct,
    /// `(phi, rho) -> centre + rho (scale_0 cos phi, scale_1 sin phi)`.
    Polar { centre: [f64; 2], scale: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChartKind {
    /// `exp_c(r d + amplitude r^2 N)` where `d` runs over the unit sphere of
    /// `span(frame)`. Parameters are hyperspherical angles followed by `r`.
    ExpDisk {
        centre: Point,
        frame: Vec<Vector>,
        normal: Vector,
        amplitude: f64,
    },
    /// An ambient rigid motion `x = Q X + shift` applied to a standard patch.
    Patch {
        patch: Patch,
        params: PatchParams,
        rotation: Vec<Vector>,
        shift: Vector,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub form: SpaceForm,
    pub k: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub kind: ChartKind,
}

impl Chart {
    /// Geodesic `k`-disk `exp_c(B_radius)` in `span(frame)`, optionally
    /// bent along `normal` by `amplitude r^2`.
    pub fn exp_disk(
        form: SpaceForm,
        centre: Point,
        frame: &[Vector],
        radius: f64,
        normal: Option<Vector>,
        amplitude: f64,
    ) -> Result<Self> {
        let k = frame.len();
        if k < 2 || k > form.n.min(MAX_K) {
            return Err(Error::Chart(format!("disk dimension {k} unsupported")));
        }
        if !(radius > 0.0 && radius < form.diam() / 2.0 + 1e-12) {
            return Err(Error::Chart(format!("disk radius {radius} must lie in (0, diam/2)")));
        }
        for (a, ea) in frame.iter().enumerate() {
            form.tangent(centre, *ea)
                .map_err(|e| Error::Chart(format!("frame vector {a}: {e}")))?;
            for (b, eb) in frame.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                if (form.inner(ea, eb) - target).abs() > 1e-10 {
                    return Err(Error::Chart("disk frame is not orthonormal".into()));
                }
            }
        }
        let normal = match normal {
            Some(n) => {
                form.tangent(centre, n)
                    .map_err(|e| Error::Chart(format!("normal: {e}")))?;
                if frame.iter().any(|e| form.inner(e, &n).abs() > 1e-10)
                    || (form.norm(&n) - 1.0).abs() > 1e-10
                {
                    return Err(Error::Chart("perturbation direction must be a unit normal".into()));
                }
                n
            }
            None => Vector::zeros(form.ambient_dim()),
        };
        let mut lo = vec![0.0; k];
        let mut hi = vec![PI; k];
        hi[k - 2] = 2.0 * PI;
        lo[k - 1] = 0.0;
        hi[k - 1] = radius;
        Ok(Chart {
            form,
            k,
            lo,
            hi,
            kind: ChartKind::ExpDisk {
                centre,
                frame: frame.to_vec(),
                normal,
                amplitude,
            },
        })
    }

    /// A standard patch moved by the rigid motion `x = Q X + shift`, where
    /// the columns of `Q` are `rotation`.
    pub fn patch(
        form: SpaceForm,
        patch: Patch,
        params: PatchParams,
        rotation: Vec<Vector>,
        shift: Vector,
        lo: [f64; 2],
        hi: [f64; 2],
    ) -> Result<Self> {
        let dim = patch.dim();
        if form.ambient_dim() != dim || rotation.len() != dim {
            return Err(Error::Chart(format!(
                "patch needs ambient dimension {dim}, model has {}",
                form.ambient_dim()
            )));
        }
        let needs_flat = !matches!(patch, Patch::Clifford);
        if needs_flat != (form.kappa == Curvature::Flat) {
            return Err(Error::Chart("patch is not defined in this space form".into()));
        }
        for (a, qa) in rotation.iter().enumerate() {
            for (b, qb) in rotation.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                if (qa.dot(qb) - target).abs() > 1e-12 {
                    return Err(Error::Chart("patch rotation is not orthogonal".into()));
                }
            }
        }
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::Chart("empty parameter box".into()));
        }
        Ok(Chart {
            form,
            k: 2,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            kind: ChartKind::Patch {
                patch,
                params,
                rotation,
                shift,
            },
        })
    }

    /// Whether parameters are polar about a marked point, with the radial
    /// parameter last.
    pub fn is_polar(&self) -> bool {
        match &self.kind {
            ChartKind::ExpDisk { .. } => true,
            ChartKind::Patch { params, patch, .. } => {
                matches!(params, PatchParams::Polar { .. }) || matches!(patch, Patch::Sphere { .. })
            }
        }
    }

    /// Parameter of the marked point of a polar chart.
    pub fn marked_param(&self) -> Option<Vec<f64>> {
        if !self.is_polar() {
            return None;
        }
        let mut p: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        p[self.k - 1] = 0.0;
        Some(p)
    }

    pub fn map(&self, p: &[f64]) -> Point {
        self.eval(p, false).0
    }

    pub fn jacobian(&self, p: &[f64]) -> Vec<Vector> {
        self.eval(p, true).1[..self.k].to_vec()
    }

    fn eval(&self, p: &[f64], with_jac: bool) -> (Point, [Vector; MAX_K]) {
        debug_assert_eq!(p.len(), self.k);
        let dim = self.form.ambient_dim();
        let mut jac = [Vector::zeros(dim); MAX_K];
        match &self.kind {
            ChartKind::ExpDisk {
                centre,
                frame,
                normal,
                amplitude,
            } => {
                let k = self.k;
                let r = p[k - 1];
                let mut dir = [0.0; MAX_K];
                let mut ddir = [[0.0; MAX_K]; MAX_K];
                hyperspherical(&p[..k - 1], &mut dir[..k], &mut ddir);
                let mut d = Vector::zeros(dim);
                for (i, e) in frame.iter().enumerate() {
                    d = d.axpy(dir[i], e);
                }
                let w = d.scale(r).axpy(amplitude * r * r, normal);
                let x = self.form.exp_raw(centre, &w);
                if with_jac {
                    for (a, col) in jac.iter_mut().enumerate().take(k - 1) {
                        let mut dd = Vector::zeros(dim);
                        for (i, e) in frame.iter().enumerate() {
                            dd = dd.axpy(ddir[a][i], e);
                        }
                        *col = self.form.exp_differential(centre, &w, &dd.scale(r));
                    }
                    let dw = d.axpy(2.0 * amplitude * r, normal);
                    jac[k - 1] = self.form.exp_differential(centre, &w, &dw);
                }
                (x, jac)
            }
            ChartKind::Patch {
                patch,
                params,
                rotation,
                shift,
            } => {
                let (u, du) = match *params {
                    PatchParams::Direct => ([p[0], p[1]], [[1.0, 0.0], [0.0, 1.0]]),
                    PatchParams::Polar { centre, scale } => {
                        let (s, c) = p[0].sin_cos();
                        let rho = p[1];
                        (
                            [centre[0] + rho * scale[0] * c, centre[1] + rho * scale[1] * s],
                            [
                                [-rho * scale[0] * s, rho * scale[1] * c],
                                [scale[0] * c, scale[1] * s],
                            ],
                        )
                    }
                };
                let (xs, js) = patch.eval(u);
                let rotate = |v: &Vector| {
                    let mut out = Vector::zeros(dim);
                    for (i, q) in rotation.iter().enumerate() {
                        out = out.axpy(v[i], q);
                    }
                    out
                };
                let mut x = rotate(&xs) + *shift;
                if self.form.kappa == Curvature::Spherical {
                    x = x.scale(1.0 / x.norm());
                }
                if with_jac {
                    let j0 = rotate(&js[0]);
                    let j1 = rotate(&js[1]);
                    for a in 0..2 {
                        jac[a] = j0.scale(du[a][0]).axpy(du[a][1], &j1);
                    }
                }
                (Point::from_vector_unchecked(x), jac)
            }
        }
    }

    /// Point, Jacobian, orthonormal frame and area element at `p`.
    pub fn surface_point(&self, p: &[f64]) -> Result<SurfacePoint> {
        let (x, jacobian) = self.eval(p, true);
        let (frame, area_element) = orthonormalize(&self.form, &jacobian[..self.k])?;
        Ok(SurfacePoint {
            x,
            k: self.k,
            jacobian,
            frame,
            area_element,
        })
    }

    /// Parameter of the chart point closest to `target`, by a coarse grid
    /// search followed by Gauss-Newton, with the attained distance.
    pub fn closest_param(&self, target: &Point) -> (Vec<f64>, f64) {
        let k = self.k;
        let per_dim: usize = match k {
            2 => 64,
            3 => 20,
            _ => 8,
        };
        let mut best = (vec![0.0; k], f64::INFINITY);
        let total = per_dim.pow(k as u32);
        let mut p = vec![0.0; k];
        for idx in 0..total {
            let mut rem = idx;
            for a in 0..k {
                let i = rem % per_dim;
                rem /= per_dim;
                p[a] = self.lo[a] + (self.hi[a] - self.lo[a]) * (i as f64 + 0.5) / per_dim as f64;
            }
            let d = self.form.distance(&self.map(&p), target);
            if d < best.1 {
                best = (p.clone(), d);
            }
        }
        if let Some(m) = self.marked_param() {
            let d = self.form.distance(&self.map(&m), target);
            if d <= best.1 {
                best = (m, d);
            }
        }
        let mut p = best.0;
        for _ in 0..50 {
            let (x, jac) = self.eval(&p, true);
            let resid = *target.coords() - *x.coords();
            let mut g = [[0.0; MAX_K]; MAX_K];
            let mut rhs = [0.0; MAX_K];
            for a in 0..k {
                rhs[a] = jac[a].dot(&resid);
                for b in 0..k {
                    g[a][b] = jac[a].dot(&jac[b]);
                }
            }
            let Some(step) = solve(k, g, rhs) else { break };
            let mut next = p.clone();
            for a in 0..k {
                next[a] = (p[a] + step[a]).clamp(self.lo[a], self.hi[a]);
            }
            let d_next = self.form.distance(&self.map(&next), target);
            let d_now = self.form.distance(&self.map(&p), target);
            if d_next >= d_now {
                break;
            }
            p = next;
        }
        let d = self.form.distance(&self.map(&p), target);
        (p, d)
    }
}

/// Gram-Schmidt with one reorthogonalization pass. Returns the frame and
/// `sqrt(det G)`.
pub(crate) fn orthonormalize(form: &SpaceForm, cols: &[Vector]) -> Result<([Vector; MAX_K], f64)> {
    let dim = form.ambient_dim();
    let mut frame = [Vector::zeros(dim); MAX_K];
    let mut vol = 1.0;
    let scale = cols.iter().map(|c| form.norm(c)).fold(0.0_f64, f64::max);
    for (i, c) in cols.iter().enumerate() {
        let mut v = *c;
        for _ in 0..2 {
            for e in &frame[..i] {
                v = v.axpy(-form.inner(&v, e), e);
            }
        }
        let nv = form.norm(&v);
        if !(nv > GRAM_TOL.sqrt() * 1e-3 * scale.max(1e-300)) || !nv.is_finite() {
            return Err(Error::Chart(format!("degenerate Jacobian column {i}")));
        }
        vol *= nv;
        frame[i] = v.scale(1.0 / nv);
    }
    Ok((frame, vol))
}

/// Unit vector `d(angles)` on `S^{m}` from `m` hyperspherical angles, with
/// the derivatives `ddir[a][i] = d dir_i / d angle_a`.
fn hyperspherical(angles: &[f64], dir: &mut [f64], ddir: &mut [[f64; MAX_K]; MAX_K]) {
    let m = angles.len();
    let (sins, coss): (Vec<f64>, Vec<f64>) = angles.iter().map(|a| a.sin_cos()).unzip();
    // dir_j = prod_{i<j} sin a_i * cos a_j for j < m, and dir_m = prod sin a_i
    for j in 0..=m {
        let mut v = if j < m { coss[j] } else { 1.0 };
        for s in &sins[..j] {
            v *= s;
        }
        dir[j] = v;
        for (a, row) in ddir.iter_mut().enumerate().take(m) {
            row[j] = if a > j || (a == j && j == m) {
                0.0
            } else {
                let mut v = 1.0;
                for i in 0..j {
                    v *= if i == a { coss[i] } else { sins[i] };
                }
                if j < m {
                    v *= if a == j { -sins[j] } else { coss[j] };
                }
                v
            };
        }
    }
}

/// Solves the small symmetric system `g x = rhs` by Gaussian elimination
/// with partial pivoting.
pub(crate) fn solve(k: usize, mut g: [[f64; MAX_K]; MAX_K], mut rhs: [f64; MAX_K]) -> Option<[f64; MAX_K]> {
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))?;
        if g[piv][col].abs() < 1e-300 {
            return None;
        }
        g.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..k {
            let f = g[row][col] / g[col][col];
            for c in col..k {
                g[row][c] -= f * g[col][c];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; MAX_K];
    for row in (0..k).rev() {
        let mut acc = rhs[row];
        for c in row + 1..k {
            acc -= g[row][c] * x[c];
        }
        x[row] = acc / g[row][row];
    }
    Some(x)
}

/// Marked-point data used by the rigidity predicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub name: String,
    pub exact_minimal: bool,
    pub totally_geodesic: bool,
    /// Tangent plane orthogonal to the axis at the marked point.
    pub orthogonal_to_axis: bool,
    /// Axis coordinate of the marked point on the axis, when there is one.
    pub marked_s: Option<f64>,
    /// Number of sheets through the marked point.
    pub sheets: usize,
}

/// A union of charts with metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub charts: Vec<Chart>,
    pub meta: SurfaceMeta,
}

impl Surface {
    pub fn k(&self) -> usize {
        self.charts[0].k
    }

    /// Verifies that `p` lies on the surface within `tol`.
    pub fn check_contains(&self, p: &Point, tol: f64) -> Result<()> {
        let d = self
            .charts
            .iter()
            .map(|c| c.closest_param(p).1)
            .fold(f64::INFINITY, f64::min);
        if d > tol {
            return Err(Error::Precondition(format!(
                "point not on surface `{}`: distance {d:e} > {tol:e}",
                self.meta.name
            )));
        }
        Ok(())
    }

    /// Whether the surface passes through the axis point with coordinate `s`.
    pub fn marked_at(&self, s: f64) -> bool {
        self.meta.marked_s.is_some_and(|m| (m - s).abs() < 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperspherical_is_unit_with_correct_derivatives() {
        let angles = [0.7, 1.1, 2.5];
        let mut dir = [0.0; 4];
        let mut ddir = [[0.0; MAX_K]; MAX_K];
        hyperspherical(&angles, &mut dir, &mut ddir);
        let n: f64 = dir.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-15);
        for a in 0..3 {
            let h = 1e-6;
            let mut ap = angles;
            let mut am = angles;
            ap[a] += h;
            am[a] -= h;
            let mut dp = [0.0; 4];
            let mut dm = [0.0; 4];
            let mut scratch = [[0.0; MAX_K]; MAX_K];
            hyperspherical(&ap, &mut dp, &mut scratch);
            hyperspherical(&am, &mut dm, &mut scratch);
            for j in 0..4 {
                let fd = (dp[j] - dm[j]) / (2.0 * h);
                assert!((fd - ddir[a][j]).abs() < 1e-9, "a={a} j={j}");
            }
        }
    }

    #[test]
    fn small_solver() {
        let mut g = [[0.0; MAX_K]; MAX_K];
        g[0][0] = 2.0;
        g[0][1] = 1.0;
        g[1][0] = 1.0;
        g[1][1] = 3.0;
        let mut rhs = [0.0; MAX_K];
        rhs[0] = 3.0;
        rhs[1] = 4.0;
        let x = solve(2, g, rhs).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }
}
