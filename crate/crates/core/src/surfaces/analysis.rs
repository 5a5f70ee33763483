use super::{solve, Chart, MAX_K};
use crate::error::{Error, Result};
use crate::spaceform::{Point, SpaceForm};
use crate::vector::Vector;

/// Step of the central differences used for covariant derivatives.
pub const FD_STEP: f64 = 1e-5;

/// Orthogonal decomposition of a tangent vector along a `k`-plane.
#[derive(Clone, Copy, Debug)]
pub struct Split {
    pub tangential: Vector,
    pub normal: Vector,
    pub tangential_sq: f64,
    pub normal_sq: f64,
}

/// Splits `v` into its components along and orthogonal to `span(frame)`,
/// with `frame` orthonormal in the model metric.
pub fn tangential_split(form: &SpaceForm, frame: &[Vector], v: &Vector) -> Split {
    let mut tangential = Vector::zeros(v.len());
    let mut tangential_sq = 0.0;
    for e in frame {
        let c = form.inner(v, e);
        tangential = tangential.axpy(c, e);
        tangential_sq += c * c;
    }
    let normal = *v - tangential;
    Split {
        tangential,
        normal,
        tangential_sq,
        normal_sq: form.inner(&normal, &normal).max(0.0),
    }
}

/// `nabla_dir W` at `x` for an ambient vector field `W`, by central
/// differences along the geodesic through `x` in direction `dir`, with one
/// Richardson step, projected onto `T_x M`.
pub fn covariant_derivative<F>(form: &SpaceForm, x: &Point, dir: &Vector, field: &F) -> Result<Vector>
where
    F: Fn(&Point) -> Result<Vector>,
{
    let diff = |h: f64| -> Result<Vector> {
        let plus = field(&form.exp_raw(x, &dir.scale(h)))?;
        let minus = field(&form.exp_raw(x, &dir.scale(-h)))?;
        Ok((plus - minus).scale(0.5 / h))
    };
    let coarse = diff(FD_STEP)?;
    let fine = diff(0.5 * FD_STEP)?;
    let d = fine.scale(4.0 / 3.0).axpy(-1.0 / 3.0, &coarse);
    Ok(form.project_tangent(x, &d))
}

/// `div_S W = sum_i <nabla_{e_i} W, e_i>` over an orthonormal frame of `S`.
pub fn surface_divergence<F>(form: &SpaceForm, x: &Point, frame: &[Vector], field: &F) -> Result<f64>
where
    F: Fn(&Point) -> Result<Vector>,
{
    let mut acc = 0.0;
    for e in frame {
        acc += form.inner(&covariant_derivative(form, x, e, field)?, e);
    }
    Ok(acc)
}

/// Mean curvature vector `H = (1/k) tr II` at the chart parameter `p`,
/// from differences of the analytic Jacobian.
pub fn mean_curvature(chart: &Chart, p: &[f64]) -> Result<Vector> {
    let k = chart.k;
    let form = &chart.form;
    let sp = chart.surface_point(p)?;
    let jac = sp.jacobian();
    let h = 1e-4;
    let mut second = vec![vec![Vector::zeros(form.ambient_dim()); k]; k];
    for b in 0..k {
        let col = |step: f64| -> Vec<Vector> {
            let mut q = p.to_vec();
            q[b] += step;
            let plus = chart.jacobian(&q);
            q[b] = p[b] - step;
            let minus = chart.jacobian(&q);
            plus.iter()
                .zip(&minus)
                .map(|(a, m)| (*a - *m).scale(0.5 / step))
                .collect()
        };
        let coarse = col(h);
        let fine = col(0.5 * h);
        for a in 0..k {
            second[a][b] = fine[a].scale(4.0 / 3.0).axpy(-1.0 / 3.0, &coarse[a]);
        }
    }
    let mut g = [[0.0; MAX_K]; MAX_K];
    for a in 0..k {
        for b in 0..k {
            g[a][b] = form.inner(&jac[a], &jac[b]);
        }
    }
    let mut h_vec = Vector::zeros(form.ambient_dim());
    for b in 0..k {
        let mut rhs = [0.0; MAX_K];
        rhs[b] = 1.0;
        let ginv_col = solve(k, g, rhs).ok_or_else(|| Error::Chart("singular metric".into()))?;
        for a in 0..k {
            let sym = second[a][b].scale(0.5).axpy(0.5, &second[b][a]);
            let ambient = form.project_tangent(&sp.x, &sym);
            let normal = tangential_split(form, sp.frame(), &ambient).normal;
            h_vec = h_vec.axpy(ginv_col[a], &normal);
        }
    }
    Ok(h_vec.scale(1.0 / k as f64))
}
