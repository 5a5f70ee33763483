use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::{Chart, Patch, PatchParams, Surface, SurfaceMeta};
use crate::error::{Error, Result};
use crate::fibration::ProblemConfig;
use crate::spaceform::Curvature;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "placement", rename_all = "snake_case")]
pub enum CatenoidPlacement {
    /// Symmetric about the origin, with the third coordinate axis as its axis.
    Centred,
    /// A neck point at `gamma(centre_s)`, the tangent plane there rotated by
    /// `tilt` away from the plane orthogonal to the axis.
    Through { centre_s: f64, tilt: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CliffordPatch {
    /// The whole torus on `[0, 2 pi]^2`.
    Full,
    /// Polar parameters about the torus point placed at the origin.
    AroundOrigin,
}

/// Catalog entries. Every entry is placed relative to the axis of a
/// [`ProblemConfig`]; `centre_s` is the axis coordinate of its marked point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    /// Totally geodesic `k`-disk through `gamma(centre_s)`; `tilt = 0` is
    /// orthogonal to the axis.
    GeodesicDisk { centre_s: f64, tilt: f64 },
    /// Flat `R^3`, `k = 2`. `Through` requires `neck > R + |centre_s|`.
    Catenoid {
        neck: f64,
        #[serde(flatten)]
        placement: CatenoidPlacement,
    },
    /// Flat `R^3`, `k = 2`, through `gamma(centre_s)` along its rulings' axis.
    Helicoid { pitch: f64, centre_s: f64, tilt: f64 },
    /// `S^3`, `k = 2`, through the origin.
    CliffordTorus { patch: CliffordPatch },
    /// Non-minimal control in `R^3`: round sphere of radius `radius`
    /// tangent at `gamma(centre_s)` to the disk orthogonal to the axis.
    SphericalCap { radius: f64, centre_s: f64 },
    /// Orthogonal disk bent by `amplitude r^2` along the axis direction.
    PerturbedDisk { amplitude: f64, centre_s: f64 },
    /// Union of the orthogonal disk and a disk at `angle` to it, both
    /// through `gamma(centre_s)`.
    CrossingDisks { centre_s: f64, angle: f64 },
}

impl SurfaceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceSpec::GeodesicDisk { .. } => "geodesic_disk",
            SurfaceSpec::Catenoid { .. } => "catenoid",
            SurfaceSpec::Helicoid { .. } => "helicoid",
            SurfaceSpec::CliffordTorus { .. } => "clifford_torus",
            SurfaceSpec::SphericalCap { .. } => "spherical_cap",
            SurfaceSpec::PerturbedDisk { .. } => "perturbed_disk",
            SurfaceSpec::CrossingDisks { .. } => "crossing_disks",
        }
    }

    pub fn build(&self, config: &ProblemConfig) -> Result<Surface> {
        match *self {
            SurfaceSpec::GeodesicDisk { centre_s, tilt } => geodesic_disk(config, centre_s, tilt),
            SurfaceSpec::Catenoid { neck, placement } => catenoid(config, neck, placement),
            SurfaceSpec::Helicoid {
                pitch,
                centre_s,
                tilt,
            } => helicoid(config, pitch, centre_s, tilt),
            SurfaceSpec::CliffordTorus { patch } => clifford_torus(config, patch),
            SurfaceSpec::SphericalCap { radius, centre_s } => spherical_cap(config, radius, centre_s),
            SurfaceSpec::PerturbedDisk {
                amplitude,
                centre_s,
            } => perturbed_disk(config, amplitude, centre_s),
            SurfaceSpec::CrossingDisks { centre_s, angle } => crossing_disks(config, centre_s, angle),
        }
    }
}

/// Radius of a disk about `gamma(centre_s)` that covers `B_R`, with a 1%
/// margin for finite-difference stencils that step past `R`.
fn covering_radius(config: &ProblemConfig, centre_s: f64) -> f64 {
    let reach = 1.01 * (config.radius + centre_s.abs());
    let cap = config.form.diam() / 2.0;
    if reach < cap {
        reach
    } else {
        cap * (1.0 - 1e-12)
    }
}

fn check_centre(config: &ProblemConfig, centre_s: f64) -> Result<()> {
    if !(centre_s.abs() < config.radius) {
        return Err(Error::Precondition(format!(
            "marked point coordinate {centre_s} must lie in (-R, R)"
        )));
    }
    Ok(())
}

/// Frame of the disk through `gamma(s)`: the first `k` normal directions,
/// the first of them rotated by `tilt` towards the axis.
fn disk_frame(config: &ProblemConfig, s: f64, tilt: f64) -> Vec<Vector> {
    let normals = config.normal_frame();
    let mut frame: Vec<Vector> = normals[..config.k].to_vec();
    let t = config.axis_tangent(s);
    frame[0] = frame[0].scale(tilt.cos()).axpy(tilt.sin(), &t);
    frame
}

pub fn geodesic_disk(config: &ProblemConfig, centre_s: f64, tilt: f64) -> Result<Surface> {
    check_centre(config, centre_s)?;
    let centre = config.axis_point(centre_s);
    let frame = disk_frame(config, centre_s, tilt);
    let chart = Chart::exp_disk(
        config.form,
        centre,
        &frame,
        covering_radius(config, centre_s),
        None,
        0.0,
    )?;
    Ok(Surface {
        charts: vec![chart],
        meta: SurfaceMeta {
            name: "geodesic_disk".into(),
            exact_minimal: true,
            totally_geodesic: true,
            orthogonal_to_axis: tilt == 0.0,
            marked_s: Some(centre_s),
            sheets: 1,
        },
    })
}

pub fn perturbed_disk(config: &ProblemConfig, amplitude: f64, centre_s: f64) -> Result<Surface> {
    check_centre(config, centre_s)?;
    let centre = config.axis_point(centre_s);
    let frame = disk_frame(config, centre_s, 0.0);
    let normal = config.axis_tangent(centre_s);
    let chart = Chart::exp_disk(
        config.form,
        centre,
        &frame,
        covering_radius(config, centre_s),
        Some(normal),
        amplitude,
    )?;
    let flat = amplitude == 0.0;
    Ok(Surface {
        charts: vec![chart],
        meta: SurfaceMeta {
            name: "perturbed_disk".into(),
            exact_minimal: flat,
            totally_geodesic: flat,
            orthogonal_to_axis: true,
            marked_s: Some(centre_s),
            sheets: 1,
        },
    })
}

pub fn crossing_disks(config: &ProblemConfig, centre_s: f64, angle: f64) -> Result<Surface> {
    check_centre(config, centre_s)?;
    if !(angle > 0.0 && angle < PI) {
        return Err(Error::Precondition(format!("crossing angle {angle} must lie in (0, pi)")));
    }
    let centre = config.axis_point(centre_s);
    let first = disk_frame(config, centre_s, 0.0);
    let mut second = first.clone();
    let k = config.k;
    let t = config.axis_tangent(centre_s);
    second[k - 1] = first[k - 1].scale(angle.cos()).axpy(angle.sin(), &t);
    let radius = covering_radius(config, centre_s);
    Ok(Surface {
        charts: vec![
            Chart::exp_disk(config.form, centre, &first, radius, None, 0.0)?,
            Chart::exp_disk(config.form, centre, &second, radius, None, 0.0)?,
        ],
        meta: SurfaceMeta {
            name: "crossing_disks".into(),
            exact_minimal: true,
            totally_geodesic: true,
            orthogonal_to_axis: false,
            marked_s: Some(centre_s),
            sheets: 2,
        },
    })
}

fn require_standard(config: &ProblemConfig, kappa: Curvature, n: usize, what: &str) -> Result<()> {
    if config.kappa() != kappa || config.form.n != n || config.k != 2 {
        return Err(Error::Precondition(format!(
            "{what} needs curvature {}, n = {n}, k = 2",
            kappa.sign_i64()
        )));
    }
    if !config.has_standard_frame() {
        return Err(Error::Precondition(format!(
            "{what} is placed relative to the model origin and first axis"
        )));
    }
    Ok(())
}

fn columns(m: [[f64; 3]; 3]) -> Vec<Vector> {
    (0..3)
        .map(|c| Vector::from_slice(&[m[0][c], m[1][c], m[2][c]]))
        .collect()
}

/// Rotation by `a` in the plane of the first two coordinates.
fn rot12(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn matmul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

fn apply(m: [[f64; 3]; 3], v: [f64; 3]) -> Vector {
    Vector::from_slice(&[
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ])
}

pub fn catenoid(config: &ProblemConfig, neck: f64, placement: CatenoidPlacement) -> Result<Surface> {
    require_standard(config, Curvature::Flat, 3, "catenoid")?;
    if !(neck > 0.0) {
        return Err(Error::Precondition(format!("catenoid neck {neck} must be positive")));
    }
    let patch = Patch::Catenoid { neck };
    match placement {
        CatenoidPlacement::Centred => {
            let r = config.radius;
            let chart = Chart::patch(
                config.form,
                patch,
                PatchParams::Direct,
                columns(rot12(0.0)),
                Vector::zeros(3),
                [0.0, -r],
                [2.0 * PI, r],
            )?;
            Ok(Surface {
                charts: vec![chart],
                meta: SurfaceMeta {
                    name: "catenoid".into(),
                    exact_minimal: true,
                    totally_geodesic: false,
                    orthogonal_to_axis: false,
                    marked_s: None,
                    sheets: 1,
                },
            })
        }
        CatenoidPlacement::Through { centre_s, tilt } => {
            check_centre(config, centre_s)?;
            let reach = config.radius + centre_s.abs();
            if !(neck > reach) {
                return Err(Error::Precondition(format!(
                    "catenoid through an axis point needs neck > R + |s| = {reach}"
                )));
            }
            let q = rot12(tilt);
            let shift = Vector::from_slice(&[centre_s, 0.0, 0.0]) - apply(q, [neck, 0.0, 0.0]);
            let rho_max = 1.01 * (reach * reach + (neck * (reach / neck).asin()).powi(2)).sqrt();
            let chart = Chart::patch(
                config.form,
                patch,
                PatchParams::Polar {
                    centre: [0.0, 0.0],
                    scale: [1.0 / neck, 1.0],
                },
                columns(q),
                shift,
                [0.0, 0.0],
                [2.0 * PI, rho_max],
            )?;
            Ok(Surface {
                charts: vec![chart],
                meta: SurfaceMeta {
                    name: "catenoid".into(),
                    exact_minimal: true,
                    totally_geodesic: false,
                    orthogonal_to_axis: tilt == 0.0,
                    marked_s: Some(centre_s),
                    sheets: 1,
                },
            })
        }
    }
}

pub fn helicoid(config: &ProblemConfig, pitch: f64, centre_s: f64, tilt: f64) -> Result<Surface> {
    require_standard(config, Curvature::Flat, 3, "helicoid")?;
    check_centre(config, centre_s)?;
    if !(pitch > 0.0) {
        return Err(Error::Precondition(format!("helicoid pitch {pitch} must be positive")));
    }
    // the ruling through the marked point runs along e_2, the screw axis along e_3
    let base = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
    let q = matmul(rot12(tilt), base);
    let reach = config.radius + centre_s.abs();
    let chart = Chart::patch(
        config.form,
        Patch::Helicoid { pitch },
        PatchParams::Polar {
            centre: [0.0, 0.0],
            scale: [1.0 / pitch, 1.0],
        },
        columns(q),
        Vector::from_slice(&[centre_s, 0.0, 0.0]),
        [0.0, 0.0],
        [2.0 * PI, 1.01 * reach],
    )?;
    Ok(Surface {
        charts: vec![chart],
        meta: SurfaceMeta {
            name: "helicoid".into(),
            exact_minimal: true,
            totally_geodesic: false,
            orthogonal_to_axis: tilt == 0.0,
            marked_s: Some(centre_s),
            sheets: 1,
        },
    })
}

pub fn clifford_torus(config: &ProblemConfig, patch: CliffordPatch) -> Result<Surface> {
    require_standard(config, Curvature::Spherical, 3, "Clifford torus")?;
    // rotation in the (x_0, x_2) plane taking (1, 0, 1, 0)/sqrt 2 to e_0
    let h = FRAC_1_SQRT_2;
    let rotation = vec![
        Vector::from_slice(&[h, 0.0, -h, 0.0]),
        Vector::from_slice(&[0.0, 1.0, 0.0, 0.0]),
        Vector::from_slice(&[h, 0.0, h, 0.0]),
        Vector::from_slice(&[0.0, 0.0, 0.0, 1.0]),
    ];
    let (params, lo, hi) = match patch {
        CliffordPatch::Full => (PatchParams::Direct, [0.0, 0.0], [2.0 * PI, 2.0 * PI]),
        CliffordPatch::AroundOrigin => {
            let r = config.radius;
            let axial = (2.0 * r.cos() - 1.0).max(-1.0).acos() / SQRT_2;
            let rho_max = (1.01 * r.max(axial)).min(0.999 * PI / SQRT_2);
            (
                PatchParams::Polar {
                    centre: [0.0, 0.0],
                    scale: [SQRT_2, SQRT_2],
                },
                [0.0, 0.0],
                [2.0 * PI, rho_max],
            )
        }
    };
    let chart = Chart::patch(
        config.form,
        Patch::Clifford,
        params,
        rotation,
        Vector::zeros(4),
        lo,
        hi,
    )?;
    Ok(Surface {
        charts: vec![chart],
        meta: SurfaceMeta {
            name: "clifford_torus".into(),
            exact_minimal: true,
            totally_geodesic: false,
            orthogonal_to_axis: false,
            marked_s: Some(0.0),
            sheets: 1,
        },
    })
}

pub fn spherical_cap(config: &ProblemConfig, radius: f64, centre_s: f64) -> Result<Surface> {
    require_standard(config, Curvature::Flat, 3, "spherical cap")?;
    check_centre(config, centre_s)?;
    if !(radius > 0.0) {
        return Err(Error::Precondition(format!("cap radius {radius} must be positive")));
    }
    let reach = config.radius + centre_s.abs();
    let psi_max = if reach >= 2.0 * radius {
        PI
    } else {
        (2.0 * (reach / (2.0 * radius)).asin() * 1.001).min(PI)
    };
    let chart = Chart::patch(
        config.form,
        Patch::Sphere { radius },
        PatchParams::Direct,
        columns(rot12(0.0)),
        Vector::from_slice(&[centre_s, 0.0, 0.0]),
        [0.0, 0.0],
        [2.0 * PI, psi_max],
    )?;
    Ok(Surface {
        charts: vec![chart],
        meta: SurfaceMeta {
            name: "spherical_cap".into(),
            exact_minimal: false,
            totally_geodesic: false,
            orthogonal_to_axis: true,
            marked_s: Some(centre_s),
            sheets: 1,
        },
    })
}
