//! Traces of `{f = t}` in the totally geodesic 2-plane through the axis.
//!
//! Slice coordinates are Fermi coordinates `(s, rho)` about the axis with
//! `rho` signed, so the half-plane `rho >= 0` and its mirror image form one
//! picture. Curves are found by marching squares on a grid adapted to each
//! `t`; crossings on cell edges are solved to full precision and each
//! segment is subdivided with points projected back onto the level set.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::{slice_distance, ProblemConfig};
use crate::spaceform::Curvature;

/// Grid and output resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SliceGrid {
    /// Cells per axis of the window around each level set.
    pub cells: usize,
    /// Pieces each marching-squares segment is split into.
    pub subdivisions: usize,
    /// Half-width of the window for `t > 1`, in units of `R`.
    pub far_extent: f64,
}

impl Default for SliceGrid {
    fn default() -> Self {
        SliceGrid {
            cells: 240,
            subdivisions: 8,
            far_extent: 3.0,
        }
    }
}

/// One traced level: its connected branches, each an ordered polyline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub t: f64,
    pub branches: Vec<Branch>,
    /// Why the level set is empty, when it is.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub closed: bool,
    pub points: Vec<[f64; 2]>,
}

/// Point of the two-dimensional model with Fermi coordinates `(s, rho)`.
pub fn slice_to_model(kappa: Curvature, s: f64, rho: f64) -> [f64; 3] {
    match kappa {
        Curvature::Flat => [s, rho, 0.0],
        Curvature::Spherical => [rho.cos() * s.cos(), rho.cos() * s.sin(), rho.sin()],
        Curvature::Hyperbolic => [rho.cosh() * s.cosh(), rho.cosh() * s.sinh(), rho.sinh()],
    }
}

/// Inverse of [`slice_to_model`].
pub fn model_to_slice(kappa: Curvature, x: [f64; 3]) -> [f64; 2] {
    match kappa {
        Curvature::Flat => [x[0], x[1]],
        Curvature::Spherical => [x[1].atan2(x[0]), x[2].clamp(-1.0, 1.0).asin()],
        Curvature::Hyperbolic => {
            let rho = x[2].asinh();
            [(x[1] / rho.cosh()).asinh(), rho]
        }
    }
}

/// Poincare-disk coordinates of a slice point of `H^2`.
pub fn poincare(s: f64, rho: f64) -> [f64; 2] {
    let x = slice_to_model(Curvature::Hyperbolic, s, rho);
    [x[1] / (1.0 + x[0]), x[2] / (1.0 + x[0])]
}

/// Geodesic distance between slice points.
pub fn slice_metric(kappa: Curvature, a: [f64; 2], b: [f64; 2]) -> f64 {
    let (x, y) = (slice_to_model(kappa, a[0], a[1]), slice_to_model(kappa, b[0], b[1]));
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    match kappa {
        Curvature::Flat => d[0].hypot(d[1]),
        Curvature::Spherical => {
            let c = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            2.0 * (0.5 * c).min(1.0).asin()
        }
        Curvature::Hyperbolic => {
            let q = (-d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).max(0.0);
            2.0 * (0.5 * q.sqrt()).asinh()
        }
    }
}

/// Geodesic circle of radius `radius` about the axis point `(centre_s, 0)`.
pub fn circle(kappa: Curvature, centre_s: f64, radius: f64, samples: usize) -> Vec<[f64; 2]> {
    (0..samples)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / samples as f64;
            let (sp, cp) = phi.sin_cos();
            // the circle about (0, 0), translated along the axis
            let x = match kappa {
                Curvature::Flat => [radius * cp, radius * sp, 0.0],
                Curvature::Spherical => [radius.cos(), radius.sin() * cp, radius.sin() * sp],
                Curvature::Hyperbolic => [radius.cosh(), radius.sinh() * cp, radius.sinh() * sp],
            };
            let moved = match kappa {
                Curvature::Flat => [x[0] + centre_s, x[1], 0.0],
                Curvature::Spherical => {
                    let (s, c) = centre_s.sin_cos();
                    [c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]]
                }
                Curvature::Hyperbolic => {
                    let (s, c) = (centre_s.sinh(), centre_s.cosh());
                    [c * x[0] + s * x[1], s * x[0] + c * x[1], x[2]]
                }
            };
            model_to_slice(kappa, moved)
        })
        .collect()
}

/// `dB_R` in slice coordinates.
pub fn ball_boundary(config: &ProblemConfig, samples: usize) -> Vec<[f64; 2]> {
    circle(config.kappa(), 0.0, config.radius, samples)
}

/// Membership of `E_t` (clipped to `B_R` for `t <= 1`) on the slice;
/// negative inside.
pub fn slice_membership(config: &ProblemConfig, t: f64, s: f64, rho: f64) -> f64 {
    let f = match config.f_on_slice(s, rho.abs()) {
        Ok(f) if f.is_finite() => f - t,
        _ => return 1.0,
    };
    if t <= 1.0 {
        f.max(slice_distance(config.kappa(), s, rho) - config.radius)
    } else {
        f
    }
}

/// Traces `{f = t}` for each requested `t`. Levels `t > 1` are traced
/// without clipping and only for `kappa <= 0`.
pub fn trace_level_sets(config: &ProblemConfig, ts: &[f64], grid: &SliceGrid) -> Result<Vec<LevelCurve>> {
    if grid.cells < 4 || grid.subdivisions == 0 || !(grid.far_extent > 0.0) {
        return Err(Error::Precondition("slice grid needs cells >= 4, subdivisions >= 1".into()));
    }
    ts.iter().map(|&t| trace_one(config, t, grid)).collect()
}

fn window(config: &ProblemConfig, t: f64, grid: &SliceGrid) -> ([f64; 2], [f64; 2]) {
    let r = config.radius;
    let cap = match config.kappa() {
        Curvature::Spherical => 0.5 * PI - 1e-9,
        _ => f64::INFINITY,
    };
    if t > 1.0 {
        let e = grid.far_extent * r;
        return ([-e, e], [-e, e]);
    }
    let full = (1.05 * r).min(cap);
    let b = 1.25 * config.sublevel_radius_bound(t);
    let s_lo = (config.s_y - b).max(-full);
    let s_hi = (config.s_y + b).min(full);
    let h = b.min(full);
    ([s_lo, s_hi], [-h, h])
}

fn trace_one(config: &ProblemConfig, t: f64, grid: &SliceGrid) -> Result<LevelCurve> {
    if !(t > 0.0 && t.is_finite()) {
        return Ok(LevelCurve {
            t,
            branches: Vec::new(),
            note: Some(format!("t = {t} is not a positive level")),
        });
    }
    if t > 1.0 && config.kappa() == Curvature::Spherical {
        return Ok(LevelCurve {
            t,
            branches: Vec::new(),
            note: Some("levels t > 1 are traced only for curvature <= 0".into()),
        });
    }
    let (sr, rr) = window(config, t, grid);
    let n = grid.cells;
    let hs = (sr[1] - sr[0]) / n as f64;
    let hr = (rr[1] - rr[0]) / n as f64;
    let g = |s: f64, rho: f64| slice_membership(config, t, s, rho);
    let node = |i: usize, j: usize| [sr[0] + hs * i as f64, rr[0] + hr * j as f64];
    let mut vals = vec![0.0; (n + 1) * (n + 1)];
    for i in 0..=n {
        for j in 0..=n {
            let p = node(i, j);
            vals[i * (n + 1) + j] = g(p[0], p[1]);
        }
    }
    let inside = |i: usize, j: usize| vals[i * (n + 1) + j] <= 0.0;

    // edge ids: horizontal (i,j)-(i+1,j) -> 2*(i*(n+1)+j), vertical (i,j)-(i,j+1) -> +1
    let h_edge = |i: usize, j: usize| 2 * (i * (n + 1) + j);
    let v_edge = |i: usize, j: usize| 2 * (i * (n + 1) + j) + 1;
    let mut crossing: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    let mut solve_edge = |id: usize, a: [f64; 2], b: [f64; 2]| {
        crossing.entry(id).or_insert_with(|| {
            let line = |u: f64| g(a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u);
            let u = bisect_root(&line, 0.0, 1.0);
            [a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u]
        });
    };
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            let edges = [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)];
            let ends = [
                (node(i, j), node(i + 1, j)),
                (node(i + 1, j), node(i + 1, j + 1)),
                (node(i, j + 1), node(i + 1, j + 1)),
                (node(i, j), node(i, j + 1)),
            ];
            // corners 0..3 counter-clockwise; edge e joins corners e and e+1
            let cut: Vec<usize> = (0..4).filter(|&e| c[e] != c[(e + 1) % 4]).collect();
            for &e in &cut {
                solve_edge(edges[e], ends[e].0, ends[e].1);
            }
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let mid = node(i, j);
                    let centre_in = g(mid[0] + 0.5 * hs, mid[1] + 0.5 * hr) <= 0.0;
                    // pair each edge with the one cutting off the same corner
                    if centre_in == c[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    let chains = chain(&segments);
    let h = hs.max(hr);
    let branches: Vec<Branch> = chains
        .into_iter()
        .map(|(ids, closed)| {
            let raw: Vec<[f64; 2]> = ids.iter().map(|id| crossing[id]).collect();
            Branch {
                closed,
                points: densify(&raw, closed, grid.subdivisions, h, &g),
            }
        })
        .collect();
    let note = branches.is_empty().then(|| format!("no crossing of f = {t} in the traced window"));
    Ok(LevelCurve { t, branches, note })
}

/// Joins segments sharing edge ids into polylines. Open chains start at an
/// end point; the smallest id starts each closed loop.
fn chain(segments: &[(usize, usize)]) -> Vec<(Vec<usize>, bool)> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(k);
        adj.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut ids = vec![start];
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (a, b) = segments[k];
            cur = if a == cur { b } else { a };
            ids.push(cur);
        }
        ids
    };
    let ends: Vec<usize> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(&id, _)| id).collect();
    for id in ends {
        if adj[&id].iter().all(|&k| used[k]) {
            continue;
        }
        out.push((walk(id, &mut used), false));
    }
    let ids: Vec<usize> = adj.keys().copied().collect();
    for id in ids {
        if adj[&id].iter().all(|&k| used[k]) {
            continue;
        }
        let loop_ids = walk(id, &mut used);
        let closed = loop_ids.len() > 2 && loop_ids.first() == loop_ids.last();
        let mut loop_ids = loop_ids;
        if closed {
            loop_ids.pop();
        }
        out.push((loop_ids, closed));
    }
    out
}

/// Splits each segment into `m` pieces and projects the interior points
/// onto `{g = 0}` by Newton steps along the gradient, keeping the linear
/// point where the projection moves further than a cell.
fn densify<G: Fn(f64, f64) -> f64>(
    raw: &[[f64; 2]],
    closed: bool,
    m: usize,
    h: f64,
    g: &G,
) -> Vec<[f64; 2]> {
    let count = if closed { raw.len() } else { raw.len().saturating_sub(1) };
    let mut out = Vec::with_capacity(count * m + 1);
    for k in 0..count {
        let a = raw[k];
        let b = raw[(k + 1) % raw.len()];
        out.push(a);
        for q in 1..m {
            let u = q as f64 / m as f64;
            let p = [a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u];
            out.push(project(p, h, g));
        }
    }
    if !closed {
        if let Some(last) = raw.last() {
            out.push(*last);
        }
    }
    out
}

fn project<G: Fn(f64, f64) -> f64>(p: [f64; 2], h: f64, g: &G) -> [f64; 2] {
    let step = 1e-6 * h;
    let mut x = p;
    for _ in 0..6 {
        let v = g(x[0], x[1]);
        if v == 0.0 {
            break;
        }
        let gx = (g(x[0] + step, x[1]) - g(x[0] - step, x[1])) / (2.0 * step);
        let gy = (g(x[0], x[1] + step) - g(x[0], x[1] - step)) / (2.0 * step);
        let n2 = gx * gx + gy * gy;
        if !(n2 > 0.0) || !n2.is_finite() {
            return p;
        }
        x = [x[0] - v * gx / n2, x[1] - v * gy / n2];
    }
    let moved = (x[0] - p[0]).hypot(x[1] - p[1]);
    if moved < h && g(x[0], x[1]).abs() < g(p[0], p[1]).abs() {
        x
    } else {
        p
    }
}

/// Root of `line` on `[a, b]` where `line(a)` and `line(b)` differ in
/// inside/outside status, by bisection to machine precision.
fn bisect_root<F: Fn(f64) -> f64>(line: &F, mut a: f64, mut b: f64) -> f64 {
    let a_in = line(a) <= 0.0;
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (line(m) <= 0.0) == a_in {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sampled symmetric Hausdorff distance in the slice metric between traced
/// branches and the geodesic circle of radius `radius` about the axis point
/// `(centre_s, 0)`.
pub fn hausdorff_to_circle(
    kappa: Curvature,
    traced: &[Branch],
    centre_s: f64,
    radius: f64,
    samples: usize,
) -> f64 {
    hausdorff_to_disc_intersection(kappa, traced, &[(centre_s, radius)], samples)
}

/// Sampled symmetric Hausdorff distance between traced branches and the
/// boundary of an intersection of geodesic discs `(centre_s, radius)` about
/// axis points. Traced vertices are measured exactly against the boundary;
/// `samples` points per circle, kept where they lie on the boundary, are
/// measured against the traced polylines.
pub fn hausdorff_to_disc_intersection(
    kappa: Curvature,
    traced: &[Branch],
    discs: &[(f64, f64)],
    samples: usize,
) -> f64 {
    let excess = |p: [f64; 2]| -> Vec<f64> {
        discs
            .iter()
            .map(|&(c, r)| slice_metric(kappa, [c, 0.0], p) - r)
            .collect()
    };
    let to_ref = traced
        .iter()
        .flat_map(|b| b.points.iter())
        .map(|p| {
            let e = excess(*p);
            (0..e.len())
                .map(|i| {
                    let outside = (0..e.len())
                        .filter(|&j| j != i)
                        .map(|j| e[j].max(0.0))
                        .fold(0.0, f64::max);
                    e[i].abs().max(outside)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let reference: Vec<[f64; 2]> = discs
        .iter()
        .enumerate()
        .flat_map(|(i, &(c, r))| {
            circle(kappa, c, r, samples)
                .into_iter()
                .filter(move |p| {
                    discs
                        .iter()
                        .enumerate()
                        .all(|(j, &(cj, rj))| j == i || slice_metric(kappa, [cj, 0.0], *p) <= rj)
                })
        })
        .collect();
    to_ref.max(directed_to_branches(kappa, &reference, traced))
}

/// Sampled symmetric Hausdorff distance between traced branches and a
/// reference point set lying on a closed curve, measured from vertices to
/// the other set's polylines.
pub fn hausdorff(kappa: Curvature, traced: &[Branch], reference: &[[f64; 2]]) -> f64 {
    let closed = [Branch {
        closed: true,
        points: reference.to_vec(),
    }];
    let to_ref = directed_to_branches(
        kappa,
        &traced.iter().flat_map(|b| b.points.iter().copied()).collect::<Vec<_>>(),
        &closed,
    );
    to_ref.max(directed_to_branches(kappa, reference, traced))
}

fn directed_to_branches(kappa: Curvature, points: &[[f64; 2]], branches: &[Branch]) -> f64 {
    points
        .iter()
        .map(|p| {
            branches
                .iter()
                .map(|b| distance_to_polyline(kappa, *p, b))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn distance_to_polyline(kappa: Curvature, p: [f64; 2], line: &Branch) -> f64 {
    let pts = &line.points;
    let Some((nearest, d0)) = pts
        .iter()
        .map(|q| slice_metric(kappa, p, *q))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
    else {
        return f64::INFINITY;
    };
    let n = pts.len();
    let next = if nearest + 1 < n { Some(nearest + 1) } else { line.closed.then_some(0) };
    let prev = if nearest > 0 { Some(nearest - 1) } else { line.closed.then_some(n - 1) };
    let mut best = d0;
    for k in [next, prev].into_iter().flatten() {
        if k != nearest {
            best = best.min(segment_distance(kappa, p, pts[nearest], pts[k]));
        }
    }
    best
}

/// Distance from `p` to the coordinate segment `[a, b]`, minimized by
/// golden-section search (the distance is unimodal on short segments).
fn segment_distance(kappa: Curvature, p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = |u: f64| slice_metric(kappa, p, [a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut f1, mut f2) = (d(x1), d(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = d(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = d(x2);
        }
    }
    f1.min(f2).min(d(0.0)).min(d(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_coordinates_round_trip() {
        for kappa in [Curvature::Hyperbolic, Curvature::Flat, Curvature::Spherical] {
            for &(s, rho) in &[(0.3, -0.4), (-0.9, 0.2), (0.0, 0.0)] {
                let back = model_to_slice(kappa, slice_to_model(kappa, s, rho));
                assert!((back[0] - s).abs() < 1e-14 && (back[1] - rho).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn slice_metric_matches_pythagoras_from_the_axis() {
        for kappa in [Curvature::Hyperbolic, Curvature::Flat, Curvature::Spherical] {
            let d = slice_metric(kappa, [0.0, 0.0], [0.4, -0.7]);
            assert!((d - slice_distance(kappa, 0.4, 0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn circles_have_constant_radius() {
        for kappa in [Curvature::Hyperbolic, Curvature::Flat, Curvature::Spherical] {
            for p in circle(kappa, 0.35, 0.6, 17) {
                assert!((slice_metric(kappa, [0.35, 0.0], p) - 0.6).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn poincare_maps_into_the_unit_disk() {
        let p = poincare(2.0, -1.5);
        assert!(p[0].hypot(p[1]) < 1.0);
        assert_eq!(poincare(0.0, 0.0), [0.0, 0.0]);
    }

    #[test]
    fn chaining_closes_loops() {
        let segs = [(1, 2), (3, 1), (2, 3), (10, 11)];
        let chains = chain(&segs);
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[0], (vec![10, 11], false));
        assert!(chains[1].1);
        assert_eq!(chains[1].0.len(), 3);
    }
}
