//! Globally adaptive Gauss-Kronrod (G7, K15) integration of vector-valued
//! functions, with deterministic panel ordering.

use rayon::prelude::*;

use super::sum::pairwise_sum_vectors;
use crate::error::Result;
use crate::vector::Vector;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights at the odd Kronrod abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A function value carrying its own error and absolute-value companions,
/// so nested integrals can propagate inner error estimates.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub value: Vector,
    pub err: Vector,
    pub abs: Vector,
}

impl Sample {
    pub fn plain(value: Vector) -> Self {
        let mut abs = value;
        for x in abs.as_mut_slice() {
            *x = x.abs();
        }
        Sample {
            value,
            err: Vector::zeros(value.len()),
            abs,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Sample {
            value: Vector::zeros(n),
            err: Vector::zeros(n),
            abs: Vector::zeros(n),
        }
    }

    pub fn add(&self, other: &Sample) -> Sample {
        Sample {
            value: self.value + other.value,
            err: self.err + other.err,
            abs: self.abs + other.abs,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    depth: usize,
    value: Vector,
    abs: Vector,
    err: Vector,
}

/// Result of a one-dimensional adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive {
    pub total: Sample,
    pub converged: bool,
    pub evaluations: usize,
}

/// The 15 abscissae of the Kronrod rule on `[a, b]`, in a fixed order.
pub fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; 15];
    for i in 0..7 {
        out[2 * i] = c - h * XGK[i];
        out[2 * i + 1] = c + h * XGK[i];
    }
    out[14] = c;
    out
}

fn combine(a: f64, b: f64, vals: &[Sample], n: usize) -> Panel {
    let h = 0.5 * (b - a);
    let mut k = Vector::zeros(n);
    let mut g = Vector::zeros(n);
    let mut abs = Vector::zeros(n);
    let mut inner = Vector::zeros(n);
    for i in 0..7 {
        let (lo, hi) = (&vals[2 * i], &vals[2 * i + 1]);
        let pair = lo.value + hi.value;
        k = k.axpy(WGK[i], &pair);
        abs = abs.axpy(WGK[i], &(lo.abs + hi.abs));
        inner = inner.axpy(WGK[i], &(lo.err + hi.err));
        if i % 2 == 1 {
            g = g.axpy(WG[i / 2], &pair);
        }
    }
    let mid = &vals[14];
    k = k.axpy(WGK[7], &mid.value);
    abs = abs.axpy(WGK[7], &mid.abs);
    inner = inner.axpy(WGK[7], &mid.err);
    g = g.axpy(WG[3], &mid.value);
    let mut err = (k - g).scale(h);
    for (e, i) in err.as_mut_slice().iter_mut().zip(inner.as_slice()) {
        *e = e.abs() + h.abs() * i;
    }
    Panel {
        a,
        b,
        depth: 0,
        value: k.scale(h),
        abs: abs.scale(h.abs()),
        err,
    }
}

/// Adaptive integration of `f` over `[a, b]`. A component is accepted when
/// its error estimate is below `rel_tol` times the integral of `|f|` plus
/// `abs_tol`.
///
/// Panels are refined in rounds; all panels of a round are evaluated
/// together (in parallel when `parallel` is set) and kept in left-to-right
/// order, so the result does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F>(
    f: &F,
    a: f64,
    b: f64,
    n: usize,
    initial_panels: usize,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: usize,
    parallel: bool,
) -> Result<Adaptive>
where
    F: Fn(f64) -> Result<Sample> + Sync,
{
    let evaluate = |intervals: &[(f64, f64, usize)]| -> Result<Vec<Panel>> {
        let xs: Vec<f64> = intervals.iter().flat_map(|&(a, b, _)| nodes(a, b)).collect();
        let vals: Vec<Sample> = if parallel {
            xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?
        } else {
            xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?
        };
        Ok(intervals
            .iter()
            .zip(vals.chunks(15))
            .map(|(&(a, b, depth), v)| {
                let mut p = combine(a, b, v, n);
                p.depth = depth;
                p
            })
            .collect())
    };

    let m = initial_panels.max(1);
    let init: Vec<(f64, f64, usize)> = (0..m)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / m as f64;
            let hi = if i + 1 == m { b } else { a + (b - a) * (i + 1) as f64 / m as f64 };
            (lo, hi, 0)
        })
        .collect();
    let mut panels = evaluate(&init)?;
    let mut evaluations = 15 * m;
    let length = (b - a).abs();
    loop {
        let value = pairwise_sum_vectors(&panels.iter().map(|p| p.value).collect::<Vec<_>>(), n);
        let abs = pairwise_sum_vectors(&panels.iter().map(|p| p.abs).collect::<Vec<_>>(), n);
        let err = pairwise_sum_vectors(&panels.iter().map(|p| p.err).collect::<Vec<_>>(), n);
        let done = (0..n).all(|c| err[c] <= rel_tol * abs[c] + abs_tol);
        let total = Sample { value, err, abs };
        if done {
            return Ok(Adaptive {
                total,
                converged: true,
                evaluations,
            });
        }
        let mut split = Vec::new();
        let mut keep = Vec::with_capacity(panels.len());
        for p in &panels {
            let share = ((p.b - p.a).abs() / length).max(1e-300);
            let bad = (0..n).any(|c| p.err[c] > 0.5 * (rel_tol * abs[c] + abs_tol) * share);
            if bad && p.depth < max_depth {
                let mid = 0.5 * (p.a + p.b);
                split.push((p.a, mid, p.depth + 1));
                split.push((mid, p.b, p.depth + 1));
                keep.push(None);
            } else {
                keep.push(Some(*p));
            }
        }
        if split.is_empty() {
            return Ok(Adaptive {
                total,
                converged: false,
                evaluations,
            });
        }
        let fresh = evaluate(&split)?;
        evaluations += 15 * split.len();
        let mut fresh = fresh.into_iter();
        let mut next = Vec::with_capacity(panels.len() + split.len() / 2);
        for slot in keep {
            match slot {
                Some(p) => next.push(p),
                None => {
                    next.push(fresh.next().expect("left half"));
                    next.push(fresh.next().expect("right half"));
                }
            }
        }
        panels = next;
    }
}
