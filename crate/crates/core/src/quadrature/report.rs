use serde::{Deserialize, Serialize};

use super::quantities::{Excess, QValue};
use crate::error::{Error, Result};

/// Tolerance on `max |Q - Q(t_min)|` for the "constant" classification.
pub const CONSTANT_TOL: f64 = 1e-6;

/// `n` geometrically spaced points from `lo` to `hi`, both included.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::Precondition(format!(
            "geometric grid needs 0 < lo < hi and n >= 2, got ({lo}, {hi}, {n})"
        )));
    }
    let ratio = (hi / lo).ln();
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => lo * (ratio * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

/// 24 points in `[1e-2, 1]`.
pub fn default_moving_grid() -> Vec<f64> {
    geometric_grid(1e-2, 1.0, 24).expect("valid grid")
}

/// 24 points in `[1e-2 R, R]`.
pub fn default_classical_grid(radius: f64) -> Vec<f64> {
    geometric_grid(1e-2 * radius, radius, 24).expect("valid grid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Constant,
    Increasing,
    NotMonotone,
}

/// Comparison of consecutive grid values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t0: f64,
    pub t1: f64,
    /// `Q(t0) - Q(t1)`; positive means a decrease.
    pub drop: f64,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub suite: String,
    pub t_grid: Vec<f64>,
    pub q: Vec<f64>,
    pub q_error: Vec<f64>,
    /// Three-point difference quotients on the grid.
    pub q_prime: Vec<f64>,
    pub intervals: Vec<Violation>,
    pub classification: Classification,
    pub max_deviation: f64,
    pub converged: bool,
    /// Levels where a difference quotient was not resolved.
    pub flagged_levels: Vec<f64>,
    pub excess: Vec<Excess>,
    /// The surface metadata says the theorem's equality case applies.
    #[serde(default)]
    pub rigidity_expected: bool,
    /// Disagreement between the classification and the metadata.
    #[serde(default)]
    pub anomaly: Option<String>,
}

impl MonotonicityReport {
    pub fn from_values(suite: &str, values: &[QValue]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Precondition("monotonicity needs at least two grid points".into()));
        }
        if values.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Precondition("t-grid must be strictly increasing".into()));
        }
        let t_grid: Vec<f64> = values.iter().map(|v| v.t).collect();
        let q: Vec<f64> = values.iter().map(|v| v.q).collect();
        let q_error: Vec<f64> = values.iter().map(|v| v.error).collect();
        let intervals = values
            .windows(2)
            .map(|w| {
                let slack = 1e-7_f64.max(10.0 * (w[0].error + w[1].error));
                let drop = w[0].q - w[1].q;
                Violation {
                    t0: w[0].t,
                    t1: w[1].t,
                    drop,
                    slack,
                    violated: !(drop <= slack),
                }
            })
            .collect::<Vec<_>>();
        let (classification, max_deviation) = classify(&q, &intervals);
        Ok(MonotonicityReport {
            suite: suite.to_string(),
            q_prime: grid_derivative(&t_grid, &q),
            t_grid,
            q,
            q_error,
            intervals,
            classification,
            max_deviation,
            converged: values.iter().all(|v| v.converged),
            flagged_levels: values.iter().filter(|v| v.flagged).map(|v| v.t).collect(),
            excess: Vec::new(),
            rigidity_expected: false,
            anomaly: None,
        })
    }

    pub fn violations(&self) -> usize {
        self.intervals.iter().filter(|v| v.violated).count()
    }

    pub fn monotone(&self) -> bool {
        self.violations() == 0
    }

    /// Cross-checks the classification against the equality case and
    /// records an anomaly when they disagree.
    pub fn set_rigidity(&mut self, expected: bool) {
        self.rigidity_expected = expected;
        let constant = self.classification == Classification::Constant;
        self.anomaly = match (constant, expected) {
            (true, false) => Some(format!(
                "{}: constant within {CONSTANT_TOL:e} on a surface outside the equality case",
                self.suite
            )),
            (false, true) => Some(format!(
                "{}: equality case not classified constant (max deviation {:e})",
                self.suite, self.max_deviation
            )),
            _ => None,
        };
    }

    pub fn excess_consistent(&self) -> bool {
        self.excess.iter().all(|e| e.consistent())
    }

    pub fn passed(&self) -> bool {
        self.monotone() && self.converged && self.anomaly.is_none() && self.excess_consistent()
    }
}

/// Classification from the values and interval comparisons, with
/// `max |Q - Q(t_min)|`.
pub fn classify(q: &[f64], intervals: &[Violation]) -> (Classification, f64) {
    let first = q[0];
    let dev = q.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    let class = if !dev.is_finite() || intervals.iter().any(|v| v.violated) {
        Classification::NotMonotone
    } else if dev < CONSTANT_TOL {
        Classification::Constant
    } else {
        Classification::Increasing
    };
    (class, dev)
}

/// Second-order difference quotients on a non-uniform grid, one-sided at
/// the ends.
fn grid_derivative(t: &[f64], q: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n == 2 {
        let d = (q[1] - q[0]) / (t[1] - t[0]);
        return vec![d, d];
    }
    let three = |i0: usize, at: f64| -> f64 {
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let (y0, y1, y2) = (q[i0], q[i0 + 1], q[i0 + 2]);
        y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| {
            let i0 = i.saturating_sub(1).min(n - 3);
            three(i0, t[i])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qv(t: f64, q: f64) -> QValue {
        QValue {
            t,
            q,
            error: 1e-12,
            converged: true,
            flagged: false,
        }
    }

    #[test]
    fn grid_is_geometric_and_exact_at_ends() {
        let g = default_moving_grid();
        assert_eq!(g.len(), 24);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[23], 1.0);
        let r = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
        assert!(geometric_grid(1.0, 0.5, 4).is_err());
    }

    #[test]
    fn derivative_exact_on_quadratics() {
        let t = [0.1, 0.3, 0.35, 0.8, 1.0];
        let q: Vec<f64> = t.iter().map(|x| 2.0 * x * x - x).collect();
        for (x, d) in t.iter().zip(grid_derivative(&t, &q)) {
            assert!((d - (4.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn classification_cases() {
        let constant: Vec<QValue> = [0.1, 0.2, 0.3].iter().map(|&t| qv(t, 1.0 + 1e-9 * t)).collect();
        let r = MonotonicityReport::from_values("x", &constant).unwrap();
        assert_eq!(r.classification, Classification::Constant);
        let inc: Vec<QValue> = [0.1, 0.2, 0.3].iter().map(|&t| qv(t, t)).collect();
        assert_eq!(
            MonotonicityReport::from_values("x", &inc).unwrap().classification,
            Classification::Increasing
        );
        let dec: Vec<QValue> = [0.1, 0.2, 0.3].iter().map(|&t| qv(t, -t)).collect();
        let r = MonotonicityReport::from_values("x", &dec).unwrap();
        assert_eq!(r.classification, Classification::NotMonotone);
        assert_eq!(r.violations(), 2);
        let tiny_drop = vec![qv(0.1, 1.0), qv(0.2, 1.0 - 5e-8), qv(0.3, 2.0)];
        assert!(MonotonicityReport::from_values("x", &tiny_drop).unwrap().monotone());
        let unsorted = vec![qv(0.2, 1.0), qv(0.1, 1.0)];
        assert!(MonotonicityReport::from_values("x", &unsorted).is_err());
    }
}
