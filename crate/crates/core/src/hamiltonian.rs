//! The Hamiltonian w_n(x) = −Σ_{i≠j} log|x_i − x_j| + n Σ_i V(x_i), its
//! derivatives, and the splitting
//!
//! w_n = n² F(μ0) − n log n + n F_n
//!
//! into leading, logarithmic and next-order parts.
//!
//! Sums are direct O(n²). Rows are evaluated in parallel for large n and
//! then reduced in index order, so results do not depend on the thread count.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{zeta_clamped, EquilibriumMeasure, ModelConstants};
use crate::potential::Potential;

const PARALLEL_THRESHOLD: usize = 1024;

/// Strictly increasing particle positions at the original scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    points: Vec<f64>,
}

impl Configuration {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("positions must be finite"));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(Error::Degenerate { i, j: i + 1 });
            }
            if w[1] < w[0] {
                return Err(Error::domain("positions must be sorted increasingly"));
            }
        }
        Ok(Configuration { points })
    }

    pub fn from_unsorted(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        Configuration::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }
}

fn row_sums<F>(n: usize, row: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

/// Σ_{i≠j} log|x_i − x_j| over a sorted slice (each pair counted twice).
pub(crate) fn log_pair_sum(x: &[f64]) -> f64 {
    let n = x.len();
    let rows = row_sums(n, |i| {
        x[i + 1..].iter().map(|xj| (xj - x[i]).abs().ln()).sum::<f64>()
    });
    2.0 * rows.iter().sum::<f64>()
}

pub fn energy(config: &Configuration, v: &Potential) -> f64 {
    let x = &config.points;
    let n = x.len() as f64;
    -log_pair_sum(x) + n * x.iter().map(|&xi| v.eval(xi)).sum::<f64>()
}

/// w_n(y) − w_n(x) for two labelled configurations of equal length,
/// computed from the displacements so that small changes keep their
/// relative accuracy. Returns +∞ if some pair collides or crosses.
pub fn energy_change(x: &[f64], y: &[f64], v: &Potential) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let rows = row_sums(n, |i| {
        let mut s = 0.0;
        for j in i + 1..n {
            let r = (d[j] - d[i]) / (x[j] - x[i]);
            if r <= -1.0 {
                return f64::NEG_INFINITY;
            }
            s += r.ln_1p();
        }
        s
    });
    let pair: f64 = rows.iter().sum();
    if pair == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let confinement: f64 = x.iter().zip(&d).map(|(&xi, &di)| v.increment(xi, di)).sum();
    -2.0 * pair + n as f64 * confinement
}

/// Component i: −2 Σ_{j≠i} 1/(x_i − x_j) + n V'(x_i).
pub fn gradient(config: &Configuration, v: &Potential) -> Vec<f64> {
    let x = &config.points;
    let n = x.len();
    row_sums(n, |i| {
        let mut s = 0.0;
        for (j, xj) in x.iter().enumerate() {
            if j != i {
                s += 1.0 / (x[i] - xj);
            }
        }
        -2.0 * s + n as f64 * v.deriv(x[i])
    })
}

pub fn hessian(config: &Configuration, v: &Potential) -> DMatrix<f64> {
    let x = &config.points;
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = n as f64 * v.second_deriv(x[i]);
        for j in 0..n {
            if j != i {
                let d = x[i] - x[j];
                let k = 2.0 / (d * d);
                h[(i, j)] = -k;
                diag += k;
            }
        }
        h[(i, i)] = diag;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub w_n: f64,
    /// n² F(μ0)
    pub leading: f64,
    /// n log n
    pub log_term: f64,
    pub f_n: f64,
    /// f_n − 2 Σ ζ(x_i)
    pub f_hat: f64,
    pub zeta_sum: f64,
}

impl EnergyBreakdown {
    /// leading − log_term + n f_n
    pub fn reassemble(&self, n: usize) -> f64 {
        self.leading - self.log_term + n as f64 * self.f_n
    }
}

pub fn breakdown(
    config: &Configuration,
    v: &Potential,
    mu: &EquilibriumMeasure,
    consts: &ModelConstants,
) -> EnergyBreakdown {
    let n = config.len() as f64;
    let w_n = energy(config, v);
    let leading = n * n * consts.mean_field_energy;
    let log_term = if n > 0.0 { n * n.ln() } else { 0.0 };
    let f_n = (w_n - leading + log_term) / n;
    let zeta_sum: f64 = config
        .points
        .iter()
        .map(|&x| zeta_clamped(mu, v, consts.c, x))
        .sum();
    EnergyBreakdown {
        w_n,
        leading,
        log_term,
        f_n,
        f_hat: f_n - 2.0 * zeta_sum,
        zeta_sum,
    }
}

/// D(x0, R) = #{x_i ∈ [x0 − R/n, x0 + R/n]} − n μ0([x0 − R/n, x0 + R/n]).
pub fn discrepancy(config: &Configuration, mu: &EquilibriumMeasure, x0: f64, radius: f64) -> f64 {
    discrepancy_counts(&config.points, config.len(), mu, x0, radius)
}

/// Discrepancy with an explicit particle number `n`, which fixes the
/// window scale R/n even when `points` is empty or partial.
pub fn discrepancy_counts(
    points: &[f64],
    n: usize,
    mu: &EquilibriumMeasure,
    x0: f64,
    radius: f64,
) -> f64 {
    let half = radius / n.max(1) as f64;
    let (a, b) = (x0 - half, x0 + half);
    let count = points.iter().filter(|&&x| a <= x && x <= b).count() as f64;
    count - n as f64 * mu.mass_in(a, b)
}
