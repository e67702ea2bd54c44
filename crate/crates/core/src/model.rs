//! Equilibrium measures of the mean-field energy
//! F(μ) = −∬ log|x − y| dμ(x) dμ(y) + ∫ V dμ
//! and the constants derived from them: the Robin constant c, the minimal
//! energy F(μ0) and α = ∫ m0 log(2π m0).
//!
//! A measure is either the closed-form semicircle law or a piecewise-constant
//! density on grid cells. Grid measures come out of [`solve_equilibrium`],
//! which minimizes the exact energy of piecewise-constant densities: the cell
//! interaction matrix is the cell-averaged log kernel, so the self-energy of
//! a cell of width h is 3/2 − log h.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::{integrate_pieces, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// Robin constant: U^μ0 + V/2 = c on the support.
    pub c: f64,
    #[serde(rename = "F")]
    pub mean_field_energy: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// (2 / πR²) √(R² − (x − center)²) on [center − R, center + R].
    Semicircle { center: f64, radius: f64 },
    /// Mass `weights[k]` spread uniformly over `[edges[k], edges[k + 1]]`.
    Cells {
        nodes: Vec<f64>,
        edges: Vec<f64>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    support: Vec<[f64; 2]>,
    density: Density,
    total_mass: f64,
    density_bound: f64,
}

impl EquilibriumMeasure {
    pub fn semicircle(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            return Err(Error::domain("semicircle needs a finite center and positive radius"));
        }
        Ok(EquilibriumMeasure {
            support: vec![[center - radius, center + radius]],
            density: Density::Semicircle { center, radius },
            total_mass: 1.0,
            density_bound: 2.0 / (PI * radius),
        })
    }

    /// Piecewise-constant measure on the Voronoi cells of `nodes`.
    pub fn from_cells(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != weights.len() {
            return Err(Error::domain("need at least two nodes and one weight per node"));
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::domain("nodes and weights must be finite"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("nodes must be strictly increasing"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::domain("weights must be non-negative"));
        }
        let edges = cell_edges(&nodes);
        let total_mass: f64 = weights.iter().sum();
        let mut support: Vec<[f64; 2]> = Vec::new();
        let mut open: Option<f64> = None;
        for k in 0..weights.len() {
            match (weights[k] > 0.0, open) {
                (true, None) => open = Some(edges[k]),
                (false, Some(a)) => {
                    support.push([a, edges[k]]);
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(a) = open {
            support.push([a, edges[weights.len()]]);
        }
        let density_bound = weights
            .iter()
            .zip(edges.windows(2))
            .map(|(w, e)| w / (e[1] - e[0]))
            .fold(0.0, f64::max);
        Ok(EquilibriumMeasure {
            support,
            density: Density::Cells { nodes, edges, weights },
            total_mass,
            density_bound,
        })
    }

    pub fn support(&self) -> &[[f64; 2]] {
        &self.support
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Upper bound m̄ on the density.
    pub fn density_bound(&self) -> f64 {
        self.density_bound
    }

    pub fn closed_form(&self) -> Option<&'static str> {
        match self.density {
            Density::Semicircle { .. } => Some("semicircle"),
            Density::Cells { .. } => None,
        }
    }

    /// Smallest interval containing the support.
    pub fn hull(&self) -> [f64; 2] {
        let a = self.support.first().map_or(0.0, |s| s[0]);
        let b = self.support.last().map_or(0.0, |s| s[1]);
        [a, b]
    }

    pub fn support_length(&self) -> f64 {
        self.support.iter().map(|s| s[1] - s[0]).sum()
    }

    pub fn in_support(&self, x: f64) -> bool {
        self.support.iter().any(|s| s[0] <= x && x <= s[1])
    }

    pub fn density_at(&self, x: f64) -> f64 {
        match &self.density {
            Density::Semicircle { center, radius } => semicircle_density(*center, *radius, x),
            Density::Cells { edges, weights, .. } => match locate(edges, x) {
                Some(k) => weights[k] / (edges[k + 1] - edges[k]),
                None => 0.0,
            },
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.density {
            Density::Semicircle { center, radius } => {
                let t = ((x - center) / radius).clamp(-1.0, 1.0);
                0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI
            }
            Density::Cells { edges, weights, .. } => {
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    let (a, b) = (edges[k], edges[k + 1]);
                    if x >= b {
                        acc += w;
                    } else {
                        if x > a {
                            acc += w * (x - a) / (b - a);
                        }
                        break;
                    }
                }
                acc
            }
        }
    }

    /// μ([a, b]).
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// Inverse CDF for p in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        let [mut lo, mut hi] = self.hull();
        let target = p.clamp(0.0, 1.0) * self.total_mass;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Sample points for statistics "on the support": nodes of positive
    /// mass for grid measures, an equispaced set for closed forms.
    fn support_samples(&self, interior_fraction: f64) -> Vec<f64> {
        match &self.density {
            Density::Semicircle { center, radius } => {
                let r = radius * interior_fraction;
                (0..=40).map(|k| center - r + 2.0 * r * k as f64 / 40.0).collect()
            }
            Density::Cells { nodes, weights, .. } => {
                let mut out = Vec::new();
                for s in &self.support {
                    let mid = 0.5 * (s[0] + s[1]);
                    let half = 0.5 * (s[1] - s[0]) * interior_fraction;
                    out.extend(
                        nodes
                            .iter()
                            .zip(weights)
                            .filter(|(x, w)| **w > 0.0 && (**x - mid).abs() <= half)
                            .map(|(x, _)| *x),
                    );
                }
                out
            }
        }
    }
}

fn semicircle_density(center: f64, radius: f64, x: f64) -> f64 {
    let t = (x - center) / radius;
    if t.abs() >= 1.0 {
        0.0
    } else {
        2.0 / (PI * radius) * (1.0 - t * t).sqrt()
    }
}

fn cell_edges(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(nodes[0] - 0.5 * (nodes[1] - nodes[0]));
    edges.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(nodes[n - 1] + 0.5 * (nodes[n - 1] - nodes[n - 2]));
    edges
}

fn locate(edges: &[f64], x: f64) -> Option<usize> {
    if x < edges[0] || x > edges[edges.len() - 1] {
        return None;
    }
    let k = edges.partition_point(|&e| e <= x);
    Some(k.saturating_sub(1).min(edges.len() - 2))
}

/// G(t) = t log|t| − t, an antiderivative of log|t|.
fn log_antideriv(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.abs().ln() - t
    }
}

/// Φ(t) = t² log|t| / 2 − 3t²/4, an antiderivative of G.
fn log_antideriv2(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        0.5 * t * t * t.abs().ln() - 0.75 * t * t
    }
}

/// ∫_a^b ∫_c^d −log|x − y| dy dx.
fn cell_pair_energy(a: f64, b: f64, c: f64, d: f64) -> f64 {
    -(log_antideriv2(b - c) - log_antideriv2(a - c) - log_antideriv2(b - d) + log_antideriv2(a - d))
}

/// The semicircle law on [−2, 2], equilibrium measure of V(x) = x²/2.
pub fn semicircle_equilibrium() -> EquilibriumMeasure {
    EquilibriumMeasure::semicircle(0.0, 2.0).expect("valid semicircle")
}

/// U^μ(x) = −∫ log|x − y| dμ(y).
pub fn log_potential(mu: &EquilibriumMeasure, x: f64) -> f64 {
    match &mu.density {
        Density::Semicircle { center, radius } => {
            let (a, b) = (center - radius, center + radius);
            let mut breaks = vec![a];
            if x > a && x < b {
                breaks.push(x);
            }
            breaks.push(b);
            let opts = QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-11,
                max_intervals: 2000,
            };
            let (c, r) = (*center, *radius);
            -integrate_pieces(
                |y| {
                    let d = (x - y).abs();
                    if d == 0.0 {
                        0.0
                    } else {
                        d.ln() * semicircle_density(c, r, y)
                    }
                },
                &breaks,
                opts,
            )
            .value
        }
        Density::Cells { edges, weights, .. } => {
            let mut acc = 0.0;
            for (k, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let (a, b) = (edges[k], edges[k + 1]);
                acc += w / (b - a) * (log_antideriv(b - x) - log_antideriv(a - x));
            }
            -acc
        }
    }
}

/// Closed form of U^σ for the semicircle on [−2, 2]:
/// 1/2 − x²/4 on the support, −log|x| + ... outside.
pub fn semicircle_log_potential(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 2.0 {
        0.5 - x * x / 4.0
    } else {
        let s = (x * x - 4.0).sqrt();
        0.5 - x * x / 4.0 + ax * s / 4.0 - ((ax + s) / 2.0).ln()
    }
}

/// ζ = U^μ + V/2 − c.
pub fn zeta(mu: &EquilibriumMeasure, v: &Potential, c: f64, x: f64) -> f64 {
    log_potential(mu, x) + 0.5 * v.eval(x) - c
}

/// ζ with its exact values on the support (0) and its sign (≥ 0)
/// enforced; quadrature noise is dropped.
pub fn zeta_clamped(mu: &EquilibriumMeasure, v: &Potential, c: f64, x: f64) -> f64 {
    if mu.in_support(x) {
        0.0
    } else {
        zeta(mu, v, c, x).max(0.0)
    }
}

fn cell_potential_average(v: &Potential, a: f64, b: f64) -> f64 {
    // 3-point Gauss–Legendre, exact for degree ≤ 5.
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let t = (0.6f64).sqrt() * h;
    (5.0 * v.eval(m - t) + 8.0 * v.eval(m) + 5.0 * v.eval(m + t)) / 18.0
}

fn interaction_matrix(edges: &[f64]) -> DMatrix<f64> {
    let n = edges.len() - 1;
    let widths: Vec<f64> = edges.windows(2).map(|e| e[1] - e[0]).collect();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let e = cell_pair_energy(edges[i], edges[i + 1], edges[j], edges[j + 1])
                / (widths[i] * widths[j]);
            k[(i, j)] = e;
            k[(j, i)] = e;
        }
    }
    k
}

/// I(μ) = −∬ log|x − y| dμ(x) dμ(y).
pub fn interaction_energy(mu: &EquilibriumMeasure) -> f64 {
    match &mu.density {
        Density::Semicircle { center, radius } => {
            let (c, r) = (*center, *radius);
            integrate_pieces(
                |x| log_potential(mu, x) * semicircle_density(c, r, x),
                &[c - r, c, c + r],
                QuadOptions::with_tol(1e-10),
            )
            .value
        }
        Density::Cells { edges, weights, .. } => {
            let n = weights.len();
            let mut acc = 0.0;
            for i in (0..n).filter(|&i| weights[i] > 0.0) {
                let hi = edges[i + 1] - edges[i];
                for j in (0..n).filter(|&j| weights[j] > 0.0) {
                    let hj = edges[j + 1] - edges[j];
                    acc += weights[i] * weights[j]
                        * cell_pair_energy(edges[i], edges[i + 1], edges[j], edges[j + 1])
                        / (hi * hj);
                }
            }
            acc
        }
    }
}

/// ∫ V dμ.
pub fn potential_energy(mu: &EquilibriumMeasure, v: &Potential) -> f64 {
    match &mu.density {
        Density::Semicircle { center, radius } => {
            let (c, r) = (*center, *radius);
            integrate_pieces(
                |x| v.eval(x) * semicircle_density(c, r, x),
                &[c - r, c, c + r],
                QuadOptions::with_tol(1e-12),
            )
            .value
        }
        Density::Cells { edges, weights, .. } => weights
            .iter()
            .zip(edges.windows(2))
            .map(|(w, e)| w * cell_potential_average(v, e[0], e[1]))
            .sum(),
    }
}

/// F(μ) = I(μ) + ∫ V dμ.
pub fn mean_field_energy(mu: &EquilibriumMeasure, v: &Potential) -> f64 {
    interaction_energy(mu) + potential_energy(mu, v)
}

/// α = ∫ m0 log(2π m0) dx.
pub fn alpha(mu: &EquilibriumMeasure) -> f64 {
    match &mu.density {
        Density::Semicircle { center, radius } => {
            let (c, r) = (*center, *radius);
            integrate_pieces(
                |x| {
                    let m = semicircle_density(c, r, x);
                    if m > 0.0 {
                        m * (2.0 * PI * m).ln()
                    } else {
                        0.0
                    }
                },
                &[c - r, c, c + r],
                QuadOptions::with_tol(1e-12),
            )
            .value
        }
        Density::Cells { edges, weights, .. } => weights
            .iter()
            .zip(edges.windows(2))
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, e)| w * (2.0 * PI * w / (e[1] - e[0])).ln())
            .sum(),
    }
}

/// Median of U^μ + V/2 over the interior 80% of the support.
pub fn robin_constant(mu: &EquilibriumMeasure, v: &Potential) -> f64 {
    let mut vals: Vec<f64> = mu
        .support_samples(0.8)
        .into_iter()
        .map(|x| log_potential(mu, x) + 0.5 * v.eval(x))
        .collect();
    if vals.is_empty() {
        return f64::NAN;
    }
    vals.sort_by(f64::total_cmp);
    let m = vals.len();
    if m % 2 == 1 {
        vals[m / 2]
    } else {
        0.5 * (vals[m / 2 - 1] + vals[m / 2])
    }
}

pub fn model_constants(mu: &EquilibriumMeasure, v: &Potential) -> ModelConstants {
    ModelConstants {
        c: robin_constant(mu, v),
        mean_field_energy: mean_field_energy(mu, v),
        alpha: alpha(mu),
    }
}

/// How far a measure is from the optimality condition
/// U^μ + V/2 = c on the support, ≥ c off it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    /// max |ζ| over support sample points.
    pub on_support: f64,
    /// min ζ over off-support sample points (should be ≥ −tol).
    pub off_support_min: f64,
}

pub fn stationarity(mu: &EquilibriumMeasure, v: &Potential, c: f64) -> Stationarity {
    let on = mu.support_samples(1.0);
    let on_support = on
        .iter()
        .map(|&x| zeta(mu, v, c, x).abs())
        .fold(0.0, f64::max);
    let [a, b] = mu.hull();
    let width = b - a;
    let off: Vec<f64> = match &mu.density {
        Density::Cells { nodes, weights, .. } => nodes
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w == 0.0)
            .map(|(x, _)| *x)
            .collect(),
        Density::Semicircle { .. } => (1..=20)
            .flat_map(|k| {
                let d = width * k as f64 / 20.0;
                [a - d, b + d]
            })
            .collect(),
    };
    let off_support_min = off
        .iter()
        .map(|&x| zeta(mu, v, c, x))
        .fold(f64::INFINITY, f64::min);
    Stationarity {
        on_support,
        off_support_min,
    }
}

fn project_simplex(y: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = y.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

/// Minimizes the discretized mean-field energy over probability vectors on
/// the cells of `grid`.
///
/// Accelerated projected gradient on the simplex identifies the support;
/// an active-set solve of the optimality system on that support then
/// drives the discrete stationarity residual below `tol`.
pub fn solve_equilibrium(
    v: &Potential,
    grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumMeasure> {
    if grid.len() < 3 {
        return Err(Error::domain("grid needs at least three nodes"));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("grid nodes must be finite and strictly increasing"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tol must be positive"));
    }
    let n = grid.len();
    let edges = cell_edges(grid);
    let kmat = interaction_matrix(&edges);
    let vbar = DVector::from_iterator(
        n,
        edges.windows(2).map(|e| cell_potential_average(v, e[0], e[1])),
    );

    // Lipschitz constant of the gradient 2Kw + v̄.
    let mut q = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda_max = 1.0;
    for _ in 0..50 {
        let z = &kmat * &q;
        lambda_max = z.norm();
        q = z / lambda_max;
    }
    let step = 1.0 / (2.0 * lambda_max * 1.05);

    let mut w = DVector::from_element(n, 1.0 / n as f64);
    let mut y = w.clone();
    let mut t = 1.0f64;
    let warm_iters = max_iter.min(400);
    for _ in 0..warm_iters {
        let g = 2.0 * (&kmat * &y) + &vbar;
        let w_next = project_simplex(&(&y - step * g));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &w_next + ((t - 1.0) / t_next) * (&w_next - &w);
        w = w_next;
        t = t_next;
    }

    let mut active: Vec<bool> = w.iter().map(|&x| x > 0.0).collect();
    let mut residual = f64::INFINITY;
    let mut iterations = warm_iters;
    while iterations < max_iter {
        iterations += 1;
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        if idx.is_empty() {
            return Err(Error::NoConvergence { iterations, residual });
        }
        let m = idx.len();
        let mut sys = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sys[(a, b)] = 2.0 * kmat[(i, j)];
            }
            sys[(a, m)] = -1.0;
            sys[(m, a)] = 1.0;
            rhs[a] = -vbar[i];
        }
        rhs[m] = 1.0;
        let sol = sys
            .lu()
            .solve(&rhs)
            .ok_or(Error::NoConvergence { iterations, residual })?;
        let lambda = sol[m];
        if sol.rows(0, m).iter().any(|&x| x <= 0.0) {
            for (a, &i) in idx.iter().enumerate() {
                if sol[a] <= 0.0 {
                    active[i] = false;
                }
            }
            continue;
        }
        w.fill(0.0);
        for (a, &i) in idx.iter().enumerate() {
            w[i] = sol[a];
        }
        let g = 2.0 * (&kmat * &w) + &vbar;
        // Violations in units of U + V/2, i.e. half the gradient.
        let mut worst_on: f64 = 0.0;
        let mut violators = Vec::new();
        for i in 0..n {
            let r = 0.5 * (g[i] - lambda);
            if active[i] {
                worst_on = worst_on.max(r.abs());
            } else if r < 0.0 {
                violators.push(i);
                worst_on = worst_on.max(-r);
            }
        }
        residual = worst_on;
        if violators.is_empty() || residual <= tol {
            break;
        }
        for i in violators {
            active[i] = true;
        }
    }
    if !(residual <= tol) {
        return Err(Error::NoConvergence { iterations, residual });
    }
    if w[0] > 0.0 || w[n - 1] > 0.0 {
        return Err(Error::Bracket(format!(
            "mass reaches the grid boundary [{}, {}]; widen the bracket",
            grid[0],
            grid[n - 1]
        )));
    }
    let total: f64 = w.iter().sum();
    let weights: Vec<f64> = w.iter().map(|x| x / total).collect();
    EquilibriumMeasure::from_cells(grid.to_vec(), weights)
}

/// Equispaced grid helper.
pub fn uniform_grid(a: f64, b: f64, nodes: usize) -> Vec<f64> {
    let h = (b - a) / (nodes - 1) as f64;
    (0..nodes).map(|k| a + h * k as f64).collect()
}

/// A potential together with its equilibrium measure and constants.
#[derive(Debug, Clone)]
pub struct Model {
    pub potential: Potential,
    pub measure: EquilibriumMeasure,
    pub constants: ModelConstants,
}

impl Model {
    /// Uses the closed-form semicircle for translates of the quadratic
    /// model and a grid solve otherwise.
    pub fn new(potential: Potential) -> Result<Self> {
        let measure = match potential.quadratic_center() {
            Some(center) => EquilibriumMeasure::semicircle(center, 2.0)?,
            None => {
                let mut half = (2.0 * potential.growth_check_radius).max(4.0);
                loop {
                    let grid = uniform_grid(-half, half, 1200);
                    match solve_equilibrium(&potential, &grid, 1e-10, 2000) {
                        Ok(mu) => break mu,
                        Err(Error::Bracket(_)) if half < 1e3 => half *= 2.0,
                        Err(e) => return Err(e),
                    }
                }
            }
        };
        let constants = model_constants(&measure, &potential);
        Ok(Model {
            potential,
            measure,
            constants,
        })
    }

    pub fn quadratic() -> Self {
        Model::new(Potential::quadratic()).expect("closed form")
    }
}

/// JSON layout of an equilibrium measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDocument {
    pub support: Vec<[f64; 2]>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub closed_form: Option<String>,
    pub constants: Option<ModelConstants>,
}

const MAX_DOCUMENT_NODES: usize = 1 << 20;

impl MeasureDocument {
    pub fn from_measure(mu: &EquilibriumMeasure, constants: Option<ModelConstants>) -> Self {
        let (nodes, weights) = match &mu.density {
            Density::Cells { nodes, weights, .. } => (nodes.clone(), weights.clone()),
            Density::Semicircle { .. } => {
                // Cell masses of the closed form on 200 cells.
                let [a, b] = mu.hull();
                let m = 200;
                let h = (b - a) / m as f64;
                let nodes: Vec<f64> = (0..m).map(|k| a + h * (k as f64 + 0.5)).collect();
                let weights = nodes
                    .iter()
                    .map(|x| mu.mass_in(x - 0.5 * h, x + 0.5 * h))
                    .collect();
                (nodes, weights)
            }
        };
        MeasureDocument {
            support: mu.support.clone(),
            nodes,
            weights,
            closed_form: mu.closed_form().map(str::to_owned),
            constants,
        }
    }

    pub fn into_measure(self) -> Result<EquilibriumMeasure> {
        let finite = |s: &[f64; 2]| s[0].is_finite() && s[1].is_finite() && s[1] > s[0];
        if !self.support.iter().all(finite) {
            return Err(Error::Parse("support intervals must be finite with a < b".into()));
        }
        if self.support.windows(2).any(|w| w[1][0] <= w[0][1]) {
            return Err(Error::Parse("support intervals must be sorted and disjoint".into()));
        }
        match self.closed_form.as_deref() {
            Some("semicircle") => {
                let [s] = self.support.as_slice() else {
                    return Err(Error::Parse("semicircle support must be a single interval".into()));
                };
                EquilibriumMeasure::semicircle(0.5 * (s[0] + s[1]), 0.5 * (s[1] - s[0]))
                    .map_err(|e| Error::Parse(e.to_string()))
            }
            Some(other) => Err(Error::Parse(format!("unknown closed form '{other}'"))),
            None => {
                if self.nodes.len() > MAX_DOCUMENT_NODES {
                    return Err(Error::Parse("too many nodes".into()));
                }
                let mu = EquilibriumMeasure::from_cells(self.nodes, self.weights)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                if (mu.total_mass - 1.0).abs() > 1e-8 {
                    return Err(Error::Parse(format!(
                        "weights sum to {} instead of 1",
                        mu.total_mass
                    )));
                }
                if let Density::Cells { edges, .. } = &mu.density {
                    let slack = edges.windows(2).map(|e| e[1] - e[0]).fold(0.0, f64::max);
                    let covered = |s: &[f64; 2]| {
                        self.support
                            .iter()
                            .any(|t| t[0] - slack <= s[0] && s[1] <= t[1] + slack)
                    };
                    if !mu.support.iter().all(covered) {
                        return Err(Error::Parse(
                            "positive weights lie outside the declared support".into(),
                        ));
                    }
                }
                Ok(mu)
            }
        }
    }
}

/// Parses an equilibrium-measure JSON document. Never panics.
pub fn measure_from_json(text: &str) -> Result<(EquilibriumMeasure, Option<ModelConstants>)> {
    let doc: MeasureDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let constants = doc.constants;
    Ok((doc.into_measure()?, constants))
}

pub fn measure_to_json(mu: &EquilibriumMeasure, constants: Option<ModelConstants>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeasureDocument::from_measure(mu, constants))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_density_values() {
        let mu = semicircle_equilibrium();
        assert!((mu.density_at(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(mu.density_at(2.0), 0.0);
        assert_eq!(mu.density_at(-2.0), 0.0);
        assert_eq!(mu.density_at(3.0), 0.0);
        assert!((mu.cdf(2.0) - 1.0).abs() < 1e-15);
        assert!((mu.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((mu.quantile(0.5)).abs() < 1e-12);
        assert!((mu.density_bound() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn semicircle_log_potential_by_quadrature() {
        let mu = semicircle_equilibrium();
        for x in [-3.5, -2.0, -1.3, 0.0, 0.4, 1.0, 2.0, 2.5, 7.0] {
            let u = log_potential(&mu, x);
            assert!((u - semicircle_log_potential(x)).abs() < 1e-9, "x={x}: {u}");
        }
        assert!((log_potential(&mu, 0.0) - 0.5).abs() < 1e-10);
        assert!((log_potential(&mu, 2.0) + 0.5).abs() < 1e-10);
    }

    #[test]
    fn far_field_is_minus_log() {
        let mu = semicircle_equilibrium();
        assert!((log_potential(&mu, 1e6) + 1e6f64.ln()).abs() < 1e-5);
        let cells = EquilibriumMeasure::from_cells(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert!((log_potential(&cells, 1e6) + 1e6f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn zeta_closed_form_outside_support() {
        let mu = semicircle_equilibrium();
        let v = Potential::quadratic();
        let closed = |x: f64| {
            let s = (x * x - 4.0).sqrt();
            x * s / 4.0 - ((x + s) / 2.0).ln()
        };
        assert!(zeta(&mu, &v, 0.5, 1.0).abs() < 1e-9);
        assert!(zeta(&mu, &v, 0.5, 2.0).abs() < 1e-9);
        let z3 = zeta(&mu, &v, 0.5, 3.0);
        assert!((z3 - closed(3.0)).abs() < 1e-9);
        assert!((z3 - 0.7147).abs() < 1e-4);
        assert_eq!(zeta_clamped(&mu, &v, 0.5, 1.0), 0.0);
    }

    #[test]
    fn semicircle_constants() {
        let mu = semicircle_equilibrium();
        let v = Potential::quadratic();
        let k = model_constants(&mu, &v);
        assert!((k.c - 0.5).abs() < 1e-9);
        assert!((k.mean_field_energy - 0.75).abs() < 1e-8);
        assert!((k.alpha - 0.5).abs() < 1e-9);
        // c = F(μ0) − ½∫V dμ0
        let half_v = 0.5 * potential_energy(&mu, &v);
        assert!((half_v - 0.25).abs() < 1e-12);
        assert!((k.c - (k.mean_field_energy - half_v)).abs() < 1e-6);
    }

    #[test]
    fn alpha_of_constant_densities() {
        // constant density m on an interval of length 1/m
        for m in [0.25, 1.0 / (2.0 * PI), 3.0] {
            let len = 1.0 / m;
            // cell midpoints, so that the Voronoi cells tile [0, len]
            let nodes: Vec<f64> = (0..5).map(|k| (k as f64 + 0.5) * len / 5.0).collect();
            let mu = EquilibriumMeasure::from_cells(nodes, vec![0.2; 5]).unwrap();
            assert!((alpha(&mu) - (2.0 * PI * m).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_energy_translation_invariant() {
        let nodes: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let w = vec![0.1; 10];
        let a = EquilibriumMeasure::from_cells(nodes.clone(), w.clone()).unwrap();
        let b = EquilibriumMeasure::from_cells(nodes.iter().map(|x| x + 3.7).collect(), w).unwrap();
        let ea = interaction_energy(&a);
        let eb = interaction_energy(&b);
        assert!((ea - eb).abs() < 1e-10);
    }

    #[test]
    fn narrow_density_has_large_energy() {
        let v = Potential::quadratic();
        let narrow = EquilibriumMeasure::from_cells(uniform_grid(-1e-4, 1e-4, 11), vec![1.0 / 11.0; 11]).unwrap();
        assert!(mean_field_energy(&narrow, &v) > 8.0);
    }

    #[test]
    fn cell_pair_energy_matches_self_energy() {
        let h = 0.01;
        let e = cell_pair_energy(0.0, h, 0.0, h) / (h * h);
        assert!((e - (1.5 - h.ln())).abs() < 1e-10);
    }

    #[test]
    fn solver_bracket_error() {
        let v = Potential::quadratic();
        let grid = uniform_grid(-0.5, 0.5, 200);
        match solve_equilibrium(&v, &grid, 1e-8, 500) {
            Err(Error::Bracket(_)) => {}
            other => panic!("expected bracket error, got {other:?}"),
        }
    }

    #[test]
    fn solver_translation_covariance() {
        let v = Potential::quadratic().shifted(5.0).unwrap();
        let grid = uniform_grid(2.0, 8.0, 400);
        let mu = solve_equilibrium(&v, &grid, 1e-9, 1000).unwrap();
        let [a, b] = mu.hull();
        assert!((0.5 * (a + b) - 5.0).abs() < 0.02);
        assert!((b - a - 4.0).abs() < 0.05);
    }

    #[test]
    fn solver_rejects_bad_input() {
        let v = Potential::quadratic();
        assert!(solve_equilibrium(&v, &[0.0, 1.0], 1e-8, 10).is_err());
        assert!(solve_equilibrium(&v, &[0.0, 2.0, 1.0], 1e-8, 10).is_err());
        assert!(solve_equilibrium(&v, &uniform_grid(-3.0, 3.0, 10), 0.0, 10).is_err());
    }

    #[test]
    fn document_roundtrip() {
        let mu = semicircle_equilibrium();
        let text = measure_to_json(&mu, Some(ModelConstants { c: 0.5, mean_field_energy: 0.75, alpha: 0.5 })).unwrap();
        assert!(text.contains("\"F\""));
        let (back, k) = measure_from_json(&text).unwrap();
        assert_eq!(back, mu);
        assert_eq!(k.unwrap().mean_field_energy, 0.75);

        let cells = EquilibriumMeasure::from_cells(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let (back, _) = measure_from_json(&measure_to_json(&cells, None).unwrap()).unwrap();
        assert_eq!(back, cells);
    }

    #[test]
    fn document_rejects_garbage() {
        for bad in [
            "",
            "{}",
            r#"{"support":[[0,1]],"nodes":[],"weights":[],"closed_form":"hexagon","constants":null}"#,
            r#"{"support":[[1,0]],"nodes":[],"weights":[],"closed_form":"semicircle","constants":null}"#,
            r#"{"support":[[0,1]],"nodes":[0,1],"weights":[0.5,0.6],"closed_form":null,"constants":null}"#,
            r#"{"support":[[0,1]],"nodes":[0,1],"weights":[0.5],"closed_form":null,"constants":null}"#,
            r#"{"support":[[5,6]],"nodes":[0,1],"weights":[0.5,0.5],"closed_form":null,"constants":null}"#,
        ] {
            assert!(measure_from_json(bad).is_err(), "{bad}");
        }
    }
}
