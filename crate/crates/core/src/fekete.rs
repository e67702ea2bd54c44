//! Weighted Fekete sets: minimizers of w_n.
//!
//! Each start runs steepest descent with Armijo backtracking until the
//! gradient is small, then damped Newton on the dense Hessian. Step
//! acceptance uses `energy_change`, so decreases far below the size of
//! w_n itself are still resolved. Starts are independent and run in
//! parallel; the result does not depend on the thread count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    breakdown, energy, energy_change, gradient, hessian, Configuration, EnergyBreakdown,
};
use crate::model::{EquilibriumMeasure, Model};
use crate::potential::Potential;

#[derive(Debug, Clone)]
pub struct FeketeOptions {
    pub seed: u64,
    /// Convergence when max_i |∂_i w_n| ≤ tol · n.
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    /// Newton takes over once max_i |∂_i w_n| < newton_switch · n.
    pub newton_switch: f64,
}

impl Default for FeketeOptions {
    fn default() -> Self {
        FeketeOptions {
            seed: 0,
            tol: 1e-10,
            max_iter: 10_000,
            starts: 3,
            newton_switch: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeketeResult {
    pub config: Configuration,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub breakdown: EnergyBreakdown,
    /// Accepted energy changes, in order; all negative.
    #[serde(skip)]
    pub decrements: Vec<f64>,
    /// Index of the winning start.
    pub start: usize,
}

struct RunOutcome {
    points: Vec<f64>,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    energy: f64,
    decrements: Vec<f64>,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn is_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0]) && x.iter().all(|v| v.is_finite())
}

/// Quantiles of μ0 (or of a standard Gaussian) at (k + ½)/n, each moved by
/// up to a quarter of the local gap.
pub fn initial_points(n: usize, measure: Option<&EquilibriumMeasure>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gaussian = Normal::new(0.0, 1.0).expect("unit normal");
    let base: Vec<f64> = (0..n)
        .map(|k| {
            let p = (k as f64 + 0.5) / n as f64;
            match measure {
                Some(mu) => mu.quantile(p),
                None => gaussian.inverse_cdf(p),
            }
        })
        .collect();
    let mut out = base.clone();
    for k in 0..n {
        let left = if k > 0 { base[k] - base[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < n { base[k + 1] - base[k] } else { f64::INFINITY };
        let gap = left.min(right);
        if gap.is_finite() {
            out[k] += 0.25 * gap * rng.random_range(-1.0..1.0);
        }
    }
    out
}

fn newton_direction(h: DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let rhs = -DVector::from_column_slice(g);
    let scale = (0..n).fold(0.0f64, |m, i| m.max(h[(i, i)].abs())).max(1.0);
    let mut lambda = 0.0;
    for _ in 0..30 {
        let shifted = &h + DMatrix::identity(n, n) * lambda;
        if let Some(chol) = shifted.cholesky() {
            return Some(chol.solve(&rhs).iter().copied().collect());
        }
        lambda = if lambda == 0.0 { 1e-10 * scale } else { lambda * 10.0 };
    }
    None
}

fn run_start(v: &Potential, mut x: Vec<f64>, opts: &FeketeOptions) -> RunOutcome {
    let n = x.len();
    let nf = n as f64;
    let mut decrements = Vec::new();
    let mut g = gradient(&Configuration::new(x.clone()).expect("ordered start"), v);
    let mut gn = sup_norm(&g);
    let mut descent_step = f64::NAN;
    let mut iterations = 0;
    while iterations < opts.max_iter && gn > opts.tol * nf {
        iterations += 1;
        let config = Configuration::new(x.clone()).expect("ordered iterate");
        let newton = gn < opts.newton_switch * nf;
        let direction = if newton {
            newton_direction(hessian(&config, v), &g)
        } else {
            None
        };
        let descent = direction.is_none();
        let (d, mut step) = match direction {
            Some(d) => (d, 1.0),
            None => {
                if !descent_step.is_finite() {
                    let gap = x.windows(2).map(|w| w[1] - w[0]).fold(1.0, f64::min);
                    descent_step = 0.1 * gap / gn;
                }
                (g.iter().map(|gi| -gi).collect::<Vec<f64>>(), descent_step)
            }
        };
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if is_increasing(&y) {
                let de = energy_change(&x, &y, v);
                if de < 0.0 && de <= 1e-4 * step * slope {
                    accepted = Some((y, de));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((y, de)) = accepted else { break };
        if descent {
            descent_step = 2.0 * step;
        }
        decrements.push(de);
        x = y;
        g = gradient(&Configuration::new(x.clone()).expect("ordered iterate"), v);
        gn = sup_norm(&g);
    }
    let e = energy(&Configuration::new(x.clone()).expect("ordered iterate"), v);
    RunOutcome {
        points: x,
        grad_norm: gn,
        iterations,
        converged: gn <= opts.tol * nf,
        energy: e,
        decrements,
    }
}

/// Minimizes w_n from `opts.starts` seeded starts and returns the lowest
/// energy, breaking near-ties by the smaller gradient.
pub fn minimize_in(model: &Model, n: usize, opts: &FeketeOptions) -> Result<FeketeResult> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(opts.tol > 0.0) || opts.starts == 0 {
        return Err(Error::domain("tol must be positive and starts at least 1"));
    }
    let v = &model.potential;
    let runs: Vec<RunOutcome> = (0..opts.starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let start = initial_points(n, Some(&model.measure), &mut rng);
            run_start(v, start, opts)
        })
        .collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate().skip(1) {
        let b = &runs[best];
        let tie = (r.energy - b.energy).abs() <= 1e-12 * b.energy.abs().max(1.0);
        if (!tie && r.energy < b.energy) || (tie && r.grad_norm < b.grad_norm) {
            best = k;
        }
    }
    let r = runs.into_iter().nth(best).expect("at least one start");
    let config = Configuration::new(r.points)?;
    let bd = breakdown(&config, v, &model.measure, &model.constants);
    Ok(FeketeResult {
        config,
        grad_norm: r.grad_norm,
        iterations: r.iterations,
        converged: r.converged,
        breakdown: bd,
        decrements: r.decrements,
        start: best,
    })
}

pub fn minimize(n: usize, v: &Potential, seed: u64, tol: f64, max_iter: usize) -> Result<FeketeResult> {
    let model = Model::new(v.clone())?;
    let opts = FeketeOptions {
        seed,
        tol,
        max_iter,
        ..FeketeOptions::default()
    };
    minimize_in(&model, n, &opts)
}

/// √(2/n) times the zeros of the physicists' Hermite polynomial H_n, the
/// exact Fekete set of V = x²/2.
///
/// Starting values are the eigenvalues of the Jacobi matrix of the
/// recurrence (off-diagonal √(k/2)); each is then polished by Newton
/// iteration on the orthonormal recurrence without the Gaussian factor.
pub fn hermite_oracle(n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut roots = Vec::with_capacity(n);
    for (i, &z0) in guesses.iter().enumerate() {
        let gap = [i.checked_sub(1).map(|j| z0 - guesses[j]), guesses.get(i + 1).map(|z| z - z0)]
            .into_iter()
            .flatten()
            .fold(1.0, f64::min);
        let mut z = z0;
        let mut converged = false;
        for _ in 0..20 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            let dz = p1 / ((2.0 * nf).sqrt() * p2);
            if !dz.is_finite() || (z - dz - z0).abs() > 0.25 * gap {
                break;
            }
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                iterations: 20,
                residual: z - z0,
            });
        }
        roots.push(z);
    }
    // enforce the exact reflection symmetry
    let scale = (2.0 / nf).sqrt();
    let points: Vec<f64> = (0..n)
        .map(|i| {
            if 2 * i + 1 == n {
                0.0
            } else {
                0.5 * scale * (roots[i] - roots[n - 1 - i])
            }
        })
        .collect();
    Configuration::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn oracle_small_cases() {
        assert_eq!(hermite_oracle(1).unwrap().points(), &[0.0]);
        let p = hermite_oracle(2).unwrap();
        assert!((p.points()[0] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.points()[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        // H_3 = 8y³ − 12y: zeros 0, ±√(3/2), scaled by √(2/3)
        let p = hermite_oracle(3).unwrap();
        assert!((p.points()[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_is_stationary() {
        let v = Potential::quadratic();
        for n in [4, 8, 32, 128, 512] {
            let c = hermite_oracle(n).unwrap();
            let g = sup_norm(&gradient(&c, &v));
            assert!(g <= 1e-9 * n as f64, "n={n}: {g}");
        }
    }

    #[test]
    fn minimize_small_cases() {
        let v = Potential::quadratic();
        let r = minimize(1, &v, 3, 1e-12, 1000).unwrap();
        assert!(r.converged);
        assert!(r.config.points()[0].abs() < 1e-12);
        let r = minimize(2, &v, 3, 1e-12, 1000).unwrap();
        assert!(r.converged);
        assert!((r.config.points()[1] - FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((r.config.points()[0] + FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn minimize_matches_oracle_at_16() {
        let r = minimize(16, &Potential::quadratic(), 11, 1e-11, 10_000).unwrap();
        let o = hermite_oracle(16).unwrap();
        let err = r
            .config
            .points()
            .iter()
            .zip(o.points())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
        assert!(r.decrements.iter().all(|&d| d < 0.0));
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = minimize(32, &Potential::quadratic(), 0, 1e-12, 2).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(r.grad_norm > 0.0);
    }

    #[test]
    fn double_well_is_ordered_and_stationary() {
        let r = minimize(24, &Potential::double_well(), 5, 1e-9, 10_000).unwrap();
        assert!(r.converged);
        assert!(r.config.points().windows(2).all(|w| w[1] > w[0]));
    }
}
