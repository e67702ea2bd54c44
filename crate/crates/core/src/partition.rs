//! Log-partition functions
//!
//! Z_n^β = ∫ exp(−(β/2) w_n(x)) dx
//!
//! exactly for V = x²/2 (Mehta's integral), by nested adaptive quadrature
//! for n ≤ 3, and by thermodynamic integration from the quadratic model
//! otherwise. Everything is kept in the log domain.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fekete::{minimize_in, FeketeOptions};
use crate::model::{Model, ModelConstants};
use crate::potential::Potential;
use crate::quadrature::{gauss_legendre, integrate_pieces, QuadOptions};
use crate::sampler::{run_with_model, Probe, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactQuadratic,
    Quadrature,
    Thermo,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-quadratic" => Ok(Method::ExactQuadratic),
            "quadrature" => Ok(Method::Quadrature),
            "thermo" => Ok(Method::Thermo),
            other => Err(Error::Parse(format!(
                "unknown method '{other}' (expected exact-quadratic, quadrature or thermo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub n: usize,
    pub beta: f64,
    pub log_z: f64,
    pub method: Method,
    /// (log Z + (β/2) n² F − (β/2) n log n) / (n β)
    pub next_order: f64,
    pub error_bar: f64,
    pub flagged: bool,
}

fn check_args(n: usize, beta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain("beta must be positive"));
    }
    Ok(())
}

/// Exact log Z for V = x²/2. With x = s·t, s = √(2/(βn)), the integral
/// becomes Mehta's (2π)^{n/2} Π_{j=1}^n Γ(1 + jγ)/Γ(1 + γ), γ = β/2,
/// times the Jacobian s^{n + βn(n−1)/2}.
pub fn mehta_log_z(n: usize, beta: f64) -> Result<f64> {
    check_args(n, beta)?;
    let nf = n as f64;
    let gamma = 0.5 * beta;
    let lg1 = ln_gamma(1.0 + gamma);
    let mehta: f64 = 0.5 * nf * (2.0 * std::f64::consts::PI).ln()
        + (1..=n).map(|j| ln_gamma(1.0 + j as f64 * gamma) - lg1).sum::<f64>();
    let log_s = 0.5 * (2.0 / (beta * nf)).ln();
    Ok(mehta + (nf + beta * nf * (nf - 1.0) / 2.0) * log_s)
}

fn w_small(x: &[f64], v: &Potential) -> f64 {
    let n = x.len() as f64;
    let mut w = 0.0;
    for i in 0..x.len() {
        w += n * v.eval(x[i]);
        for j in i + 1..x.len() {
            w -= 2.0 * (x[j] - x[i]).abs().ln();
        }
    }
    w
}

/// Breakpoints clustering around a peak at `c` of width `sigma`, clipped
/// to [lo, hi].
fn breaks_around(lo: f64, hi: f64, c: f64, sigma: f64) -> Vec<f64> {
    let mut b = vec![lo, hi];
    for k in [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0] {
        let t = c + k * sigma;
        if t > lo && t < hi {
            b.push(t);
        }
    }
    b.sort_by(f64::total_cmp);
    b
}

/// ∫ over ordered configurations in a box of half-width `l`, scaled by
/// exp((β/2) w_min); coordinates are the leftmost point and the gaps.
fn ordered_integral(
    n: usize,
    beta: f64,
    v: &Potential,
    fekete: &[f64],
    w_min: f64,
    l: f64,
    ok: &Cell<bool>,
) -> f64 {
    let sigma = 1.0 / (beta * n as f64).sqrt();
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_intervals: 2000,
    };
    let density = |x: &[f64]| (-0.5 * beta * (w_small(x, v) - w_min)).exp();
    let outer = breaks_around(-l, l, fekete[0], sigma);
    let note = |r: crate::quadrature::QuadResult| {
        if !r.converged {
            ok.set(false);
        }
        r.value
    };
    match n {
        1 => note(integrate_pieces(|a| density(&[a]), &outer, opts)),
        2 => {
            let inner = breaks_around(0.0, 2.0 * l, fekete[1] - fekete[0], sigma);
            note(integrate_pieces(
                |a| note(integrate_pieces(|u| density(&[a, a + u]), &inner, opts)),
                &outer,
                opts,
            ))
        }
        3 => {
            let bu = breaks_around(0.0, 2.0 * l, fekete[1] - fekete[0], sigma);
            let bv = breaks_around(0.0, 2.0 * l, fekete[2] - fekete[1], sigma);
            note(integrate_pieces(
                |a| {
                    note(integrate_pieces(
                        |u| {
                            note(integrate_pieces(
                                |w| density(&[a, a + u, a + u + w]),
                                &bv,
                                opts,
                            ))
                        },
                        &bu,
                        opts,
                    ))
                },
                &outer,
                opts,
            ))
        }
        _ => unreachable!("checked by caller"),
    }
}

/// log Z by nested adaptive Gauss–Kronrod over ordered configurations
/// (times n!), for n ≤ 3. The box doubles until the result is stable to
/// 1e-9 relative; more than five doublings is an error.
pub fn quadrature_log_z(n: usize, beta: f64, v: &Potential) -> Result<f64> {
    check_args(n, beta)?;
    if n > 3 {
        return Err(Error::domain("tensor quadrature supports n ≤ 3"));
    }
    let model = Model::new(v.clone())?;
    let fekete = minimize_in(&model, n, &FeketeOptions::default())?;
    let x = fekete.config.points();
    let w_min = w_small(x, v);
    let [h0, h1] = model.measure.hull();
    let mut l = 2.0 * h0.abs().max(h1.abs()).max(v.growth_check_radius) + 1.0;
    let ok = Cell::new(true);
    let mut prev = ordered_integral(n, beta, v, x, w_min, l, &ok);
    for _ in 0..5 {
        l *= 2.0;
        let next = ordered_integral(n, beta, v, x, w_min, l, &ok);
        if (next - prev).abs() <= 1e-9 * next.abs() {
            if !ok.get() {
                return Err(Error::Quadrature("inner integral did not converge".into()));
            }
            let factorial: f64 = (1..=n).map(|k| k as f64).product();
            return Ok(next.ln() + factorial.ln() - 0.5 * beta * w_min);
        }
        prev = next;
    }
    Err(Error::Quadrature(
        "integration box still growing after 5 doublings".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoEstimate {
    pub log_z: f64,
    pub error_bar: f64,
    pub flagged: bool,
}

/// log Z(V) = log Z(x²/2) + ∫₀¹ ⟨−(βn/2) Σ_i (V − x²/2)(x_i)⟩_t dt along
/// V_t = (1 − t) x²/2 + t V, with a `grid`-point Gauss–Legendre rule in t.
/// Only n, β, V of `sampler` are overridden; its run lengths, seed and
/// chain count are used for every node.
pub fn thermo_log_z(
    n: usize,
    beta: f64,
    v: &Potential,
    sampler: &SamplerConfig,
    grid: usize,
) -> Result<ThermoEstimate> {
    check_args(n, beta)?;
    if grid == 0 {
        return Err(Error::domain("grid must be at least 1"));
    }
    let base = mehta_log_z(n, beta)?;
    let quadratic = Potential::quadratic();
    let (nodes, weights) = gauss_legendre(grid);
    let probe = Probe {
        plus: v.clone(),
        minus: quadratic.clone(),
    };
    let terms: Vec<(f64, f64, bool)> = nodes
        .par_iter()
        .zip(weights.par_iter())
        .map(|(&s, &wt)| -> Result<(f64, f64, bool)> {
            let t = 0.5 * (1.0 + s);
            let vt = quadratic.blend(v, t)?;
            let model = Model::new(vt.clone())?;
            let mut cfg = sampler.clone();
            cfg.n = n;
            cfg.beta = beta;
            cfg.potential = vt;
            cfg.probe = Some(probe.clone());
            let stats = run_with_model(&cfg, &model)?;
            let p = stats.probe.expect("probe requested");
            let scale = 0.5 * wt * 0.5 * beta * n as f64;
            Ok((-scale * p.mean, scale * p.std_error, stats.flagged))
        })
        .collect::<Result<_>>()?;
    let integral: f64 = terms.iter().map(|t| t.0).sum();
    let var: f64 = terms.iter().map(|t| t.1 * t.1).sum();
    Ok(ThermoEstimate {
        log_z: base + integral,
        error_bar: var.sqrt(),
        flagged: terms.iter().any(|t| t.2),
    })
}

pub fn next_order(n: usize, beta: f64, consts: &ModelConstants, log_z: f64) -> f64 {
    let nf = n as f64;
    (log_z + 0.5 * beta * nf * nf * consts.mean_field_energy - 0.5 * beta * nf * nf.ln())
        / (nf * beta)
}

pub fn next_order_report(
    n: usize,
    beta: f64,
    consts: &ModelConstants,
    log_z: f64,
    method: Method,
    error_bar: f64,
) -> PartitionReport {
    PartitionReport {
        n,
        beta,
        log_z,
        method,
        next_order: next_order(n, beta, consts, log_z),
        error_bar: error_bar / (n as f64 * beta),
        flagged: false,
    }
}

/// Picks exact-quadratic for x²/2, quadrature for n ≤ 3, thermodynamic
/// integration otherwise, unless `method` is given.
pub fn partition(
    model: &Model,
    n: usize,
    beta: f64,
    method: Option<Method>,
    sampler: &SamplerConfig,
) -> Result<PartitionReport> {
    check_args(n, beta)?;
    let v = &model.potential;
    let method = method.unwrap_or(if v.is_canonical_quadratic() {
        Method::ExactQuadratic
    } else if n <= 3 {
        Method::Quadrature
    } else {
        Method::Thermo
    });
    let consts = &model.constants;
    match method {
        Method::ExactQuadratic => {
            if !v.is_canonical_quadratic() {
                return Err(Error::domain(
                    "exact-quadratic requires the canonical potential x²/2",
                ));
            }
            Ok(next_order_report(n, beta, consts, mehta_log_z(n, beta)?, method, 0.0))
        }
        Method::Quadrature => Ok(next_order_report(
            n,
            beta,
            consts,
            quadrature_log_z(n, beta, v)?,
            method,
            0.0,
        )),
        Method::Thermo => {
            let est = thermo_log_z(n, beta, v, sampler, 16)?;
            let mut r = next_order_report(n, beta, consts, est.log_z, method, est.error_bar);
            r.flagged = est.flagged;
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_particle_is_gaussian() {
        for beta in [0.5, 1.0, 2.0, 7.0] {
            let exact = (2.0 * (PI / beta).sqrt()).ln();
            assert!((mehta_log_z(1, beta).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn two_particles_at_beta_two() {
        assert!((mehta_log_z(2, 2.0).unwrap() - PI.ln()).abs() < 1e-12);
        // closed form for two particles at general β
        let beta: f64 = 3.0;
        let z2 = 0.5 * beta * 2f64.ln()
            + 0.5 * (2.0 * PI / beta).ln()
            + 0.5 * (beta + 1.0) * (2.0 / beta).ln()
            + ln_gamma(0.5 * (beta + 1.0));
        assert!((mehta_log_z(2, beta).unwrap() - z2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(mehta_log_z(0, 1.0).is_err());
        assert!(mehta_log_z(2, 0.0).is_err());
        assert!(quadrature_log_z(4, 1.0, &Potential::quadratic()).is_err());
        assert!("exact".parse::<Method>().is_err());
    }

    #[test]
    fn quadrature_matches_mehta_for_one_and_two() {
        let v = Potential::quadratic();
        for (n, beta) in [(1, 1.0), (2, 2.0), (2, 0.5)] {
            let q = quadrature_log_z(n, beta, &v).unwrap();
            let m = mehta_log_z(n, beta).unwrap();
            assert!(((q - m) / m).abs() < 1e-6, "n={n} beta={beta}: {q} vs {m}");
        }
    }

    #[test]
    fn single_particle_next_order_limit() {
        let consts = Model::quadratic().constants;
        let beta = 1e8;
        let r = next_order(1, beta, &consts, mehta_log_z(1, beta).unwrap());
        assert!((r - 0.375).abs() < 1e-6);
    }

    #[test]
    fn exact_method_requires_quadratic() {
        let model = Model::new(Potential::quartic()).unwrap();
        let cfg = SamplerConfig::new(2, 1.0, Potential::quartic());
        assert!(partition(&model, 2, 1.0, Some(Method::ExactQuadratic), &cfg).is_err());
    }
}
