//! The cross-check suite: one function per acceptance check, shared by the
//! `verify` subcommand and the acceptance tests.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fekete::{hermite_oracle, minimize_in, FeketeOptions};
use crate::field::{make_field, w_quadrature, QuadratureParams};
use crate::hamiltonian::{energy_change, gradient, Configuration};
use crate::model::{semicircle_equilibrium, solve_equilibrium, stationarity, uniform_grid, Model};
use crate::partition::{mehta_log_z, next_order, quadrature_log_z};
use crate::potential::Potential;
use crate::quadrature::{integrate, QuadOptions};
use crate::renorm::{periodic_w, PeriodicConfig};
use crate::sampler::{run_with_model, SamplerConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    /// Numerical check and runtime limit both met.
    pub passed: bool,
    pub numerics_passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.2} s, limit {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }
}

fn outcome(
    id: usize,
    title: &'static str,
    limit_secs: u64,
    start: Instant,
    ok: bool,
    detail: String,
) -> Outcome {
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_secs);
    Outcome {
        id,
        title,
        passed: ok && elapsed <= limit,
        numerics_passed: ok,
        detail,
        elapsed,
        limit,
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn lattice_value() -> f64 {
    -PI * (2.0 * PI).ln()
}

/// Uniform points on [0, N), redrawn until neighbours on the circle are at
/// least `min_gap` apart.
pub fn random_periodic(rng: &mut ChaCha8Rng, period: usize, min_gap: f64) -> PeriodicConfig {
    loop {
        let pts: Vec<f64> = (0..period).map(|_| rng.random_range(0.0..period as f64)).collect();
        if let Ok(c) = PeriodicConfig::from_unsorted(period, &pts) {
            if c.min_gap() >= min_gap {
                return c;
            }
        }
    }
}

/// The field checks use the lattices N ∈ {1, 2, 8} and 20 seeded random
/// configurations with N ≤ 16.
pub fn field_test_configs() -> Vec<PeriodicConfig> {
    let mut out: Vec<PeriodicConfig> = [1, 2, 8]
        .iter()
        .map(|&n| PeriodicConfig::lattice(n).expect("lattice"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let n = rng.random_range(1..=16);
        out.push(random_periodic(&mut rng, n, 0.05));
    }
    out
}

pub fn lattice_value_check() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for n in 1..=64 {
        let w = PeriodicConfig::lattice(n).and_then(|c| periodic_w(&c));
        worst = worst.max(w.map_or(f64::INFINITY, |w| (w - lattice_value()).abs()));
    }
    outcome(
        1,
        "lattice value",
        1,
        t,
        worst <= 1e-12,
        format!("max over N=1..64 of |W − (−π log 2π)| = {worst:.1e} (tol 1e-12)"),
    )
}

pub fn lattice_optimality_check() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let floor = lattice_value() - 1e-12;
    let mut below = 0;
    let mut min_w = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=16);
        let c = random_periodic(&mut rng, n, 1e-9);
        let w = periodic_w(&c).unwrap_or(f64::INFINITY);
        min_w = min_w.min(w);
        if w < floor {
            below += 1;
        }
    }
    let mut not_increased = 0;
    let mut min_gain = f64::INFINITY;
    for _ in 0..200 {
        let n = rng.random_range(2..=32);
        let pts: Vec<f64> = (0..n)
            .map(|k| k as f64 + 1e-2 * rng.random_range(-1.0..1.0))
            .collect();
        let c = PeriodicConfig::from_unsorted(n, &pts).expect("perturbed lattice");
        let w = periodic_w(&c).unwrap_or(f64::NEG_INFINITY);
        let lattice = periodic_w(&PeriodicConfig::lattice(n).expect("lattice")).expect("lattice");
        min_gain = min_gain.min(w - lattice);
        if w <= lattice {
            not_increased += 1;
        }
    }
    outcome(
        2,
        "lattice optimality",
        10,
        t,
        below == 0 && not_increased == 0,
        format!(
            "1000 random configs: {below} below the lattice (min W = {min_w:.4}); \
             200 perturbations of size 1e-2: {not_increased} not increasing (min gain {min_gain:.2e})"
        ),
    )
}

pub fn field_quadrature_check() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for c in field_test_configs() {
        let params = QuadratureParams {
            y_cut: (c.period() as f64).max(6.0),
            ..QuadratureParams::default()
        };
        let rel = match (periodic_w(&c), w_quadrature(&make_field(&c), params)) {
            (Ok(w), Ok(q)) => ((q - w) / w).abs(),
            _ => f64::INFINITY,
        };
        worst = worst.max(rel);
        if !(rel <= 1e-2) {
            failures += 1;
        }
    }
    outcome(
        3,
        "field quadrature vs closed form",
        300,
        t,
        failures == 0,
        format!("23 configs, max relative error {worst:.2e} (tol 1e-2), {failures} failures"),
    )
}

pub fn fekete_oracle_check() -> Outcome {
    let t = Instant::now();
    let model = Model::quadratic();
    let v = &model.potential;
    let opts = FeketeOptions {
        seed: 4,
        tol: 1e-11,
        ..FeketeOptions::default()
    };
    let mut worst_pos = 0.0f64;
    let mut worst_grad = 0.0f64;
    let mut ok = true;
    for n in 2..=64 {
        let (Ok(r), Ok(o)) = (minimize_in(&model, n, &opts), hermite_oracle(n)) else {
            ok = false;
            continue;
        };
        let d = sup_diff(r.config.points(), o.points());
        let g = gradient(&o, v).iter().fold(0.0f64, |m, x| m.max(x.abs())) / n as f64;
        worst_pos = worst_pos.max(d);
        worst_grad = worst_grad.max(g);
        ok &= d <= 1e-8 && g <= 1e-9;
    }
    outcome(
        4,
        "Fekete points vs Hermite oracle",
        60,
        t,
        ok,
        format!(
            "n=2..64: max position error {worst_pos:.1e} (tol 1e-8), \
             max oracle gradient / n {worst_grad:.1e} (tol 1e-9)"
        ),
    )
}

/// f_n at the Fekete sets for n = 16, 32, …, 256.
pub fn fekete_next_order_values() -> Result<Vec<(usize, f64)>> {
    let model = Model::quadratic();
    let opts = FeketeOptions {
        seed: 5,
        tol: 1e-10,
        ..FeketeOptions::default()
    };
    [16, 32, 64, 128, 256]
        .iter()
        .map(|&n| Ok((n, minimize_in(&model, n, &opts)?.breakdown.f_n)))
        .collect()
}

pub fn ground_state_check() -> Outcome {
    let t = Instant::now();
    let alpha = 0.5;
    let (ok, detail) = match fekete_next_order_values() {
        Ok(vals) => {
            let dist: Vec<f64> = vals.iter().map(|(_, f)| (f - alpha).abs()).collect();
            let decreasing = dist.windows(2).all(|w| w[1] < w[0]);
            let last = dist[dist.len() - 1];
            let listing: Vec<String> = vals.iter().map(|(n, f)| format!("f_{n}={f:.5}")).collect();
            (
                decreasing && last < 0.15,
                format!(
                    "{}; |f_n − 0.5| decreasing: {decreasing}; |f_256 − 0.5| = {last:.4} (tol 0.15)",
                    listing.join(" ")
                ),
            )
        }
        Err(e) => (false, format!("optimizer error: {e}")),
    };
    outcome(5, "next-order ground state", 600, t, ok, detail)
}

pub fn partition_oracle_check() -> Outcome {
    let t = Instant::now();
    let v = Potential::quadratic();
    let mut ok = true;
    let mut worst2 = 0.0f64;
    let mut worst3 = 0.0f64;
    for (n, beta, tol) in [
        (2, 0.5, 1e-6),
        (2, 1.0, 1e-6),
        (2, 2.0, 1e-6),
        (2, 4.0, 1e-6),
        (3, 1.0, 1e-5),
        (3, 2.0, 1e-5),
    ] {
        let rel = match (mehta_log_z(n, beta), quadrature_log_z(n, beta, &v)) {
            (Ok(m), Ok(q)) => ((q - m) / m).abs(),
            _ => f64::INFINITY,
        };
        if n == 2 {
            worst2 = worst2.max(rel);
        } else {
            worst3 = worst3.max(rel);
        }
        ok &= rel <= tol;
    }
    let log_pi = mehta_log_z(2, 2.0).map_or(f64::INFINITY, |m| (m - PI.ln()).abs());
    ok &= log_pi <= 1e-10;
    outcome(
        6,
        "partition function oracles",
        120,
        t,
        ok,
        format!(
            "n=2 max rel {worst2:.1e} (tol 1e-6); n=3 max rel {worst3:.1e} (tol 1e-5); \
             |log Z(2,2) − log π| = {log_pi:.1e} (tol 1e-10)"
        ),
    )
}

pub fn next_order_check() -> Outcome {
    let t = Instant::now();
    let consts = Model::quadratic().constants;
    let mut max_abs = 0.0f64;
    for n in 8..=512 {
        let no = mehta_log_z(n, 2.0).map_or(f64::INFINITY, |z| next_order(n, 2.0, &consts, z));
        max_abs = max_abs.max(no.abs());
    }
    let limit = mehta_log_z(256, 1e4).map_or(f64::NAN, |z| next_order(256, 1e4, &consts, z));
    let ok = max_abs <= 1.0 && (limit.abs() - 0.25).abs() <= 0.05;
    outcome(
        7,
        "next-order boundedness and limit",
        10,
        t,
        ok,
        format!(
            "max |next_order| over n=8..512 at β=2: {max_abs:.4} (tol 1.0); \
             next_order(256, 1e4) = {limit:.5}, | |·| − 0.25 | tol 0.05"
        ),
    )
}

pub fn gibbs_macroscopics_check() -> Outcome {
    let t = Instant::now();
    let model = Model::quadratic();
    // μ0([−1, 1]) by quadrature of the semicircle density
    let mu = semicircle_equilibrium();
    let mass = integrate(|x| mu.density_at(x), -1.0, 1.0, QuadOptions::with_tol(1e-13)).value;
    let expected = 32.0 * mass;
    let mut cfg = SamplerConfig::new(32, 2.0, Potential::quadratic());
    cfg.chains = 8;
    cfg.steps = 100_000;
    cfg.seed = 8;
    cfg.intervals = vec![[-1.0, 1.0]];
    let (ok, detail) = match run_with_model(&cfg, &model) {
        Ok(s) => {
            let c = s.interval_counts[0].count;
            let z = (c.mean - expected) / c.std_error;
            (
                z.abs() <= 3.0 && s.rhat <= 1.1,
                format!(
                    "mean count {:.4} ± {:.4} vs 32·μ0([−1,1]) = {expected:.4} ({z:+.2}σ); R̂ = {:.4}",
                    c.mean, c.std_error, s.rhat
                ),
            )
        }
        Err(e) => (false, format!("sampler error: {e}")),
    };
    outcome(8, "Gibbs macroscopics", 600, t, ok, detail)
}

/// Mean over 5 seeds of the bulk spacing variance at n = 32.
pub fn spacing_variances(betas: &[f64]) -> Result<Vec<f64>> {
    let model = Model::quadratic();
    betas
        .iter()
        .map(|&beta| {
            let mut total = 0.0;
            for seed in 0..5 {
                let mut cfg = SamplerConfig::new(32, beta, Potential::quadratic());
                cfg.chains = 4;
                cfg.steps = 100_000;
                cfg.seed = 90 + seed;
                total += run_with_model(&cfg, &model)?.spacing_variance;
            }
            Ok(total / 5.0)
        })
        .collect()
}

pub fn crystallization_check() -> Outcome {
    let t = Instant::now();
    let betas = [1.0, 5.0, 20.0, 50.0];
    let (ok, detail) = match spacing_variances(&betas) {
        Ok(v) => (
            v.windows(2).all(|w| w[1] < w[0]),
            format!(
                "spacing variance at β = 1, 5, 20, 50: {}",
                v.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(", ")
            ),
        ),
        Err(e) => (false, format!("sampler error: {e}")),
    };
    outcome(9, "crystallization trend", 1200, t, ok, detail)
}

pub fn equilibrium_solver_check() -> Outcome {
    let t = Instant::now();
    let v = Potential::quadratic();
    let reference = semicircle_equilibrium();
    let grid = uniform_grid(-3.0, 3.0, 2000);
    let (ok, detail) = match solve_equilibrium(&v, &grid, 1e-10, 5000) {
        Ok(mu) => {
            let sup = grid
                .iter()
                .map(|&x| (mu.density_at(x) - reference.density_at(x)).abs())
                .fold(0.0, f64::max);
            let c = crate::model::robin_constant(&mu, &v);
            let st = stationarity(&mu, &v, c);
            (
                sup <= 2e-2 && st.on_support <= 1e-3,
                format!(
                    "sup |density − semicircle| = {sup:.2e} (tol 2e-2); \
                     on-support residual {:.2e} (tol 1e-3)",
                    st.on_support
                ),
            )
        }
        Err(e) => (false, format!("solver error: {e}")),
    };
    outcome(10, "equilibrium solver", 120, t, ok, detail)
}

pub fn audits_check() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let potentials = [Potential::quadratic(), Potential::quartic(), Potential::double_well()];

    let mut worst_grad = 0.0f64;
    for k in 0..50 {
        let v = &potentials[k % 3];
        let n = rng.random_range(2..=40);
        let pts: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let Ok(c) = Configuration::from_unsorted(pts) else { continue };
        let x = c.points();
        let gap = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let h = 1e-4 * gap.min(1.0);
        let g = gradient(&c, v);
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let shifted = |s: f64| {
                let mut y = x.to_vec();
                y[i] += s;
                energy_change(x, &y, v)
            };
            // fourth-order central difference
            let fd = (8.0 * (shifted(h) - shifted(-h)) - (shifted(2.0 * h) - shifted(-2.0 * h)))
                / (12.0 * h);
            worst_grad = worst_grad.max((fd - g[i]).abs() / scale);
        }
    }

    let mut mirror = 0.0f64;
    let mut decay_violations = 0;
    let mut worst_div = 0.0f64;
    let mut worst_curl = 0.0f64;
    for c in field_test_configs() {
        let f = make_field(&c);
        let n = c.period() as f64;
        let mut checked = 0;
        while checked < 100 {
            let x = rng.random_range(0.0..n);
            let y = rng.random_range(0.1..2.0 * n);
            checked += 1;
            let [ex, ey] = f.field(x, y);
            let [mx, my] = f.field(x, -y);
            let mag = ex.hypot(ey);
            mirror = mirror.max(((mx - ex).abs() + (my + ey).abs()) / (1.0 + mag));
            let q = (-2.0 * PI * y / n).exp();
            if mag > 2.0 * PI * q / (1.0 - q) * (1.0 + 1e-12) {
                decay_violations += 1;
            }
            worst_div = worst_div.max(f.divergence_fd(x, y, 1e-5).abs());
            worst_curl = worst_curl.max(f.curl_fd(x, y, 1e-5).abs());
        }
    }
    let ok = worst_grad <= 1e-6
        && mirror <= 1e-12
        && decay_violations == 0
        && worst_div <= 1e-4
        && worst_curl <= 1e-4;
    outcome(
        11,
        "gradient and field audits",
        60,
        t,
        ok,
        format!(
            "gradient FD rel {worst_grad:.1e} (tol 1e-6); mirror {mirror:.1e}; \
             decay violations {decay_violations}; |div| {worst_div:.1e}, |curl| {worst_curl:.1e} (tol 1e-4)"
        ),
    )
}

pub type Check = fn() -> Outcome;

pub const CHECKS: [Check; 11] = [
    lattice_value_check,
    lattice_optimality_check,
    field_quadrature_check,
    fekete_oracle_check,
    ground_state_check,
    partition_oracle_check,
    next_order_check,
    gibbs_macroscopics_check,
    crystallization_check,
    equilibrium_solver_check,
    audits_check,
];

/// Runs the selected checks (1-based ids; all when empty) in order.
pub fn run(selection: &[usize]) -> Vec<Outcome> {
    CHECKS
        .iter()
        .enumerate()
        .filter(|(k, _)| selection.is_empty() || selection.contains(&(k + 1)))
        .map(|(_, check)| check())
        .collect()
}
