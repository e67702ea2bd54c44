//! Metropolis sampling of the Gibbs law ∝ exp(−(β/2) w_n).
//!
//! Single-site Gaussian random-walk proposals; the energy change of moving
//! one particle costs O(n). The proposal scale is tuned during burn-in
//! only and then frozen.
//!
//! Chain k draws from ChaCha8 seeded with the master seed on stream k, so
//! every chain is reproducible on its own and independent of the thread
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fekete::{minimize_in, FeketeOptions};
use crate::hamiltonian::{energy, Configuration};
use crate::model::{zeta_clamped, Model};
use crate::potential::Potential;
use crate::stats::{split_rhat, Estimate, Histogram};

const AUDIT_INTERVAL: u64 = 10_000;
const ADAPT_BLOCK: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Start every chain at the weighted Fekete set.
    Fekete,
    /// Independent draws from μ0.
    Equilibrium,
}

/// A counting window [x0 − R/n, x0 + R/n].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub radius: f64,
}

/// Extra observable Σ_i (plus(x_i) − minus(x_i)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub plus: Potential,
    pub minus: Potential,
}

impl Probe {
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.plus.eval(t) - self.minus.eval(t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub beta: f64,
    pub potential: Potential,
    /// Initial proposal standard deviation; 1/(n√β) when absent.
    pub step_scale: Option<f64>,
    /// Proposals discarded per chain, during which the scale adapts.
    pub burn_in: usize,
    /// Proposals per chain after burn-in.
    pub steps: usize,
    /// Proposals between recorded samples.
    pub thinning: usize,
    pub chains: usize,
    pub seed: u64,
    pub init: Init,
    pub windows: Vec<Window>,
    pub intervals: Vec<[f64; 2]>,
    pub probe: Option<Probe>,
    /// Keep every recorded configuration in `GasStatistics::samples`.
    #[serde(default)]
    pub record_samples: bool,
}

impl SamplerConfig {
    pub fn new(n: usize, beta: f64, potential: Potential) -> Self {
        SamplerConfig {
            n,
            beta,
            potential,
            step_scale: None,
            burn_in: 20_000,
            steps: 100_000,
            thinning: n.max(1),
            chains: 4,
            seed: 0,
            init: Init::Fekete,
            windows: [-1.0, 0.0, 1.0]
                .iter()
                .flat_map(|&x0| [1.0, 4.0].map(|radius| Window { x0, radius }))
                .collect(),
            intervals: vec![[-1.0, 1.0]],
            probe: None,
            record_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain("beta must be positive"));
        }
        if self.burn_in < 1 || self.thinning < 1 {
            return Err(Error::domain("burn_in and thinning must be at least 1"));
        }
        if self.chains < 1 || self.steps < self.thinning {
            return Err(Error::domain("need at least one chain and one recorded sample"));
        }
        if let Some(s) = self.step_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::domain("step_scale must be positive"));
            }
        }
        Ok(())
    }

    pub fn default_step_scale(&self) -> f64 {
        1.0 / (self.n as f64 * self.beta.sqrt())
    }
}

/// Metropolis rule: accept when Δ ≤ 0, otherwise when u < exp(−(β/2)Δ).
pub fn metropolis_accept(delta: f64, beta: f64, u: f64) -> bool {
    delta <= 0.0 || u < (-0.5 * beta * delta).exp()
}

#[derive(Debug, Clone)]
pub struct ChainState {
    points: Vec<f64>,
    energy: f64,
    pub accepted: u64,
    pub proposed: u64,
    pub step_scale: f64,
    rng: ChaCha8Rng,
    /// Largest relative drift of the cached energy seen at an audit.
    pub audit_max_rel_error: f64,
}

impl ChainState {
    pub fn new(config: Configuration, v: &Potential, step_scale: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let energy = energy(&config, v);
        ChainState {
            points: config.into_points(),
            energy,
            accepted: 0,
            proposed: 0,
            step_scale,
            rng,
            audit_max_rel_error: 0.0,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.points.clone()).expect("chain keeps points ordered and distinct")
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Δw_n for moving particle i to y; +∞ when y hits another particle.
    pub fn delta(&self, i: usize, y: f64, v: &Potential) -> f64 {
        let x = &self.points;
        let xi = x[i];
        let mut log_acc = 0.0;
        let mut prod = 1.0f64;
        for (j, &xj) in x.iter().enumerate() {
            if j == i {
                continue;
            }
            let num = y - xj;
            if num == 0.0 {
                return f64::INFINITY;
            }
            prod *= (num / (xi - xj)).abs();
            if !(1e-150..=1e150).contains(&prod) {
                log_acc += prod.ln();
                prod = 1.0;
            }
        }
        log_acc += prod.ln();
        -2.0 * log_acc + x.len() as f64 * (v.eval(y) - v.eval(xi))
    }

    /// One single-site proposal.
    pub fn step(&mut self, beta: f64, v: &Potential) {
        let n = self.points.len();
        let i = self.rng.random_range(0..n);
        let z: f64 = self.rng.sample(StandardNormal);
        let y = self.points[i] + self.step_scale * z;
        let u: f64 = self.rng.random();
        self.proposed += 1;
        let delta = self.delta(i, y, v);
        if delta.is_finite() && metropolis_accept(delta, beta, u) {
            self.accepted += 1;
            self.energy += delta;
            self.move_to(i, y);
        }
        if self.proposed.is_multiple_of(AUDIT_INTERVAL) {
            self.audit(v);
        }
    }

    /// Relabels so the points stay sorted.
    fn move_to(&mut self, i: usize, y: f64) {
        let x = &mut self.points;
        let mut k = i;
        while k + 1 < x.len() && x[k + 1] < y {
            x[k] = x[k + 1];
            k += 1;
        }
        while k > 0 && x[k - 1] > y {
            x[k] = x[k - 1];
            k -= 1;
        }
        x[k] = y;
    }

    /// Recomputes the energy from scratch and records the drift.
    pub fn audit(&mut self, v: &Potential) {
        let exact = energy(&self.configuration(), v);
        let rel = (exact - self.energy).abs() / exact.abs().max(self.points.len() as f64);
        self.audit_max_rel_error = self.audit_max_rel_error.max(rel);
        self.energy = exact;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub x0: f64,
    pub radius: f64,
    /// Discrepancy D(x0, R): count minus n μ0 of the window.
    pub discrepancy: Estimate,
    pub variance: f64,
    /// Histogram of D on unit bins.
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub a: f64,
    pub b: f64,
    pub count: Estimate,
    /// n μ0([a, b])
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasStatistics {
    pub n: usize,
    pub beta: f64,
    pub chains: usize,
    pub samples_per_chain: usize,
    /// Post-burn-in acceptance rate over all chains.
    pub acceptance: f64,
    /// Frozen proposal scale of each chain.
    pub step_scales: Vec<f64>,
    pub count_fluctuations: Vec<WindowStats>,
    pub interval_counts: Vec<IntervalStats>,
    /// Normalized bulk gaps n·m0(mid)·(x_{i+1} − x_i), as probabilities.
    pub spacing_hist: Histogram,
    /// Pooled variance of the normalized bulk gaps.
    pub spacing_variance: f64,
    pub f_n_trace: Vec<f64>,
    pub zeta_trace: Vec<f64>,
    pub f_n: Estimate,
    pub zeta_sum: Estimate,
    pub mean_energy: Estimate,
    /// Fraction of particles where ζ > 0 (outside the support).
    pub outside_fraction: Estimate,
    pub probe: Option<Estimate>,
    /// Largest split R̂ over the monitored scalars.
    pub rhat: f64,
    /// Set when R̂ exceeds 1.1.
    pub flagged: bool,
    pub audit_max_rel_error: f64,
    /// Recorded configurations per chain, when requested.
    #[serde(skip)]
    pub samples: Vec<Vec<Vec<f64>>>,
}

const RHAT_LIMIT: f64 = 1.1;

struct ChainRecord {
    energy: Vec<f64>,
    f_n: Vec<f64>,
    zeta: Vec<f64>,
    outside: Vec<f64>,
    probe: Vec<f64>,
    windows: Vec<Vec<f64>>,
    intervals: Vec<Vec<f64>>,
    spacing: Histogram,
    spacing_moments: [f64; 3],
    accepted: u64,
    proposed: u64,
    step_scale: f64,
    audit: f64,
    samples: Vec<Vec<f64>>,
}

fn initial_configuration(cfg: &SamplerConfig, model: &Model, stream: u64) -> Result<Configuration> {
    match cfg.init {
        Init::Fekete => {
            let opts = FeketeOptions {
                seed: cfg.seed,
                tol: 1e-8,
                max_iter: 2_000,
                ..FeketeOptions::default()
            };
            Ok(minimize_in(model, cfg.n, &opts)?.config)
        }
        Init::Equilibrium => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(stream);
            let pts: Vec<f64> = (0..cfg.n)
                .map(|_| model.measure.quantile(rng.random::<f64>()))
                .collect();
            Configuration::from_unsorted(pts)
        }
    }
}

fn run_chain(cfg: &SamplerConfig, model: &Model, start: Configuration, stream: u64) -> ChainRecord {
    let v = &cfg.potential;
    let n = cfg.n;
    let nf = n as f64;
    let consts = &model.constants;
    let mu = &model.measure;
    let scale = cfg.step_scale.unwrap_or_else(|| cfg.default_step_scale());
    let mut state = ChainState::new(start, v, scale, cfg.seed, stream);

    // burn-in with blockwise scale adaptation toward 30–50% acceptance
    let mut block_acc = 0;
    for k in 1..=cfg.burn_in {
        let before = state.accepted;
        state.step(cfg.beta, v);
        block_acc += (state.accepted - before) as usize;
        if k % ADAPT_BLOCK == 0 {
            let rate = block_acc as f64 / ADAPT_BLOCK as f64;
            if rate < 0.3 {
                state.step_scale *= 0.8;
            } else if rate > 0.5 {
                state.step_scale *= 1.25;
            }
            block_acc = 0;
        }
    }
    let (acc0, prop0) = (state.accepted, state.proposed);

    let samples = cfg.steps / cfg.thinning;
    let mut rec = ChainRecord {
        energy: Vec::with_capacity(samples),
        f_n: Vec::with_capacity(samples),
        zeta: Vec::with_capacity(samples),
        outside: Vec::with_capacity(samples),
        probe: Vec::new(),
        windows: vec![Vec::with_capacity(samples); cfg.windows.len()],
        intervals: vec![Vec::with_capacity(samples); cfg.intervals.len()],
        spacing: Histogram::new(0.0, 4.0, 40),
        spacing_moments: [0.0; 3],
        accepted: 0,
        proposed: 0,
        step_scale: state.step_scale,
        audit: 0.0,
        samples: Vec::new(),
    };
    let window_mass: Vec<f64> = cfg
        .windows
        .iter()
        .map(|w| nf * mu.mass_in(w.x0 - w.radius / nf, w.x0 + w.radius / nf))
        .collect();
    for _ in 0..samples {
        for _ in 0..cfg.thinning {
            state.step(cfg.beta, v);
        }
        let x = state.points();
        let e = state.energy();
        if cfg.record_samples {
            rec.samples.push(x.to_vec());
        }
        rec.energy.push(e);
        rec.f_n.push((e - nf * nf * consts.mean_field_energy + nf * nf.ln()) / nf);
        let zetas: Vec<f64> = x.iter().map(|&t| zeta_clamped(mu, v, consts.c, t)).collect();
        rec.zeta.push(zetas.iter().sum());
        rec.outside.push(zetas.iter().filter(|&&z| z > 0.0).count() as f64 / nf);
        if let Some(p) = &cfg.probe {
            rec.probe.push(p.eval(x));
        }
        for (k, w) in cfg.windows.iter().enumerate() {
            let (a, b) = (w.x0 - w.radius / nf, w.x0 + w.radius / nf);
            let count = x.iter().filter(|&&t| a <= t && t <= b).count() as f64;
            rec.windows[k].push(count - window_mass[k]);
        }
        for (k, iv) in cfg.intervals.iter().enumerate() {
            let count = x.iter().filter(|&&t| iv[0] <= t && t <= iv[1]).count() as f64;
            rec.intervals[k].push(count);
        }
        for g in x.windows(2) {
            let mid = 0.5 * (g[0] + g[1]);
            let p = mu.cdf(mid) / mu.total_mass();
            if (0.1..=0.9).contains(&p) {
                let s = nf * mu.density_at(mid) * (g[1] - g[0]);
                rec.spacing.add(s);
                rec.spacing_moments[0] += 1.0;
                rec.spacing_moments[1] += s;
                rec.spacing_moments[2] += s * s;
            }
        }
    }
    state.audit(v);
    rec.accepted = state.accepted - acc0;
    rec.proposed = state.proposed - prop0;
    rec.audit = state.audit_max_rel_error;
    rec
}

/// Runs all chains and merges them in chain order.
pub fn run_with_model(cfg: &SamplerConfig, model: &Model) -> Result<GasStatistics> {
    cfg.validate()?;
    if model.potential != cfg.potential {
        return Err(Error::domain("model and sampler potential differ"));
    }
    let starts: Vec<Configuration> = match cfg.init {
        Init::Fekete => {
            let c = initial_configuration(cfg, model, 0)?;
            vec![c; cfg.chains]
        }
        Init::Equilibrium => (0..cfg.chains)
            .map(|k| initial_configuration(cfg, model, k as u64))
            .collect::<Result<_>>()?,
    };
    let records: Vec<ChainRecord> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, start)| run_chain(cfg, model, start, k as u64))
        .collect();
    Ok(merge(cfg, model, records))
}

pub fn run(cfg: &SamplerConfig) -> Result<GasStatistics> {
    let model = Model::new(cfg.potential.clone())?;
    run_with_model(cfg, &model)
}

fn collect<F: Fn(&ChainRecord) -> &Vec<f64>>(records: &[ChainRecord], f: F) -> Vec<Vec<f64>> {
    records.iter().map(|r| f(r).clone()).collect()
}

fn merge(cfg: &SamplerConfig, model: &Model, records: Vec<ChainRecord>) -> GasStatistics {
    let nf = cfg.n as f64;
    let energy = Estimate::from_chains(&collect(&records, |r| &r.energy));
    let f_n_chains = collect(&records, |r| &r.f_n);
    let zeta_chains = collect(&records, |r| &r.zeta);
    let f_n = Estimate::from_chains(&f_n_chains);
    let zeta_sum = Estimate::from_chains(&zeta_chains);
    let outside = Estimate::from_chains(&collect(&records, |r| &r.outside));
    let probe = cfg
        .probe
        .as_ref()
        .map(|_| Estimate::from_chains(&collect(&records, |r| &r.probe)));

    let count_fluctuations: Vec<WindowStats> = cfg
        .windows
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let chains: Vec<Vec<f64>> = records.iter().map(|r| r.windows[k].clone()).collect();
            let all: Vec<f64> = chains.iter().flatten().copied().collect();
            let est = Estimate::from_chains(&chains);
            let var = all.iter().map(|d| (d - est.mean).powi(2)).sum::<f64>() / all.len().max(2) as f64;
            let lo = all.iter().copied().fold(f64::INFINITY, f64::min).floor() - 0.5;
            let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil() + 0.5;
            let mut histogram = Histogram::new(lo, hi, ((hi - lo).round() as usize).max(1));
            for d in &all {
                histogram.add(*d);
            }
            WindowStats {
                x0: w.x0,
                radius: w.radius,
                discrepancy: est,
                variance: var,
                histogram: histogram.normalized(),
            }
        })
        .collect();

    let interval_counts: Vec<IntervalStats> = cfg
        .intervals
        .iter()
        .enumerate()
        .map(|(k, iv)| {
            let chains: Vec<Vec<f64>> = records.iter().map(|r| r.intervals[k].clone()).collect();
            IntervalStats {
                a: iv[0],
                b: iv[1],
                count: Estimate::from_chains(&chains),
                expected: nf * model.measure.mass_in(iv[0], iv[1]),
            }
        })
        .collect();

    let mut spacing_hist = Histogram::new(0.0, 4.0, 40);
    let mut m = [0.0; 3];
    for r in &records {
        spacing_hist.merge(&r.spacing);
        for (a, b) in m.iter_mut().zip(r.spacing_moments) {
            *a += b;
        }
    }
    let spacing_variance = if m[0] > 0.0 {
        m[2] / m[0] - (m[1] / m[0]).powi(2)
    } else {
        f64::NAN
    };

    let mut rhat = split_rhat(&f_n_chains);
    for s in &interval_counts {
        rhat = rhat.max(s.count.rhat);
    }
    let rhat = if cfg.chains * records[0].f_n.len() < 4 { f64::NAN } else { rhat };
    let accepted: u64 = records.iter().map(|r| r.accepted).sum();
    let proposed: u64 = records.iter().map(|r| r.proposed).sum();

    GasStatistics {
        n: cfg.n,
        beta: cfg.beta,
        chains: cfg.chains,
        samples_per_chain: records[0].f_n.len(),
        acceptance: accepted as f64 / proposed.max(1) as f64,
        step_scales: records.iter().map(|r| r.step_scale).collect(),
        count_fluctuations,
        interval_counts,
        spacing_hist: spacing_hist.normalized(),
        spacing_variance,
        f_n_trace: f_n_chains.concat(),
        zeta_trace: zeta_chains.concat(),
        f_n,
        zeta_sum,
        mean_energy: energy,
        outside_fraction: outside,
        probe,
        flagged: !(rhat <= RHAT_LIMIT),
        rhat,
        audit_max_rel_error: records.iter().map(|r| r.audit).fold(0.0, f64::max),
        samples: records.into_iter().map(|r| r.samples).collect(),
    }
}
