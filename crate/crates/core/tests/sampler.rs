use loggas::fekete::minimize;
use loggas::hamiltonian::Configuration;
use loggas::potential::Potential;
use loggas::sampler::{metropolis_accept, run, ChainState, SamplerConfig};
use loggas::stats::{batch_means_se, ks_statistic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn config(n: usize, beta: f64, steps: usize, seed: u64) -> SamplerConfig {
    let mut c = SamplerConfig::new(n, beta, Potential::quadratic());
    c.steps = steps;
    c.burn_in = steps / 5;
    c.seed = seed;
    c
}

#[test]
fn metropolis_rule_satisfies_detailed_balance() {
    // symmetric proposals on three states with energies e
    let e = [0.0, 1.0, 2.5];
    let beta = 1.3;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let steps = 1_000_000;
    let mut state = 0usize;
    let mut indicators: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(steps)).collect();
    for _ in 0..steps {
        let next = (state + rng.random_range(1..3)) % 3;
        if metropolis_accept(e[next] - e[state], beta, rng.random()) {
            state = next;
        }
        for (k, ind) in indicators.iter_mut().enumerate() {
            ind.push(if k == state { 1.0 } else { 0.0 });
        }
    }
    let weights: Vec<f64> = e.iter().map(|x| (-0.5 * beta * x).exp()).collect();
    let z: f64 = weights.iter().sum();
    for k in 0..3 {
        let chain = [indicators[k].clone()];
        let freq = chain[0].iter().sum::<f64>() / steps as f64;
        let se = batch_means_se(&chain, 50);
        let p = weights[k] / z;
        assert!((freq - p).abs() < 3.0 * se, "state {k}: {freq} vs {p} (se {se})");
    }
}

#[test]
fn single_particle_is_gaussian() {
    // n = 1: density ∝ exp(−βx²/4), variance 2/β
    let beta = 2.0;
    let v = Potential::quadratic();
    let mut chain = ChainState::new(Configuration::new(vec![0.0]).unwrap(), &v, 1.2, 8, 0);
    for _ in 0..5_000 {
        chain.step(beta, &v);
    }
    let mut xs = Vec::new();
    for _ in 0..4_000 {
        for _ in 0..25 {
            chain.step(beta, &v);
        }
        xs.push(chain.points()[0]);
    }
    let law = Normal::new(0.0, (2.0 / beta).sqrt()).unwrap();
    let d = ks_statistic(&xs, |x| law.cdf(x));
    // 1% critical value 1.628/√m
    assert!(d < 1.628 / (xs.len() as f64).sqrt(), "KS {d}");
}

#[test]
fn colder_gas_is_more_rigid() {
    let warm = run(&config(24, 1.0, 100_000, 1)).unwrap();
    let cold = run(&config(24, 50.0, 100_000, 1)).unwrap();
    assert!(cold.spacing_variance < 0.5 * warm.spacing_variance);
    assert!(cold.outside_fraction.mean <= warm.outside_fraction.mean);
}

#[test]
fn next_order_average_sits_above_the_ground_state() {
    let n = 16;
    let ground = minimize(n, &Potential::quadratic(), 0, 1e-10, 10_000).unwrap().breakdown.f_n;
    let means: Vec<f64> = [1.0, 4.0, 20.0]
        .iter()
        .map(|&b| run(&config(n, b, 100_000, 2)).unwrap().f_n.mean)
        .collect();
    assert!(means.iter().all(|&m| m > ground), "{means:?} vs {ground}");
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn cached_energy_does_not_drift() {
    let s = run(&config(20, 2.0, 60_000, 3)).unwrap();
    assert!(s.audit_max_rel_error < 1e-8, "{}", s.audit_max_rel_error);
    assert!(s.acceptance > 0.2 && s.acceptance < 0.6, "{}", s.acceptance);
}

#[test]
fn runs_are_deterministic() {
    let a = run(&config(10, 2.0, 20_000, 4)).unwrap();
    let b = run(&config(10, 2.0, 20_000, 4)).unwrap();
    assert_eq!(a.f_n_trace, b.f_n_trace);
    assert_eq!(a.step_scales, b.step_scales);
    let c = run(&config(10, 2.0, 20_000, 5)).unwrap();
    assert_ne!(a.f_n_trace, c.f_n_trace);
}

#[test]
fn rejects_invalid_configs() {
    assert!(run(&config(0, 2.0, 1000, 0)).is_err());
    assert!(run(&config(4, -1.0, 1000, 0)).is_err());
    let mut c = config(4, 2.0, 1000, 0);
    c.chains = 0;
    assert!(run(&c).is_err());
}
