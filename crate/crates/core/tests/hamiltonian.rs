use loggas::hamiltonian::{energy, energy_change, gradient, hessian, Configuration};
use loggas::potential::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_config(rng: &mut ChaCha8Rng, n: usize) -> Configuration {
    Configuration::from_unsorted((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for v in [Potential::quadratic(), Potential::quartic(), Potential::double_well()] {
        let c = random_config(&mut rng, 7);
        let g = gradient(&c, &v);
        let h = 1e-4;
        for i in 0..c.len() {
            let shift = |d: f64| {
                let mut y = c.points().to_vec();
                y[i] += d;
                energy_change(c.points(), &y, &v)
            };
            let fd = (-shift(2.0 * h) + 8.0 * shift(h) - 8.0 * shift(-h) + shift(-2.0 * h)) / (12.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{}: {fd} vs {}", v.label, g[i]);
        }
    }
}

#[test]
fn hessian_matches_gradient_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = Potential::quartic();
    let c = random_config(&mut rng, 5);
    let hm = hessian(&c, &v);
    let h = 1e-5;
    for j in 0..c.len() {
        let at = |d: f64| {
            let mut y = c.points().to_vec();
            y[j] += d;
            gradient(&Configuration::new(y).unwrap(), &v)
        };
        let (gp, gm) = (at(h), at(-h));
        for i in 0..c.len() {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!((fd - hm[(i, j)]).abs() < 1e-4 * (1.0 + fd.abs()));
        }
        for i in 0..c.len() {
            assert_eq!(hm[(i, j)], hm[(j, i)]);
        }
    }
}

#[test]
fn energy_change_is_accurate_for_tiny_moves() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = Potential::quadratic();
    let c = random_config(&mut rng, 12);
    let mut y = c.points().to_vec();
    y[3] += 1e-9;
    let d = energy_change(c.points(), &y, &v);
    let g = gradient(&c, &v)[3] * 1e-9;
    assert!((d - g).abs() < 1e-6 * g.abs().max(1e-12), "{d} vs {g}");
    let direct = energy(&Configuration::from_unsorted(y).unwrap(), &v) - energy(&c, &v);
    assert!((direct - d).abs() < 1e-8 * energy(&c, &v).abs());
}

#[test]
fn energy_change_is_infinite_on_collision() {
    let x = [0.0, 1.0];
    assert_eq!(energy_change(&x, &[1.0, 1.0], &Potential::quadratic()), f64::INFINITY);
}

#[test]
fn configuration_validation() {
    assert!(Configuration::new(vec![0.0, 0.0]).is_err());
    assert!(Configuration::new(vec![1.0, 0.0]).is_err());
    assert!(Configuration::new(vec![0.0, f64::NAN]).is_err());
    assert!(Configuration::from_unsorted(vec![1.0, -1.0]).is_ok());
}
