use loggas::fekete::minimize;
use loggas::model::Model;
use loggas::partition::{mehta_log_z, partition, quadrature_log_z, thermo_log_z, Method};
use loggas::potential::Potential;
use loggas::sampler::SamplerConfig;

fn sampler(n: usize, beta: f64, steps: usize) -> SamplerConfig {
    let mut c = SamplerConfig::new(n, beta, Potential::quadratic());
    c.steps = steps;
    c.burn_in = steps / 5;
    c.seed = 6;
    c
}

#[test]
fn thermo_on_the_quadratic_is_exact() {
    let t = thermo_log_z(3, 2.0, &Potential::quadratic(), &sampler(3, 2.0, 5_000), 16).unwrap();
    assert!((t.log_z - mehta_log_z(3, 2.0).unwrap()).abs() < 1e-12);
}

#[test]
fn thermo_agrees_with_quadrature_for_quartic() {
    let v = Potential::quartic();
    let exact = quadrature_log_z(2, 2.0, &v).unwrap();
    let t = thermo_log_z(2, 2.0, &v, &sampler(2, 2.0, 100_000), 16).unwrap();
    assert!(t.error_bar > 0.0);
    assert!((t.log_z - exact).abs() < 3.0 * t.error_bar, "{} vs {exact} ± {}", t.log_z, t.error_bar);
}

#[test]
fn laplace_slope_at_low_temperature() {
    // d log Z / dβ → −w_min/2 − n/(2β)
    let v = Potential::quartic();
    let w_min = minimize(2, &v, 0, 1e-12, 10_000).unwrap().breakdown.w_n;
    let (b, h) = (300.0, 20.0);
    let slope = (quadrature_log_z(2, b + h, &v).unwrap() - quadrature_log_z(2, b - h, &v).unwrap()) / (2.0 * h);
    let predicted = -0.5 * w_min - 1.0 / b;
    assert!((slope - predicted).abs() < 1e-3, "{slope} vs {predicted}");
}

#[test]
fn error_bar_shrinks_with_run_length() {
    let v = Potential::quartic();
    let short = thermo_log_z(2, 2.0, &v, &sampler(2, 2.0, 20_000), 16).unwrap();
    let long = thermo_log_z(2, 2.0, &v, &sampler(2, 2.0, 80_000), 16).unwrap();
    let ratio = short.error_bar / long.error_bar;
    assert!(ratio > 1.3 && ratio < 3.0, "{ratio}");
}

#[test]
fn method_selection() {
    let q = Model::quadratic();
    let cfg = sampler(2, 2.0, 1000);
    assert_eq!(partition(&q, 2, 2.0, None, &cfg).unwrap().method, Method::ExactQuadratic);
    let quartic = Model::new(Potential::quartic()).unwrap();
    assert_eq!(partition(&quartic, 2, 2.0, None, &cfg).unwrap().method, Method::Quadrature);
    assert!(partition(&quartic, 2, 2.0, Some(Method::ExactQuadratic), &cfg).is_err());
    assert!(partition(&quartic, 5, 2.0, Some(Method::Quadrature), &cfg).is_err());
    assert!("nonsense".parse::<Method>().is_err());
}

#[test]
fn quadrature_reproduces_mehta() {
    for &beta in &[0.5, 1.0, 2.0, 4.0] {
        let m = mehta_log_z(3, beta).unwrap();
        let q = quadrature_log_z(3, beta, &Potential::quadratic()).unwrap();
        assert!(((q - m) / m).abs() < 1e-5, "β={beta}: {q} vs {m}");
    }
}
