use std::f64::consts::PI;

use loggas::renorm::{lattice_min, periodic_w, rescale_w, PeriodicConfig};
use proptest::prelude::*;

fn config(period: usize, raw: &[f64]) -> Option<PeriodicConfig> {
    let pts: Vec<f64> = raw.iter().map(|u| u * period as f64).collect();
    let c = PeriodicConfig::from_unsorted(period, &pts).ok()?;
    (c.min_gap() > 1e-3).then_some(c)
}

#[test]
fn lattice_value_for_every_period() {
    let target = -PI * (2.0 * PI).ln();
    for n in 1..=40 {
        let w = periodic_w(&PeriodicConfig::lattice(n).unwrap()).unwrap();
        assert!((w - target).abs() < 1e-12, "N={n}: {w}");
    }
    assert!((lattice_min(1.0).unwrap() - target).abs() < 1e-15);
}

#[test]
fn rescaling_law() {
    // W at density m is m·(W_unit − π log m)
    let m = 3.0;
    assert!((rescale_w(target_unit(), m) - lattice_min(m).unwrap()).abs() < 1e-12);
    assert!((rescale_w(target_unit(), 1.0) - target_unit()).abs() < 1e-15);
}

fn target_unit() -> f64 {
    lattice_min(1.0).unwrap()
}

#[test]
fn rejects_bad_input() {
    assert!(PeriodicConfig::new(2, vec![0.0]).is_err());
    assert!(PeriodicConfig::new(2, vec![0.5, 0.5]).is_err());
    assert!(PeriodicConfig::lattice(0).is_err());
    assert!(PeriodicConfig::from_json(r#"{"N": 2, "points": [0.1, 3.0]}"#).is_err());
    assert!(PeriodicConfig::from_json("{").is_err());
}

#[test]
fn json_round_trip() {
    let c = PeriodicConfig::from_unsorted(3, &[2.5, 0.25, 1.0]).unwrap();
    let back = PeriodicConfig::from_json(&c.to_json().unwrap()).unwrap();
    assert_eq!(back.points(), c.points());
    assert_eq!(back.period(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_invariant(raw in prop::collection::vec(0.0f64..1.0, 1..8), t in -5.0f64..5.0) {
        let period = raw.len();
        if let Some(c) = config(period, &raw) {
            let w = periodic_w(&c).unwrap();
            let wt = periodic_w(&c.translated(t).unwrap()).unwrap();
            prop_assert!((w - wt).abs() < 1e-9 * (1.0 + w.abs()), "{} vs {}", w, wt);
        }
    }

    #[test]
    fn doubling_invariant(raw in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let period = raw.len();
        if let Some(c) = config(period, &raw) {
            let w = periodic_w(&c).unwrap();
            let w2 = periodic_w(&c.doubled().unwrap()).unwrap();
            prop_assert!((w - w2).abs() < 1e-9 * (1.0 + w.abs()), "{} vs {}", w, w2);
        }
    }

    #[test]
    fn lattice_is_minimal(raw in prop::collection::vec(0.0f64..1.0, 1..10)) {
        let period = raw.len();
        if let Some(c) = config(period, &raw) {
            prop_assert!(periodic_w(&c).unwrap() >= target_unit() - 1e-10);
        }
    }
}
