//! Renormalized energy of N-periodic configurations of density one.
//!
//! For points a_1 < … < a_N on the circle R/NZ,
//!
//! W = −(π/N) Σ_{i≠j} log|2 sin(π(a_i − a_j)/N)| − π log(2π/N),
//!
//! minimized by the integer lattice, where it equals −π log 2π for every N.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// N points on R/NZ, strictly increasing in [0, N).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicConfig {
    period: usize,
    points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PeriodicDocument {
    #[serde(rename = "N")]
    period: usize,
    points: Vec<f64>,
}

/// Largest period accepted from untrusted input.
pub const MAX_PERIOD: usize = 1 << 16;

impl PeriodicConfig {
    pub fn new(period: usize, points: Vec<f64>) -> Result<Self> {
        if period == 0 {
            return Err(Error::domain("period N must be a positive integer"));
        }
        if points.len() != period {
            return Err(Error::domain(format!(
                "a period-{period} configuration needs exactly {period} points, got {}",
                points.len()
            )));
        }
        let n = period as f64;
        if points.iter().any(|&p| !(p.is_finite() && (0.0..n).contains(&p))) {
            return Err(Error::domain(format!("points must lie in [0, {period})")));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("points must be strictly increasing"));
        }
        Ok(PeriodicConfig { period, points })
    }

    /// Wraps arbitrary reals into [0, N) and sorts them.
    pub fn from_unsorted(period: usize, points: &[f64]) -> Result<Self> {
        let n = period as f64;
        let mut wrapped: Vec<f64> = points
            .iter()
            .map(|p| {
                let r = p.rem_euclid(n);
                if r >= n {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        wrapped.sort_by(f64::total_cmp);
        PeriodicConfig::new(period, wrapped)
    }

    /// The integer lattice {0, 1, …, N − 1}.
    pub fn lattice(period: usize) -> Result<Self> {
        PeriodicConfig::new(period, (0..period).map(|k| k as f64).collect())
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn translated(&self, t: f64) -> Result<Self> {
        let shifted: Vec<f64> = self.points.iter().map(|p| p + t).collect();
        PeriodicConfig::from_unsorted(self.period, &shifted)
    }

    /// The same configuration viewed with period 2N.
    pub fn doubled(&self) -> Result<Self> {
        let n = self.period as f64;
        let mut pts = self.points.clone();
        pts.extend(self.points.iter().map(|p| p + n));
        PeriodicConfig::new(2 * self.period, pts)
    }

    /// Smallest distance between neighbours on the circle.
    pub fn min_gap(&self) -> f64 {
        let n = self.period as f64;
        let wrap = self.points[0] + n - self.points[self.points.len() - 1];
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(wrap, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PeriodicDocument {
            period: self.period,
            points: self.points.clone(),
        })?)
    }

    /// Parses `{"N": …, "points": […]}`. Never panics.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PeriodicDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.period > MAX_PERIOD {
            return Err(Error::Parse(format!("period exceeds {MAX_PERIOD}")));
        }
        PeriodicConfig::new(doc.period, doc.points).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Closed-form renormalized energy of a periodic configuration.
///
/// Points closer than 1e-12·N on the circle are rejected as coincident.
pub fn periodic_w(config: &PeriodicConfig) -> Result<f64> {
    let n = config.period as f64;
    let pts = &config.points;
    let threshold = 1e-12 * n;
    let mut acc = CompensatedSum::default();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = pts[j] - pts[i];
            // distance on the circle
            if d.min(n - d) < threshold {
                return Err(Error::Degenerate { i, j });
            }
            acc.add((2.0 * (PI * d / n).sin()).abs().ln());
        }
    }
    // each unordered pair appears twice in Σ_{i≠j}
    Ok(-(PI / n) * 2.0 * acc.value() - PI * (2.0 * PI / n).ln())
}

/// min over A_m of W: −π m log(2π m).
pub fn lattice_min(m: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain("density m must be positive"));
    }
    Ok(-PI * m * (2.0 * PI * m).ln())
}

/// Energy at density m of a density-1 configuration dilated by 1/m.
pub fn rescale_w(w_unit: f64, m: f64) -> f64 {
    m * (w_unit - PI * m.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_value() {
        let w = periodic_w(&PeriodicConfig::lattice(1).unwrap()).unwrap();
        assert!((w + PI * (2.0 * PI).ln()).abs() < 1e-14);
        assert!((w + 5.77386).abs() < 1e-5);
    }

    #[test]
    fn two_point_examples() {
        let w = periodic_w(&PeriodicConfig::new(2, vec![0.0, 1.0]).unwrap()).unwrap();
        assert!((w + PI * (2.0 * PI).ln()).abs() < 1e-13);
        // Hand evaluation: pairs give 2·log(2 sin(π/4)) = log 2.
        let half = periodic_w(&PeriodicConfig::new(2, vec![0.0, 0.5]).unwrap()).unwrap();
        let expected = -(PI / 2.0) * 2.0f64.ln() - PI * PI.ln();
        assert!((half - expected).abs() < 1e-13);
        assert!((half + PI * (PI * 2f64.sqrt()).ln()).abs() < 1e-13);
        assert!((half + 4.68507).abs() < 1e-5);
    }

    #[test]
    fn coincident_points_rejected() {
        let c = PeriodicConfig::new(3, vec![0.0, 1.0, 1.0 + 1e-13]).unwrap();
        assert!(matches!(periodic_w(&c), Err(Error::Degenerate { .. })));
        // coincidence across the wrap-around
        let c = PeriodicConfig::new(2, vec![0.0, 2.0 - 1e-13]).unwrap();
        assert!(matches!(periodic_w(&c), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn lattice_min_values() {
        assert!((lattice_min(1.0).unwrap() + PI * (2.0 * PI).ln()).abs() < 1e-15);
        assert!(lattice_min(1.0 / (2.0 * PI)).unwrap().abs() < 1e-15);
        assert!((lattice_min(2.0).unwrap() + 2.0 * PI * (4.0 * PI).ln()).abs() < 1e-14);
        assert!(lattice_min(0.0).is_err());
        assert!(lattice_min(-1.0).is_err());
    }

    #[test]
    fn rescale_values() {
        let w1 = -PI * (2.0 * PI).ln();
        for m in [0.5, 1.0, 2.0, PI] {
            assert!((rescale_w(w1, m) - lattice_min(m).unwrap()).abs() < 1e-13);
        }
        assert_eq!(rescale_w(-3.0, 1.0), -3.0);
        assert!((rescale_w(0.0, std::f64::consts::E) + PI * std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(PeriodicConfig::new(0, vec![]).is_err());
        assert!(PeriodicConfig::new(2, vec![0.0]).is_err());
        assert!(PeriodicConfig::new(2, vec![0.0, 2.0]).is_err());
        assert!(PeriodicConfig::new(2, vec![1.0, 0.5]).is_err());
        assert!(PeriodicConfig::new(2, vec![0.0, f64::NAN]).is_err());
        assert!(PeriodicConfig::from_json(r#"{"N": 2, "points": [0, 1]}"#).is_ok());
        assert!(PeriodicConfig::from_json(r#"{"N": -2, "points": [0, 1]}"#).is_err());
        assert!(PeriodicConfig::from_json(r#"{"N": 99999999, "points": []}"#).is_err());
    }

    #[test]
    fn min_gap_wraps() {
        let c = PeriodicConfig::new(3, vec![0.2, 1.0, 2.9]).unwrap();
        assert!((c.min_gap() - 0.3).abs() < 1e-12);
    }
}
