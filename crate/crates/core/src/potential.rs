//! Confining potentials V.
//!
//! Potentials are closed-form so that V' and V'' are exact. Custom
//! potentials are polynomial coefficient lists; there is no expression
//! parser.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// x²/2
    Quadratic,
    /// x⁴/4
    Quartic,
    /// x⁴/4 − x²
    DoubleWell,
    /// Σ c_k x^k, lowest order first.
    Polynomial { coeffs: Vec<f64> },
    /// V(x − shift)
    Shifted { base: Box<PotentialKind>, shift: f64 },
    /// (1 − t)·from + t·to
    Blend {
        from: Box<PotentialKind>,
        to: Box<PotentialKind>,
        t: f64,
    },
}

impl PotentialKind {
    fn eval(&self, x: f64) -> f64 {
        match self {
            PotentialKind::Quadratic => 0.5 * x * x,
            PotentialKind::Quartic => 0.25 * x.powi(4),
            PotentialKind::DoubleWell => 0.25 * x.powi(4) - x * x,
            PotentialKind::Polynomial { coeffs } => horner(coeffs, x),
            PotentialKind::Shifted { base, shift } => base.eval(x - shift),
            PotentialKind::Blend { from, to, t } => (1.0 - t) * from.eval(x) + t * to.eval(x),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self {
            PotentialKind::Quadratic => x,
            PotentialKind::Quartic => x.powi(3),
            PotentialKind::DoubleWell => x.powi(3) - 2.0 * x,
            PotentialKind::Polynomial { coeffs } => horner(&poly_derivative(coeffs), x),
            PotentialKind::Shifted { base, shift } => base.deriv(x - shift),
            PotentialKind::Blend { from, to, t } => (1.0 - t) * from.deriv(x) + t * to.deriv(x),
        }
    }

    fn second_deriv(&self, x: f64) -> f64 {
        match self {
            PotentialKind::Quadratic => 1.0,
            PotentialKind::Quartic => 3.0 * x * x,
            PotentialKind::DoubleWell => 3.0 * x * x - 2.0,
            PotentialKind::Polynomial { coeffs } => {
                horner(&poly_derivative(&poly_derivative(coeffs)), x)
            }
            PotentialKind::Shifted { base, shift } => base.second_deriv(x - shift),
            PotentialKind::Blend { from, to, t } => {
                (1.0 - t) * from.second_deriv(x) + t * to.second_deriv(x)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PotentialKind::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::domain("polynomial coefficients must be finite"));
                }
                let degree = coeffs.iter().rposition(|&c| c != 0.0);
                match degree {
                    Some(d) if d >= 2 && d % 2 == 0 && coeffs[d] > 0.0 => Ok(()),
                    _ => Err(Error::domain(
                        "polynomial potential must have even degree >= 2 and positive leading coefficient",
                    )),
                }
            }
            PotentialKind::Shifted { base, shift } => {
                if !shift.is_finite() {
                    return Err(Error::domain("shift must be finite"));
                }
                base.validate()
            }
            PotentialKind::Blend { from, to, t } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::domain("blend parameter t must lie in [0, 1]"));
                }
                from.validate()?;
                to.validate()
            }
            _ => Ok(()),
        }
    }

    fn is_canonical_quadratic(&self) -> bool {
        match self {
            PotentialKind::Quadratic => true,
            PotentialKind::Polynomial { coeffs } => {
                let trimmed: Vec<f64> = {
                    let end = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |d| d + 1);
                    coeffs[..end].to_vec()
                };
                trimmed == [0.0, 0.0, 0.5]
            }
            PotentialKind::Blend { from, to, t } => {
                (*t == 0.0 && from.is_canonical_quadratic())
                    || (*t == 1.0 && to.is_canonical_quadratic())
                    || (from.is_canonical_quadratic() && to.is_canonical_quadratic())
            }
            _ => false,
        }
    }

    /// Center of the closed-form semicircle law, if this is a translate of
    /// the quadratic model.
    fn quadratic_center(&self) -> Option<f64> {
        match self {
            k if k.is_canonical_quadratic() => Some(0.0),
            PotentialKind::Shifted { base, shift } => base.quadratic_center().map(|c| c + shift),
            _ => None,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    /// Radius beyond which V/2 − log|x| is increasing.
    pub growth_check_radius: f64,
    pub label: String,
}

impl Potential {
    pub fn new(kind: PotentialKind, label: impl Into<String>) -> Result<Self> {
        kind.validate()?;
        let growth_check_radius = find_growth_radius(&kind)?;
        Ok(Potential {
            kind,
            growth_check_radius,
            label: label.into(),
        })
    }

    /// The canonical quadratic model V(x) = x²/2.
    pub fn quadratic() -> Self {
        Potential::new(PotentialKind::Quadratic, "quadratic").expect("quadratic is valid")
    }

    pub fn quartic() -> Self {
        Potential::new(PotentialKind::Quartic, "quartic").expect("quartic is valid")
    }

    pub fn double_well() -> Self {
        Potential::new(PotentialKind::DoubleWell, "double-well").expect("double-well is valid")
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        Potential::new(PotentialKind::Polynomial { coeffs }, "polynomial")
    }

    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Potential::new(
            PotentialKind::Shifted {
                base: Box::new(self.kind.clone()),
                shift,
            },
            format!("{}(x-{shift})", self.label),
        )
    }

    /// (1 − t)·self + t·other.
    pub fn blend(&self, other: &Potential, t: f64) -> Result<Self> {
        Potential::new(
            PotentialKind::Blend {
                from: Box::new(self.kind.clone()),
                to: Box::new(other.kind.clone()),
                t,
            },
            format!("blend({},{};{t})", self.label, other.label),
        )
    }

    /// Resolve a built-in name, or `polynomial` together with a coefficient
    /// list.
    pub fn from_name(name: &str, coeffs: Option<&[f64]>) -> Result<Self> {
        match (name.trim(), coeffs) {
            ("quadratic", None) => Ok(Potential::quadratic()),
            ("quartic", None) => Ok(Potential::quartic()),
            ("double-well", None) => Ok(Potential::double_well()),
            ("polynomial", Some(c)) => Potential::polynomial(c.to_vec()),
            ("polynomial", None) => Err(Error::Parse("polynomial potential needs --coeffs".into())),
            (other, Some(_)) if other != "polynomial" => Err(Error::Parse(format!(
                "--coeffs only applies to the polynomial potential, not '{other}'"
            ))),
            (other, _) => Err(Error::Parse(format!(
                "unknown potential '{other}' (expected quadratic, quartic, double-well or polynomial)"
            ))),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.kind.deriv(x)
    }

    #[inline]
    pub fn second_deriv(&self, x: f64) -> f64 {
        self.kind.second_deriv(x)
    }

    /// V(x + d) − V(x) without cancellation: d·∫₀¹ V'(x + t d) dt by an
    /// 8-point Gauss–Legendre rule, exact for polynomials up to degree 16.
    pub fn increment(&self, x: f64, d: f64) -> f64 {
        static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
        let (nodes, weights) = RULE.get_or_init(|| gauss_legendre(8));
        let s: f64 = nodes
            .iter()
            .zip(weights)
            .map(|(t, w)| w * self.deriv(x + 0.5 * (1.0 + t) * d))
            .sum();
        0.5 * d * s
    }

    pub fn is_canonical_quadratic(&self) -> bool {
        self.kind.is_canonical_quadratic()
    }

    pub fn quadratic_center(&self) -> Option<f64> {
        self.kind.quadratic_center()
    }

    /// Checks that V/2 − log|x| increases at sampled points beyond the
    /// growth radius, on both sides.
    pub fn check_growth(&self, samples: usize) -> bool {
        let r = self.growth_check_radius;
        (0..samples).all(|k| {
            let x = r * (1.0 + 10.0 * k as f64 / samples as f64);
            let g = |x: f64| 0.5 * self.eval(x) - x.abs().ln();
            g(x * 1.01) > g(x) && g(-x * 1.01) > g(-x)
        })
    }
}

fn find_growth_radius(kind: &PotentialKind) -> Result<f64> {
    // d/dx [V/2 − log|x|] · sign(x) > 0 on [r, 1e3·r] on both sides.
    let ok = |r: f64| {
        (0..200).all(|k| {
            let x = r * (1.0 + k as f64 * 0.05).powi(2);
            0.5 * kind.deriv(x) - 1.0 / x > 0.0 && -(0.5 * kind.deriv(-x)) - 1.0 / x > 0.0
        })
    };
    let mut r = 0.25;
    while r < 1e6 {
        if ok(r) {
            return Ok(r);
        }
        r *= 1.25;
    }
    Err(Error::domain("potential is not confining: V/2 - log|x| does not grow"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central_diff(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pots = [
            Potential::quadratic(),
            Potential::quartic(),
            Potential::double_well(),
            Potential::polynomial(vec![1.0, -0.5, 0.3, 0.2, 0.1]).unwrap(),
            Potential::quartic().shifted(1.5).unwrap(),
            Potential::quadratic().blend(&Potential::quartic(), 0.3).unwrap(),
        ];
        for v in &pots {
            for _ in 0..100 {
                let x: f64 = rng.random_range(-4.0..4.0);
                let fd = central_diff(|x| v.eval(x), x);
                let d = v.deriv(x);
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "{} at {x}", v.label);
                let fd2 = central_diff(|x| v.deriv(x), x);
                assert!((fd2 - v.second_deriv(x)).abs() <= 1e-6 * fd2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn growth_holds_beyond_radius() {
        for v in [Potential::quadratic(), Potential::quartic(), Potential::double_well()] {
            assert!(v.check_growth(100), "{}", v.label);
        }
        // x/2 − 1/x > 0 needs x > √2
        let r = Potential::quadratic().growth_check_radius;
        assert!(r >= 2f64.sqrt() && r < 3.0);
    }

    #[test]
    fn rejects_non_confining_polynomials() {
        assert!(Potential::polynomial(vec![0.0, 1.0]).is_err());
        assert!(Potential::polynomial(vec![0.0, 0.0, -1.0]).is_err());
        assert!(Potential::polynomial(vec![0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(Potential::polynomial(vec![0.0, f64::NAN, 1.0]).is_err());
        // x²/10 is confining but slowly: radius must grow accordingly
        let slow = Potential::polynomial(vec![0.0, 0.0, 0.1]).unwrap();
        assert!(slow.growth_check_radius > 3.0);
    }

    #[test]
    fn names_resolve() {
        assert!(Potential::from_name("quadratic", None).unwrap().is_canonical_quadratic());
        assert!(Potential::from_name("polynomial", Some(&[0.0, 0.0, 0.5])).unwrap().is_canonical_quadratic());
        assert!(Potential::from_name("quartic", Some(&[1.0])).is_err());
        assert!(Potential::from_name("cubic", None).is_err());
        assert_eq!(Potential::quadratic().shifted(5.0).unwrap().quadratic_center(), Some(5.0));
        assert_eq!(Potential::quartic().quadratic_center(), None);
    }
}
