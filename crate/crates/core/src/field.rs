//! The electric field of a periodic configuration on the cylinder
//! (R/NZ) × R, and the renormalized energy computed from its definition
//! as a regularized Dirichlet integral.
//!
//! The potential is
//!
//! H(z) = π|y| − Σ_i log|2 sin(π(z − a_i)/N)|.
//!
//! Each log term is harmonic away from its charge with −Δ = 2π δ_{a_i};
//! the background term satisfies Δ(π|y|) = 2π δ_R, which supplies the
//! neutralizing line density −2π δ_R. Since log|2 sin(w)| ≈ |Im w| for large
//! |Im w|, the two parts cancel at infinity and H decays like e^{−2π|y|/N}.
//!
//! Writing u = π(x − a)/N, v = πy/N and q = e^{−2|v|}, each charge
//! contributes
//!
//! log|2 sin(u + iv)| = |v| + ½ log(1 + q² − 2q cos 2u),
//!
//! so H = −½ Σ log(1 + q² − 2q cos 2u) and E = −∇H has the
//! cancellation-free components used below. On the real line sign(0) = 0.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::TensorRule;
use crate::renorm::PeriodicConfig;

#[derive(Debug, Clone)]
pub struct CylinderField {
    config: PeriodicConfig,
}

pub fn make_field(config: &PeriodicConfig) -> CylinderField {
    CylinderField {
        config: config.clone(),
    }
}

impl CylinderField {
    pub fn config(&self) -> &PeriodicConfig {
        &self.config
    }

    fn scale(&self) -> f64 {
        PI / self.config.period() as f64
    }

    pub fn potential(&self, x: f64, y: f64) -> f64 {
        let k = self.scale();
        let v = k * y.abs();
        let q = (-2.0 * v).exp();
        let one_minus_q = -(-2.0 * v).exp_m1();
        -0.5 * self
            .config
            .points()
            .iter()
            .map(|a| {
                let s = (k * (x - a)).sin();
                // 1 + q² − 2q cos 2u without cancellation
                (one_minus_q * one_minus_q + 4.0 * q * s * s).ln()
            })
            .sum::<f64>()
    }

    /// E = −∇H.
    pub fn field(&self, x: f64, y: f64) -> [f64; 2] {
        self.field_near(x, None, 0.0, y)
    }

    /// E at (anchor + dx, y), where `anchor` is charge `index` if given; the
    /// offset to that charge is then exactly `dx`.
    fn field_near(&self, anchor: f64, index: Option<usize>, dx: f64, y: f64) -> [f64; 2] {
        let k = self.scale();
        let v = k * y.abs();
        let q = (-2.0 * v).exp();
        let one_minus_q = -(-2.0 * v).exp_m1();
        let sign = if y > 0.0 {
            1.0
        } else if y < 0.0 {
            -1.0
        } else {
            0.0
        };
        let (mut ex, mut ey) = (0.0, 0.0);
        for (j, a) in self.config.points().iter().enumerate() {
            let offset = if index == Some(j) { dx } else { (anchor - a) + dx };
            let (s, c) = (k * offset).sin_cos();
            let s2 = s * s;
            let denom = one_minus_q * one_minus_q + 4.0 * q * s2;
            // sin 2u and cos 2u − q
            ex += 4.0 * q * s * c / denom;
            ey += sign * 2.0 * q * (one_minus_q - 2.0 * s2) / denom;
        }
        [k * ex, k * ey]
    }

    pub fn field_norm_sq(&self, x: f64, y: f64) -> f64 {
        let [ex, ey] = self.field(x, y);
        ex * ex + ey * ey
    }

    /// Central-difference divergence of E.
    pub fn divergence_fd(&self, x: f64, y: f64, h: f64) -> f64 {
        let dx = (self.field(x + h, y)[0] - self.field(x - h, y)[0]) / (2.0 * h);
        let dy = (self.field(x, y + h)[1] - self.field(x, y - h)[1]) / (2.0 * h);
        dx + dy
    }

    /// Central-difference curl ∂_x E_y − ∂_y E_x.
    pub fn curl_fd(&self, x: f64, y: f64, h: f64) -> f64 {
        let dyx = (self.field(x + h, y)[1] - self.field(x - h, y)[1]) / (2.0 * h);
        let dxy = (self.field(x, y + h)[0] - self.field(x, y - h)[0]) / (2.0 * h);
        dyx - dxy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureParams {
    /// Radius of the excluded disks around each charge.
    pub eta: f64,
    /// Height where the strip is truncated; the rest is a tail estimate.
    pub y_cut: f64,
    /// Gauss–Legendre order of the tensor rule on each cell.
    pub nodes_per_unit: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams {
            eta: 1e-5,
            y_cut: 6.0,
            nodes_per_unit: 10,
        }
    }
}

/// W = (1/N) [ ½ ∫_{period strip \ ∪B(p,η)} |E|² + π N log η ] + tail.
///
/// Each charge sits in a square box of half-width ρ < min gap / 2. Inside
/// the box, the integral over the annulus between B(p, η) and the box is
/// done in polar coordinates with logarithmic radius, where |E|² r² is
/// smooth. The rest of the strip is a union of rectangles split at y = 0
/// and graded geometrically in |y|, each integrated by adaptive tensor
/// Gauss–Legendre. Above |y| = y_cut the field decays like e^{−2π|y|/N}
/// and the remainder is taken from that envelope.
pub fn w_quadrature(field: &CylinderField, params: QuadratureParams) -> Result<f64> {
    let config = field.config();
    let n = config.period() as f64;
    let half_gap = 0.5 * config.min_gap();
    let QuadratureParams { eta, y_cut, nodes_per_unit } = params;
    if !(eta > 0.0) {
        return Err(Error::domain("eta must be positive"));
    }
    if eta >= half_gap {
        return Err(Error::EtaTooLarge { eta, half_gap });
    }
    if !(y_cut >= n) {
        return Err(Error::domain(format!("y_cut must be at least N = {n}")));
    }
    let rule = TensorRule::new(nodes_per_unit.clamp(4, 40));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f1e1d);
    let mut rho = (0.45 * 2.0 * half_gap).min(0.5);
    if rho <= 1.5 * eta {
        rho = 0.5 * (eta + half_gap);
    }
    for _attempt in 0..3 {
        let w = strip_energy(field, &rule, eta, rho, y_cut);
        if w.is_finite() {
            return Ok(w);
        }
        // A node landed on a charge: move the box boundaries and retry.
        let jitter: f64 = rng.random_range(-0.05..0.05);
        rho = (rho * (1.0 + jitter)).clamp(eta * (1.0 + 1e-6), half_gap * (1.0 - 1e-6));
    }
    Err(Error::Quadrature(
        "non-finite integrand after 3 jittered attempts".into(),
    ))
}

fn strip_energy(field: &CylinderField, rule: &TensorRule, eta: f64, rho: f64, y_cut: f64) -> f64 {
    let config = field.config();
    let pts = config.points();
    let n = config.period() as f64;
    let f = |x: f64, y: f64| field.field_norm_sq(x, y);

    // x partition of one period, centred so that no box straddles its ends.
    let wrap_gap = pts[0] + n - pts[pts.len() - 1];
    let start = pts[0] - 0.5 * wrap_gap;
    let mut xs = vec![(start, false)];
    for &a in pts {
        xs.push((a - rho, false));
        xs.push((a + rho, true));
    }
    xs.push((start + n, false));
    // `true` marks the right end of a charge box.

    let mut ys = vec![0.0, rho];
    let mut y = rho;
    while 2.0 * y < y_cut {
        y *= 2.0;
        ys.push(y);
    }
    ys.push(y_cut);

    let mut total = 0.0;
    for win in xs.windows(2) {
        let (x0, _) = win[0];
        let (x1, is_box) = win[1];
        if x1 <= x0 {
            continue;
        }
        // Further split long free intervals into unit pieces.
        let pieces = if is_box { 1 } else { ((x1 - x0).ceil() as usize).max(1) };
        let hx = (x1 - x0) / pieces as f64;
        for p in 0..pieces {
            let (a, b) = (x0 + hx * p as f64, x0 + hx * (p + 1) as f64);
            for (j, yw) in ys.windows(2).enumerate() {
                if is_box && j == 0 {
                    continue;
                }
                let (c, d) = (yw[0], yw[1]);
                let floor = 1e-13 * (b - a) * (d - c);
                total += rule.adaptive_rel(&f, [a, b, c, d], 1e-9, floor, 12);
                total += rule.adaptive_rel(&f, [a, b, -d, -c], 1e-9, floor, 12);
            }
        }
    }

    let log_eta = eta.ln();
    for (i, &p) in pts.iter().enumerate() {
        for k in 0..8 {
            let t0 = k as f64 * PI / 4.0;
            let t1 = t0 + PI / 4.0;
            let polar = |t: f64, theta: f64| {
                let (s, c) = theta.sin_cos();
                let log_rmax = (rho / s.abs().max(c.abs())).ln();
                let span = log_rmax - log_eta;
                let r = (log_eta + t * span).exp();
                let [ex, ey] = field.field_near(p, Some(i), r * c, r * s);
                (ex * ex + ey * ey) * r * r * span
            };
            total += rule.adaptive_rel(&polar, [0.0, 1.0, t0, t1], 1e-10, 1e-13, 12);
        }
    }

    // Tails beyond ±y_cut from the e^{−4π|y|/N} decay of |E|².
    let (gx, gw) = crate::quadrature::gauss_legendre(rule_order_for_tail(n));
    let mut tail_density = 0.0;
    for (xi, wi) in gx.iter().zip(&gw) {
        let x = start + 0.5 * n * (xi + 1.0);
        tail_density += 0.5 * n * wi * (f(x, y_cut) + f(x, -y_cut));
    }
    let tail = tail_density * n / (4.0 * PI);

    (0.5 * (total + tail) + PI * n * log_eta) / n
}

fn rule_order_for_tail(n: f64) -> usize {
    ((8.0 * n) as usize).clamp(16, 256)
}
