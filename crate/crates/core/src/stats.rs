//! Summary statistics for Markov-chain output.

use serde::{Deserialize, Serialize};

/// Mean with a standard error and a convergence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub rhat: f64,
}

impl Estimate {
    /// Pools equally long chains: batch-means standard error and split R̂.
    pub fn from_chains(chains: &[Vec<f64>]) -> Estimate {
        Estimate {
            mean: pooled_mean(chains),
            std_error: batch_means_se(chains, 20),
            rhat: split_rhat(chains),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn pooled_mean(chains: &[Vec<f64>]) -> f64 {
    let total: usize = chains.iter().map(Vec::len).sum();
    if total == 0 {
        return f64::NAN;
    }
    chains.iter().flatten().sum::<f64>() / total as f64
}

/// Standard error of the pooled mean from non-overlapping batch means,
/// `batches` per chain.
pub fn batch_means_se(chains: &[Vec<f64>], batches: usize) -> f64 {
    let mut means = Vec::new();
    for c in chains {
        let b = batches.min(c.len()).max(1);
        let size = c.len() / b;
        if size == 0 {
            continue;
        }
        means.extend((0..b).map(|k| mean(&c[k * size..(k + 1) * size])));
    }
    if means.len() < 2 {
        return f64::NAN;
    }
    (sample_variance(&means) / means.len() as f64).sqrt()
}

/// Gelman–Rubin potential scale reduction on chains split in half.
/// Returns 1 for chains with no variability at all.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let len = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if len < 2 {
        return f64::NAN;
    }
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..len], &c[len..2 * len]])
        .collect();
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let w = halves.iter().map(|h| sample_variance(h)).sum::<f64>() / halves.len() as f64;
    let b = len as f64 * sample_variance(&means);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let lf = len as f64;
    let var_plus = (lf - 1.0) / lf * w + b / lf;
    (var_plus / w).sqrt()
}

/// Fixed-range histogram; values outside the range go to the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram {
            lo,
            hi,
            counts: vec![0.0; bins.max(1)],
        }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn add(&mut self, x: f64) {
        let k = ((x - self.lo) / self.width()).floor();
        let last = self.counts.len() - 1;
        let k = if k.is_nan() || k < 0.0 { 0 } else { (k as usize).min(last) };
        self.counts[k] += 1.0;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Bin probabilities (summing to one), or zeros if empty.
    pub fn normalized(&self) -> Histogram {
        let t = self.total();
        Histogram {
            lo: self.lo,
            hi: self.hi,
            counts: self
                .counts
                .iter()
                .map(|c| if t > 0.0 { c / t } else { 0.0 })
                .collect(),
        }
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d, (i, &xi)| {
        let f = cdf(xi);
        d.max(f - i as f64 / m).max((i + 1) as f64 / m - f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhat_of_identical_chains_is_near_one() {
        let c: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 101) as f64).collect();
        let r = split_rhat(&[c.clone(), c]);
        assert!((r - 1.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn rhat_detects_offset_chains() {
        let a: Vec<f64> = (0..500).map(|k| (k % 7) as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        assert!(split_rhat(&[a, b]) > 2.0);
    }

    #[test]
    fn batch_se_of_iid_like_sequence() {
        // alternating ±1 has tiny batch-mean spread
        let c: Vec<f64> = (0..2000).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(batch_means_se(&[c], 20) < 1e-12);
    }

    #[test]
    fn histogram_mass_and_clamping() {
        let mut h = Histogram::new(0.0, 1.0, 4);
        for x in [-1.0, 0.1, 0.3, 0.6, 0.99, 5.0] {
            h.add(x);
        }
        assert_eq!(h.counts, vec![2.0, 1.0, 1.0, 2.0]);
        assert!((h.normalized().total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ks_of_perfect_uniform_grid() {
        let x: Vec<f64> = (0..100).map(|k| (k as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&x, |t| t) - 0.005).abs() < 1e-12);
    }
}
