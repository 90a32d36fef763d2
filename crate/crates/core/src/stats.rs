//! Monte Carlo estimates with batch-means error bars and goodness-of-fit helpers.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::error::{Error, Result};

pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    /// Effective sample size, sample variance / stderr².
    pub ess: f64,
    pub n: usize,
}

impl EstimateWithError {
    /// Batch-means estimate using `batches` contiguous batches.
    pub fn batch_means(samples: &[f64], batches: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { have: n, need: 2 });
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let b = batches.clamp(2, n);
        let size = n / b;
        let means: Vec<f64> = (0..b)
            .map(|k| {
                let chunk = &samples[k * size..(k + 1) * size];
                chunk.iter().sum::<f64>() / size as f64
            })
            .collect();
        let grand = means.iter().sum::<f64>() / b as f64;
        let bvar = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
        let stderr = (bvar / b as f64).sqrt();
        let ess = if stderr > 0.0 {
            var / (stderr * stderr)
        } else {
            n as f64
        };
        Ok(Self {
            mean,
            stderr,
            ess,
            n,
        })
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        Self::batch_means(samples, DEFAULT_BATCHES)
    }

    /// Plain i.i.d. estimate (no batching).
    pub fn iid(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { have: n, need: 2 });
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            ess: n as f64,
            n,
        })
    }

    /// |mean − target| ≤ k·stderr
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Standard error of the difference of two independent estimates.
pub fn pooled_stderr(a: &EstimateWithError, b: &EstimateWithError) -> f64 {
    (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square goodness of fit of integer counts against Poisson(λ). Cells are
/// merged from both tails until every expected count is at least 5.
pub fn poisson_chi_square(counts: &[usize], lambda: f64) -> Result<ChiSquareOutcome> {
    let n = counts.len();
    if n < 20 {
        return Err(Error::InsufficientSamples { have: n, need: 20 });
    }
    let pois = Poisson::new(lambda).map_err(|e| Error::Parse(e.to_string()))?;
    let max = counts.iter().copied().max().unwrap_or(0);
    let top = max.max((lambda + 10.0 * lambda.sqrt() + 10.0) as usize);
    let mut observed = vec![0usize; top + 1];
    for &c in counts {
        observed[c] += 1;
    }
    let expected: Vec<f64> = (0..=top).map(|k| n as f64 * pois.pmf(k as u64)).collect();

    // Build cells [lo, hi] so that each expected count ≥ 5; the last cell is open-ended.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for k in 0..=top {
        o_acc += observed[k] as f64;
        e_acc += expected[k];
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    // remaining tail mass (including P(K > top)) folds into the last cell
    let tail_expected = n as f64 - expected.iter().sum::<f64>();
    let (o_tail, e_tail) = (o_acc, e_acc + tail_expected.max(0.0));
    if let Some(last) = cells.last_mut() {
        last.0 += o_tail;
        last.1 += e_tail;
    } else {
        cells.push((o_tail, e_tail));
    }
    if cells.len() < 2 {
        return Err(Error::InsufficientSamples {
            have: cells.len(),
            need: 2,
        });
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    Ok(ChiSquareOutcome {
        statistic,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson as PoissonDist};

    #[test]
    fn batch_means_of_iid_matches_iid_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = rand_distr::Normal::new(2.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        let bm = EstimateWithError::from_samples(&xs).unwrap();
        let iid = EstimateWithError::iid(&xs).unwrap();
        assert!(bm.within(2.0, 4.0));
        assert!((bm.stderr / iid.stderr - 1.0).abs() < 0.5);
        assert!(EstimateWithError::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn chi_square_accepts_poisson_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = PoissonDist::new(7.5).unwrap();
        let counts: Vec<usize> = (0..5000).map(|_| d.sample(&mut rng) as usize).collect();
        let ok = poisson_chi_square(&counts, 7.5).unwrap();
        assert!(ok.p_value > 0.01, "{ok:?}");
        let bad = poisson_chi_square(&counts, 8.5).unwrap();
        assert!(bad.p_value < 1e-6);
    }
}
