//! Accuracy threshold a random guesser exceeds with a given probability.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::{QsError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineQuantile {
    pub n_images: u64,
    pub p_success: f64,
    pub quantile: f64,
    pub trials: usize,
    /// Empirical quantile of simulated accuracies.
    pub monte_carlo: f64,
    /// Smallest `k/n` with `P(X ≤ k) ≥ quantile`.
    pub exact: f64,
}

fn check(n_images: u64, p_success: f64, quantile: f64) -> Result<()> {
    if n_images == 0 {
        return Err(QsError::contract("n_images must be at least 1"));
    }
    if !(p_success > 0.0 && p_success < 1.0) {
        return Err(QsError::contract(format!("p_success {p_success} outside (0, 1)")));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(QsError::contract(format!("quantile {quantile} outside (0, 1)")));
    }
    Ok(())
}

/// Binomial pmf `P(X = k)` for `k = 0..=n`, built by ratio recurrence in log
/// space so large `n` does not underflow the early terms.
pub fn binomial_pmf(n_images: u64, p_success: f64) -> Result<Vec<f64>> {
    if !(p_success > 0.0 && p_success < 1.0) {
        return Err(QsError::contract(format!("p_success {p_success} outside (0, 1)")));
    }
    let n = n_images as f64;
    let log_odds = (p_success / (1.0 - p_success)).ln();
    let mut log_pmf = n * (-p_success).ln_1p();
    let mut out = Vec::with_capacity(n_images as usize + 1);
    for k in 0..=n_images {
        out.push(log_pmf.exp());
        let kf = k as f64;
        log_pmf += ((n - kf) / (kf + 1.0)).ln() + log_odds;
    }
    Ok(out)
}

/// Exact CDF inversion: smallest `k` with `P(X ≤ k) ≥ quantile`.
pub fn binomial_quantile_exact(n_images: u64, p_success: f64, quantile: f64) -> Result<u64> {
    check(n_images, p_success, quantile)?;
    let mut cdf = 0.0;
    for (k, p) in binomial_pmf(n_images, p_success)?.into_iter().enumerate() {
        cdf += p;
        if cdf >= quantile {
            return Ok(k as u64);
        }
    }
    Ok(n_images)
}

pub fn random_baseline_quantile(n_images: u64, p_success: f64, quantile: f64, trials: usize, seed: u64) -> Result<BaselineQuantile> {
    check(n_images, p_success, quantile)?;
    if trials == 0 {
        return Err(QsError::contract("trials must be at least 1"));
    }
    let dist = Binomial::new(n_images, p_success).map_err(|e| QsError::contract(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<u64> = (0..trials).map(|_| dist.sample(&mut rng)).collect();
    draws.sort_unstable();
    let idx = ((quantile * trials as f64).ceil() as usize).clamp(1, trials) - 1;
    let n = n_images as f64;
    Ok(BaselineQuantile {
        n_images,
        p_success,
        quantile,
        trials,
        monte_carlo: draws[idx] as f64 / n,
        exact: binomial_quantile_exact(n_images, p_success, quantile)? as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_fair_coin() {
        assert_eq!(binomial_quantile_exact(100, 0.5, 0.5).unwrap(), 50);
        let r = random_baseline_quantile(100, 0.5, 0.5, 20_000, 3).unwrap();
        assert!((r.monte_carlo - 0.5).abs() <= 0.01);
    }

    #[test]
    fn small_cases_by_hand() {
        // Binomial(2, 0.5): CDF 0.25, 0.75, 1.
        assert_eq!(binomial_quantile_exact(2, 0.5, 0.25).unwrap(), 0);
        assert_eq!(binomial_quantile_exact(2, 0.5, 0.26).unwrap(), 1);
        assert_eq!(binomial_quantile_exact(2, 0.5, 0.9).unwrap(), 2);
    }

    #[test]
    fn pmf_sums_to_one_and_matches_small_case() {
        let pmf = binomial_pmf(3, 0.25).unwrap();
        for (got, want) in pmf.iter().zip([27.0 / 64.0, 27.0 / 64.0, 9.0 / 64.0, 1.0 / 64.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((binomial_pmf(1000, 0.3).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs() {
        assert!(random_baseline_quantile(100, 1.0, 0.5, 10, 0).is_err());
        assert!(random_baseline_quantile(100, 0.5, 0.0, 10, 0).is_err());
        assert!(random_baseline_quantile(100, 0.5, 0.5, 0, 0).is_err());
        assert!(random_baseline_quantile(0, 0.5, 0.5, 10, 0).is_err());
    }
}
