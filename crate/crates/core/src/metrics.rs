//! Accuracy metrics and chain diagnostics.

use crate::cox::PosteriorChain;
use crate::error::{Error, Result};

/// Per-run quality summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub q2: f64,
    pub smse: f64,
    pub acceptance_rate: f64,
    pub ess_min: f64,
}

/// Standardised mean squared error: `mean((λ − λ̂)²) / var(λ)` with population variance.
pub fn smse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::Shape(format!("truth has {} values, estimate {}", truth.len(), estimate.len())));
    }
    if truth.len() < 2 {
        return Err(Error::Shape("need at least two evaluation points".into()));
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let var = truth.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateReference("true values have zero variance".into()));
    }
    let mse = truth.iter().zip(estimate).map(|(t, e)| (t - e).powi(2)).sum::<f64>() / n;
    Ok(mse / var)
}

/// `Q² = 1 − SMSE`: 1 for a perfect estimate, 0 for the constant mean of the truth.
pub fn q_squared(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    Ok(1.0 - smse(truth, estimate)?)
}

/// Which part of a chain's acceptance log to summarise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    All,
    PostBurnIn,
}

/// Fraction of `true` entries.
pub fn acceptance_fraction(log: &[bool]) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::State("empty acceptance log".into()));
    }
    Ok(log.iter().filter(|&&a| a).count() as f64 / log.len() as f64)
}

pub fn acceptance_rate(chain: &PosteriorChain, window: Window) -> Result<f64> {
    let log = match window {
        Window::All => &chain.accepted[..],
        Window::PostBurnIn => &chain.accepted[chain.burn_in.min(chain.accepted.len())..],
    };
    acceptance_fraction(log)
}

/// Univariate effective sample size `N / (1 + 2 Σ ρ̂ₖ)` with Geyer's initial positive
/// sequence truncation, clipped to `[0, N]`. A constant series has ESS 0.
pub fn ess_univariate(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::Shape(format!("ESS needs at least 10 values, got {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov =
        |k: usize| -> f64 { centred[..n - k].iter().zip(&centred[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64 };
    let gamma0 = autocov(0);
    if !(gamma0 > 1e-300) {
        return Ok(0.0);
    }
    // τ = −1 + 2 Σ_j (ρ_{2j} + ρ_{2j+1}) over the initial run of positive pair sums.
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = (autocov(k) + autocov(k + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    Ok((n as f64 / tau).clamp(0.0, n as f64))
}

/// Minimum univariate ESS over the coordinates of a chain's retained samples.
pub fn ess_min(chain: &PosteriorChain) -> Result<f64> {
    let dim = chain.samples.first().ok_or_else(|| Error::State("empty chain".into()))?.len();
    let mut best = f64::INFINITY;
    for j in 0..dim {
        let s: Vec<f64> = chain.samples.iter().map(|x| x.0[j]).collect();
        best = best.min(ess_univariate(&s)?);
    }
    Ok(best)
}

/// Mean and sample standard deviation (`n − 1`), as used for replicate tables.
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn q2_examples() {
        let truth = [1.0, 3.0, 2.0, 6.0];
        assert_eq!(q_squared(&truth, &truth).unwrap(), 1.0);
        let mean = [3.0; 4];
        assert_relative_eq!(q_squared(&truth, &mean).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(q_squared(&[0.0, 2.0], &[2.0, 0.0]).unwrap(), -3.0);
        assert!(matches!(q_squared(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateReference(_))));
        assert!(q_squared(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_fraction(&[true; 4]).unwrap(), 1.0);
        assert_eq!(acceptance_fraction(&[false; 4]).unwrap(), 0.0);
        assert_eq!(acceptance_fraction(&[true, false, true, false]).unwrap(), 0.5);
        assert!(acceptance_fraction(&[]).is_err());
    }

    #[test]
    fn ess_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = ess_univariate(&x).unwrap();
        assert!((e / 10_000.0 - 1.0).abs() < 0.1, "ess {e}");
    }

    #[test]
    fn ess_constant_is_zero() {
        assert_eq!(ess_univariate(&[2.5; 50]).unwrap(), 0.0);
        assert!(ess_univariate(&[1.0; 5]).is_err());
    }

    #[test]
    fn ess_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let phi = 0.9;
        let mut x = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            prev = phi * prev + e;
            x.push(prev);
        }
        let expect = n as f64 * (1.0 - phi) / (1.0 + phi);
        let e = ess_univariate(&x).unwrap();
        assert!((e / expect - 1.0).abs() < 0.2, "ess {e} vs {expect}");
    }

    proptest! {
        #[test]
        fn q2_shift_invariant(
            truth in proptest::collection::vec(-5.0..5.0f64, 5..30),
            noise in proptest::collection::vec(-1.0..1.0f64, 30),
            c in -10.0..10.0f64,
        ) {
            let est: Vec<f64> = truth.iter().zip(&noise).map(|(t, n)| t + n).collect();
            if let Ok(q) = q_squared(&truth, &est) {
                let ts: Vec<f64> = truth.iter().map(|t| t + c).collect();
                let es: Vec<f64> = est.iter().map(|e| e + c).collect();
                let q2 = q_squared(&ts, &es).unwrap();
                prop_assert!((q - q2).abs() <= 1e-8 * (1.0 + q.abs()));
            }
        }

        #[test]
        fn ess_bounded_by_length(x in proptest::collection::vec(-3.0..3.0f64, 10..200)) {
            let e = ess_univariate(&x).unwrap();
            prop_assert!((0.0..=x.len() as f64).contains(&e));
        }
    }
}
