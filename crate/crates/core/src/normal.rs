//! Standard normal CDF helpers and truncated-normal sampling, accurate in the tails.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, SQRT_2};

use libm::erfc;
use rand::Rng;
use statrs::function::erf::erfc_inv;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this the erfc-based log CDF underflows and the asymptotic series takes over.
const LOG_CDF_ASYMPTOTIC: f64 = -37.0;

/// Beyond this one-sided truncation point, sampling switches to exponential rejection.
const TAIL_REJECTION: f64 = 30.0;

pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `Φ(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`, without cancellation for large `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, finite for all finite `x`.
pub fn log_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > LOG_CDF_ASYMPTOTIC {
        let c = cdf(x);
        if x > 0.0 {
            (-sf(x)).ln_1p()
        } else {
            c.ln()
        }
    } else {
        // Φ(x) ≈ φ(x)/|x| · (1 − 1/x² + 3/x⁴ − 15/x⁶)
        let z = 1.0 / (x * x);
        log_pdf(x) - (-x).ln() + (1.0 - z + 3.0 * z * z - 15.0 * z * z * z).ln()
    }
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn inv_cdf(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `ln(Φ(b) − Φ(a))` for `a ≤ b`, evaluated on the side of the axis that avoids cancellation.
pub fn log_interval_prob(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if a > 0.0 {
        // Mirror into the lower tail.
        return log_interval_prob(-b, -a);
    }
    let lb = log_cdf(b);
    let la = log_cdf(a);
    if la == f64::NEG_INFINITY {
        return lb;
    }
    // ln(e^lb − e^la) = lb + ln(1 − e^(la−lb))
    let d = la - lb;
    if d > -LN_2 {
        lb + (-(d.exp_m1())).ln()
    } else {
        lb + (-(d.exp())).ln_1p()
    }
}

/// `E[Z | a ≤ Z ≤ b]` for standard normal `Z`.
pub fn truncated_mean(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return a;
    }
    let lz = log_interval_prob(a, b);
    let term = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            (log_pdf(x) - lz).exp()
        }
    };
    (term(a) - term(b)).clamp(a, b)
}

/// Draws `Z ~ N(0,1)` conditioned on `a ≤ Z ≤ b`.
pub fn sample_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if !(a < b) {
        return a;
    }
    if b <= 0.0 {
        return -sample_truncated(-b, -a, rng);
    }
    if a >= TAIL_REJECTION {
        return tail_rejection(a, b, rng);
    }
    let u: f64 = rng.random();
    let x = if a >= 0.0 {
        // Inverse of the upper-tail function keeps precision for large a.
        let (qa, qb) = (sf(a), sf(b));
        let p = qb + u * (qa - qb);
        SQRT_2 * erfc_inv(2.0 * p)
    } else {
        let (pa, pb) = (cdf(a), cdf(b));
        inv_cdf(pa + u * (pb - pa))
    };
    if x.is_finite() {
        x.clamp(a, b)
    } else {
        // Interval narrower than the CDF resolution.
        if b.is_finite() {
            0.5 * (a + b)
        } else {
            a
        }
    }
}

/// Exponential-proposal rejection sampler for `[a, b]` with large `a > 0`.
fn tail_rejection<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = -(1.0 - rng.random::<f64>()).ln() / rate;
        let x = a + e;
        if x > b {
            continue;
        }
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (x - rate) * (x - rate) {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cdf_values() {
        assert_relative_eq!(cdf(0.0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-15);
        assert_relative_eq!(inv_cdf(0.975), 1.959_963_984_540_054, epsilon = 1e-12);
        assert_relative_eq!(log_cdf(0.0), 0.5f64.ln(), epsilon = 1e-15);
        // ln Φ(−10) = −53.23128515051247 (mpmath)
        assert_relative_eq!(log_cdf(-10.0), -53.231_285_150_512_47, max_relative = 1e-12);
        // ln Φ(−40) = −804.6084420137538 (mpmath)
        assert_relative_eq!(log_cdf(-40.0), -804.608_442_013_753_8, max_relative = 1e-10);
        assert_relative_eq!(log_cdf(8.0), -6.220_960_574_271_785e-16, max_relative = 1e-8);
    }

    #[test]
    fn interval_prob_tails() {
        assert_relative_eq!(log_interval_prob(0.0, f64::INFINITY), 0.5f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(log_interval_prob(-1.0, 1.0).exp(), 0.682_689_492_137_085_9, epsilon = 1e-14);
        // P(Z > 10) = 7.619853024160527e-24
        assert_relative_eq!(
            log_interval_prob(10.0, f64::INFINITY).exp(),
            7.619_853_024_160_527e-24,
            max_relative = 1e-10
        );
        assert_eq!(log_interval_prob(1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn truncated_mean_values() {
        assert_relative_eq!(truncated_mean(0.0, f64::INFINITY), (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(truncated_mean(-1.0, 1.0), 0.0, epsilon = 1e-15);
        let m = truncated_mean(50.0, f64::INFINITY);
        assert!(m > 50.0 && m < 50.03);
    }

    #[test]
    fn truncated_samples_stay_inside_and_match_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(a, b) in
            &[(0.0, f64::INFINITY), (-0.5, 0.3), (2.0, 2.5), (-f64::INFINITY, -3.0), (40.0, 41.0), (7.0, f64::INFINITY)]
        {
            let n = 20_000;
            let mut s = 0.0;
            for _ in 0..n {
                let x = sample_truncated(a, b, &mut rng);
                assert!(x >= a && x <= b, "{x} not in [{a}, {b}]");
                s += x;
            }
            let mean = s / n as f64;
            let expect = truncated_mean(a, b);
            assert!((mean - expect).abs() < 0.02, "[{a},{b}]: {mean} vs {expect}");
        }
    }
}
