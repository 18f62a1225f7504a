//! Incomplete gamma function evaluated by series or continued fraction.

use statrs::function::gamma::ln_gamma;

const REL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 10_000;

/// `ln Γ(a, x)`, the log of the unregularised upper incomplete gamma `∫ₓ^∞ t^(a−1) e^(−t) dt`.
///
/// Uses the power series for the lower function when `x < a + 1` and the Lentz continued
/// fraction otherwise, both to relative tolerance `1e-12`.
pub fn ln_upper_incomplete_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    let lg = ln_gamma(a);
    if x == 0.0 {
        return lg;
    }
    if x < a + 1.0 {
        // Γ(a, x) = Γ(a) − γ(a, x), γ from the series e^(−x) x^a Σ xⁿ / (a(a+1)…(a+n)).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * REL_TOL * 1e-3 {
                break;
            }
        }
        let ln_lower = -x + a * x.ln() + sum.ln();
        // ln(Γ(a) − γ) = lg + ln(1 − e^(ln_lower − lg))
        lg + (-(ln_lower - lg).exp()).ln_1p()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < REL_TOL * 1e-3 {
                break;
            }
        }
        -x + a * x.ln() + h.ln()
    }
}

/// Regularised upper incomplete gamma `Q(a, x) = Γ(a, x)/Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    (ln_upper_incomplete_gamma(a, x) - ln_gamma(a)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from mpmath.gammainc(a, x) at 40 digits.
    #[test]
    fn matches_high_precision_reference() {
        let cases = [
            (1.7, 0.5, 0.775_422_160_200_838_2),
            (1.7, 5.0, 0.023_555_640_817_369_44),
            (1.7, 50.0, 3.023_832_840_397_588_6e-21),
            (0.7, 2.0, 0.098_980_422_087_076_23),
            (3.0, 1.0, 1.839_397_205_857_211_6),
            (1.0, 3.0, 0.049_787_068_367_863_94),
        ];
        for (a, x, want) in cases {
            let got = ln_upper_incomplete_gamma(a, x).exp();
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn regularised_limits() {
        assert_relative_eq!(gamma_q(2.5, 0.0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma_q(1.0, 2.0), (-2.0f64).exp(), max_relative = 1e-12);
    }
}
