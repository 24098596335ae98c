//! Two-proportion score test and the standard normal distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("invalid sample: {successes} successes out of {trials} trials")]
    InvalidSample { successes: u64, trials: u64 },
    #[error("pooled proportion is {0}; the score statistic has zero variance")]
    DegeneratePool(f64),
    #[error("non-finite input {0}")]
    NonFinite(f64),
}

/// `successes` out of `trials`, with `trials ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProportionSample {
    successes: u64,
    trials: u64,
}

impl ProportionSample {
    pub fn new(successes: u64, trials: u64) -> Result<Self, StatsError> {
        if trials == 0 || successes > trials {
            return Err(StatsError::InvalidSample { successes, trials });
        }
        Ok(Self { successes, trials })
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn proportion(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTestResult {
    pub z: f64,
    pub p_two_sided: f64,
    pub pooled_p: f64,
}

/// Pooled-variance score statistic for `H0: p1 = p2`:
///
/// `z = (p̂1 − p̂2) / sqrt(p̂ (1 − p̂) (1/n1 + 1/n2))`, `p̂ = (x + y) / (n1 + n2)`.
///
/// No continuity correction is applied.
pub fn score_test(s1: ProportionSample, s2: ProportionSample) -> Result<ScoreTestResult, StatsError> {
    let (n1, n2) = (s1.trials as f64, s2.trials as f64);
    let pooled_p = (s1.successes + s2.successes) as f64 / (n1 + n2);
    if pooled_p <= 0.0 || pooled_p >= 1.0 {
        return Err(StatsError::DegeneratePool(pooled_p));
    }
    let se = (pooled_p * (1.0 - pooled_p) * (1.0 / n1 + 1.0 / n2)).sqrt();
    let z = (s1.proportion() - s2.proportion()) / se;
    Ok(ScoreTestResult {
        z,
        p_two_sided: two_sided_p(z),
        pooled_p,
    })
}

/// Φ(z), absolute error well below 1e-9 over the whole real line.
pub fn normal_cdf(z: f64) -> Result<f64, StatsError> {
    if !z.is_finite() {
        return Err(StatsError::NonFinite(z));
    }
    let x = z * FRAC_1_SQRT_2;
    Ok(if x >= 0.0 {
        1.0 - 0.5 * erfc(x)
    } else {
        0.5 * erfc(-x)
    })
}

/// `2 (1 − Φ(|z|))`, computed from the upper tail directly so that large |z|
/// do not cancel to zero prematurely.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    erfc(z.abs() * FRAC_1_SQRT_2).clamp(0.0, 1.0)
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < ERF_SERIES_LIMIT {
        erf_series(x)
    } else {
        1.0 - erfc_continued_fraction(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < ERF_SERIES_LIMIT {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

const ERF_SERIES_LIMIT: f64 = 2.5;

/// `erf(x) = 2/√π · e^{−x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`. Every term is
/// positive, so there is no cancellation for the `x ≥ 0` this is called with.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    loop {
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// Continued fraction for the complementary error function, evaluated with
/// the modified Lentz algorithm:
///
/// `erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + …)))))`.
fn erfc_continued_fraction(x: f64) -> f64 {
    if x > 27.3 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / PI.sqrt() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_validation() {
        assert!(ProportionSample::new(0, 0).is_err());
        assert!(ProportionSample::new(11, 10).is_err());
        assert!(ProportionSample::new(10, 10).is_ok());
    }

    #[test]
    fn identical_samples_give_zero() {
        let s = ProportionSample::new(30, 100).unwrap();
        let r = score_test(s, s).unwrap();
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn degenerate_pool() {
        let s = ProportionSample::new(0, 10).unwrap();
        assert!(matches!(score_test(s, s), Err(StatsError::DegeneratePool(p)) if p == 0.0));
        let s = ProportionSample::new(10, 10).unwrap();
        assert!(matches!(score_test(s, s), Err(StatsError::DegeneratePool(p)) if p == 1.0));
    }

    #[test]
    fn cdf_basics() {
        assert_eq!(normal_cdf(0.0).unwrap(), 0.5);
        assert!(normal_cdf(f64::NAN).is_err());
        assert!(normal_cdf(f64::INFINITY).is_err());
        assert_eq!(two_sided_p(f64::INFINITY), 0.0);
        assert!(normal_cdf(-40.0).unwrap() >= 0.0);
        assert_eq!(normal_cdf(40.0).unwrap(), 1.0);
    }

    #[test]
    fn erf_continuity_at_switch() {
        let below = erf(ERF_SERIES_LIMIT - 1e-12);
        let above = erf(ERF_SERIES_LIMIT);
        assert!((below - above).abs() < 1e-13);
        let below = erfc(ERF_SERIES_LIMIT - 1e-12);
        let above = erfc(ERF_SERIES_LIMIT);
        assert!((below - above).abs() / above < 1e-10);
    }
}
