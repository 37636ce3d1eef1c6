//! Quadratic timestep sampling: draws biased toward the high-noise end of
//! the training schedule. A uniform `u` in [0, 1] is squared, subtracted
//! from 1, and rescaled onto the logit range, so the mapped density piles up
//! near the upper bound.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Default logit bounds of the mapped range.
pub const QTS_LO: f64 = -3.66;
pub const QTS_HI: f64 = 3.66;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("bounds must satisfy lo < hi, got lo={lo}, hi={hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("u must lie in [0, 1], got {0}")]
    OutOfUnitInterval(f64),
}

/// Logit bounds for the quadratic map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QtsConfig {
    lo: f64,
    hi: f64,
}

impl QtsConfig {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ScheduleError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ScheduleError::InvalidBounds { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

impl Default for QtsConfig {
    fn default() -> Self {
        Self {
            lo: QTS_LO,
            hi: QTS_HI,
        }
    }
}

#[inline]
fn map_unchecked(u: f64, config: &QtsConfig) -> f64 {
    config.lo + (config.hi - config.lo) * (1.0 - u * u)
}

/// The quadratic map `lo + (hi - lo) * (1 - u²)`, the unique monotone affine
/// rescaling of `1 - u²` onto `[lo, hi]`. Strictly decreasing: `u = 0` maps
/// to `hi`, `u = 1` to `lo`.
pub fn qts_map(u: f64, config: &QtsConfig) -> Result<f64, ScheduleError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(ScheduleError::OutOfUnitInterval(u));
    }
    Ok(map_unchecked(u, config))
}

/// Draws `n` quadratic timesteps from a seeded generator. Reproducible for a
/// given `(n, seed)` on every platform: the uniforms come from ChaCha12
/// seeded with `seed`, each taken as the top 53 bits of the next `u64`
/// divided by 2^53 (uniform on [0, 1)).
pub fn qts_sample_batch(n: usize, seed: u64, config: &QtsConfig) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            map_unchecked(u, config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_are_exact() {
        let c = QtsConfig::default();
        assert_eq!(qts_map(0.0, &c).unwrap(), 3.66);
        assert_eq!(qts_map(1.0, &c).unwrap(), -3.66);
    }

    #[test]
    fn midpoint_value() {
        // lo + (hi - lo) * 0.75 = -3.66 + 7.32 * 0.75 = 1.83
        let c = QtsConfig::default();
        assert!((qts_map(0.5, &c).unwrap() - 1.83).abs() < 1e-12);
    }

    #[test]
    fn domain_is_enforced() {
        let c = QtsConfig::default();
        assert_eq!(
            qts_map(-0.1, &c),
            Err(ScheduleError::OutOfUnitInterval(-0.1))
        );
        assert!(qts_map(1.1, &c).is_err());
        assert!(qts_map(f64::NAN, &c).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(QtsConfig::new(1.0, 1.0).is_err());
        assert!(QtsConfig::new(2.0, -2.0).is_err());
        assert!(QtsConfig::new(f64::NAN, 1.0).is_err());
        let c = QtsConfig::new(-1.0, 4.0).unwrap();
        assert_eq!(qts_map(0.0, &c).unwrap(), 4.0);
        assert_eq!(qts_map(1.0, &c).unwrap(), -1.0);
    }

    #[test]
    fn batches_are_reproducible_and_in_range() {
        let c = QtsConfig::default();
        let a = qts_sample_batch(512, 42, &c);
        let b = qts_sample_batch(512, 42, &c);
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (-3.66..=3.66).contains(&x)));

        let other = qts_sample_batch(512, 43, &c);
        assert_ne!(a, other);
    }

    #[test]
    fn sample_mean_matches_the_analytic_expectation() {
        // E[1 - u^2] = 2/3, so the mean is -3.66 + 7.32 * 2/3 = 1.22
        let c = QtsConfig::default();
        let samples = qts_sample_batch(1_000_000, 7, &c);
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        assert!((mean - 1.22).abs() < 0.01, "mean={mean}");
    }

    #[test]
    fn empirical_cdf_matches_the_analytic_law() {
        // P(X <= x) = 1 - sqrt(1 - (x - lo) / (hi - lo))
        let c = QtsConfig::default();
        let mut samples = qts_sample_batch(100_000, 1234, &c);
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let q = (x - c.lo()) / (c.hi() - c.lo());
            let analytic = 1.0 - (1.0 - q).max(0.0).sqrt();
            let lo_step = i as f64 / n;
            let hi_step = (i + 1) as f64 / n;
            ks = ks.max((analytic - lo_step).abs()).max((analytic - hi_step).abs());
        }
        assert!(ks < 0.01, "ks={ks}");
    }

    proptest! {
        #[test]
        fn prop_map_is_strictly_decreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!(a != b);
            let c = QtsConfig::default();
            let (lo_u, hi_u) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(qts_map(lo_u, &c).unwrap() > qts_map(hi_u, &c).unwrap());
        }
    }
}
