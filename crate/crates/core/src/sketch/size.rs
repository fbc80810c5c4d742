//! Closed-form sketch sizes and the sample-size calculators.
//!
//! Sample sizes use the explicit Chernoff constants: `16 ln(2/δ') / ε` rows
//! for indicators (multiplicative bound at `p = ε`) and `ln(2/δ') / (2ε²)` rows
//! for estimators (additive bound), with `δ' = δ / C(d, k)` for the for-all
//! variants.

use std::fmt;

use super::{Algo, Result, Semantics, SketchError, SketchParams};
use crate::combinatorics::binomial;

/// Default multiplier in `copies = factor * log2(C(d, k) / δ)`.
pub const DEFAULT_BOOST_FACTOR: f64 = 10.0;

/// Exact payload length of a sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitBudget(pub u128);

impl BitBudget {
    pub fn bits(self) -> u128 {
        self.0
    }
}

impl fmt::Display for BitBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

// Ceiling that ignores floating-point noise just above an integer.
fn ceil_real(x: f64) -> u64 {
    let slack = 1e-9 * x.abs().max(1.0);
    (x - slack).ceil().max(0.0) as u64
}

/// Per-query failure budget after the union bound (for-all) or as given (for-each).
fn effective_ln_two_over_delta(semantics: Semantics, params: &SketchParams) -> f64 {
    let mut ln = (2.0 / params.delta).ln();
    if semantics.is_for_all() {
        ln += (binomial(params.d as u64, params.k as u64) as f64).ln();
    }
    ln
}

/// Number of sampled rows `subsample` keeps for the given semantics.
pub fn sample_size(semantics: Semantics, params: &SketchParams) -> Result<u64> {
    params.validate()?;
    let ln = effective_ln_two_over_delta(semantics, params);
    let eps = params.epsilon;
    let rows = if semantics.is_indicator() {
        16.0 * ln / eps
    } else {
        ln / (2.0 * eps * eps)
    };
    Ok(ceil_real(rows).max(1))
}

/// Smallest `b` with `2^-b <= ε`, i.e. `ceil(log2(1/ε))`, computed without logarithms.
pub fn quantization_bits(epsilon: f64) -> usize {
    let mut b = 0usize;
    while (0.5f64).powi(b as i32) > epsilon {
        b += 1;
    }
    b.max(1)
}

/// Number of independent copies used by median boosting.
pub fn boost_copies(params: &SketchParams, factor: f64) -> Result<usize> {
    params.validate()?;
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(SketchError::InvalidParams(format!(
            "boost factor > 0 (got {factor})"
        )));
    }
    let c = binomial(params.d as u64, params.k as u64) as f64;
    Ok(ceil_real(factor * (c / params.delta).log2()).max(1) as usize)
}

pub fn release_db_bits(params: &SketchParams) -> u128 {
    params.n as u128 * params.d as u128
}

pub fn release_answers_bits(semantics: Semantics, params: &SketchParams) -> u128 {
    let width = if semantics.is_indicator() {
        1
    } else {
        quantization_bits(params.epsilon) as u128
    };
    binomial(params.d as u64, params.k as u64) * width
}

pub fn subsample_bits(semantics: Semantics, params: &SketchParams) -> Result<u128> {
    Ok(sample_size(semantics, params)? as u128 * params.d as u128)
}

/// Closed-form payload length of a non-boosted algorithm.
pub fn payload_bits(algo: Algo, semantics: Semantics, params: &SketchParams) -> Result<u128> {
    match algo {
        Algo::ReleaseDb => Ok(release_db_bits(params)),
        Algo::ReleaseAnswers => Ok(release_answers_bits(semantics, params)),
        Algo::Subsample => subsample_bits(semantics, params),
        Algo::MedianBoost => Err(SketchError::InvalidParams(
            "boosted size depends on the base algorithm and copy count".into(),
        )),
    }
}

pub fn boosted_bits(base: Algo, params: &SketchParams, copies: usize) -> Result<u128> {
    Ok(payload_bits(base, Semantics::ForEachEstimator, params)? * copies as u128)
}

/// The three concrete sizes behind the upper bound, for one semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBreakdown {
    pub release_db: u128,
    pub release_answers: u128,
    pub subsample: u128,
}

impl SizeBreakdown {
    pub fn of(semantics: Semantics, params: &SketchParams) -> Result<Self> {
        Ok(Self {
            release_db: release_db_bits(params),
            release_answers: release_answers_bits(semantics, params),
            subsample: subsample_bits(semantics, params)?,
        })
    }

    /// Cheapest algorithm; ties go to the earlier of release-db, release-answers, subsample.
    pub fn winner(&self) -> Algo {
        let mut best = (self.release_db, Algo::ReleaseDb);
        for cand in [
            (self.release_answers, Algo::ReleaseAnswers),
            (self.subsample, Algo::Subsample),
        ] {
            if cand.0 < best.0 {
                best = cand;
            }
        }
        best.1
    }

    pub fn bound(&self) -> BitBudget {
        BitBudget(
            self.release_db
                .min(self.release_answers)
                .min(self.subsample),
        )
    }

    pub fn bits_for(&self, algo: Algo) -> Option<u128> {
        match algo {
            Algo::ReleaseDb => Some(self.release_db),
            Algo::ReleaseAnswers => Some(self.release_answers),
            Algo::Subsample => Some(self.subsample),
            Algo::MedianBoost => None,
        }
    }
}

/// Minimum over the three naive sketches of the bits this implementation would emit.
pub fn theorem1_bound(semantics: Semantics, params: &SketchParams) -> Result<BitBudget> {
    Ok(SizeBreakdown::of(semantics, params)?.bound())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize, eps: f64, delta: f64, n: u64, d: usize) -> SketchParams {
        SketchParams::new(k, eps, delta, n, d).unwrap()
    }

    #[test]
    fn sample_size_examples() {
        // ceil(ln(40) / 0.02)
        assert_eq!(
            sample_size(Semantics::ForEachEstimator, &params(1, 0.1, 0.05, 10, 4)).unwrap(),
            185
        );
        // ln(2/δ) = 16 exactly, 16 * 16 / 0.5
        let delta = 2.0 * (-16.0f64).exp();
        assert_eq!(
            sample_size(Semantics::ForEachIndicator, &params(1, 0.5, delta, 10, 4)).unwrap(),
            512
        );
        // ceil(ln(2 * 45 / 0.05) / 0.02)
        assert_eq!(
            sample_size(Semantics::ForAllEstimator, &params(2, 0.1, 0.05, 10, 10)).unwrap(),
            375
        );
    }

    #[test]
    fn sample_size_matches_direct_formula_evaluation() {
        for &(eps, delta) in &[(0.1, 0.1), (0.05, 0.01), (0.3, 0.2), (1.0 / 50.0, 0.1)] {
            let p = params(3, eps, delta, 100, 20);
            let c = 1140.0f64;
            let direct = |x: f64| x.ceil() as u64;
            assert_eq!(
                sample_size(Semantics::ForEachIndicator, &p).unwrap(),
                direct(16.0 * (2.0 / delta).ln() / eps)
            );
            assert_eq!(
                sample_size(Semantics::ForEachEstimator, &p).unwrap(),
                direct((2.0 / delta).ln() / (2.0 * eps * eps))
            );
            assert_eq!(
                sample_size(Semantics::ForAllIndicator, &p).unwrap(),
                direct(16.0 * (2.0 * c / delta).ln() / eps)
            );
            assert_eq!(
                sample_size(Semantics::ForAllEstimator, &p).unwrap(),
                direct((2.0 * c / delta).ln() / (2.0 * eps * eps))
            );
        }
    }

    #[test]
    fn subsample_bits_example() {
        let p = params(3, 0.1, 0.1, 1000, 20);
        // 20 * ceil(ln(20) / 0.02) = 20 * 150
        assert_eq!(
            subsample_bits(Semantics::ForEachEstimator, &p).unwrap(),
            3000
        );
    }

    #[test]
    fn quantization_widths() {
        assert_eq!(quantization_bits(0.125), 3);
        assert_eq!(quantization_bits(0.1), 4);
        assert_eq!(quantization_bits(0.6), 1);
        assert_eq!(quantization_bits(0.02), 6);
    }

    #[test]
    fn boost_copy_count_example() {
        // ceil(10 * log2(45 / 0.1)) = ceil(88.14)
        assert_eq!(
            boost_copies(&params(2, 0.1, 0.1, 10, 10), DEFAULT_BOOST_FACTOR).unwrap(),
            89
        );
    }

    #[test]
    fn bound_picks_the_cheapest_sketch() {
        let p = params(2, 0.125, 0.1, 4, 16);
        let b = SizeBreakdown::of(Semantics::ForAllIndicator, &p).unwrap();
        assert_eq!(b.release_db, 64);
        assert_eq!(b.release_answers, 120);
        assert!(b.subsample >= 64);
        assert_eq!(b.bound(), BitBudget(64));
        assert_eq!(b.winner(), Algo::ReleaseDb);
    }

    #[test]
    fn bound_becomes_independent_of_n() {
        let small =
            theorem1_bound(Semantics::ForEachEstimator, &params(2, 0.1, 0.1, 10, 12)).unwrap();
        let huge = theorem1_bound(
            Semantics::ForEachEstimator,
            &params(2, 0.1, 0.1, 1 << 40, 12),
        )
        .unwrap();
        let huger = theorem1_bound(
            Semantics::ForEachEstimator,
            &params(2, 0.1, 0.1, 1 << 50, 12),
        )
        .unwrap();
        assert!(small.0 <= huge.0);
        assert_eq!(huge, huger);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(SketchParams::new(2, 0.0, 0.1, 10, 4).is_err());
        assert!(SketchParams::new(2, 0.1, 1.0, 10, 4).is_err());
        assert!(SketchParams::new(5, 0.1, 0.1, 10, 4).is_err());
        assert!(SketchParams::new(0, 0.1, 0.1, 10, 4).is_err());
    }
}
