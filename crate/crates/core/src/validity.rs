//! Monte Carlo validity harness: build a sketch under many seeds and count how
//! often its answers break the semantics' correctness condition.

use rayon::prelude::*;

use crate::combinatorics::{binomial, KSubsets};
use crate::database::{exact_fraction, ColumnIndex, Database, Frequency};
use crate::rng::derive_seed;
use crate::sketch::{
    Answer, Result, Semantics, Sketch, SketchBuilder, SketchError, SketchParams,
    MAX_ENUMERATED_ITEMSETS,
};

/// Whether `answer` violates the correctness condition for an itemset of frequency `f`.
///
/// Indicators may answer either way inside the dead zone `[ε/2, ε]`; estimators must be
/// within `ε` additively.
pub fn answer_is_wrong(answer: Answer, f: Frequency, epsilon: f64) -> bool {
    match answer {
        Answer::Indicator(bit) => {
            let eps = exact_fraction(epsilon);
            let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
            let (count, total) = (f.count as u128, f.total as u128);
            let above = count * den > num * total;
            let below_half = 2 * count * den < num * total;
            (above && !bit) || (below_half && bit)
        }
        Answer::Estimate(x) => (x - f.to_f64()).abs() > epsilon + 1e-12,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub semantics: Semantics,
    pub trials: usize,
    pub itemsets: usize,
    /// Trials in which at least one itemset was answered wrongly.
    pub any_wrong: usize,
    /// Per itemset (colex order), the number of trials that answered it wrongly.
    pub wrong_per_itemset: Vec<u32>,
}

impl ValidityReport {
    pub fn for_all_failure_rate(&self) -> f64 {
        self.any_wrong as f64 / self.trials as f64
    }

    pub fn max_per_itemset_rate(&self) -> f64 {
        self.wrong_per_itemset.iter().copied().max().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn mean_per_itemset_rate(&self) -> f64 {
        let total: u64 = self.wrong_per_itemset.iter().map(|&w| w as u64).sum();
        total as f64 / (self.trials as f64 * self.itemsets.max(1) as f64)
    }

    /// The failure probability the semantics bounds: simultaneous failure for
    /// for-all, worst single itemset for for-each.
    pub fn failure_rate(&self) -> f64 {
        if self.semantics.is_for_all() {
            self.for_all_failure_rate()
        } else {
            self.max_per_itemset_rate()
        }
    }
}

/// `δ` plus three binomial standard deviations at `trials` samples.
pub fn binomial_slack(delta: f64, trials: usize) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}

/// Build `trials` sketches with seeds `derive_seed(root_seed, i)` and check every k-itemset.
pub fn run_validity(
    db: &Database,
    params: &SketchParams,
    semantics: Semantics,
    builder: &dyn SketchBuilder,
    trials: usize,
    root_seed: u64,
) -> Result<ValidityReport> {
    let count = binomial(params.d as u64, params.k as u64);
    if count > MAX_ENUMERATED_ITEMSETS {
        return Err(SketchError::EnumerationTooLarge {
            count,
            limit: MAX_ENUMERATED_ITEMSETS,
        });
    }
    let index = ColumnIndex::new(db);
    let itemsets: Vec<(Vec<usize>, Frequency)> = KSubsets::new(params.d, params.k)
        .map(|t| {
            let f = Frequency::new(index.support_of(&t), db.n() as u64);
            (t, f)
        })
        .collect();

    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<bool>> {
            let blob = builder.build(db, params, semantics, derive_seed(root_seed, i))?;
            let sketch = Sketch::from_blob(&blob)?;
            Ok(itemsets
                .iter()
                .map(|(t, f)| answer_is_wrong(sketch.answer_attrs(t), *f, params.epsilon))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut wrong_per_itemset = vec![0u32; itemsets.len()];
    let mut any_wrong = 0;
    for wrong in &per_trial {
        if wrong.iter().any(|&w| w) {
            any_wrong += 1;
        }
        for (acc, &w) in wrong_per_itemset.iter_mut().zip(wrong) {
            *acc += w as u32;
        }
    }
    Ok(ValidityReport {
        semantics,
        trials,
        itemsets: itemsets.len(),
        any_wrong,
        wrong_per_itemset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::random_database;
    use crate::sketch::Builder;

    #[test]
    fn dead_zone_accepts_either_answer() {
        // ε = 1/10, f = 7/100 lies in [ε/2, ε]
        let f = Frequency::new(7, 100);
        assert!(!answer_is_wrong(Answer::Indicator(true), f, 0.1));
        assert!(!answer_is_wrong(Answer::Indicator(false), f, 0.1));
        assert!(answer_is_wrong(
            Answer::Indicator(false),
            Frequency::new(11, 100),
            0.1
        ));
        assert!(answer_is_wrong(
            Answer::Indicator(true),
            Frequency::new(4, 100),
            0.1
        ));
        // f = ε exactly is not "above"
        assert!(!answer_is_wrong(
            Answer::Indicator(false),
            Frequency::new(10, 100),
            0.1
        ));
    }

    #[test]
    fn exact_sketches_never_fail() {
        let db = random_database(40, 6, 0.5, 3);
        let p = SketchParams::new(2, 0.1, 0.1, 40, 6).unwrap();
        for s in Semantics::ALL {
            for b in [Builder::ReleaseDb, Builder::ReleaseAnswers] {
                let r = run_validity(&db, &p, s, &b, 3, 0).unwrap();
                assert_eq!(r.any_wrong, 0, "{b:?} {s}");
            }
        }
    }
}
