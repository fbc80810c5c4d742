use super::size::{self, boost_copies, quantization_bits, sample_size};
use super::{Algo, Result, Semantics, SketchBlob, SketchError, SketchParams};
use crate::bits::BitString;
use crate::combinatorics::{binomial, KSubsets};
use crate::database::{exact_fraction, ColumnIndex, Database};
use crate::rng::{derive_seed, index_below, stream_rng};

/// Largest C(d, k) release-answers will enumerate.
pub const MAX_ENUMERATED_ITEMSETS: u128 = 1 << 26;

/// A sketching algorithm as a value, so harnesses can be generic over it.
pub trait SketchBuilder: Sync {
    fn build(
        &self,
        db: &Database,
        params: &SketchParams,
        semantics: Semantics,
        seed: u64,
    ) -> Result<SketchBlob>;

    fn name(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builder {
    ReleaseDb,
    ReleaseAnswers,
    Subsample,
    /// `copies: None` uses `ceil(factor * log2(C(d, k) / δ))`.
    MedianBoost {
        base: Algo,
        factor: f64,
        copies: Option<usize>,
    },
}

impl Builder {
    pub fn algo(&self) -> Algo {
        match self {
            Builder::ReleaseDb => Algo::ReleaseDb,
            Builder::ReleaseAnswers => Algo::ReleaseAnswers,
            Builder::Subsample => Algo::Subsample,
            Builder::MedianBoost { .. } => Algo::MedianBoost,
        }
    }

    pub fn for_algo(algo: Algo) -> Self {
        match algo {
            Algo::ReleaseDb => Builder::ReleaseDb,
            Algo::ReleaseAnswers => Builder::ReleaseAnswers,
            Algo::Subsample => Builder::Subsample,
            Algo::MedianBoost => Builder::MedianBoost {
                base: Algo::Subsample,
                factor: size::DEFAULT_BOOST_FACTOR,
                copies: None,
            },
        }
    }
}

impl SketchBuilder for Builder {
    fn build(
        &self,
        db: &Database,
        params: &SketchParams,
        semantics: Semantics,
        seed: u64,
    ) -> Result<SketchBlob> {
        match *self {
            Builder::ReleaseDb => build_release_db(db, params, semantics),
            Builder::ReleaseAnswers => build_release_answers(db, params, semantics),
            Builder::Subsample => build_subsample(db, params, semantics, seed),
            Builder::MedianBoost {
                base,
                factor,
                copies,
            } => {
                let c = match copies {
                    Some(c) => c,
                    None => boost_copies(params, factor)?,
                };
                build_median_boost(db, params, semantics, base, c, seed)
            }
        }
    }

    fn name(&self) -> String {
        match self {
            Builder::MedianBoost { base, .. } => format!("median-boost({base})"),
            other => other.algo().to_string(),
        }
    }
}

fn check_shape(db: &Database, params: &SketchParams) -> Result<()> {
    params.validate()?;
    if params.n != db.n() as u64 || params.d != db.d() {
        return Err(SketchError::InvalidParams(format!(
            "params describe a {}x{} database, got {}x{}",
            params.n,
            params.d,
            db.n(),
            db.d()
        )));
    }
    Ok(())
}

fn finish(blob: SketchBlob, expected: u128) -> SketchBlob {
    assert_eq!(
        blob.payload.len() as u128,
        expected,
        "{} payload differs from its closed-form size",
        blob.algo
    );
    blob
}

pub fn build_release_db(
    db: &Database,
    params: &SketchParams,
    semantics: Semantics,
) -> Result<SketchBlob> {
    check_shape(db, params)?;
    let mut payload = BitString::with_capacity(db.n() * db.d());
    for i in 0..db.n() {
        payload.extend_from_words(db.row(i), db.d());
    }
    Ok(finish(
        SketchBlob {
            algo: Algo::ReleaseDb,
            base: None,
            semantics,
            params: *params,
            seed: 0,
            payload,
        },
        size::release_db_bits(params),
    ))
}

pub fn build_release_answers(
    db: &Database,
    params: &SketchParams,
    semantics: Semantics,
) -> Result<SketchBlob> {
    check_shape(db, params)?;
    let count = binomial(params.d as u64, params.k as u64);
    if count > MAX_ENUMERATED_ITEMSETS {
        return Err(SketchError::EnumerationTooLarge {
            count,
            limit: MAX_ENUMERATED_ITEMSETS,
        });
    }
    let index = ColumnIndex::new(db);
    let n = db.n() as u128;
    let expected = size::release_answers_bits(semantics, params);
    let mut payload = BitString::with_capacity(expected as usize);
    if semantics.is_indicator() {
        let eps = exact_fraction(params.epsilon);
        let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
        for t in KSubsets::new(params.d, params.k) {
            let support = index.support_of(&t) as u128;
            payload.push(support * den >= num * n);
        }
    } else {
        let b = quantization_bits(params.epsilon);
        let top = (1u128 << b) - 1;
        for t in KSubsets::new(params.d, params.k) {
            let support = index.support_of(&t) as u128;
            // floor(f * 2^b) in integers; f = 1 would need one more level.
            let level = ((support << b) / n).min(top);
            payload.push_uint(level as u64, b);
        }
    }
    Ok(finish(
        SketchBlob {
            algo: Algo::ReleaseAnswers,
            base: None,
            semantics,
            params: *params,
            seed: 0,
            payload,
        },
        expected,
    ))
}

pub fn build_subsample(
    db: &Database,
    params: &SketchParams,
    semantics: Semantics,
    seed: u64,
) -> Result<SketchBlob> {
    check_shape(db, params)?;
    let s = sample_size(semantics, params)?;
    let mut rng = stream_rng(seed, 0);
    let mut payload = BitString::with_capacity(s as usize * db.d());
    for _ in 0..s {
        let i = index_below(&mut rng, db.n());
        payload.extend_from_words(db.row(i), db.d());
    }
    Ok(finish(
        SketchBlob {
            algo: Algo::Subsample,
            base: None,
            semantics,
            params: *params,
            seed,
            payload,
        },
        size::subsample_bits(semantics, params)?,
    ))
}

/// `copies` independent for-each estimator sketches; queries return their median.
///
/// Copy `i` is built with seed `derive_seed(seed, i + 1)`.
pub fn build_median_boost(
    db: &Database,
    params: &SketchParams,
    semantics: Semantics,
    base: Algo,
    copies: usize,
    seed: u64,
) -> Result<SketchBlob> {
    check_shape(db, params)?;
    if semantics.is_indicator() {
        return Err(SketchError::InvalidParams(
            "median boosting produces estimator sketches".into(),
        ));
    }
    if base == Algo::MedianBoost {
        return Err(SketchError::InvalidParams(
            "cannot boost a boosted sketch".into(),
        ));
    }
    if copies == 0 {
        return Err(SketchError::InvalidParams("copies >= 1".into()));
    }
    let builder = Builder::for_algo(base);
    let mut payload = BitString::new();
    for i in 0..copies {
        let sub = builder.build(
            db,
            params,
            Semantics::ForEachEstimator,
            derive_seed(seed, i as u64 + 1),
        )?;
        payload.extend_from(&sub.payload);
    }
    Ok(finish(
        SketchBlob {
            algo: Algo::MedianBoost,
            base: Some(base),
            semantics,
            params: *params,
            seed,
            payload,
        },
        size::boosted_bits(base, params, copies)?,
    ))
}
