//! Itemset-frequency sketches: the release-db, release-answers and subsample
//! algorithms under the four query semantics, plus median boosting of a
//! for-each estimator into a for-all estimator.
//!
//! A sketch is a [`SketchBlob`]: an algorithm tag, the parameters it was built
//! for, the seed, and a payload bit string whose length is exactly the
//! closed-form size reported by [`size`]. Queries run against a decoded
//! [`Sketch`], which turns the payload back into something indexable once.

mod build;
mod format;
mod query;
pub mod size;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitString;
use crate::error::Error;

pub use build::{
    build_median_boost, build_release_answers, build_release_db, build_subsample, Builder,
    SketchBuilder, MAX_ENUMERATED_ITEMSETS,
};
pub use format::{read_blob, write_blob, BLOB_HEADER_BYTES, BLOB_MAGIC};
pub use query::{query, Answer, Sketch};
pub use size::{
    boost_copies, quantization_bits, sample_size, theorem1_bound, BitBudget, SizeBreakdown,
    DEFAULT_BOOST_FACTOR,
};

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("itemset has {found} attributes, sketch answers {expected}-itemsets only")]
    CardinalityMismatch { expected: usize, found: usize },

    #[error("itemset over {found} attributes, sketch covers {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sketch was built for {built} queries, not {requested}")]
    SemanticsMismatch {
        built: Semantics,
        requested: Semantics,
    },

    #[error("enumerating {count} itemsets exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("blob format: {0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SketchError> = std::result::Result<T, E>;

/// Sketching algorithm tag. The discriminant is the wire value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Algo {
    ReleaseDb = 0,
    ReleaseAnswers = 1,
    Subsample = 2,
    MedianBoost = 3,
}

impl Algo {
    pub const BASE: [Algo; 3] = [Algo::ReleaseDb, Algo::ReleaseAnswers, Algo::Subsample];

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Algo::ReleaseDb),
            1 => Some(Algo::ReleaseAnswers),
            2 => Some(Algo::Subsample),
            3 => Some(Algo::MedianBoost),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::ReleaseDb => "release-db",
            Algo::ReleaseAnswers => "release-answers",
            Algo::Subsample => "subsample",
            Algo::MedianBoost => "median-boost",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "release-db" | "exact" => Ok(Algo::ReleaseDb),
            "release-answers" | "answers" => Ok(Algo::ReleaseAnswers),
            "subsample" => Ok(Algo::Subsample),
            "median-boost" => Ok(Algo::MedianBoost),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// Query semantics. The discriminant is the wire value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Semantics {
    ForAllIndicator = 0,
    ForEachIndicator = 1,
    ForAllEstimator = 2,
    ForEachEstimator = 3,
}

impl Semantics {
    pub const ALL: [Semantics; 4] = [
        Semantics::ForAllIndicator,
        Semantics::ForEachIndicator,
        Semantics::ForAllEstimator,
        Semantics::ForEachEstimator,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn is_indicator(self) -> bool {
        matches!(
            self,
            Semantics::ForAllIndicator | Semantics::ForEachIndicator
        )
    }

    pub fn is_for_all(self) -> bool {
        matches!(
            self,
            Semantics::ForAllIndicator | Semantics::ForAllEstimator
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Semantics::ForAllIndicator => "for-all-indicator",
            Semantics::ForEachIndicator => "for-each-indicator",
            Semantics::ForAllEstimator => "for-all-estimator",
            Semantics::ForEachEstimator => "for-each-estimator",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown semantics {s:?}"))
    }
}

/// Precision, itemset size, failure probability and database shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
    pub d: usize,
}

impl SketchParams {
    pub fn new(k: usize, epsilon: f64, delta: f64, n: u64, d: usize) -> Result<Self> {
        let p = Self {
            k,
            epsilon,
            delta,
            n,
            d,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SketchError::InvalidParams(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("0 < epsilon < 1 (got {})", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("0 < delta < 1 (got {})", self.delta));
        }
        if self.k < 1 || self.k > self.d {
            return fail(format!("1 <= k <= d (got k={}, d={})", self.k, self.d));
        }
        if self.n < 1 {
            return fail("n >= 1".into());
        }
        if self.k > u16::MAX as usize || self.d > u32::MAX as usize {
            return fail("k must fit u16 and d must fit u32".into());
        }
        Ok(())
    }

    /// Same precision and itemset size for a database of a different shape.
    pub fn for_shape(&self, n: u64, d: usize) -> Result<Self> {
        Self::new(self.k, self.epsilon, self.delta, n, d)
    }
}

/// Serialized summary. `payload.len()` is the measured sketch size.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchBlob {
    pub algo: Algo,
    /// Algorithm of the sub-sketches when `algo` is [`Algo::MedianBoost`].
    pub base: Option<Algo>,
    pub semantics: Semantics,
    pub params: SketchParams,
    pub seed: u64,
    pub payload: BitString,
}

impl SketchBlob {
    pub fn size_bits(&self) -> u64 {
        self.payload.len() as u64
    }

    /// Number of sub-sketches in a boosted blob, `1` otherwise.
    pub fn copies(&self) -> Result<usize> {
        match (self.algo, self.base) {
            (Algo::MedianBoost, Some(base)) => {
                let sub = size::payload_bits(base, Semantics::ForEachEstimator, &self.params)?;
                if sub == 0 || !(self.payload.len() as u128).is_multiple_of(sub) {
                    return Err(SketchError::Format(format!(
                        "boosted payload of {} bits is not a multiple of the {sub}-bit sub-sketch",
                        self.payload.len()
                    )));
                }
                Ok((self.payload.len() as u128 / sub) as usize)
            }
            (Algo::MedianBoost, None) => Err(SketchError::Format(
                "median-boost blob without a base algorithm".into(),
            )),
            _ => Ok(1),
        }
    }
}
