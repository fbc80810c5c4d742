//! Pieces shared by the indicator and estimator attacks.

use thiserror::Error;

use crate::database::{exact_fraction, ColumnIndex, Database, Itemset};
use crate::ecc::EccError;
use crate::error::Error;
use crate::shatter::ShatterError;
use crate::sketch::SketchError;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no candidate is consistent with the oracle answers: {0}")]
    Inconsistent(String),

    #[error("decoding failed: {0}")]
    Decode(String),

    #[error(transparent)]
    Ecc(#[from] EccError),

    #[error(transparent)]
    Sketch(#[from] SketchError),

    #[error(transparent)]
    Shatter(#[from] ShatterError),

    #[error(transparent)]
    Core(#[from] Error),
}

impl AttackError {
    /// True when the parameters were rejected up front, as opposed to a decode that failed.
    pub fn is_rejection(&self) -> bool {
        match self {
            AttackError::InvalidParams(_) | AttackError::Shatter(_) => true,
            AttackError::Sketch(e) => matches!(
                e,
                SketchError::InvalidParams(_) | SketchError::EnumerationTooLarge { .. }
            ),
            AttackError::Ecc(e) => matches!(e, EccError::Construction(_)),
            _ => false,
        }
    }
}

pub type Result<T, E = AttackError> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(AttackError::InvalidParams(msg.into()))
}

/// Exact `[f_T >= ε]` answers, the ideal indicator sketch.
pub fn exact_indicator(db: &Database, epsilon: f64) -> impl FnMut(&Itemset) -> Result<bool> {
    let index = ColumnIndex::new(db);
    let eps = exact_fraction(epsilon);
    let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
    move |t| {
        let support = index.support(t)? as u128;
        Ok(support * den >= num * index.n() as u128)
    }
}

/// Exact frequencies, the ideal estimator sketch.
pub fn exact_estimator(db: &Database) -> impl FnMut(&Itemset) -> Result<f64> {
    let index = ColumnIndex::new(db);
    move |t| Ok(index.frequency(t)?.to_f64())
}

pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}
