use super::size::{self, quantization_bits};
use super::{Algo, Result, Semantics, SketchBlob, SketchError, SketchParams};
use crate::bits::{BitMatrix, BitString};
use crate::combinatorics::colex_rank;
use crate::database::{exact_fraction, ColumnIndex, Database, Itemset};

/// One query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Answer {
    Indicator(bool),
    Estimate(f64),
}

impl Answer {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Answer::Indicator(b) => Some(b),
            Answer::Estimate(_) => None,
        }
    }

    pub fn as_f64(self) -> Option<f64> {
        match self {
            Answer::Estimate(x) => Some(x),
            Answer::Indicator(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Body {
    /// Released or sampled rows; indicator fires at `support / rows >= num / den`.
    Rows {
        index: ColumnIndex,
        num: u128,
        den: u128,
    },
    Answers {
        width: usize,
        bits: BitString,
    },
    Boosted(Vec<Body>),
}

/// A blob decoded into a queryable structure.
#[derive(Debug, Clone)]
pub struct Sketch {
    algo: Algo,
    semantics: Semantics,
    params: SketchParams,
    body: Body,
}

fn rows_from_payload(
    payload: &BitString,
    offset: usize,
    rows: usize,
    d: usize,
) -> Result<ColumnIndex> {
    let mut m = BitMatrix::zeros(rows, d);
    for r in 0..rows {
        let base = offset + r * d;
        for c in 0..d {
            if payload.get(base + c) {
                m.set(r, c, true);
            }
        }
    }
    let db = Database::from_matrix(m)?;
    Ok(ColumnIndex::new(&db))
}

fn decode_body(
    algo: Algo,
    semantics: Semantics,
    params: &SketchParams,
    payload: &BitString,
    offset: usize,
) -> Result<Body> {
    let d = params.d;
    let eps = exact_fraction(params.epsilon);
    let (num, den) = (*eps.numer() as u128, *eps.denom() as u128);
    let expected = size::payload_bits(algo, semantics, params)? as usize;
    if offset + expected > payload.len() {
        return Err(SketchError::Format(format!(
            "payload of {} bits is shorter than the {expected}-bit {algo} sketch",
            payload.len()
        )));
    }
    Ok(match algo {
        Algo::ReleaseDb => Body::Rows {
            index: rows_from_payload(payload, offset, params.n as usize, d)?,
            num,
            den,
        },
        Algo::Subsample => Body::Rows {
            index: rows_from_payload(payload, offset, expected / d, d)?,
            num: 3 * num,
            den: 4 * den,
        },
        Algo::ReleaseAnswers => Body::Answers {
            width: if semantics.is_indicator() {
                1
            } else {
                quantization_bits(params.epsilon)
            },
            bits: payload.slice(offset, expected),
        },
        Algo::MedianBoost => unreachable!("boosted bodies are decoded by Sketch::from_blob"),
    })
}

impl Sketch {
    pub fn from_blob(blob: &SketchBlob) -> Result<Self> {
        blob.params.validate()?;
        let body = match blob.algo {
            Algo::MedianBoost => {
                let base = blob.base.ok_or_else(|| {
                    SketchError::Format("median-boost blob without a base algorithm".into())
                })?;
                if blob.semantics.is_indicator() {
                    return Err(SketchError::Format(
                        "median-boost blob with indicator semantics".into(),
                    ));
                }
                let copies = blob.copies()?;
                let sub =
                    size::payload_bits(base, Semantics::ForEachEstimator, &blob.params)? as usize;
                let bodies = (0..copies)
                    .map(|i| {
                        decode_body(
                            base,
                            Semantics::ForEachEstimator,
                            &blob.params,
                            &blob.payload,
                            i * sub,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Body::Boosted(bodies)
            }
            algo => {
                let expected = size::payload_bits(algo, blob.semantics, &blob.params)?;
                if blob.payload.len() as u128 != expected {
                    return Err(SketchError::Format(format!(
                        "{algo} payload has {} bits, expected {expected}",
                        blob.payload.len()
                    )));
                }
                decode_body(algo, blob.semantics, &blob.params, &blob.payload, 0)?
            }
        };
        Ok(Self {
            algo: blob.algo,
            semantics: blob.semantics,
            params: blob.params,
            body,
        })
    }

    pub fn algo(&self) -> Algo {
        self.algo
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    fn check(&self, t: &Itemset) -> Result<Vec<usize>> {
        if t.dim() != self.params.d {
            return Err(SketchError::DimensionMismatch {
                expected: self.params.d,
                found: t.dim(),
            });
        }
        if t.cardinality() != self.params.k {
            return Err(SketchError::CardinalityMismatch {
                expected: self.params.k,
                found: t.cardinality(),
            });
        }
        Ok(t.indices())
    }

    /// Answer under the recorded semantics.
    pub fn query(&self, t: &Itemset) -> Result<Answer> {
        let attrs = self.check(t)?;
        Ok(self.answer_attrs(&attrs))
    }

    /// Answer, rejecting the query unless `semantics` is the one the sketch was built for.
    pub fn query_as(&self, semantics: Semantics, t: &Itemset) -> Result<Answer> {
        if semantics != self.semantics {
            return Err(SketchError::SemanticsMismatch {
                built: self.semantics,
                requested: semantics,
            });
        }
        self.query(t)
    }

    pub fn indicator(&self, t: &Itemset) -> Result<bool> {
        match self.query(t)? {
            Answer::Indicator(b) => Ok(b),
            Answer::Estimate(_) => Err(SketchError::SemanticsMismatch {
                built: self.semantics,
                requested: if self.semantics.is_for_all() {
                    Semantics::ForAllIndicator
                } else {
                    Semantics::ForEachIndicator
                },
            }),
        }
    }

    pub fn estimate(&self, t: &Itemset) -> Result<f64> {
        match self.query(t)? {
            Answer::Estimate(x) => Ok(x),
            Answer::Indicator(_) => Err(SketchError::SemanticsMismatch {
                built: self.semantics,
                requested: if self.semantics.is_for_all() {
                    Semantics::ForAllEstimator
                } else {
                    Semantics::ForEachEstimator
                },
            }),
        }
    }

    /// Answer for a sorted, 0-based attribute list of length k. No validation.
    pub fn answer_attrs(&self, attrs: &[usize]) -> Answer {
        if self.semantics.is_indicator() {
            Answer::Indicator(indicator_of(&self.body, attrs))
        } else {
            Answer::Estimate(estimate_of(&self.body, attrs))
        }
    }
}

fn indicator_of(body: &Body, attrs: &[usize]) -> bool {
    match body {
        Body::Rows { index, num, den } => {
            index.support_of(attrs) as u128 * den >= num * index.n() as u128
        }
        Body::Answers { bits, .. } => bits.get(colex_rank(attrs) as usize),
        Body::Boosted(_) => unreachable!("boosted sketches are estimators"),
    }
}

fn estimate_of(body: &Body, attrs: &[usize]) -> f64 {
    match body {
        Body::Rows { index, .. } => index.support_of(attrs) as f64 / index.n() as f64,
        Body::Answers { width, bits } => {
            let level = bits.read_uint(colex_rank(attrs) as usize * width, *width);
            // midpoint of the quantization cell, so the error is below one quantum
            (level as f64 + 0.5) / (1u64 << width) as f64
        }
        Body::Boosted(copies) => {
            let mut xs: Vec<f64> = copies.iter().map(|b| estimate_of(b, attrs)).collect();
            xs.sort_by(f64::total_cmp);
            xs[(xs.len() - 1) / 2]
        }
    }
}

/// Decode and answer in one step. Prefer [`Sketch`] when issuing many queries.
pub fn query(blob: &SketchBlob, t: &Itemset) -> Result<Answer> {
    Sketch::from_blob(blob)?.query(t)
}
