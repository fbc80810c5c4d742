//! Encoders and decoders showing that indicator sketches must store a lot.
//!
//! * [`encode_unique_rows`] / [`decode_unique_rows`]: each of `1/ε` base rows
//!   owns a distinct `(k-1)`-subset of the left half, so `f_T >= ε` for
//!   `T = subset ∪ {j}` exactly when the row's right half has bit `j` set.
//! * [`attack_unique_rows`]: the whole message through one for-all sketch.
//! * [`simulate_index_protocol`]: the same construction run as a one-way
//!   INDEX protocol, where the message is the sketch.
//! * [`inner_product`]: shattered rows next to arbitrary payload rows turn
//!   indicator answers into thresholded inner products, which a consistency
//!   search inverts column by column.
//! * [`amplify`]: tagged copies of many databases so one sketch at precision
//!   `ε` answers precision-`1/50` queries on each of them.

pub mod amplify;
pub mod inner_product;

use crate::attack::{hamming_distance, invalid, Result};
use crate::combinatorics::{binomial, colex_unrank};
use crate::database::{Database, Itemset};
use crate::sketch::{Semantics, Sketch, SketchBuilder, SketchParams};

pub use amplify::{amplified_oracle, amplify_encode, attack_amplified, AmplifiedInstance};
pub use inner_product::{
    attack_theorem4, consistency_decode, decode_theorem4, encode_inner_product, encode_theorem4,
    query_itemset, theorem4_codec, AttackOutcome, InnerProductInstance, EPSILON_INNER,
};

#[derive(Debug, Clone)]
pub struct UniqueRowInstance {
    pub d: usize,
    pub k: usize,
    pub inv_epsilon: usize,
    /// Copies of every base row; the remainder `n mod (1/ε)` repeats base row 0.
    pub dup: usize,
    pub db: Database,
}

impl UniqueRowInstance {
    pub fn message_len(&self) -> usize {
        self.d / 2 * self.inv_epsilon
    }
}

fn check_unique_rows(d: usize, k: usize, inv_epsilon: usize) -> Result<()> {
    if d < 2 || !d.is_multiple_of(2) {
        return invalid(format!("d = {d} must be even and >= 2"));
    }
    if k < 2 || k - 1 > d / 2 {
        return invalid(format!("2 <= k <= d/2 + 1 (got k = {k}, d = {d})"));
    }
    if inv_epsilon == 0 {
        return invalid("1/epsilon must be a positive integer");
    }
    let capacity = binomial((d / 2) as u64, (k - 1) as u64);
    if inv_epsilon as u128 > capacity {
        return invalid(format!(
            "1/epsilon > C(d/2, k-1): {inv_epsilon} > C({}, {}) = {capacity}",
            d / 2,
            k - 1
        ));
    }
    Ok(())
}

/// The `(k-1)`-subset of the left half owned by base row `i`.
fn base_subset(i: usize, k: usize) -> Vec<usize> {
    colex_unrank(i as u128, k - 1)
}

/// Itemset `T_{i,j}`: base row `i`'s subset plus right-half column `j` (0-based within the half).
pub fn unique_row_query(d: usize, k: usize, i: usize, j: usize) -> Itemset {
    let mut attrs = base_subset(i, k);
    attrs.push(d / 2 + j);
    Itemset::from_indices(d, attrs).expect("attributes below d")
}

pub fn encode_unique_rows(
    message: &[bool],
    d: usize,
    k: usize,
    inv_epsilon: usize,
    n: usize,
) -> Result<UniqueRowInstance> {
    check_unique_rows(d, k, inv_epsilon)?;
    let half = d / 2;
    if message.len() != half * inv_epsilon {
        return invalid(format!(
            "message has {} bits, expected (d/2)(1/epsilon) = {}",
            message.len(),
            half * inv_epsilon
        ));
    }
    if n < inv_epsilon {
        return invalid(format!(
            "n = {n} must be at least 1/epsilon = {inv_epsilon}"
        ));
    }
    let base: Vec<Vec<bool>> = (0..inv_epsilon)
        .map(|i| {
            let mut row = vec![false; d];
            for a in base_subset(i, k) {
                row[a] = true;
            }
            row[half..].copy_from_slice(&message[i * half..(i + 1) * half]);
            row
        })
        .collect();
    let dup = n / inv_epsilon;
    let rows: Vec<&Vec<bool>> = (0..n)
        .map(|r| {
            if r < dup * inv_epsilon {
                &base[r / dup]
            } else {
                &base[0]
            }
        })
        .collect();
    Ok(UniqueRowInstance {
        d,
        k,
        inv_epsilon,
        dup,
        db: Database::from_rows(&rows)?,
    })
}

/// Query every `T_{i,j}` and read the message off the answers.
pub fn decode_unique_rows<F>(
    d: usize,
    k: usize,
    inv_epsilon: usize,
    mut oracle: F,
) -> Result<Vec<bool>>
where
    F: FnMut(&Itemset) -> Result<bool>,
{
    check_unique_rows(d, k, inv_epsilon)?;
    let half = d / 2;
    let mut out = Vec::with_capacity(half * inv_epsilon);
    for i in 0..inv_epsilon {
        for j in 0..half {
            out.push(oracle(&unique_row_query(d, k, i, j))?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexOutcome {
    pub bit: bool,
    pub communication_bits: u64,
}

/// Alice encodes `x` and sends a for-each indicator sketch; Bob answers `T_y`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_index_protocol(
    x: &[bool],
    y: usize,
    d: usize,
    k: usize,
    inv_epsilon: usize,
    n: usize,
    delta: f64,
    builder: &dyn SketchBuilder,
    seed: u64,
) -> Result<IndexOutcome> {
    if y >= x.len() {
        return invalid(format!("index {y} outside 0..{}", x.len()));
    }
    let inst = encode_unique_rows(x, d, k, inv_epsilon, n)?;
    let params = SketchParams::new(k, 1.0 / inv_epsilon as f64, delta, n as u64, d)?;
    let blob = builder.build(&inst.db, &params, Semantics::ForEachIndicator, seed)?;
    let sketch = Sketch::from_blob(&blob)?;
    let half = d / 2;
    let bit = sketch.indicator(&unique_row_query(d, k, y / half, y % half))?;
    Ok(IndexOutcome {
        bit,
        communication_bits: blob.size_bits(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniqueRowOutcome {
    pub message: Vec<bool>,
    pub recovered: Vec<bool>,
    pub sketch_bits: u64,
}

impl UniqueRowOutcome {
    pub fn exact(&self) -> bool {
        self.recovered == self.message
    }

    pub fn recovered_frac(&self) -> f64 {
        if self.message.is_empty() {
            return 1.0;
        }
        1.0 - hamming_distance(&self.message, &self.recovered) as f64 / self.message.len() as f64
    }
}

/// Encode the whole message, sketch it with for-all indicator semantics, and read every bit back.
#[allow(clippy::too_many_arguments)]
pub fn attack_unique_rows(
    message: &[bool],
    d: usize,
    k: usize,
    inv_epsilon: usize,
    n: usize,
    delta: f64,
    builder: &dyn SketchBuilder,
    seed: u64,
) -> Result<UniqueRowOutcome> {
    let inst = encode_unique_rows(message, d, k, inv_epsilon, n)?;
    let params = SketchParams::new(k, 1.0 / inv_epsilon as f64, delta, n as u64, d)?;
    let blob = builder.build(&inst.db, &params, Semantics::ForAllIndicator, seed)?;
    let sketch = Sketch::from_blob(&blob)?;
    let recovered = decode_unique_rows(d, k, inv_epsilon, |t| Ok(sketch.indicator(t)?))?;
    Ok(UniqueRowOutcome {
        message: message.to_vec(),
        recovered,
        sketch_bits: blob.size_bits(),
    })
}
