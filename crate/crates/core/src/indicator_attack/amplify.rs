//! Amplification to small `ε`: stack `m = 1/(50ε)` databases of `v` rows and
//! `2d` columns, appending to every row of block `i` the indicator of a tag
//! itemset `T_i ⊆ [d]` of size `(k-1)/2`. For any `T* ⊆ [2d]` of size
//! `(k+1)/2`, the `k`-itemset `T*_i = T* ∪ (T_i + 2d)` is contained only in
//! block `i`'s rows that contain `T*`, so `f_{T*_i}(db) = f_{T*}(block_i) / m`
//! and thresholds at `ε` on the big database are thresholds at `1/50` on block `i`.

use super::inner_product::{
    decode_theorem4, encode_theorem4, outcome_from_decode, theorem4_codec, AttackOutcome,
};
use crate::attack::{invalid, Result};
use crate::bits::BitMatrix;
use crate::combinatorics::{binomial, colex_unrank};
use crate::database::{exact_fraction, Database, Itemset};
use crate::sketch::{Semantics, Sketch, SketchBuilder, SketchParams};

#[derive(Debug, Clone)]
pub struct AmplifiedInstance {
    pub d: usize,
    pub k: usize,
    pub m: usize,
    /// Rows per block.
    pub v: usize,
    /// 0-based tag itemsets, first `m` in colex order.
    pub tags: Vec<Vec<usize>>,
    /// `(m v) x 3d`.
    pub db: Database,
}

/// `m = 1/(50ε)`, rejected unless it is a positive integer.
pub fn blocks_for_epsilon(epsilon: f64) -> Result<usize> {
    let eps = exact_fraction(epsilon);
    let (num, den) = (*eps.numer(), *eps.denom());
    if num == 0 || den % (50 * num) != 0 {
        return invalid(format!(
            "1/(50 epsilon) must be a positive integer (epsilon = {epsilon})"
        ));
    }
    Ok((den / (50 * num)) as usize)
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 || k.is_multiple_of(2) {
        return invalid(format!(
            "amplification needs odd k >= 3 (got {k}; try k = {})",
            k.max(2) + 1
        ));
    }
    Ok(())
}

pub fn amplify_encode(
    blocks: &[Database],
    d: usize,
    k: usize,
    epsilon: f64,
) -> Result<AmplifiedInstance> {
    check_k(k)?;
    let m = blocks_for_epsilon(epsilon)?;
    if blocks.len() != m {
        return invalid(format!(
            "epsilon = {epsilon} needs m = {m} blocks, got {}",
            blocks.len()
        ));
    }
    let tag_size = (k - 1) / 2;
    if tag_size > d || m as u128 > binomial(d as u64, tag_size as u64) {
        return invalid(format!(
            "m = {m} exceeds C(d, (k-1)/2) = C({d}, {tag_size})"
        ));
    }
    let v = blocks[0].n();
    if let Some(b) = blocks.iter().find(|b| b.d() != 2 * d || b.n() != v) {
        return invalid(format!(
            "blocks must all be {v}x{}, found {}x{}",
            2 * d,
            b.n(),
            b.d()
        ));
    }
    let tags: Vec<Vec<usize>> = (0..m).map(|i| colex_unrank(i as u128, tag_size)).collect();
    let parts: Vec<BitMatrix> = blocks
        .iter()
        .zip(&tags)
        .map(|(b, tag)| {
            let mut t = BitMatrix::zeros(v, d);
            for r in 0..v {
                for &a in tag {
                    t.set(r, a, true);
                }
            }
            b.matrix().hconcat(&t)
        })
        .collect();
    let refs: Vec<&BitMatrix> = parts.iter().collect();
    Ok(AmplifiedInstance {
        d,
        k,
        m,
        v,
        tags,
        db: Database::from_matrix(BitMatrix::vconcat(&refs))?,
    })
}

impl AmplifiedInstance {
    /// `T*_i = T* ∪ (T_i + 2d)` for a `(k+1)/2`-itemset `T* ⊆ [2d]`.
    pub fn translate(&self, block: usize, t_star: &Itemset) -> Result<Itemset> {
        if block >= self.m {
            return invalid(format!("block {block} outside 0..{}", self.m));
        }
        let want = self.k.div_ceil(2);
        if t_star.dim() != 2 * self.d || t_star.cardinality() != want {
            return invalid(format!(
                "query must be a {want}-itemset over {} attributes",
                2 * self.d
            ));
        }
        let mut attrs = t_star.indices();
        attrs.extend(self.tags[block].iter().map(|&a| a + 2 * self.d));
        Ok(Itemset::from_indices(3 * self.d, attrs)?)
    }

    pub fn block(&self, i: usize) -> Result<Database> {
        if i >= self.m {
            return invalid(format!("block {i} outside 0..{}", self.m));
        }
        let rows: Vec<Vec<bool>> = (i * self.v..(i + 1) * self.v)
            .map(|r| (0..2 * self.d).map(|c| self.db.get(r, c)).collect())
            .collect();
        Ok(Database::from_rows(&rows)?)
    }
}

/// Indicator oracle at `1/50` for block `i`, answered by a sketch of the stacked database.
pub fn amplified_oracle<'a>(
    sketch: &'a Sketch,
    inst: &'a AmplifiedInstance,
    block: usize,
) -> Result<impl FnMut(&Itemset) -> Result<bool> + 'a> {
    if block >= inst.m {
        return invalid(format!("block {block} outside 0..{}", inst.m));
    }
    Ok(move |t: &Itemset| Ok(sketch.indicator(&inst.translate(block, t)?)?))
}

#[derive(Debug, Clone)]
pub struct AmplifiedOutcome {
    pub sketch_bits: u64,
    pub blocks: Vec<AttackOutcome>,
}

impl AmplifiedOutcome {
    pub fn exact(&self) -> bool {
        self.blocks.iter().all(AttackOutcome::exact)
    }
}

/// Encode one message per block with the `(k+1)/2` construction, sketch the stacked
/// database at `ε`, and decode every block through [`amplified_oracle`].
pub fn attack_amplified(
    messages: &[Vec<bool>],
    d: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    builder: &dyn SketchBuilder,
    seed: u64,
) -> Result<AmplifiedOutcome> {
    check_k(k)?;
    let k_inner = k.div_ceil(2);
    let codec = theorem4_codec(d, k_inner)?;
    let insts = messages
        .iter()
        .map(|m| encode_theorem4(m, d, k_inner, &codec))
        .collect::<Result<Vec<_>>>()?;
    let blocks: Vec<Database> = insts.iter().map(|i| i.db.clone()).collect();
    let amp = amplify_encode(&blocks, d, k, epsilon)?;
    let params = SketchParams::new(k, epsilon, delta, amp.db.n() as u64, 3 * d)?;
    let blob = builder.build(&amp.db, &params, Semantics::ForAllIndicator, seed)?;
    let sketch = Sketch::from_blob(&blob)?;
    let mut outcomes = Vec::with_capacity(messages.len());
    for (i, (inst, msg)) in insts.iter().zip(messages).enumerate() {
        let sent: Vec<bool> = inst.payload.to_rows().concat();
        let decoded = decode_theorem4(&inst.family, &codec, amplified_oracle(&sketch, &amp, i)?);
        outcomes.push(outcome_from_decode(msg, &sent, decoded, blob.size_bits())?);
    }
    Ok(AmplifiedOutcome {
        sketch_bits: blob.size_bits(),
        blocks: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::exact_indicator;
    use crate::combinatorics::KSubsets;
    use crate::ecc::Codec;
    use crate::indicator_attack::EPSILON_INNER;
    use crate::rng::{random_bits, random_database, stream_rng};
    use crate::sketch::Builder;
    use num_rational::Ratio;

    #[test]
    fn block_count() {
        assert_eq!(blocks_for_epsilon(0.01).unwrap(), 2);
        assert_eq!(blocks_for_epsilon(0.02).unwrap(), 1);
        assert!(blocks_for_epsilon(0.03).is_err());
    }

    #[test]
    fn single_block_is_tagged_copy() {
        let b = random_database(3, 8, 0.5, 1);
        let amp = amplify_encode(std::slice::from_ref(&b), 4, 3, 0.02).unwrap();
        for r in 0..3 {
            for c in 0..8 {
                assert_eq!(amp.db.get(r, c), b.get(r, c));
            }
            assert_eq!(
                (8..12).map(|c| amp.db.get(r, c)).collect::<Vec<_>>(),
                vec![true, false, false, false]
            );
        }
    }

    #[test]
    fn frequency_identity_is_exact() {
        let (d, k) = (8, 3);
        let blocks = vec![
            random_database(4, 16, 0.5, 1),
            random_database(4, 16, 0.5, 2),
        ];
        let amp = amplify_encode(&blocks, d, k, 0.01).unwrap();
        for (i, block) in blocks.iter().enumerate() {
            for attrs in KSubsets::new(2 * d, 2) {
                let t = Itemset::from_indices(2 * d, attrs).unwrap();
                let big = amp
                    .db
                    .frequency(&amp.translate(i, &t).unwrap())
                    .unwrap()
                    .ratio();
                let small = block.frequency(&t).unwrap().ratio();
                assert_eq!(big, small / Ratio::from_integer(2));
            }
        }
    }

    #[test]
    fn oracle_matches_block_indicator() {
        let (d, k) = (8, 3);
        let blocks = vec![
            random_database(6, 16, 0.3, 4),
            random_database(6, 16, 0.3, 5),
        ];
        let amp = amplify_encode(&blocks, d, k, 0.01).unwrap();
        let p = SketchParams::new(k, 0.01, 0.1, 12, 24).unwrap();
        let sketch = Sketch::from_blob(
            &Builder::ReleaseDb
                .build(&amp.db, &p, Semantics::ForAllIndicator, 0)
                .unwrap(),
        )
        .unwrap();
        for (i, block) in blocks.iter().enumerate() {
            let mut via = amplified_oracle(&sketch, &amp, i).unwrap();
            let mut direct = exact_indicator(block, EPSILON_INNER);
            for attrs in KSubsets::new(2 * d, 2) {
                let t = Itemset::from_indices(2 * d, attrs).unwrap();
                assert_eq!(via(&t).unwrap(), direct(&t).unwrap());
            }
        }
        assert!(amplified_oracle(&sketch, &amp, 2).is_err());
    }

    #[test]
    fn even_k_is_rejected() {
        let b = random_database(3, 8, 0.5, 1);
        assert!(amplify_encode(&[b], 4, 4, 0.02)
            .unwrap_err()
            .to_string()
            .contains("k = 5"));
    }

    #[test]
    fn nested_pipeline_round_trip() {
        let mut rng = stream_rng(10, 0);
        let cap = theorem4_codec(8, 2).unwrap().message_len();
        let msgs: Vec<Vec<bool>> = (0..2).map(|_| random_bits(cap, &mut rng)).collect();
        let out = attack_amplified(&msgs, 8, 3, 0.01, 0.1, &Builder::ReleaseDb, 0).unwrap();
        assert!(out.exact());
    }
}
