//! Inner-product database: row `i` is `(x_i, y_i)` with `x_1..x_v` shattered by
//! `(k-1)`-itemsets, so `f(T_s ∪ {d + j}) = <s, t_j> / v` where `t_j` is column
//! `j` of the payload. An indicator sketch at `ε = 1/50` thresholds every such
//! inner product, and [`consistency_decode`] turns the thresholds back into a
//! column that is at most `v/25` flips away from `t_j`.

use crate::attack::{hamming_distance, invalid, AttackError, Result};
use crate::bits::BitMatrix;
use crate::combinatorics::KSubsets;
use crate::database::{exact_fraction, Database, Itemset};
use crate::ecc::{Codec, EccError, SyndromeCodec};
use crate::shatter::{build_family, ShatteredFamily};
use crate::sketch::{Semantics, Sketch, SketchBuilder, SketchParams};

/// Precision of the base construction.
pub const EPSILON_INNER: f64 = 1.0 / 50.0;

/// Largest `v` [`consistency_decode`] accepts; it reads `2^v` answers per column.
pub const MAX_CONSISTENCY_V: usize = 20;

#[derive(Debug, Clone)]
pub struct InnerProductInstance {
    pub family: ShatteredFamily,
    /// `v x d`, row `i` is `y_i`.
    pub payload: BitMatrix,
    /// `v x 2d`, row `i` is `(x_i, y_i)`.
    pub db: Database,
}

pub fn encode_inner_product(
    payload: &BitMatrix,
    family: &ShatteredFamily,
) -> Result<InnerProductInstance> {
    if payload.rows() != family.v() || payload.cols() != family.d() {
        return invalid(format!(
            "payload is {}x{}, family needs {}x{}",
            payload.rows(),
            payload.cols(),
            family.v(),
            family.d()
        ));
    }
    let db = Database::from_matrix(family.vectors().hconcat(payload))?;
    Ok(InnerProductInstance {
        family: family.clone(),
        payload: payload.clone(),
        db,
    })
}

/// `s` as a vector, `s_i` = bit `i` of `mask`.
fn mask_to_string(mask: u64, v: usize) -> Vec<bool> {
    (0..v).map(|i| mask >> i & 1 == 1).collect()
}

/// `T_{s,j} = T_s ∪ {d + j}` over `2d` attributes.
pub fn query_itemset(family: &ShatteredFamily, s: &[bool], j: usize) -> Result<Itemset> {
    let d = family.d();
    if j >= d {
        return invalid(format!("column {j} outside 0..{d}"));
    }
    let mut attrs = family.attrs_for_string(s)?;
    attrs.push(d + j);
    Ok(Itemset::from_indices(2 * d, attrs)?)
}

/// Find `t'` consistent with the thresholded inner products `b[mask]`.
///
/// `b[mask]` answers `s` with `s_i = (mask >> i) & 1`. A candidate `t'` must
/// satisfy `<s,t'>/v >= ε/2` wherever `b_s = 1` and `<s,t'>/v <= ε` wherever
/// `b_s = 0`, which every valid oracle's true `t` does. Candidates are tried in
/// Hamming-ball order around the answers to the singleton queries.
pub fn consistency_decode(b: &[bool], v: usize, epsilon: f64) -> Result<Vec<bool>> {
    if v == 0 || v > MAX_CONSISTENCY_V {
        return invalid(format!("1 <= v <= {MAX_CONSISTENCY_V} (got {v})"));
    }
    if b.len() != 1 << v {
        return invalid(format!("expected 2^{v} answers, got {}", b.len()));
    }
    let eps = exact_fraction(epsilon);
    let (num, den) = ((*eps.numer()), (*eps.denom()));
    let vv = v as u64;
    // b = 1 needs ip >= lo, b = 0 needs ip <= hi
    let lo = (0..=vv)
        .find(|ip| 2 * ip * den >= num * vv)
        .unwrap_or(vv + 1) as u32;
    let hi = (0..=vv)
        .rev()
        .find(|ip| ip * den <= num * vv)
        .map_or(-1, |x| x as i64);
    let consistent = |t: u64| {
        b.iter().enumerate().all(|(s, &bit)| {
            let ip = (s as u64 & t).count_ones();
            if bit {
                ip >= lo
            } else {
                ip as i64 <= hi
            }
        })
    };
    let start = (0..v).fold(0u64, |acc, i| acc | (b[1 << i] as u64) << i);
    for radius in 0..=v {
        for flips in KSubsets::new(v, radius) {
            let t = flips.iter().fold(start, |acc, &i| acc ^ 1 << i);
            if consistent(t) {
                return Ok(mask_to_string(t, v));
            }
        }
    }
    Err(AttackError::Inconsistent(format!(
        "all 2^{v} candidates violate some answer"
    )))
}

/// Read the payload column by column through an indicator oracle at `ε = 1/50`.
pub fn recover_payload<F>(family: &ShatteredFamily, mut oracle: F) -> Result<BitMatrix>
where
    F: FnMut(&Itemset) -> Result<bool>,
{
    let (v, d) = (family.v(), family.d());
    if v > MAX_CONSISTENCY_V {
        return invalid(format!("v = {v} exceeds {MAX_CONSISTENCY_V}"));
    }
    let strings: Vec<Vec<bool>> = (0..1u64 << v).map(|m| mask_to_string(m, v)).collect();
    let mut out = BitMatrix::zeros(v, d);
    for j in 0..d {
        let b = strings
            .iter()
            .map(|s| oracle(&query_itemset(family, s, j)?))
            .collect::<Result<Vec<bool>>>()?;
        for (i, bit) in consistency_decode(&b, v, EPSILON_INNER)?
            .into_iter()
            .enumerate()
        {
            out.set(i, j, bit);
        }
    }
    Ok(out)
}

/// Codec for the `d v` payload bits.
pub fn theorem4_codec(d: usize, k: usize) -> Result<SyndromeCodec> {
    let family = family_for(d, k)?;
    Ok(SyndromeCodec::new(d * family.v())?)
}

fn family_for(d: usize, k: usize) -> Result<ShatteredFamily> {
    if k < 2 {
        return invalid(format!("k >= 2 (got {k})"));
    }
    let family = build_family(d, k - 1)?;
    if family.v() > MAX_CONSISTENCY_V {
        return invalid(format!("v = {} exceeds {MAX_CONSISTENCY_V}", family.v()));
    }
    Ok(family)
}

fn pad(message: &[bool], len: usize) -> Result<Vec<bool>> {
    if message.len() > len {
        return invalid(format!(
            "message has {} bits, capacity is {len}",
            message.len()
        ));
    }
    let mut m = message.to_vec();
    m.resize(len, false);
    Ok(m)
}

/// Encode `message` (zero padded to the codec's capacity) into the inner-product database.
pub fn encode_theorem4(
    message: &[bool],
    d: usize,
    k: usize,
    codec: &dyn Codec,
) -> Result<InnerProductInstance> {
    let family = family_for(d, k)?;
    let v = family.v();
    if codec.codeword_len() != d * v {
        return invalid(format!(
            "codec length {} differs from d v = {}",
            codec.codeword_len(),
            d * v
        ));
    }
    let word = codec.encode(&pad(message, codec.message_len())?)?;
    let rows: Vec<&[bool]> = word.chunks(d).collect();
    encode_inner_product(&BitMatrix::from_rows(&rows, d), &family)
}

/// Raw payload estimate plus the outcome of error correction.
#[derive(Debug, Clone)]
pub struct PayloadDecode {
    pub codeword: Vec<bool>,
    pub message: std::result::Result<Vec<bool>, EccError>,
}

pub fn decode_theorem4<F>(
    family: &ShatteredFamily,
    codec: &dyn Codec,
    oracle: F,
) -> Result<PayloadDecode>
where
    F: FnMut(&Itemset) -> Result<bool>,
{
    let y = recover_payload(family, oracle)?;
    let codeword: Vec<bool> = y.to_rows().concat();
    let message = codec.decode(&codeword);
    Ok(PayloadDecode { codeword, message })
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub message: Vec<bool>,
    pub recovered: Option<Vec<bool>>,
    pub sketch_bits: u64,
    pub codeword_bits: usize,
    /// Payload as read through the oracle, before error correction.
    pub raw_codeword: Option<Vec<bool>>,
    /// Payload bits wrong before error correction.
    pub raw_bit_errors: Option<usize>,
    pub failure: Option<String>,
}

impl AttackOutcome {
    pub fn exact(&self) -> bool {
        self.recovered.as_deref() == Some(self.message.as_slice())
    }

    /// Fraction of message bits recovered. When error correction gave up, the
    /// systematic prefix of the raw payload stands in for the message.
    pub fn recovered_frac(&self) -> f64 {
        if self.message.is_empty() {
            return 1.0;
        }
        let got = match (&self.recovered, &self.raw_codeword) {
            (Some(r), _) => r.as_slice(),
            (None, Some(raw)) => raw.as_slice(),
            (None, None) => return 0.0,
        };
        let wrong = hamming_distance(&self.message, &got[..self.message.len().min(got.len())]);
        1.0 - wrong as f64 / self.message.len() as f64
    }
}

pub(crate) fn outcome_from_decode(
    message: &[bool],
    sent: &[bool],
    decoded: Result<PayloadDecode>,
    sketch_bits: u64,
) -> Result<AttackOutcome> {
    let mut out = AttackOutcome {
        message: message.to_vec(),
        recovered: None,
        sketch_bits,
        codeword_bits: sent.len(),
        raw_codeword: None,
        raw_bit_errors: None,
        failure: None,
    };
    match decoded {
        Ok(p) => {
            out.raw_bit_errors = Some(hamming_distance(&p.codeword, sent));
            out.raw_codeword = Some(p.codeword.clone());
            match p.message {
                Ok(m) => {
                    if m[message.len()..].iter().any(|&b| b) {
                        out.failure = Some("nonzero padding after decoding".into());
                    }
                    out.recovered = Some(m[..message.len()].to_vec());
                }
                Err(e) => out.failure = Some(e.to_string()),
            }
        }
        Err(AttackError::Inconsistent(e)) => out.failure = Some(e),
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Encode, sketch at `ε = 1/50` with for-all indicator semantics, decode.
pub fn attack_theorem4(
    message: &[bool],
    d: usize,
    k: usize,
    delta: f64,
    builder: &dyn SketchBuilder,
    codec: &dyn Codec,
    seed: u64,
) -> Result<AttackOutcome> {
    let inst = encode_theorem4(message, d, k, codec)?;
    let v = inst.family.v();
    let params = SketchParams::new(k, EPSILON_INNER, delta, v as u64, 2 * d)?;
    let blob = builder.build(&inst.db, &params, Semantics::ForAllIndicator, seed)?;
    let sketch = Sketch::from_blob(&blob)?;
    let sent: Vec<bool> = inst.payload.to_rows().concat();
    let decoded = decode_theorem4(&inst.family, codec, |t| Ok(sketch.indicator(t)?));
    outcome_from_decode(message, &sent, decoded, blob.size_bits())
}
