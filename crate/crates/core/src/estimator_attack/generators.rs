//! Database generators built from a stack of factor matrices.
//!
//! `D0` has one row per factor column: row `j` concatenates column `j` of every
//! factor. `D1(y)` appends `y` as one extra column, so the itemset pairing
//! factor rows `(i_1, ..., i_s)` with that column has support `(A y)[i]`.
//! `D2(y')` appends `d0` such columns at once, one per block of `Enc(y')`.

use crate::attack::{invalid, Result};
use crate::bits::BitMatrix;
use crate::database::{Database, Itemset};
use crate::ecc::{Codec, EccError};

fn check_factors(factors: &[BitMatrix]) -> Result<(usize, usize)> {
    let Some(first) = factors.first() else {
        return invalid("need at least one factor");
    };
    let (d0, n) = (first.rows(), first.cols());
    if factors.iter().any(|f| f.rows() != d0 || f.cols() != n) {
        return invalid(format!("factors must all be {d0}x{n}"));
    }
    if d0 == 0 || n == 0 {
        return invalid("factors must be non-empty");
    }
    Ok((d0, n))
}

fn d0_matrix(factors: &[BitMatrix]) -> BitMatrix {
    factors
        .iter()
        .map(BitMatrix::transpose)
        .reduce(|acc, t| acc.hconcat(&t))
        .expect("checked non-empty")
}

/// `n x (s d0)` database of transposed factors.
pub fn build_d0(factors: &[BitMatrix]) -> Result<Database> {
    check_factors(factors)?;
    Ok(Database::from_matrix(d0_matrix(factors))?)
}

/// `D0` with `y` appended as the last column.
pub fn build_d1(factors: &[BitMatrix], y: &[bool]) -> Result<Database> {
    let (_, n) = check_factors(factors)?;
    if y.len() != n {
        return invalid(format!("y has {} bits, factors have {n} columns", y.len()));
    }
    let col = BitMatrix::from_rows(&y.iter().map(|&b| [b]).collect::<Vec<_>>(), 1);
    Ok(Database::from_matrix(d0_matrix(factors).hconcat(&col))?)
}

/// `D0` followed by `d0` special columns; special column `p` is bits `p n .. (p+1) n` of `Enc(y')`.
pub fn build_d2(factors: &[BitMatrix], yprime: &[bool], codec: &dyn Codec) -> Result<Database> {
    let (d0, n) = check_factors(factors)?;
    if codec.codeword_len() != d0 * n {
        return invalid(format!(
            "codec emits {} bits, need d0 n = {}",
            codec.codeword_len(),
            d0 * n
        ));
    }
    let enc = codec.encode(yprime)?;
    let mut special = BitMatrix::zeros(n, d0);
    for p in 0..d0 {
        for h in 0..n {
            if enc[p * n + h] {
                special.set(h, p, true);
            }
        }
    }
    Ok(Database::from_matrix(d0_matrix(factors).hconcat(&special))?)
}

/// The special itemset `{ j d0 + i_j } ∪ { s d0 + p }` over `(s + 1) d0` attributes,
/// where `s` is the number of factors. With `p = 0` it is also the itemset of
/// `D1` that pairs the tuple with `y`, since `y` sits at column `s d0`.
pub fn special_itemset(tuple: &[usize], p: usize, d0: usize, dim: usize) -> Result<Itemset> {
    let s = tuple.len();
    if tuple.iter().any(|&i| i >= d0) {
        return invalid(format!("row tuple {tuple:?} outside 0..{d0}"));
    }
    let mut attrs: Vec<usize> = tuple.iter().enumerate().map(|(j, &i)| j * d0 + i).collect();
    attrs.push(s * d0 + p);
    Ok(Itemset::from_indices(dim, attrs)?)
}

/// Places message bits at the positions `support` of each of `blocks` blocks of
/// `n` bits, zeros elsewhere. The positions are chosen so the decoder can tell
/// the block's bits apart from its counts alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCodec {
    pub n: usize,
    pub blocks: usize,
    pub support: Vec<usize>,
}

impl SupportCodec {
    pub fn new(n: usize, blocks: usize, support: Vec<usize>) -> Result<Self> {
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() || support.iter().any(|&h| h >= n) {
            return invalid(format!(
                "support {support:?} must be distinct positions below {n}"
            ));
        }
        Ok(SupportCodec { n, blocks, support })
    }
}

impl Codec for SupportCodec {
    fn message_len(&self) -> usize {
        self.blocks * self.support.len()
    }

    fn codeword_len(&self) -> usize {
        self.blocks * self.n
    }

    fn correctable_errors(&self) -> usize {
        0
    }

    fn encode(&self, message: &[bool]) -> Result<Vec<bool>, EccError> {
        if message.len() != self.message_len() {
            return Err(EccError::LengthMismatch {
                expected: self.message_len(),
                found: message.len(),
            });
        }
        let h = self.support.len();
        let mut out = vec![false; self.codeword_len()];
        for p in 0..self.blocks {
            for (i, &pos) in self.support.iter().enumerate() {
                out[p * self.n + pos] = message[p * h + i];
            }
        }
        Ok(out)
    }

    fn decode(&self, word: &[bool]) -> Result<Vec<bool>, EccError> {
        if word.len() != self.codeword_len() {
            return Err(EccError::LengthMismatch {
                expected: self.codeword_len(),
                found: word.len(),
            });
        }
        Ok((0..self.blocks)
            .flat_map(|p| self.support.iter().map(move |&pos| word[p * self.n + pos]))
            .collect())
    }
}
