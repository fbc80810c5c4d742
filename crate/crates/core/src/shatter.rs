//! Explicit vectors shattered by k'-itemset queries.
//!
//! `X` is a `k' x k'` grid of blocks, each `log2(d/k')` rows by `d/k'`
//! columns: the diagonal blocks are `Y`, whose columns enumerate every
//! `log2(d/k')`-bit string, and the off-diagonal blocks are all ones. A string
//! `s` of `v = k' log2(d/k')` bits picks one column `ℓ_i` in every column
//! group, and the itemset `T_s = {i (d/k') + ℓ_i}` is contained in row `x_j`
//! exactly when `s_j = 1`.

use rayon::prelude::*;
use thiserror::Error;

use crate::bits::BitMatrix;
use crate::database::{row_contains, Database, Itemset};

/// Largest `v` that [`verify_shatter`] will enumerate.
pub const MAX_VERIFY_V: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShatterError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("string has {found} bits, family needs {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("v = {v} exceeds the exhaustive budget of {limit}")]
    BudgetExceeded { v: usize, limit: usize },
}

fn log2_exact(x: usize) -> Option<usize> {
    (x >= 2 && x.is_power_of_two()).then(|| x.trailing_zeros() as usize)
}

/// All ones with a zero diagonal.
pub fn build_w(kprime: usize) -> Result<BitMatrix, ShatterError> {
    if kprime == 0 {
        return Err(ShatterError::InvalidShape("k' >= 1".into()));
    }
    let mut w = BitMatrix::ones(kprime, kprime);
    for i in 0..kprime {
        w.set(i, i, false);
    }
    Ok(w)
}

/// `log2(d) x d`; column `j` is `j` in big-endian binary.
pub fn build_y(d: usize) -> Result<BitMatrix, ShatterError> {
    let rows = log2_exact(d).ok_or_else(|| {
        ShatterError::InvalidShape(format!("d = {d} must be a power of two >= 2"))
    })?;
    let mut y = BitMatrix::zeros(rows, d);
    for j in 0..d {
        for r in 0..rows {
            y.set(r, j, (j >> (rows - 1 - r)) & 1 == 1);
        }
    }
    Ok(y)
}

/// Largest `d' <= d` with `d'/k'` a power of two `>= 2`, if any.
pub fn round_dimension(d: usize, kprime: usize) -> Option<usize> {
    if kprime == 0 || d < 2 * kprime {
        return None;
    }
    let group = d / kprime;
    let pow = 1usize << (usize::BITS - 1 - group.leading_zeros());
    Some(pow * kprime)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShatteredFamily {
    d: usize,
    kprime: usize,
    bits_per_group: usize,
    vectors: BitMatrix,
}

pub fn build_family(d: usize, kprime: usize) -> Result<ShatteredFamily, ShatterError> {
    if kprime == 0 || !d.is_multiple_of(kprime) {
        return Err(ShatterError::InvalidShape(format!(
            "k' = {kprime} must divide d = {d}"
        )));
    }
    let group = d / kprime;
    let y = build_y(group).map_err(|_| {
        ShatterError::InvalidShape(format!("d/k' = {group} must be a power of two >= 2"))
    })?;
    let w = build_w(kprime)?;
    let b = y.rows();
    let mut x = BitMatrix::zeros(kprime * b, d);
    for bi in 0..kprime {
        for bj in 0..kprime {
            for r in 0..b {
                for c in 0..group {
                    let bit = if w.get(bi, bj) { true } else { y.get(r, c) };
                    x.set(bi * b + r, bj * group + c, bit);
                }
            }
        }
    }
    Ok(ShatteredFamily {
        d,
        kprime,
        bits_per_group: b,
        vectors: x,
    })
}

impl ShatteredFamily {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kprime(&self) -> usize {
        self.kprime
    }

    pub fn v(&self) -> usize {
        self.vectors.rows()
    }

    pub fn group_size(&self) -> usize {
        self.d / self.kprime
    }

    pub fn vectors(&self) -> &BitMatrix {
        &self.vectors
    }

    pub fn to_database(&self) -> Database {
        Database::from_matrix(self.vectors.clone()).expect("v, d >= 1")
    }

    /// Flip one entry of `X`; only useful for checking that verification notices.
    pub fn flip(&mut self, row: usize, col: usize) {
        self.vectors.flip(row, col);
    }

    /// 0-based attributes of `T_s`, one per column group.
    pub fn attrs_for_string(&self, s: &[bool]) -> Result<Vec<usize>, ShatterError> {
        if s.len() != self.v() {
            return Err(ShatterError::LengthMismatch {
                expected: self.v(),
                found: s.len(),
            });
        }
        let group = self.group_size();
        Ok(s.chunks(self.bits_per_group)
            .enumerate()
            .map(|(i, block)| {
                let l = block.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
                i * group + l
            })
            .collect())
    }

    pub fn itemset_for_string(&self, s: &[bool]) -> Result<Itemset, ShatterError> {
        let attrs = self.attrs_for_string(s)?;
        Ok(Itemset::from_indices(self.d, attrs).expect("attributes below d"))
    }

    /// `T_s` for the string whose bits are `mask`, most significant bit first.
    pub fn itemset_for_mask(&self, mask: u64) -> Itemset {
        let v = self.v();
        let s: Vec<bool> = (0..v).map(|i| (mask >> (v - 1 - i)) & 1 == 1).collect();
        self.itemset_for_string(&s).expect("length v")
    }
}

/// `T_s` with 1-based attributes.
pub fn itemset_for_string(
    family: &ShatteredFamily,
    s: &[bool],
) -> Result<Vec<usize>, ShatterError> {
    Ok(family.itemset_for_string(s)?.to_one_based())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub s: Vec<bool>,
    pub row: usize,
    pub expected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShatterReport {
    pub strings_checked: u64,
    pub counterexample: Option<Counterexample>,
}

impl ShatterReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Check `f_{T_s}(x_i) = s_i` for every `s` in `{0,1}^v` and every row.
pub fn verify_shatter(family: &ShatteredFamily) -> Result<ShatterReport, ShatterError> {
    let v = family.v();
    if v > MAX_VERIFY_V {
        return Err(ShatterError::BudgetExceeded {
            v,
            limit: MAX_VERIFY_V,
        });
    }
    let x = family.vectors();
    let counterexample = (0..1u64 << v).into_par_iter().find_map_first(|mask| {
        let t = family.itemset_for_mask(mask);
        (0..v).find_map(|i| {
            let expected = (mask >> (v - 1 - i)) & 1 == 1;
            (row_contains(x.row_words(i), &t) != expected).then(|| Counterexample {
                s: (0..v).map(|j| (mask >> (v - 1 - j)) & 1 == 1).collect(),
                row: i,
                expected,
            })
        })
    });
    Ok(ShatterReport {
        strings_checked: match &counterexample {
            None => 1u64 << v,
            Some(c) => c.s.iter().fold(0u64, |acc, &b| acc << 1 | b as u64) + 1,
        },
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(m: &BitMatrix) -> Vec<Vec<u8>> {
        m.to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(u8::from).collect())
            .collect()
    }

    #[test]
    fn w_matrix() {
        assert_eq!(
            rows(&build_w(3).unwrap()),
            vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]
        );
        assert_eq!(rows(&build_w(1).unwrap()), vec![vec![0]]);
    }

    #[test]
    fn w_rows_are_shattered_by_zero_sets() {
        let k = 4;
        let w = build_w(k).unwrap();
        for mask in 0u32..1 << k {
            let t = Itemset::from_indices(k, (0..k).filter(|&i| mask >> i & 1 == 0)).unwrap();
            for i in 0..k {
                assert_eq!(row_contains(w.row_words(i), &t), mask >> i & 1 == 1);
            }
        }
    }

    #[test]
    fn y_matrix() {
        assert_eq!(
            rows(&build_y(4).unwrap()),
            vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]]
        );
        assert_eq!(rows(&build_y(2).unwrap()), vec![vec![0, 1]]);
        assert!(build_y(6).is_err());
        assert!(build_y(1).is_err());
    }

    #[test]
    fn y_singletons_shatter() {
        let y = build_y(8).unwrap();
        for j in 0..8usize {
            let t = Itemset::from_indices(8, [j]).unwrap();
            for r in 0..3 {
                assert_eq!(row_contains(y.row_words(r), &t), (j >> (2 - r)) & 1 == 1);
            }
        }
    }

    #[test]
    fn family_examples() {
        let f = build_family(4, 2).unwrap();
        assert_eq!(rows(f.vectors()), vec![vec![0, 1, 1, 1], vec![1, 1, 0, 1]]);
        assert_eq!(f.v(), 2);
        assert_eq!(build_family(8, 1).unwrap().vectors(), &build_y(8).unwrap());
        assert_eq!(itemset_for_string(&f, &[false, false]).unwrap(), vec![1, 3]);
        assert_eq!(itemset_for_string(&f, &[true, true]).unwrap(), vec![2, 4]);
        let f8 = build_family(8, 1).unwrap();
        assert_eq!(
            itemset_for_string(&f8, &[true, false, true]).unwrap(),
            vec![6]
        );
        assert!(matches!(
            f.itemset_for_string(&[true]),
            Err(ShatterError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn family_shape_errors() {
        assert!(build_family(12, 2).is_err());
        assert!(build_family(9, 2).is_err());
        assert!(build_family(4, 4).is_err());
    }

    #[test]
    fn verify_passes_and_catches_mutation() {
        for (d, k) in [(8, 2), (4, 1), (16, 2), (32, 4)] {
            let f = build_family(d, k).unwrap();
            let r = verify_shatter(&f).unwrap();
            assert!(r.passed());
            assert_eq!(r.strings_checked, 1 << f.v());
        }
        let mut f = build_family(8, 2).unwrap();
        f.flip(1, 5);
        assert!(verify_shatter(&f).unwrap().counterexample.is_some());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_dimension(20, 2), Some(16));
        assert_eq!(round_dimension(16, 2), Some(16));
        assert_eq!(round_dimension(7, 1), Some(4));
        assert_eq!(round_dimension(3, 2), None);
    }
}
