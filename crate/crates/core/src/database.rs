//! Binary databases, itemsets and exact itemset frequencies.
//!
//! Attributes are 0-based everywhere inside the crate. The 1-based `[d]`
//! numbering appears only in [`Itemset::from_one_based`], [`Itemset::to_one_based`]
//! and the text formats.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_rational::Ratio;

use crate::bits::{words_for, BitMatrix};
use crate::error::{Error, Result};

/// Subset of `[d]`, stored as a `d`-bit indicator vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Itemset {
    d: usize,
    words: Vec<u64>,
}

impl Itemset {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            words: vec![0; words_for(d)],
        }
    }

    /// Builds from 0-based attribute indices.
    pub fn from_indices(d: usize, attrs: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut t = Self::empty(d);
        for a in attrs {
            if a >= d {
                return Err(Error::AttributeOutOfRange { attr: a + 1, d });
            }
            t.words[a / 64] |= 1 << (a % 64);
        }
        Ok(t)
    }

    /// Builds from 1-based attribute numbers.
    pub fn from_one_based(d: usize, attrs: &[usize]) -> Result<Self> {
        if let Some(&bad) = attrs.iter().find(|&&a| a == 0 || a > d) {
            return Err(Error::AttributeOutOfRange { attr: bad, d });
        }
        Self::from_indices(d, attrs.iter().map(|a| a - 1))
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut t = Self::empty(bits.len());
        for (a, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            t.words[a / 64] |= 1 << (a % 64);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cardinality(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn contains(&self, attr: usize) -> bool {
        attr < self.d && (self.words[attr / 64] >> (attr % 64)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Sorted 0-based members.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.d).filter(|&a| self.contains(a)).collect()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices().into_iter().map(|a| a + 1).collect()
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        self.d == other.d
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Itemset) -> Result<Itemset> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        Ok(Itemset {
            d: self.d,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a | b)
                .collect(),
        })
    }
}

impl fmt::Debug for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Itemset(d={}, {:?})", self.d, self.to_one_based())
    }
}

/// `1` iff every member of `t` is set in `row`.
pub fn row_contains(row: &[u64], t: &Itemset) -> bool {
    debug_assert_eq!(row.len(), t.words.len());
    row.iter().zip(&t.words).all(|(r, m)| r & m == *m)
}

/// Checked variant of [`row_contains`] over an explicit bit row.
pub fn row_contains_bits(row: &[bool], t: &Itemset) -> Result<bool> {
    if row.len() != t.d {
        return Err(Error::DimensionMismatch {
            expected: t.d,
            found: row.len(),
        });
    }
    Ok(t.indices().into_iter().all(|a| row[a]))
}

/// Exact itemset frequency `count / total`.
#[derive(Debug, Clone, Copy)]
pub struct Frequency {
    pub count: u64,
    pub total: u64,
}

impl Frequency {
    pub fn new(count: u64, total: u64) -> Self {
        assert!(
            total > 0 && count <= total,
            "invalid frequency {count}/{total}"
        );
        Self { count, total }
    }

    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.count, self.total)
    }

    pub fn to_f64(&self) -> f64 {
        self.count as f64 / self.total as f64
    }

    /// Exact comparison against `num / den`.
    pub fn cmp_fraction(&self, num: u64, den: u64) -> Ordering {
        (self.count as u128 * den as u128).cmp(&(num as u128 * self.total as u128))
    }

    pub fn cmp_ratio(&self, r: Ratio<u64>) -> Ordering {
        self.cmp_fraction(*r.numer(), *r.denom())
    }
}

impl PartialEq for Frequency {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_fraction(other.count, other.total) == Ordering::Equal
    }
}

impl Eq for Frequency {}

/// Closest small-denominator rational to `x`, so that thresholds like `0.1`
/// or `0.02` compare exactly against row counts.
pub fn exact_fraction(x: f64) -> Ratio<u64> {
    let r =
        Ratio::<i64>::approximate_float(x).unwrap_or_else(|| panic!("{x} has no rational form"));
    assert!(*r.numer() >= 0, "negative threshold {x}");
    Ratio::new(*r.numer() as u64, *r.denom() as u64)
}

/// `n x d` binary database. Rows are immutable once built.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Database {
    bits: BitMatrix,
}

impl Database {
    pub fn from_matrix(bits: BitMatrix) -> Result<Self> {
        if bits.rows() == 0 || bits.cols() == 0 {
            return Err(Error::EmptyDatabase {
                n: bits.rows(),
                d: bits.cols(),
            });
        }
        Ok(Self { bits })
    }

    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != d {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected {d} columns, found {}", r.as_ref().len()),
                });
            }
        }
        Self::from_matrix(BitMatrix::from_rows(rows, d))
    }

    pub fn from_u8_rows(rows: &[&[u8]]) -> Result<Self> {
        Self::from_matrix(BitMatrix::from_u8_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.bits.rows()
    }

    pub fn d(&self) -> usize {
        self.bits.cols()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.bits
    }

    pub fn into_matrix(self) -> BitMatrix {
        self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits.get(row, col)
    }

    pub fn row(&self, i: usize) -> &[u64] {
        self.bits.row_words(i)
    }

    fn check_dim(&self, t: &Itemset) -> Result<()> {
        if t.dim() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: t.dim(),
            });
        }
        Ok(())
    }

    /// Number of rows containing `t`, by row scan.
    pub fn support(&self, t: &Itemset) -> Result<u64> {
        self.check_dim(t)?;
        Ok((0..self.n())
            .filter(|&i| row_contains(self.row(i), t))
            .count() as u64)
    }

    pub fn frequency(&self, t: &Itemset) -> Result<Frequency> {
        Ok(Frequency::new(self.support(t)?, self.n() as u64))
    }

    /// Rows concatenated top to bottom; all parts must share `d`.
    pub fn vstack(parts: &[&Database]) -> Result<Database> {
        if let Some(first) = parts.first() {
            if let Some(p) = parts.iter().find(|p| p.d() != first.d()) {
                return Err(Error::DimensionMismatch {
                    expected: first.d(),
                    found: p.d(),
                });
            }
        }
        let mats: Vec<&BitMatrix> = parts.iter().map(|p| &p.bits).collect();
        Database::from_matrix(BitMatrix::vconcat(&mats))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n() * (self.d() + 1));
        for i in 0..self.n() {
            for j in 0..self.d() {
                out.push(if self.get(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }

    pub fn read_text<R: Read>(reader: R) -> Result<Self> {
        let mut rows: Vec<Vec<bool>> = Vec::new();
        let mut width = None;
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            let mut row = Vec::with_capacity(line.len());
            for ch in line.chars() {
                match ch {
                    '0' => row.push(false),
                    '1' => row.push(true),
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("ragged row: expected {w} columns, found {}", row.len()),
                    })
                }
                _ => {}
            }
            rows.push(row);
        }
        let d = width.unwrap_or(0);
        if rows.is_empty() || d == 0 {
            return Err(Error::EmptyDatabase { n: rows.len(), d });
        }
        Self::from_rows(&rows)
    }

    /// Binary layout: `n: u64 LE`, `d: u64 LE`, then `ceil(d/8)` bytes per row, LSB-first.
    pub fn to_binary(&self) -> Vec<u8> {
        let row_bytes = self.d().div_ceil(8);
        let mut out = Vec::with_capacity(16 + row_bytes * self.n());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&(self.d() as u64).to_le_bytes());
        for i in 0..self.n() {
            let mut row = vec![0u8; row_bytes];
            for j in 0..self.d() {
                if self.get(i, j) {
                    row[j / 8] |= 1 << (j % 8);
                }
            }
            out.extend_from_slice(&row);
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Binary("header shorter than 16 bytes".into()));
        }
        let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
        let d = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let row_bytes = d.div_ceil(8);
        let expected = n
            .checked_mul(row_bytes)
            .and_then(|b| b.checked_add(16))
            .ok_or_else(|| Error::Binary(format!("shape {n}x{d} overflows")))?;
        if bytes.len() != expected {
            return Err(Error::Binary(format!(
                "expected {expected} bytes for {n}x{d}, found {}",
                bytes.len()
            )));
        }
        let mut m = BitMatrix::zeros(n, d);
        for i in 0..n {
            let row = &bytes[16 + i * row_bytes..16 + (i + 1) * row_bytes];
            for j in 0..d {
                if (row[j / 8] >> (j % 8)) & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        Self::from_matrix(m)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path.as_ref())?;
        if path.as_ref().extension().is_some_and(|e| e == "bin") {
            Self::from_binary(&bytes)
        } else {
            Self::read_text(bytes.as_slice())
        }
    }

    /// Writes binary when the extension is `.bin`, text otherwise.
    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path.as_ref())?;
        if path.as_ref().extension().is_some_and(|e| e == "bin") {
            f.write_all(&self.to_binary())?;
        } else {
            f.write_all(self.to_text().as_bytes())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Database {}x{}\n{}", self.n(), self.d(), self.to_text())
    }
}

/// Vertical (tidset) layout: one row bitset per attribute, so the support of
/// an itemset is the popcount of the AND of its columns.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    n: usize,
    d: usize,
    stride: usize,
    columns: Vec<u64>,
}

impl ColumnIndex {
    pub fn new(db: &Database) -> Self {
        let t = db.matrix().transpose();
        Self {
            n: db.n(),
            d: db.d(),
            stride: t.stride(),
            columns: (0..db.d()).flat_map(|j| t.row_words(j).to_vec()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn column(&self, j: usize) -> &[u64] {
        &self.columns[j * self.stride..(j + 1) * self.stride]
    }

    /// Support of a set of 0-based attributes.
    pub fn support_of(&self, attrs: &[usize]) -> u64 {
        match attrs {
            [] => self.n as u64,
            [a] => self.column(*a).iter().map(|w| w.count_ones() as u64).sum(),
            [a, rest @ ..] => {
                let mut acc = self.column(*a).to_vec();
                for &b in rest {
                    for (x, y) in acc.iter_mut().zip(self.column(b)) {
                        *x &= y;
                    }
                }
                acc.iter().map(|w| w.count_ones() as u64).sum()
            }
        }
    }

    pub fn support(&self, t: &Itemset) -> Result<u64> {
        if t.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: t.dim(),
            });
        }
        Ok(self.support_of(&t.indices()))
    }

    pub fn frequency(&self, t: &Itemset) -> Result<Frequency> {
        Ok(Frequency::new(self.support(t)?, self.n as u64))
    }
}
