//! Packed bit containers shared by databases, itemsets and sketch payloads.

use std::fmt;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Growable bit string packed into 64-bit words, bit `i` at word `i / 64`, position `i % 64`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(words_for(bits)),
            len: 0,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = Self::with_capacity(bits.len());
        for &b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        if value {
            let i = self.len - 1;
            self.words[i / 64] |= 1 << (i % 64);
        }
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        for b in (0..width).rev() {
            self.push((value >> b) & 1 == 1);
        }
    }

    /// Reads `width` bits starting at `offset` as an unsigned integer, most significant first.
    pub fn read_uint(&self, offset: usize, width: usize) -> u64 {
        debug_assert!(width <= 64);
        (0..width).fold(0u64, |acc, b| (acc << 1) | self.get(offset + b) as u64)
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    /// Appends the first `bits` bits of a packed word slice.
    pub fn extend_from_words(&mut self, words: &[u64], bits: usize) {
        for i in 0..bits {
            self.push((words[i / 64] >> (i % 64)) & 1 == 1);
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> BitString {
        let mut out = BitString::with_capacity(len);
        for i in start..start + len {
            out.push(self.get(i));
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packs into `ceil(len / 8)` bytes, LSB-first within each byte, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    /// Inverse of [`BitString::to_bytes`]; returns `None` if `bytes` is too short.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() < len.div_ceil(8) {
            return None;
        }
        let mut out = Self::zeros(len);
        for i in 0..len {
            if (bytes[i / 8] >> (i % 8)) & 1 == 1 {
                out.set(i, true);
            }
        }
        Some(out)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = BitString::new();
        for b in iter {
            out.push(b);
        }
        out
    }
}

/// Dense row-major bit matrix. Each row occupies `ceil(cols / 64)` words; bits past `cols` are zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, true);
            }
        }
        m
    }

    /// Builds from nested rows; panics on ragged input (callers validate first).
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(
                row.len(),
                cols,
                "row {r} has {} bits, expected {cols}",
                row.len()
            );
            for (c, &b) in row.iter().enumerate() {
                if b {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Convenience constructor from 0/1 integers, mostly for tests and fixtures.
    pub fn from_u8_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let bools: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| x != 0).collect())
            .collect();
        Self::from_rows(&bools, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(
            r < self.rows && c < self.cols,
            "({r}, {c}) outside {}x{}",
            self.rows,
            self.cols
        );
        let w = &mut self.data[r * self.stride + c / 64];
        let mask = 1u64 << (c % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        let v = self.get(r, c);
        self.set(r, c, !v);
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_bools(&self, r: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.rows).map(|r| self.row_bools(r)).collect()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.rows, other.rows, "hconcat row mismatch");
        let mut out = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c));
            }
        }
        out
    }

    /// Vertical concatenation of matrices with equal column counts.
    pub fn vconcat(parts: &[&BitMatrix]) -> BitMatrix {
        let cols = parts.first().map_or(0, |p| p.cols);
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = BitMatrix::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            assert_eq!(p.cols, cols, "vconcat column mismatch");
            out.data[at * out.stride..(at + p.rows) * out.stride].copy_from_slice(&p.data);
            at += p.rows;
        }
        out
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_round_trip() {
        let mut b = BitString::new();
        b.push_uint(5, 3);
        b.push_uint(0xABCD, 16);
        assert_eq!(b.len(), 19);
        assert_eq!(b.read_uint(0, 3), 5);
        assert_eq!(b.read_uint(3, 16), 0xABCD);
    }

    #[test]
    fn bytes_are_lsb_first_and_zero_padded() {
        let b =
            BitString::from_bools(&[true, false, false, false, false, false, false, false, true]);
        assert_eq!(b.to_bytes(), vec![0x01, 0x01]);
        assert_eq!(BitString::from_bytes(&b.to_bytes(), 9).unwrap(), b);
        assert!(BitString::from_bytes(&[0x01], 9).is_none());
    }

    #[test]
    fn matrix_concat_and_transpose() {
        let a = BitMatrix::from_u8_rows(&[&[1, 0], &[0, 1]]);
        let b = BitMatrix::from_u8_rows(&[&[1], &[0]]);
        let ab = a.hconcat(&b);
        assert_eq!(ab, BitMatrix::from_u8_rows(&[&[1, 0, 1], &[0, 1, 0]]));
        assert_eq!(ab.transpose().transpose(), ab);
        let v = BitMatrix::vconcat(&[&a, &a]);
        assert_eq!(v.rows(), 4);
        assert_eq!(v.row_bools(3), vec![false, true]);
    }

    #[test]
    fn wide_rows_span_words() {
        let mut m = BitMatrix::zeros(2, 130);
        m.set(1, 129, true);
        m.set(0, 64, true);
        assert_eq!(m.stride(), 3);
        assert!(m.get(1, 129) && m.get(0, 64) && !m.get(0, 63));
        assert_eq!(m.count_ones(), 2);
    }
}
