//! Error-correcting codes for the encoding attacks.
//!
//! The default [`SyndromeCodec`] is a systematic binary linear code
//! `[data | parity]` with parity-check matrix `H = [P | I_r]`, decoded by a
//! syndrome table holding every error pattern of weight at most
//! `t = floor(0.04 N)`. `P` is grown column by column from seeded random
//! candidates, keeping a column only if every pattern of weight `<= t` still
//! has a distinct syndrome; a complete table is therefore the exhaustive proof
//! that the minimum distance is at least `2t + 1`. A CRC over the message turns
//! most miscorrections beyond `t` errors into reported failures.

use std::collections::HashMap;

use thiserror::Error;

use crate::rng::{stream_rng, SketchRng};
use rand::Rng;

/// Fraction of adversarial bit flips the default code must correct.
pub const DEFAULT_ERROR_FRACTION: f64 = 0.04;

/// Largest syndrome table [`SyndromeCodec`] will build.
pub const MAX_TABLE_ENTRIES: u128 = 1 << 22;

const CANDIDATES_PER_COLUMN: usize = 4096;
const ATTEMPTS_PER_REDUNDANCY: u64 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EccError {
    #[error("expected {expected} bits, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("syndrome matches no correctable error pattern")]
    Uncorrectable,

    #[error("checksum mismatch after correction")]
    ChecksumMismatch,

    #[error("cannot construct code: {0}")]
    Construction(String),
}

pub trait Codec: Send + Sync {
    fn message_len(&self) -> usize;

    fn codeword_len(&self) -> usize;

    /// Number of adversarial bit flips decoding is guaranteed to undo.
    fn correctable_errors(&self) -> usize;

    fn correct_frac(&self) -> f64 {
        match self.codeword_len() {
            0 => 0.0,
            n => self.correctable_errors() as f64 / n as f64,
        }
    }

    fn encode(&self, message: &[bool]) -> Result<Vec<bool>, EccError>;

    fn decode(&self, word: &[bool]) -> Result<Vec<bool>, EccError>;
}

fn check_len(expected: usize, found: usize) -> Result<(), EccError> {
    if expected != found {
        return Err(EccError::LengthMismatch { expected, found });
    }
    Ok(())
}

/// No redundancy; for exact oracles and for measuring the raw pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityCodec {
    pub len: usize,
}

impl Codec for IdentityCodec {
    fn message_len(&self) -> usize {
        self.len
    }

    fn codeword_len(&self) -> usize {
        self.len
    }

    fn correctable_errors(&self) -> usize {
        0
    }

    fn encode(&self, message: &[bool]) -> Result<Vec<bool>, EccError> {
        check_len(self.len, message.len())?;
        Ok(message.to_vec())
    }

    fn decode(&self, word: &[bool]) -> Result<Vec<bool>, EccError> {
        check_len(self.len, word.len())?;
        Ok(word.to_vec())
    }
}

/// Bitwise CRC, MSB-first, zero initial value.
pub fn crc(bits: &[bool], width: usize) -> u64 {
    let poly: u64 = match width {
        0 => return 0,
        8 => 0x07,
        16 => 0x1021,
        32 => 0x04C1_1DB7,
        _ => panic!("unsupported CRC width {width}"),
    };
    let top = 1u64 << (width - 1);
    let mask = if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    let mut reg = 0u64;
    for &b in bits {
        let feedback = (reg & top != 0) ^ b;
        reg = (reg << 1) & mask;
        if feedback {
            reg ^= poly;
        }
    }
    reg
}

#[derive(Debug, Clone)]
pub struct SyndromeCodec {
    n: usize,
    t: usize,
    r: usize,
    checksum_bits: usize,
    /// Parity-check column of each data position.
    data_columns: Vec<u64>,
    table: HashMap<u64, Vec<u16>>,
}

/// `sum_{i <= t} C(n, i)`, saturating at `u128::MAX`.
pub fn ball_size(n: usize, t: usize) -> u128 {
    let (mut term, mut total) = (1u128, 1u128);
    for i in 0..t.min(n) {
        // C(n, i + 1) = C(n, i) * (n - i) / (i + 1)
        term = match term.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
        total = total.saturating_add(term);
    }
    total
}

/// Smallest `r` with `2^r >= ball_size(n, t)`.
fn hamming_redundancy(n: usize, t: usize) -> usize {
    let ball = ball_size(n, t);
    (0..128).find(|&r| (1u128 << r) >= ball).unwrap_or(128)
}

struct Growth {
    columns: Vec<u64>,
    table: HashMap<u64, Vec<u16>>,
    /// Patterns of weight `< t`, the ones a new column extends.
    lighter: Vec<(u64, Vec<u16>)>,
}

fn grow(n: usize, t: usize, r: usize, rng: &mut SketchRng) -> Option<Vec<u64>> {
    let k = n - r;
    let mut g = Growth {
        columns: Vec::with_capacity(k),
        table: HashMap::new(),
        lighter: Vec::new(),
    };
    // parity positions k..n carry the unit columns
    let mut seed_patterns: Vec<(u64, Vec<u16>)> = vec![(0, Vec::new())];
    for j in 0..r {
        let col = 1u64 << j;
        let pos = (k + j) as u16;
        let extended: Vec<(u64, Vec<u16>)> = seed_patterns
            .iter()
            .filter(|(_, p)| p.len() < t)
            .map(|(s, p)| {
                let mut q = p.clone();
                q.push(pos);
                (s ^ col, q)
            })
            .collect();
        seed_patterns.extend(extended);
    }
    for (s, p) in seed_patterns {
        if p.len() < t {
            g.lighter.push((s, p.clone()));
        }
        g.table.insert(s, p);
    }

    let mask = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    for pos in 0..k {
        let mut accepted = None;
        for _ in 0..CANDIDATES_PER_COLUMN {
            let c = rng.gen::<u64>() & mask;
            if c == 0 {
                continue;
            }
            if g.lighter
                .iter()
                .all(|(s, _)| !g.table.contains_key(&(s ^ c)))
            {
                accepted = Some(c);
                break;
            }
        }
        let c = accepted?;
        let new: Vec<(u64, Vec<u16>)> = g
            .lighter
            .iter()
            .map(|(s, p)| {
                let mut q = p.clone();
                q.push(pos as u16);
                (s ^ c, q)
            })
            .collect();
        for (s, p) in new {
            if p.len() < t {
                g.lighter.push((s, p.clone()));
            }
            g.table.insert(s, p);
        }
        g.columns.push(c);
    }
    Some(g.columns)
}

impl SyndromeCodec {
    /// Code of length `n` correcting `floor(0.04 n)` errors, with an 8-bit CRC once `n >= 32`.
    pub fn new(n: usize) -> Result<Self, EccError> {
        let t = (DEFAULT_ERROR_FRACTION * n as f64 + 1e-9).floor() as usize;
        let checksum = if n >= 32 { 8 } else { 0 };
        Self::with_options(n, t, checksum, 0x5eed)
    }

    pub fn with_options(
        n: usize,
        t: usize,
        checksum_bits: usize,
        seed: u64,
    ) -> Result<Self, EccError> {
        if n == 0 {
            return Err(EccError::Construction(
                "codeword length must be positive".into(),
            ));
        }
        if n > u16::MAX as usize {
            return Err(EccError::Construction(format!(
                "codeword length {n} exceeds {}",
                u16::MAX
            )));
        }
        if !matches!(checksum_bits, 0 | 8 | 16 | 32) {
            return Err(EccError::Construction(format!(
                "checksum width {checksum_bits} not in 0, 8, 16, 32"
            )));
        }
        let entries = ball_size(n, t);
        if entries > MAX_TABLE_ENTRIES {
            return Err(EccError::Construction(format!(
                "correcting {t} errors in {n} bits needs {entries} syndrome entries, limit {MAX_TABLE_ENTRIES}"
            )));
        }
        if t == 0 {
            if n < checksum_bits {
                return Err(EccError::Construction(format!(
                    "{n} bits cannot hold a {checksum_bits}-bit checksum"
                )));
            }
            return Ok(Self {
                n,
                t,
                r: 0,
                checksum_bits,
                data_columns: vec![0; n],
                table: HashMap::from([(0, Vec::new())]),
            });
        }
        let r0 = hamming_redundancy(n, t);
        for r in r0..=n.min(64) {
            for attempt in 0..ATTEMPTS_PER_REDUNDANCY {
                let mut rng = stream_rng(seed, (r as u64) << 8 | attempt);
                let Some(data_columns) = grow(n, t, r, &mut rng) else {
                    continue;
                };
                if n - r < checksum_bits {
                    return Err(EccError::Construction(format!(
                        "{} data bits cannot hold a {checksum_bits}-bit checksum",
                        n - r
                    )));
                }
                let mut codec = Self {
                    n,
                    t,
                    r,
                    checksum_bits,
                    data_columns,
                    table: HashMap::new(),
                };
                codec.table = codec
                    .build_table()
                    .expect("growth keeps syndromes distinct");
                return Ok(codec);
            }
        }
        Err(EccError::Construction(format!(
            "no [{n}, k] code correcting {t} errors found"
        )))
    }

    pub fn redundancy(&self) -> usize {
        self.r
    }

    pub fn checksum_bits(&self) -> usize {
        self.checksum_bits
    }

    fn column(&self, pos: usize) -> u64 {
        let k = self.n - self.r;
        if pos < k {
            self.data_columns[pos]
        } else {
            1u64 << (pos - k)
        }
    }

    /// Enumerate every pattern of weight `<= t` from scratch; `None` on a syndrome collision.
    pub fn build_table(&self) -> Option<HashMap<u64, Vec<u16>>> {
        let mut table = HashMap::new();
        let mut stack: Vec<(u64, Vec<u16>)> = vec![(0, Vec::new())];
        while let Some((s, p)) = stack.pop() {
            if p.len() < self.t {
                let start = p.last().map_or(0, |&l| l as usize + 1);
                for pos in start..self.n {
                    let mut q = p.clone();
                    q.push(pos as u16);
                    stack.push((s ^ self.column(pos), q));
                }
            }
            if table.insert(s, p).is_some() {
                return None;
            }
        }
        Some(table)
    }

    pub fn syndrome(&self, word: &[bool]) -> u64 {
        word.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |acc, (i, _)| acc ^ self.column(i))
    }
}

impl Codec for SyndromeCodec {
    fn message_len(&self) -> usize {
        self.n - self.r - self.checksum_bits
    }

    fn codeword_len(&self) -> usize {
        self.n
    }

    fn correctable_errors(&self) -> usize {
        self.t
    }

    fn encode(&self, message: &[bool]) -> Result<Vec<bool>, EccError> {
        check_len(self.message_len(), message.len())?;
        let mut word = message.to_vec();
        let sum = crc(message, self.checksum_bits);
        word.extend((0..self.checksum_bits).rev().map(|i| sum >> i & 1 == 1));
        let parity = word
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |acc, (i, _)| acc ^ self.data_columns[i]);
        word.extend((0..self.r).map(|j| parity >> j & 1 == 1));
        Ok(word)
    }

    fn decode(&self, word: &[bool]) -> Result<Vec<bool>, EccError> {
        check_len(self.n, word.len())?;
        let pattern = self
            .table
            .get(&self.syndrome(word))
            .ok_or(EccError::Uncorrectable)?;
        let mut fixed = word.to_vec();
        for &p in pattern {
            fixed[p as usize] ^= true;
        }
        let m = self.message_len();
        let message = fixed[..m].to_vec();
        let stored = fixed[m..m + self.checksum_bits]
            .iter()
            .fold(0u64, |acc, &b| acc << 1 | b as u64);
        if stored != crc(&message, self.checksum_bits) {
            return Err(EccError::ChecksumMismatch);
        }
        Ok(message)
    }
}

/// Flip the listed positions.
pub fn corrupt(word: &[bool], positions: &[usize]) -> Vec<bool> {
    let mut out = word.to_vec();
    for &p in positions {
        out[p] ^= true;
    }
    out
}
