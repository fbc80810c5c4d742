//! Exhaustive L1-nearest-codeword decoding for `y ↦ A y` at small `n`.
//!
//! Bit `h` of a candidate mask is `y_h`; ties go to the numerically smallest mask.

use std::collections::HashSet;

use crate::attack::{invalid, AttackError, Result};
use crate::bits::BitMatrix;

/// Largest `n` [`bruteforce_decode`] searches.
pub const MAX_BRUTEFORCE_N: usize = 20;

/// Up to this `n` every decode is re-checked by a second, naive scan.
pub const SELF_CHECK_N: usize = 12;

/// Largest `n` for [`min_codeword_gap`], which compares all pairs of codewords.
pub const MAX_GAP_N: usize = 12;

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteforceOutcome {
    pub bits: Vec<bool>,
    /// `‖A y − counts‖₁` at the returned `y`.
    pub residual: f64,
    /// Every entry of `A y` is within `ζ₁` of its count.
    pub within_zeta: bool,
}

fn columns(a: &BitMatrix) -> Vec<Vec<i64>> {
    (0..a.cols())
        .map(|h| (0..a.rows()).map(|r| a.get(r, h) as i64).collect())
        .collect()
}

fn residual(ay: &[i64], counts: &[f64]) -> f64 {
    ay.iter()
        .zip(counts)
        .map(|(&x, &c)| (x as f64 - c).abs())
        .sum()
}

fn product_of(cols: &[Vec<i64>], rows: usize, mask: u64) -> Vec<i64> {
    let mut ay = vec![0i64; rows];
    for (h, col) in cols.iter().enumerate() {
        if mask >> h & 1 == 1 {
            for (x, &a) in ay.iter_mut().zip(col) {
                *x += a;
            }
        }
    }
    ay
}

fn better(res: f64, mask: u64, best: (f64, u64)) -> bool {
    res < best.0 - TIE_TOLERANCE || (res <= best.0 + TIE_TOLERANCE && mask < best.1)
}

/// Gray-code walk over all `2^n` masks, updating `A y` one column at a time.
fn gray_scan(cols: &[Vec<i64>], rows: usize, counts: &[f64]) -> (f64, u64) {
    let mut ay = vec![0i64; rows];
    let mut best = (residual(&ay, counts), 0u64);
    let mut mask = 0u64;
    for step in 1u64..1 << cols.len() {
        let h = step.trailing_zeros() as usize;
        mask ^= 1 << h;
        let sign = if mask >> h & 1 == 1 { 1 } else { -1 };
        for (x, &a) in ay.iter_mut().zip(&cols[h]) {
            *x += sign * a;
        }
        let res = residual(&ay, counts);
        if better(res, mask, best) {
            best = (res, mask);
        }
    }
    best
}

fn naive_scan(cols: &[Vec<i64>], rows: usize, counts: &[f64]) -> (f64, u64) {
    let mut best = (f64::INFINITY, u64::MAX);
    for mask in 0u64..1 << cols.len() {
        let res = residual(&product_of(cols, rows, mask), counts);
        if better(res, mask, best) {
            best = (res, mask);
        }
    }
    best
}

/// `argmin_y ‖A y − counts‖₁` over `y ∈ {0,1}^n`.
pub fn bruteforce_decode(a: &BitMatrix, counts: &[f64], zeta1: f64) -> Result<BruteforceOutcome> {
    let (rows, n) = (a.rows(), a.cols());
    if n > MAX_BRUTEFORCE_N {
        return invalid(format!(
            "n = {n} exceeds the exhaustive-search limit {MAX_BRUTEFORCE_N}"
        ));
    }
    if counts.len() != rows {
        return invalid(format!("{} counts for {rows} rows", counts.len()));
    }
    if counts.iter().any(|c| !c.is_finite()) || zeta1.is_nan() || zeta1 <= 0.0 {
        return invalid("counts must be finite and zeta1 positive");
    }
    let cols = columns(a);
    let (res, mask) = gray_scan(&cols, rows, counts);
    if n <= SELF_CHECK_N {
        let (_, again) = naive_scan(&cols, rows, counts);
        if again != mask {
            return Err(AttackError::Decode(format!(
                "re-scan disagrees: gray walk chose {mask:#x}, naive scan {again:#x}"
            )));
        }
    }
    let ay = product_of(&cols, rows, mask);
    Ok(BruteforceOutcome {
        bits: (0..n).map(|h| mask >> h & 1 == 1).collect(),
        residual: res,
        within_zeta: ay
            .iter()
            .zip(counts)
            .all(|(&x, &c)| (x as f64 - c).abs() <= zeta1),
    })
}

/// Smallest `‖A y − A y'‖₁` over `y ≠ y'`; 0 when `A` is not injective on `{0,1}^n`.
pub fn min_codeword_gap(a: &BitMatrix) -> Result<u64> {
    let n = a.cols();
    if n > MAX_GAP_N {
        return invalid(format!(
            "n = {n} exceeds the pairwise-gap limit {MAX_GAP_N}"
        ));
    }
    if n == 0 {
        return invalid("matrix has no columns");
    }
    let cols = columns(a);
    let words: Vec<Vec<i64>> = (0u64..1 << n)
        .map(|m| product_of(&cols, a.rows(), m))
        .collect();
    let mut gap = u64::MAX;
    for (i, x) in words.iter().enumerate() {
        for y in &words[i + 1..] {
            let dist: u64 = x.iter().zip(y).map(|(p, q)| p.abs_diff(*q)).sum();
            gap = gap.min(dist);
        }
    }
    Ok(gap)
}

/// Greedy set of columns `H`, scanned left to right, on which `y ↦ A_H y` stays injective.
pub fn decodable_support(a: &BitMatrix) -> Vec<usize> {
    let cols = columns(a);
    let mut support: Vec<usize> = Vec::new();
    let mut words: Vec<Vec<i64>> = vec![vec![0; a.rows()]];
    for (h, col) in cols.iter().enumerate() {
        if support.len() == MAX_BRUTEFORCE_N {
            break;
        }
        let shifted: Vec<Vec<i64>> = words
            .iter()
            .map(|w| w.iter().zip(col).map(|(x, c)| x + c).collect())
            .collect();
        let mut seen: HashSet<&Vec<i64>> = words.iter().collect();
        if shifted.iter().all(|w| seen.insert(w)) {
            support.push(h);
            words.extend(shifted);
        }
    }
    support
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator_attack::hadamard::gen_random_factors;
    use crate::rng::{random_bits, stream_rng};
    use rand::Rng;

    fn exact_counts(a: &BitMatrix, y: &[bool]) -> Vec<f64> {
        (0..a.rows())
            .map(|r| (0..a.cols()).filter(|&h| y[h] && a.get(r, h)).count() as f64)
            .collect()
    }

    #[test]
    fn single_column_thresholds() {
        let a = BitMatrix::from_u8_rows(&[&[1], &[1], &[0]]);
        assert_eq!(
            bruteforce_decode(&a, &[0.4, 0.4, 0.0], 1.0).unwrap().bits,
            vec![false]
        );
        assert_eq!(
            bruteforce_decode(&a, &[0.6, 0.6, 0.0], 1.0).unwrap().bits,
            vec![true]
        );
        // exactly halfway: tie goes to 0
        assert_eq!(
            bruteforce_decode(&a, &[0.5, 0.5, 0.0], 1.0).unwrap().bits,
            vec![false]
        );
    }

    #[test]
    fn noise_free_counts_decode_when_injective() {
        let mut rng = stream_rng(1, 0);
        for seed in 0..30 {
            let a = &gen_random_factors(1, 12, 6, seed)[0];
            let y = random_bits(6, &mut rng);
            let out = bruteforce_decode(a, &exact_counts(a, &y), 0.5).unwrap();
            assert_eq!(out.residual, 0.0);
            if min_codeword_gap(a).unwrap() > 0 {
                assert_eq!(out.bits, y);
            }
        }
    }

    #[test]
    fn noise_below_half_gap_is_harmless() {
        let mut rng = stream_rng(2, 0);
        for seed in 0..30 {
            let a = &gen_random_factors(1, 10, 5, seed)[0];
            let gap = min_codeword_gap(a).unwrap();
            if gap == 0 {
                continue;
            }
            let per_entry = 0.999 * gap as f64 / (2.0 * a.rows() as f64);
            let y = random_bits(5, &mut rng);
            let noisy: Vec<f64> = exact_counts(a, &y)
                .iter()
                .map(|c| c + per_entry * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            assert_eq!(
                bruteforce_decode(a, &noisy, gap as f64 / 2.0).unwrap().bits,
                y
            );
        }
    }

    #[test]
    fn gap_of_identity_is_one() {
        let a = BitMatrix::from_u8_rows(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(min_codeword_gap(&a).unwrap(), 1);
        let dup = BitMatrix::from_u8_rows(&[&[1, 1]]);
        assert_eq!(min_codeword_gap(&dup).unwrap(), 0);
    }

    #[test]
    fn support_is_injective() {
        for seed in 0..20 {
            let a = &gen_random_factors(1, 2, 8, seed)[0];
            let h = decodable_support(a);
            let sub = a.select_columns(&h);
            if !h.is_empty() {
                assert!(min_codeword_gap(&sub).unwrap() > 0, "{h:?}");
            }
            assert!(h.len() <= 2);
        }
        let wide = BitMatrix::from_u8_rows(&[&[1, 0, 1, 1], &[0, 1, 1, 0]]);
        assert_eq!(decodable_support(&wide), vec![0, 1]);
    }

    #[test]
    fn limits() {
        assert!(bruteforce_decode(&BitMatrix::zeros(2, 21), &[0.0; 2], 1.0).is_err());
        assert!(bruteforce_decode(&BitMatrix::zeros(2, 2), &[0.0; 3], 1.0).is_err());
        assert!(bruteforce_decode(&BitMatrix::zeros(2, 2), &[0.0; 2], 0.0).is_err());
    }
}
