//! Hadamard products of Boolean matrices and the two spectral quantities the
//! decoder cares about: the smallest singular value and how far the range is
//! from a Euclidean section.

use nalgebra::DMatrix;

use crate::attack::{invalid, Result};
use crate::bits::BitMatrix;
use crate::rng::{random_matrix, standard_normal, stream_rng};

/// Largest `L * n` [`hadamard_product`] will materialize.
pub const MAX_PRODUCT_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone)]
pub struct HadamardStack {
    factors: Vec<BitMatrix>,
    /// `L x n`; row `r` is the tuple [`HadamardStack::tuple`]`(r)`.
    product: BitMatrix,
}

/// `A = A_1 ∘ ... ∘ A_s`, rows indexed by tuples in row-major order (last index fastest).
pub fn hadamard_product(factors: &[BitMatrix]) -> Result<HadamardStack> {
    let Some(first) = factors.first() else {
        return invalid("need at least one factor");
    };
    let n = first.cols();
    if let Some((j, f)) = factors.iter().enumerate().find(|(_, f)| f.cols() != n) {
        return invalid(format!(
            "factor {j} has {} columns, factor 0 has {n}",
            f.cols()
        ));
    }
    let rows = factors
        .iter()
        .try_fold(1usize, |acc, f| acc.checked_mul(f.rows()))
        .filter(|&l| l.saturating_mul(n.max(1)) <= MAX_PRODUCT_ENTRIES);
    let Some(l) = rows else {
        return invalid(format!(
            "Hadamard product exceeds {MAX_PRODUCT_ENTRIES} entries"
        ));
    };
    let mut stack = HadamardStack {
        factors: factors.to_vec(),
        product: BitMatrix::zeros(l, n),
    };
    for r in 0..l {
        let tuple = stack.tuple(r);
        for h in 0..n {
            let bit = tuple.iter().zip(factors).all(|(&i, f)| f.get(i, h));
            if bit {
                stack.product.set(r, h, true);
            }
        }
    }
    Ok(stack)
}

impl HadamardStack {
    pub fn factors(&self) -> &[BitMatrix] {
        &self.factors
    }

    pub fn product(&self) -> &BitMatrix {
        &self.product
    }

    pub fn rows(&self) -> usize {
        self.product.rows()
    }

    pub fn cols(&self) -> usize {
        self.product.cols()
    }

    /// Row tuple `(i_1, ..., i_s)` of product row `r`.
    pub fn tuple(&self, mut r: usize) -> Vec<usize> {
        let mut t = vec![0; self.factors.len()];
        for (slot, f) in t.iter_mut().zip(&self.factors).rev() {
            *slot = r % f.rows();
            r /= f.rows();
        }
        t
    }

    /// Inverse of [`HadamardStack::tuple`].
    pub fn row_of(&self, tuple: &[usize]) -> usize {
        tuple
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&i, f)| acc * f.rows() + i)
    }

    /// Product restricted to the given columns.
    pub fn restrict(&self, cols: &[usize]) -> BitMatrix {
        self.product.select_columns(cols)
    }
}

/// `kminus1` independent `ell x n` matrices of fair coins.
pub fn gen_random_factors(kminus1: usize, ell: usize, n: usize, seed: u64) -> Vec<BitMatrix> {
    (0..kminus1)
        .map(|j| random_matrix(ell, n, 0.5, &mut stream_rng(seed, j as u64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub sigma_min: f64,
    /// Smallest `‖Ax‖₁ / (√L ‖Ax‖₂)` over the probes, 0 if some probe lands in the kernel.
    pub section_ratio: f64,
}

pub fn to_dense(m: &BitMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) as u8 as f64)
}

/// Coordinate vectors followed by `gaussian` standard normal vectors.
pub fn default_probes(n: usize, gaussian: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    let mut probes: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    probes.extend((0..gaussian).map(|_| (0..n).map(|_| standard_normal(&mut rng)).collect()));
    probes
}

pub fn spectral_report(a: &BitMatrix, probes: &[Vec<f64>]) -> Result<SpectralReport> {
    let (l, n) = (a.rows(), a.cols());
    if l < n {
        return invalid(format!("rank deficient: {l} rows < {n} columns"));
    }
    if n == 0 {
        return invalid("matrix has no columns");
    }
    if probes.is_empty() {
        return invalid("need at least one probe vector");
    }
    if let Some(p) = probes.iter().find(|p| p.len() != n) {
        return invalid(format!("probe has length {}, expected {n}", p.len()));
    }
    let dense = to_dense(a);
    let sigma_min = dense
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let root_l = (l as f64).sqrt();
    let section_ratio = probes
        .iter()
        .map(|p| {
            let ax = &dense * nalgebra::DVector::from_column_slice(p);
            let l2 = ax.norm();
            if l2 <= 1e-12 {
                0.0
            } else {
                (ax.lp_norm(1) / (root_l * l2)).min(1.0)
            }
        })
        .fold(f64::INFINITY, f64::min);
    Ok(SpectralReport {
        sigma_min,
        section_ratio,
    })
}
