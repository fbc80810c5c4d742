//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha20 keyed by a 64-bit root
//! seed, with the ChaCha stream id selecting an independent substream:
//! `stream_rng(seed, id)`. Child seeds (one per trial, per boosted copy, ...)
//! are the first output word of their substream, see [`derive_seed`]. The
//! generator is counter based and byte-for-byte identical across platforms.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bits::BitMatrix;
use crate::database::Database;

pub type SketchRng = ChaCha20Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SketchRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}

/// Uniform integer in `0..bound`, drawn through `u64` so results do not depend on pointer width.
pub fn index_below(rng: &mut SketchRng, bound: usize) -> usize {
    rng.gen_range(0..bound as u64) as usize
}

/// Independent fair or biased coins.
pub fn random_matrix(rows: usize, cols: usize, density: f64, rng: &mut SketchRng) -> BitMatrix {
    let mut m = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                m.set(r, c, true);
            }
        }
    }
    m
}

pub fn random_database(n: usize, d: usize, density: f64, seed: u64) -> Database {
    let mut rng = stream_rng(seed, 0);
    Database::from_matrix(random_matrix(n, d, density, &mut rng)).expect("n, d >= 1")
}

pub fn random_bits(len: usize, rng: &mut SketchRng) -> Vec<bool> {
    (0..len).map(|_| rng.gen_bool(0.5)).collect()
}

/// Standard normal draw (Box-Muller).
pub fn standard_normal(rng: &mut SketchRng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
